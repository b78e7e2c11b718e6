//! Acceptance criteria, one line per criterion. Reference values come
//! from eigendecompositions, determinants and closed forms computed here,
//! independently of the library routes.

use std::process::Command;
use std::time::Instant;

use bureskit::coeffs::CoeffRoute;
use bureskit::error::Error;
use bureskit::invariants::{char_poly, e_from_p, gram_matrix, p_from_e, power_traces, StateMatrix, TangentMatrix};
use bureskit::linalg::{max_abs, CMatrix, RMatrix};
use bureskit::matrix_file::MatrixFile;
use bureskit::metric::PreparedState;
use bureskit::oracle::{bures_eigen_oracle, eigenvalues};
use bureskit::random::{random_state, random_tangent, rng_from_seed, StateOptions, StateRng};
use bureskit::sylvester::solve_dense;
use bureskit::tolerance::Tolerances;
use bureskit::wide::Wide;
use num_complex::Complex64;

const FLOOR: f64 = 0.05;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(worst: f64, tol: f64) -> bool {
    worst.is_finite() && worst <= tol
}

fn generic_state(n: usize, rng: &mut StateRng, tol: &Tolerances, redrawn: &mut usize) -> PreparedState {
    loop {
        let s = random_state(n, &StateOptions::with_floor(FLOOR), rng).unwrap();
        let p = PreparedState::new(s, tol);
        if p.genericity().generic {
            return p;
        }
        *redrawn += 1;
    }
}

fn tangent(n: usize, v: &[f64]) -> TangentMatrix {
    TangentMatrix::from_real(&RMatrix::from_row_slice(n, n, v)).unwrap()
}

fn rel_entrywise(a: &RMatrix, b: &RMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

fn four_route_agreement(tol: &Tolerances) -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut redrawn = 0;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut failures = 0;
    for n in 2..=8 {
        for _ in 0..1000 {
            let p = generic_state(n, &mut rng, tol, &mut redrawn);
            let yp = random_tangent(n, &mut rng);
            let y = random_tangent(n, &mut rng);
            let values = (|| -> Result<[f64; 5], Error> {
                Ok([
                    p.prop1(&yp, &y)?.value,
                    p.prop2_with(CoeffRoute::Companion, &yp, &y)?.value,
                    p.prop2_with(CoeffRoute::Smith, &yp, &y)?.value,
                    p.prop4(&yp, &y)?.value,
                    bures_eigen_oracle(p.state(), &yp, &y)?.value,
                ])
            })();
            count += 1;
            match values {
                Ok(v) => {
                    let scale = v[4].abs().max(1.0);
                    for i in 0..5 {
                        for j in i + 1..5 {
                            worst = worst.max((v[i] - v[j]).abs() / scale);
                        }
                    }
                }
                Err(_) => failures += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        passed: failures == 0 && check(worst, 1e-8) && secs <= 60.0,
        detail: format!(
            "max deviation {worst:.3e} <= 1e-8 over {count} states, {failures} route errors, {redrawn} non-generic redrawn, {secs:.1} s <= 60 s"
        ),
    }
}

fn closed_forms(tol: &Tolerances) -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut redrawn = 0;
    let mut worst: f64 = 0.0;
    for n in [2usize, 3] {
        for _ in 0..100 {
            let p = generic_state(n, &mut rng, tol, &mut redrawn);
            let inv = p.invariants();
            let e = inv.e();
            let pt = inv.p();
            let g = p.gram_inverse().unwrap().map(|x| x.to_f64());
            let b = p.coefficients(CoeffRoute::Companion).unwrap().matrix() * 2.0 - &g;
            let (a_cf, g_cf) = if n == 2 {
                let (e1, e2) = (e[0], e[1]);
                let (p1, p2, p3) = (pt[0], pt[1], pt[2]);
                let a = RMatrix::from_row_slice(2, 2, &[e1 * e1 + e2, -e1, -e1, 1.0]) / (2.0 * e1 * e2);
                let gi = RMatrix::from_row_slice(2, 2, &[p3, -p2, -p2, p1]) / (p1 * p3 - p2 * p2);
                let b_e = RMatrix::from_row_slice(2, 2, &[-2.0 * e2, e1, e1, -2.0]) * (2.0 / (e1 * (e1 * e1 - 4.0 * e2)));
                let b_p = RMatrix::from_row_slice(2, 2, &[p2 - p1 * p1, p1, p1, -2.0]) * (2.0 / (p1 * (2.0 * p2 - p1 * p1)));
                worst = worst.max(rel_entrywise(&b, &b_e)).max(rel_entrywise(&b, &b_p));
                (a, gi)
            } else {
                let (e1, e2, e3) = (e[0], e[1], e[2]);
                let (p1, p2, p3, p4, p5) = (pt[0], pt[1], pt[2], pt[3], pt[4]);
                let a = RMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        e1 * e2 * e2 + e1 * e1 * e3 - e2 * e3, -e1 * e1 * e2, e1 * e2 - e3,
                        -e1 * e1 * e2, e1 * e1 * e1 + e3, -e1 * e1,
                        e1 * e2 - e3, -e1 * e1, e1,
                    ],
                ) / (2.0 * e3 * (e1 * e2 - e3));
                let det = -p3 * p3 * p3 + 2.0 * p2 * p3 * p4 - p1 * p4 * p4 - p2 * p2 * p5 + p1 * p3 * p5;
                let (c11, c12, c13) = (p3 * p5 - p4 * p4, p3 * p4 - p2 * p5, p2 * p4 - p3 * p3);
                let (c22, c23, c33) = (p1 * p5 - p3 * p3, p2 * p3 - p1 * p4, p1 * p3 - p2 * p2);
                let gi = RMatrix::from_row_slice(3, 3, &[c11, c12, c13, c12, c22, c23, c13, c23, c33]) / det;
                let det_p = gram_matrix(inv).det();
                worst = worst.max(((det_p - det) / det).abs());
                (a, gi)
            };
            let a_smith = p.coefficients(CoeffRoute::Smith).unwrap().matrix();
            worst = worst
                .max(rel_entrywise(&p.coefficients(CoeffRoute::Companion).unwrap().matrix(), &a_cf))
                .max(rel_entrywise(&a_smith, &a_cf))
                .max(rel_entrywise(&g, &g_cf))
                .max(rel_entrywise(&b, &(&a_cf * 2.0 - &g_cf)));
        }
    }
    Outcome {
        passed: check(worst, 1e-9),
        detail: format!("max entrywise relative gap {worst:.3e} <= 1e-9 over 100 states each for n = 2, 3"),
    }
}

fn products(ev: &[f64]) -> (f64, f64) {
    let mut vdm = ev.iter().product::<f64>();
    let mut sums = vdm;
    for (i, &a) in ev.iter().enumerate() {
        for &b in &ev[i + 1..] {
            vdm *= (a - b) * (a - b);
            sums *= a + b;
        }
    }
    (vdm, sums)
}

fn determinant_identities(tol: &Tolerances) -> Outcome {
    let mut rng = rng_from_seed(3);
    let mut redrawn = 0;
    let (mut worst_p, mut worst_h): (f64, f64) = (0.0, 0.0);
    for n in 1..=8 {
        for _ in 0..200 {
            let p = generic_state(n, &mut rng, tol, &mut redrawn);
            let inv = p.invariants();
            let ev = eigenvalues(p.state());
            let (vdm, sums) = products(&ev);
            let det_p = gram_matrix(inv).det();
            worst_p = worst_p.max((det_p - vdm).abs() / det_p.abs());
            let h = RMatrix::from_fn(n, n, |i, j| inv.coef(2 * (j as isize + 1) - (i as isize + 1)).to_f64());
            let det_h = h.determinant();
            let sign = if (n * (n + 1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
            worst_h = worst_h.max((det_h - sign * sums).abs() / det_h.abs());
        }
    }
    Outcome {
        passed: check(worst_p, 1e-8) && check(worst_h, 1e-8),
        detail: format!("det P gap {worst_p:.3e}, det H gap {worst_h:.3e}, both <= 1e-8 relative, n <= 8"),
    }
}

fn sylvester(tol: &Tolerances) -> Outcome {
    let mut rng = rng_from_seed(4);
    let (mut res, mut agree): (f64, f64) = (0.0, 0.0);
    for n in 1..=8 {
        for _ in 0..200 {
            let s = random_state(n, &StateOptions::with_floor(FLOOR), &mut rng).unwrap();
            let y = random_tangent(n, &mut rng);
            let p = PreparedState::new(s.clone(), tol);
            let xb = p.solve(&y).unwrap();
            let xd = solve_dense(&s, &y, tol).unwrap();
            let ny = max_abs(y.matrix());
            for x in [xb.x.matrix(), xd.x.matrix()] {
                let r = s.matrix() * x + x * s.matrix() - y.matrix();
                res = res.max(max_abs(&r) / ny);
            }
            agree = agree.max(max_abs(&(xb.x.matrix() - xd.x.matrix())) / max_abs(xd.x.matrix()));
        }
    }
    Outcome {
        passed: check(res, 1e-9) && check(agree, 1e-8),
        detail: format!("residual {res:.3e} <= 1e-9 |Y|, block vs dense {agree:.3e} <= 1e-8"),
    }
}

fn fixed_points(tol: &Tolerances) -> Outcome {
    let s = StateMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
    let y = tangent(2, &[0.0, 1.0, 1.0, 0.0]);
    let p = PreparedState::strict(s.clone(), tol).unwrap();
    let values = [
        p.prop1(&y, &y).unwrap().value,
        p.prop2_with(CoeffRoute::Companion, &y, &y).unwrap().value,
        p.prop2_with(CoeffRoute::Smith, &y, &y).unwrap().value,
        p.prop4(&y, &y).unwrap().value,
        bures_eigen_oracle(&s, &y, &y).unwrap().value,
    ];
    let gap = values.iter().map(|v| (v - 1.0 / 3.0).abs()).fold(0.0, f64::max);

    let mut x_gap: f64 = 0.0;
    let mut refused = true;
    for (c, n) in [(0.5, 2usize), (0.3, 4)] {
        let state = StateMatrix::from_diagonal(&vec![c; n]).unwrap();
        let y = random_tangent(n, &mut rng_from_seed(5));
        let expected = y.matrix() / Complex64::new(2.0 * c, 0.0);
        let p = PreparedState::new(state.clone(), tol);
        for x in [p.solve(&y).unwrap().x, solve_dense(&state, &y, tol).unwrap().x] {
            x_gap = x_gap.max(max_abs(&(x.matrix() - &expected)) / max_abs(&expected));
        }
        refused &= matches!(p.prop4(&y, &y), Err(Error::NotGeneric { .. }));
    }
    Outcome {
        passed: check(gap, 1e-12) && check(x_gap, 1e-12) && refused,
        detail: format!(
            "diag(1,2) gap to 1/3 {gap:.3e}, c I solution gap {x_gap:.3e}, prop4 refuses c I: {refused}"
        ),
    }
}

fn projector(tol: &Tolerances) -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut redrawn = 0;
    let (mut idem, mut orth, mut forms): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 1..=8 {
        for _ in 0..200 {
            let p = generic_state(n, &mut rng, tol, &mut redrawn);
            let y = random_tangent(n, &mut rng);
            let split = p.split(&y).unwrap();
            let again = p.split(&split.parallel).unwrap();
            idem = idem.max(max_abs(&(again.parallel.matrix() - split.parallel.matrix())) / max_abs(y.matrix()));
            // Bures orthogonality through the eigenbasis formula.
            let cross = bures_eigen_oracle(p.state(), &split.parallel, &split.orthogonal).unwrap().value;
            let gyy = bures_eigen_oracle(p.state(), &y, &y).unwrap().value;
            orth = orth.max(cross.abs() / gyy);
            forms = forms.max(split.form_deviation);
        }
    }
    Outcome {
        passed: check(idem, 1e-10) && check(orth, 1e-10) && check(forms, 1e-10),
        detail: format!("idempotence {idem:.3e}, orthogonality {orth:.3e}, two-form gap {forms:.3e}, all <= 1e-10"),
    }
}

fn newton_cayley_hamilton() -> Outcome {
    let mut rng = rng_from_seed(7);
    let (mut newton, mut ch, mut round): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 1..=8 {
        for _ in 0..1000 {
            let s = random_state(n, &StateOptions::with_floor(FLOOR), &mut rng).unwrap();
            let inv = char_poly(&s);
            let k = inv.k();
            let p = power_traces(&s, 2 * n).unwrap();
            let norm = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for m in 1..=2 * n {
                let km = |i: usize| if i <= n { k[i] } else { 0.0 };
                let mut r = m as f64 * km(m);
                for j in 1..=m {
                    r += p[j - 1] * km(m - j);
                }
                newton = newton.max(r.abs() / norm.powi(m as i32).max(1.0));
            }
            let rho = s.matrix();
            let mut chi = CMatrix::zeros(n, n);
            for &c in &k {
                chi = &chi * rho + CMatrix::identity(n, n) * Complex64::new(c, 0.0);
            }
            ch = ch.max(max_abs(&chi) / max_abs(rho).powi(n as i32));

            // Round trip on the exact invariants of the spectrum.
            let ev = eigenvalues(&s);
            let mut e = vec![Wide::ONE];
            for &l in &ev {
                let mut next = e.clone();
                next.push(Wide::ZERO);
                for i in 1..next.len() {
                    next[i] += e[i - 1] * Wide::from_f64(l);
                }
                e = next;
            }
            let e = &e[1..];
            let back = e_from_p(&p_from_e(e, n).unwrap()).unwrap();
            let rel = back.iter().zip(e).map(|(a, b)| ((*a - *b) / *b).abs().to_f64()).fold(0.0, f64::max);
            round = round.max(rel);
        }
    }
    Outcome {
        passed: check(newton, 1e-9) && check(ch, 1e-9) && check(round, 1e-10),
        detail: format!(
            "Newton residual {newton:.3e} <= 1e-9, Cayley-Hamilton {ch:.3e} <= 1e-9 |rho|^n, e-p round trip {round:.3e} <= 1e-10"
        ),
    }
}

fn cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_bureskit");
    let run = |args: &[&str]| {
        Command::new(bin)
            .env_remove("BURESKIT_TOLERANCE_SCALE")
            .args(args)
            .output()
            .expect("binary runs")
    };
    let mut notes = Vec::new();
    let selftest = run(&["selftest"]);
    let selftest_ok = selftest.status.code() == Some(0);
    notes.push(format!("selftest exit {:?}", selftest.status.code()));

    let dir = tempfile::tempdir().unwrap();
    let out = run(&["random-state", "5", "--spectrum-floor=0.05", "--seed=11"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let expected = random_state(5, &StateOptions::with_floor(0.05), &mut rng_from_seed(11)).unwrap();
    let parsed = MatrixFile::parse(&text).unwrap();
    let lossless = &parsed.matrix == expected.matrix() && parsed.to_text() == text;
    notes.push(format!("round trip lossless {lossless}"));

    let state = dir.path().join("state.json");
    std::fs::write(&state, &text).unwrap();
    let y = dir.path().join("y.json");
    std::fs::write(&y, MatrixFile::from_tangent(&random_tangent(5, &mut rng_from_seed(12))).to_text()).unwrap();
    let skew = dir.path().join("skew.json");
    std::fs::write(&skew, "{\"kind\": \"tangent\", \"n\": 2, \"re\": [[0, 1], [-1, 0]], \"im\": [[0, 0], [0, 0]]}").unwrap();
    let half = dir.path().join("half.json");
    std::fs::write(&half, "{\"kind\": \"state\", \"n\": 2, \"re\": [[0.5, 0], [0, 0.5]], \"im\": [[0, 0], [0, 0]]}").unwrap();
    let s = |p: &std::path::Path| p.to_str().unwrap().to_string();

    let ok = run(&["compute", &s(&state), &s(&y), "--route=all"]);
    let invalid = run(&["compute", &s(&half), &s(&skew)]);
    let refused = run(&["compute", &s(&half), &s(&half), "--route=prop4"]);
    let codes = (ok.status.code(), invalid.status.code(), refused.status.code());
    let codes_ok = codes == (Some(0), Some(2), Some(3)) && invalid.stdout.is_empty();
    notes.push(format!("exit codes {:?}/{:?}/{:?}", codes.0, codes.1, codes.2));

    Outcome {
        passed: selftest_ok && lossless && codes_ok,
        detail: notes.join(", "),
    }
}

fn main() {
    let tol = Tolerances::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("four-route agreement", Box::new(move || four_route_agreement(&tol))),
        ("closed forms n = 2, 3", Box::new(move || closed_forms(&tol))),
        ("determinant identities", Box::new(move || determinant_identities(&tol))),
        ("Sylvester correctness", Box::new(move || sylvester(&tol))),
        ("fixed points", Box::new(move || fixed_points(&tol))),
        ("projector suite", Box::new(move || projector(&tol))),
        ("Newton and Cayley-Hamilton", Box::new(newton_cayley_hamilton)),
        ("CLI contract", Box::new(cli_contract)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = f();
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
