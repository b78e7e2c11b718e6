//! Seeded cross-validation of every route against its identities and
//! against the eigenbasis oracle, plus fixed golden cases.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::closed_forms as cf;
use crate::coeffs::{det_h_identity_residual, CoeffRoute};
use crate::error::{Error, Result};
use crate::invariants::{
    e_from_p, e_from_p_det, newton_residuals, p_from_e, p_from_e_det, power_traces,
    cayley_hamilton_residual, StateMatrix, TangentMatrix,
};
use crate::linalg::{max_abs, CMatrix, RMatrix};
use crate::metric::PreparedState;
use crate::oracle::{bures_eigen_oracle, eigenvalues, gram_det_identity_residual};
use crate::random::{random_state, random_tangent, rng_from_seed, StateOptions, StateRng};
use crate::scalar::Real;
use crate::sylvester::solve_dense;
use crate::tolerance::Tolerances;
use crate::wide::Wide;

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const SPECTRUM_FLOOR: f64 = 0.05;
/// Tolerance for the fixed hand-computed cases.
pub const GOLDEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub n_max: usize,
    /// Random states per dimension; zero runs the golden cases only.
    pub samples: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            n_max: 8,
            samples: 1000,
            seed: DEFAULT_SEED,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// The worst observed value must not exceed the tolerance.
    AtMost,
    /// The worst observed value must not fall below the tolerance.
    AtLeast,
}

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub bound: Bound,
    pub tolerance: f64,
    /// Largest value for [`Bound::AtMost`], smallest for [`Bound::AtLeast`].
    /// Non-finite when a check could not be evaluated.
    pub worst: f64,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn line(&self) -> String {
        let (label, op) = match self.bound {
            Bound::AtMost => ("max", "<="),
            Bound::AtLeast => ("min", ">="),
        };
        format!(
            "{} {:<34} {label} {:.3e}  tol {op} {:.1e}  ({} checks)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.checks
        )
    }
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub config: SelftestConfig,
    pub results: Vec<PropertyResult>,
    /// Random states redrawn because they failed the genericity test.
    pub redrawn: usize,
    pub elapsed: Duration,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(PropertyResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&r.line());
            out.push('\n');
            for f in r.failures.iter().take(3) {
                out.push_str(&format!("     {f}\n"));
            }
        }
        let passed = self.results.iter().filter(|r| r.passed()).count();
        out.push_str(&format!(
            "selftest: {passed}/{} properties passed (n_max {}, samples {}, seed {}, redrawn {}, {:.2} s)\n",
            self.results.len(),
            self.config.n_max,
            self.config.samples,
            self.config.seed,
            self.redrawn,
            self.elapsed.as_secs_f64()
        ));
        out
    }
}

struct Tracker {
    results: Vec<PropertyResult>,
}

impl Tracker {
    fn entry(&mut self, name: &'static str, bound: Bound, tolerance: f64) -> &mut PropertyResult {
        let idx = match self.results.iter().position(|r| r.name == name) {
            Some(i) => i,
            None => {
                self.results.push(PropertyResult {
                    name,
                    bound,
                    tolerance,
                    worst: match bound {
                        Bound::AtMost => 0.0,
                        Bound::AtLeast => f64::INFINITY,
                    },
                    checks: 0,
                    failures: Vec::new(),
                });
                self.results.len() - 1
            }
        };
        &mut self.results[idx]
    }

    fn record(&mut self, name: &'static str, bound: Bound, tolerance: f64, value: f64, context: &dyn Fn() -> String) {
        let r = self.entry(name, bound, tolerance);
        r.checks += 1;
        let ok = match bound {
            Bound::AtMost => value <= tolerance,
            Bound::AtLeast => value >= tolerance,
        };
        if value.is_nan() {
            r.worst = f64::NAN;
        } else if !r.worst.is_nan() {
            r.worst = match bound {
                Bound::AtMost => r.worst.max(value),
                Bound::AtLeast => r.worst.min(value),
            };
        }
        if !ok {
            r.failures.push(format!("{value:.3e} at {}", context()));
        }
    }

    fn at_most(&mut self, name: &'static str, tolerance: f64, value: f64, context: &dyn Fn() -> String) {
        self.record(name, Bound::AtMost, tolerance, value, context);
    }

    fn fallible(&mut self, name: &'static str, tolerance: f64, value: Result<f64>, context: &dyn Fn() -> String) {
        match value {
            Ok(v) => self.at_most(name, tolerance, v, context),
            Err(e) => {
                let r = self.entry(name, Bound::AtMost, tolerance);
                r.checks += 1;
                r.worst = f64::NAN;
                r.failures.push(format!("error \"{e}\" at {}", context()));
            }
        }
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

fn rel_matrix(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// Entrywise `|a - b| / |b|`.
fn entrywise_rel<R: Real>(a: &DMatrix<R>, b: &DMatrix<R>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).to_f64().abs() / y.to_f64().abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn rel_vec<R: Real>(a: &[R], b: &[R]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).to_f64().abs() / y.to_f64().abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn combine(a: f64, y1: &TangentMatrix, b: f64, y2: &TangentMatrix) -> TangentMatrix {
    let m = y1.matrix() * Complex64::new(a, 0.0) + y2.matrix() * Complex64::new(b, 0.0);
    TangentMatrix::new(m).expect("real combination of Hermitian matrices")
}

pub fn run_selftest(config: &SelftestConfig) -> SelftestReport {
    let start = Instant::now();
    let mut t = Tracker { results: Vec::new() };
    golden_cases(&mut t, &config.tol);
    let mut rng = rng_from_seed(config.seed);
    let mut redrawn = 0;
    if config.samples > 0 {
        for n in 1..=config.n_max {
            for s in 0..config.samples {
                let prepared = loop {
                    let state = random_state(n, &StateOptions::with_floor(SPECTRUM_FLOOR), &mut rng)
                        .expect("floor is valid");
                    let p = PreparedState::new(state, &config.tol);
                    if p.genericity().generic {
                        break p;
                    }
                    redrawn += 1;
                };
                random_sample(&mut t, &prepared, &mut rng, &config.tol, n, s);
            }
        }
    }
    SelftestReport {
        config: config.clone(),
        results: t.results,
        redrawn,
        elapsed: start.elapsed(),
    }
}

fn random_sample(t: &mut Tracker, p: &PreparedState, rng: &mut StateRng, tol: &Tolerances, n: usize, s: usize) {
    let ctx = move || format!("n={n} sample={s}");
    let ctx = &ctx;
    let state = p.state();
    let inv = p.invariants();
    let ev = eigenvalues(state);

    // Invariants.
    let newton = power_traces(state, 2 * n)
        .map(|pt| newton_residuals(&pt, &inv.k()).into_iter().fold(0.0, f64::max));
    t.fallible("newton_residual", tol.newton, newton, ctx);
    t.at_most("cayley_hamilton_residual", tol.newton, cayley_hamilton_residual(state, inv), ctx);
    t.at_most("det_p_identity", tol.xroute, gram_det_identity_residual(inv, &ev), ctx);
    t.at_most("det_h_identity", tol.xroute, det_h_identity_residual(inv, &ev), ctx);
    let e = inv.e_wide();
    let round_trip = (|| -> Result<f64> {
        let p_rec = p_from_e(e, n)?;
        let a = rel_vec(&e_from_p(&p_rec)?, e);
        let b = rel_vec(&e_from_p_det(&p_from_e_det(e, n)?)?, e);
        let mut padded = e.to_vec();
        padded.resize(2 * n - 1, Wide::ZERO);
        let c = rel_vec(&p_from_e_det(&padded, 2 * n - 1)?, &inv.p_wide()[..2 * n - 1]);
        Ok(a.max(b).max(c))
    })();
    t.fallible("e_p_round_trip", 1e-10, round_trip, ctx);

    // Coefficient matrices.
    let coeffs = (|| -> Result<[f64; 3]> {
        let a = p.coefficients(CoeffRoute::Companion)?;
        let b = p.coefficients(CoeffRoute::Smith)?;
        Ok([a.deviation(b), a.residual.max(b.residual), a.asymmetry.max(b.asymmetry)])
    })();
    t.fallible("coeff_route_agreement", tol.xroute, coeffs.clone().map(|c| c[0]), ctx);
    t.fallible("coeff_equation_residual", tol.coeff, coeffs.clone().map(|c| c[1]), ctx);
    t.fallible("coeff_symmetry", tol.coeff, coeffs.map(|c| c[2]), ctx);

    let y_prime = random_tangent(n, rng);
    let y = random_tangent(n, rng);
    let y2 = random_tangent(n, rng);
    let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));

    let reconstruction = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for route in [CoeffRoute::Companion, CoeffRoute::Smith] {
            let x = p.apply_inverse(route, &y)?;
            let back = state.matrix() * &x + &x * state.matrix();
            worst = worst.max(rel_matrix(&back, y.matrix()));
        }
        Ok(worst)
    })();
    t.fallible("operator_reconstruction", tol.xroute, reconstruction, ctx);

    // Sylvester solvers.
    let ny = max_abs(y.matrix());
    let sylvester = (|| -> Result<[f64; 4]> {
        let xb = p.solve(&y)?;
        let xd = solve_dense(state, &y, tol)?;
        let residual = xb.residual.max(xd.residual) / ny;
        let asym = xb.asymmetry.max(xd.asymmetry);
        let agree = rel_matrix(xb.x.matrix(), xd.x.matrix());
        let x2 = p.solve(&y2)?;
        let xc = p.solve(&combine(a, &y, b, &y2))?;
        let lin = xb.x.matrix() * Complex64::new(a, 0.0) + x2.x.matrix() * Complex64::new(b, 0.0);
        let linearity = max_abs(&(xc.x.matrix() - &lin))
            / max_abs(&lin).max(max_abs(xc.x.matrix())).max(f64::MIN_POSITIVE);
        Ok([residual, asym, agree, linearity])
    })();
    t.fallible("sylvester_residual", tol.solve, sylvester.clone().map(|v| v[0]), ctx);
    t.fallible("sylvester_hermiticity", tol.solve, sylvester.clone().map(|v| v[1]), ctx);
    t.fallible("sylvester_method_agreement", tol.xroute, sylvester.clone().map(|v| v[2]), ctx);
    t.fallible("sylvester_linearity", tol.solve, sylvester.map(|v| v[3]), ctx);

    // Metric routes.
    let routes = (|| -> Result<f64> {
        let oracle = bures_eigen_oracle(state, &y_prime, &y)?.value;
        let values = [
            p.prop1(&y_prime, &y)?.value,
            p.prop2(&y_prime, &y)?.value,
            p.prop2_with(CoeffRoute::Smith, &y_prime, &y)?.value,
            p.prop4(&y_prime, &y)?.value,
            p.prop4_with(CoeffRoute::Smith, &y_prime, &y)?.value,
            oracle,
        ];
        let mut worst: f64 = 0.0;
        for (i, &u) in values.iter().enumerate() {
            for &v in &values[i + 1..] {
                worst = worst.max(rel(u, v, oracle.abs().max(1.0)));
            }
        }
        Ok(worst)
    })();
    t.fallible("metric_route_agreement", tol.xroute, routes, ctx);

    let forms = (|| -> Result<[f64; 3]> {
        let g = |u: &TangentMatrix, v: &TangentMatrix| p.prop1(u, v).map(|r| r.value);
        let gpp = g(&y_prime, &y_prime)?;
        let gyy = g(&y, &y)?;
        let g22 = g(&y2, &y2)?;
        let symmetry = rel(g(&y_prime, &y)?, g(&y, &y_prime)?, (gpp * gyy).sqrt());
        let lhs = g(&y_prime, &combine(a, &y, b, &y2))?;
        let rhs = a * g(&y_prime, &y)? + b * g(&y_prime, &y2)?;
        let linearity = rel(lhs, rhs, a.abs() * (gpp * gyy).sqrt() + b.abs() * (gpp * g22).sqrt());
        Ok([gyy, symmetry, linearity])
    })();
    match forms {
        Ok([gyy, symmetry, linearity]) => {
            t.record("metric_positivity", Bound::AtLeast, 1e-12, gyy, ctx);
            t.at_most("metric_symmetry", tol.proj, symmetry, ctx);
            t.at_most("metric_linearity", tol.proj, linearity, ctx);
        }
        Err(e) => t.fallible("metric_symmetry", tol.proj, Err(e), ctx),
    }

    // Projector.
    let projector = (|| -> Result<[f64; 5]> {
        let split = p.split(&y)?;
        let again = p.split(&split.parallel)?;
        let idempotence = max_abs(&(again.parallel.matrix() - split.parallel.matrix())) / ny;
        let gyy = p.prop1(&y, &y)?.value;
        let orthogonality = p.prop1(&split.parallel, &split.orthogonal)?.value.abs() / gyy;
        let split_prime = p.split(&y_prime)?;
        let g_par = p.prop1(&split_prime.parallel, &split.parallel)?.value;
        let r4 = p.prop4(&y_prime, &y)?;
        let parallel = rel(r4.parallel_part.unwrap_or(f64::NAN), g_par, g_par.abs().max(1.0));

        let xd = solve_dense(state, &split.parallel, tol)?;
        let rho_inv = state
            .matrix()
            .clone()
            .try_inverse()
            .ok_or(Error::SingularState)?;
        let half = &rho_inv * split.parallel.matrix() * Complex64::new(0.5, 0.0);
        let slice = max_abs(&(xd.x.matrix() - &half)) / max_abs(&half).max(f64::MIN_POSITIVE);
        Ok([idempotence, orthogonality, split.form_deviation, parallel, slice])
    })();
    t.fallible("projector_idempotence", tol.proj, projector.clone().map(|v| v[0]), ctx);
    t.fallible("projector_orthogonality", tol.proj, projector.clone().map(|v| v[1]), ctx);
    t.fallible("projector_form_agreement", tol.proj, projector.clone().map(|v| v[2]), ctx);
    t.fallible("prop4_parallel_part", tol.solve, projector.clone().map(|v| v[3]), ctx);
    t.fallible("parallel_slice_inverse", tol.solve, projector.map(|v| v[4]), ctx);

    if n == 2 || n == 3 {
        t.fallible("closed_forms", 1e-9, closed_form_deviation(p, &y_prime, &y), ctx);
    }
}

/// Largest entrywise relative gap between the computed `A`, `P^-1`,
/// `2A - P^-1` (and for `n = 2` the parallel part) and the closed forms.
pub fn closed_form_deviation(p: &PreparedState, y_prime: &TangentMatrix, y: &TangentMatrix) -> Result<f64> {
    let inv = p.invariants();
    let e = inv.e_wide();
    let pt = inv.p_wide();
    let a = p.coefficients(CoeffRoute::Companion)?.wide().clone();
    let a_smith = p.coefficients(CoeffRoute::Smith)?.wide().clone();
    let g = p.gram_inverse()?.clone();
    let b = &a * Wide::from(2.0) - &g;
    let two = Wide::from(2.0);
    let mut worst: f64 = 0.0;
    match inv.n() {
        2 => {
            let a_cf = cf::coeff_n2(e);
            let g_cf = cf::gram_inverse_n2(pt);
            worst = worst
                .max(entrywise_rel(&a, &a_cf))
                .max(entrywise_rel(&a_smith, &a_cf))
                .max(entrywise_rel(&g, &g_cf))
                .max(entrywise_rel(&b, &cf::orthogonal_form_n2_e(e)))
                .max(entrywise_rel(&b, &cf::orthogonal_form_n2_p(pt)))
                .max(entrywise_rel(&b, &(&a_cf * two - &g_cf)));
            let de = |m: &TangentMatrix| {
                let tr = m.matrix().trace().re;
                let tr_rho = (p.state().matrix() * m.matrix()).trace().re;
                [Wide::from(tr), e[0] * Wide::from(tr) - Wide::from(tr_rho)]
            };
            let closed = cf::parallel_n2_e(e, de(y_prime), de(y)).to_f64();
            let r4 = p.prop4(y_prime, y)?;
            let par = r4.parallel_part.unwrap_or(f64::NAN);
            worst = worst.max(rel(par, closed, closed.abs().max(1.0)));
        }
        3 => {
            let a_cf = cf::coeff_n3(e);
            let g_cf = cf::gram_inverse_n3(pt);
            let det = crate::invariants::gram_matrix(inv).det();
            worst = worst
                .max(entrywise_rel(&a, &a_cf))
                .max(entrywise_rel(&a_smith, &a_cf))
                .max(entrywise_rel(&g, &g_cf))
                .max(entrywise_rel(&b, &(&a_cf * two - &g_cf)))
                .max(rel(det, cf::gram_det_n3(pt).to_f64(), det.abs()));
        }
        _ => {}
    }
    Ok(worst)
}

fn tangent(n: usize, v: &[f64]) -> TangentMatrix {
    TangentMatrix::from_real(&RMatrix::from_row_slice(n, n, v)).expect("symmetric literal")
}

fn golden_cases(t: &mut Tracker, tol: &Tolerances) {
    let ctx = |what: &'static str| move || what.to_string();

    // diag(1, 2) with the off-diagonal tangent: 1/3 on every route.
    let s12 = StateMatrix::from_diagonal(&[1.0, 2.0]).expect("positive diagonal");
    let off = tangent(2, &[0.0, 1.0, 1.0, 0.0]);
    let routes = (|| -> Result<f64> {
        let p = PreparedState::strict(s12.clone(), tol)?;
        let values = [
            p.prop1(&off, &off)?.value,
            p.prop2(&off, &off)?.value,
            p.prop2_with(CoeffRoute::Smith, &off, &off)?.value,
            p.prop4(&off, &off)?.value,
            bures_eigen_oracle(&s12, &off, &off)?.value,
        ];
        Ok(values.iter().map(|v| (v - 1.0 / 3.0).abs()).fold(0.0, f64::max))
    })();
    t.fallible("golden_diag_1_2_offdiagonal", GOLDEN_TOL, routes, &ctx("diag(1,2)"));

    let forms = (|| -> Result<f64> {
        let p = PreparedState::new(s12.clone(), tol);
        let b = p.coefficients(CoeffRoute::Companion)?.matrix() * 2.0
            - p.gram_inverse()?.map(|x| x.to_f64());
        let expected = RMatrix::from_row_slice(2, 2, &[-8.0, 6.0, 6.0, -4.0]) / 3.0;
        let a_expected = RMatrix::from_row_slice(2, 2, &[11.0, -3.0, -3.0, 1.0]) / 12.0;
        let a = p.coefficients(CoeffRoute::Smith)?.matrix();
        Ok((b - expected).abs().max().max((a - a_expected).abs().max()))
    })();
    t.fallible("golden_diag_1_2_coefficients", GOLDEN_TOL, forms, &ctx("diag(1,2)"));

    // Closed forms on fixed generic states.
    for (name, d) in [("diag(0.3,0.7)", &[0.3, 0.7][..]), ("diag(0.2,0.5,1.1)", &[0.2, 0.5, 1.1][..])] {
        let state = StateMatrix::from_diagonal(d).expect("positive diagonal");
        let n = d.len();
        let y = tangent(n, &(0..n * n).map(|k| ((k / n) + (k % n)) as f64 * 0.25 - 0.3).collect::<Vec<_>>());
        let p = PreparedState::new(state, tol);
        t.fallible("golden_closed_forms", 1e-9, closed_form_deviation(&p, &y, &y), &ctx(name));
    }

    // Multiples of the identity: X = Y / (2c), and the split route refuses.
    for (name, c, n) in [("0.5 I_2", 0.5, 2), ("0.7 I_3", 0.7, 3)] {
        let state = StateMatrix::from_diagonal(&vec![c; n]).expect("positive diagonal");
        let y = tangent(n, &(0..n * n).map(|k| ((k / n) * (k % n)) as f64 + 1.0).collect::<Vec<_>>());
        let x = (|| -> Result<f64> {
            let p = PreparedState::new(state.clone(), tol);
            let expected = y.matrix() / Complex64::new(2.0 * c, 0.0);
            let xb = p.solve(&y)?;
            let xd = solve_dense(&state, &y, tol)?;
            Ok(rel_matrix(xb.x.matrix(), &expected).max(rel_matrix(xd.x.matrix(), &expected)))
        })();
        t.fallible("golden_identity_solution", GOLDEN_TOL, x, &ctx(name));
        let refused = match PreparedState::new(state, tol).prop4(&y, &y) {
            Err(Error::NotGeneric { .. }) => 0.0,
            _ => 1.0,
        };
        t.at_most("golden_identity_prop4_refusal", 0.0, refused, &ctx(name));
    }

    // Scalar state: everything reduces to y' y / (4 rho).
    let s = StateMatrix::from_diagonal(&[2.0]).expect("positive");
    let scalar = (|| -> Result<f64> {
        let p = PreparedState::new(s.clone(), tol);
        let (u, v) = (tangent(1, &[1.0]), tangent(1, &[3.0]));
        let vals = [p.prop1(&u, &v)?.value, p.prop2(&u, &v)?.value, p.prop4(&u, &v)?.value];
        Ok(vals.iter().map(|x| (x - 0.375).abs()).fold(0.0, f64::max))
    })();
    t.fallible("golden_scalar_state", GOLDEN_TOL, scalar, &ctx("rho = 2"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_only() {
        let r = run_selftest(&SelftestConfig { samples: 0, ..Default::default() });
        assert!(r.passed(), "{}", r.to_text());
        assert!(r.get("newton_residual").is_none());
    }

    #[test]
    fn small_run_passes_and_is_deterministic() {
        let cfg = SelftestConfig { n_max: 4, samples: 10, seed: 5, tol: Tolerances::default() };
        let a = run_selftest(&cfg);
        let b = run_selftest(&cfg);
        assert!(a.passed(), "{}", a.to_text());
        let worst = |r: &SelftestReport| r.results.iter().map(|p| p.worst).collect::<Vec<_>>();
        assert_eq!(worst(&a), worst(&b));
    }

    #[test]
    fn scalar_dimension_only() {
        let r = run_selftest(&SelftestConfig { n_max: 1, samples: 20, ..Default::default() });
        assert!(r.passed(), "{}", r.to_text());
    }
}
