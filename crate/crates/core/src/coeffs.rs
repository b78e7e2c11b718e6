//! The coefficient matrix `A` with `(L + R)^-1 = sum a_ij L^(i-1) R^(j-1)`,
//! where `L`, `R` multiply by `rho` from the left and right.
//!
//! Two independent constructions:
//!
//! * companion: `A = -chi(-K^T)^-1 N`, solving `K^T A + A K = C` with the
//!   companion matrix `K` of the characteristic polynomial;
//! * Smith: `a_ij` as signed double sums of first-row cofactors of the
//!   matrix `H_ij = k_(2j-i)`.
//!
//! Both run in double-double precision.

use crate::error::{Error, Result};
use crate::invariants::CharInvariants;
use crate::linalg::{hadamard_ratio, horner, max_abs, solve_checked, Lu, RMatrix, WMatrix};
use crate::tolerance::Tolerances;
use crate::wide::Wide;

/// Ratio `|det| / Hadamard bound` below which a conditioning warning is
/// attached to a coefficient matrix.
const WARN_RATIO: f64 = 1e3 * f64::EPSILON;

/// Companion matrix: ones on the superdiagonal, last row `(-k_n, ..., -k_1)`.
#[derive(Debug, Clone)]
pub struct CompanionMatrix {
    entries: WMatrix,
}

impl CompanionMatrix {
    pub fn new(inv: &CharInvariants) -> Result<Self> {
        let n = inv.n();
        let k = inv.k_wide();
        if k[n].to_f64() == 0.0 && k[n].lo() == 0.0 {
            return Err(Error::SingularState);
        }
        let mut entries = WMatrix::zeros(n, n);
        for i in 0..n - 1 {
            entries[(i, i + 1)] = Wide::ONE;
        }
        for j in 0..n {
            entries[(n - 1, j)] = -k[n - j];
        }
        Ok(CompanionMatrix { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> RMatrix {
        self.entries.map(|x| x.to_f64())
    }

    pub fn wide(&self) -> &WMatrix {
        &self.entries
    }

    /// Largest relative gap between `Tr K^i` and `p_i`, `i = 1..=n`. `K` has
    /// the characteristic polynomial of the state, so this vanishes up to
    /// rounding.
    pub fn power_trace_mismatch(&self, inv: &CharInvariants) -> f64 {
        let n = self.n();
        let mut acc = WMatrix::identity(n, n);
        let mut worst = 0.0f64;
        for i in 0..n {
            acc = &acc * &self.entries;
            let t = crate::linalg::trace(&acc);
            let p = inv.p_wide()[i];
            worst = worst.max((t - p).abs().to_f64() / p.abs().to_f64().max(1.0));
        }
        worst
    }
}

pub fn companion(inv: &CharInvariants) -> Result<CompanionMatrix> {
    CompanionMatrix::new(inv)
}

/// `C`: a single one in the top-left corner, representing the identity
/// operator `L^0 R^0`.
pub fn identity_rhs(n: usize) -> WMatrix {
    let mut c = WMatrix::zeros(n, n);
    c[(0, 0)] = Wide::ONE;
    c
}

/// Closed form `N_ij = (-1)^(i+1) k_(n+1-i-j)` (1-based indices).
pub fn matrix_n(inv: &CharInvariants) -> WMatrix {
    let n = inv.n() as isize;
    WMatrix::from_fn(inv.n(), inv.n(), |i, j| {
        let (i, j) = (i as isize + 1, j as isize + 1);
        let v = inv.coef(n + 1 - i - j);
        if i % 2 == 0 {
            -v
        } else {
            v
        }
    })
}

/// Sum form `N = sum_(i=1..n) k_(n-i) sum_(j=0..i-1) (-K^T)^j C K^(i-j-1)`,
/// i.e. the upper right block of `chi([[-K^T, C], [0, K]])`.
pub fn matrix_n_sum(inv: &CharInvariants, k: &CompanionMatrix) -> WMatrix {
    let n = inv.n();
    let kt_neg = -k.wide().transpose();
    let c = identity_rhs(n);
    let k_pw = crate::linalg::powers(k.wide(), n);
    // s_i = sum_j (-K^T)^j C K^(i-1-j), s_1 = C, s_(i+1) = (-K^T) s_i + C K^i.
    let mut s = c.clone();
    let mut total = WMatrix::zeros(n, n);
    for i in 1..=n {
        total += s.map(|x| x * inv.k_wide()[n - i]);
        if i < n {
            s = &kt_neg * &s + &c * &k_pw[i];
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffRoute {
    Companion,
    Smith,
}

impl CoeffRoute {
    pub fn name(self) -> &'static str {
        match self {
            CoeffRoute::Companion => "companion",
            CoeffRoute::Smith => "smith",
        }
    }
}

/// `A = (a_ij)` in the power basis, with diagnostics.
#[derive(Debug, Clone)]
pub struct CoeffMatrix {
    pub route: CoeffRoute,
    entries: WMatrix,
    /// `|K^T A + A K - C| / (|A| |K|)`.
    pub residual: f64,
    /// `|A - A^T| / |A|`.
    pub asymmetry: f64,
    /// Condition estimate of the matrix inverted by the route
    /// (`chi(-K^T)` or, for Smith, `1 / hadamard ratio of H`).
    pub condition: f64,
    pub warnings: Vec<String>,
}

impl CoeffMatrix {
    fn finish(
        route: CoeffRoute,
        entries: WMatrix,
        k: &CompanionMatrix,
        condition: f64,
        warnings: Vec<String>,
    ) -> Self {
        let residual = sylvester_residual(&entries, k);
        let scale = max_abs(&entries).max(f64::MIN_POSITIVE);
        let asymmetry = max_abs(&(&entries - entries.transpose())) / scale;
        CoeffMatrix {
            route,
            entries,
            residual,
            asymmetry,
            condition,
            warnings,
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> RMatrix {
        self.entries.map(|x| x.to_f64())
    }

    pub fn wide(&self) -> &WMatrix {
        &self.entries
    }

    /// `|self - other| / |self|`, entrywise maximum norms.
    pub fn deviation(&self, other: &CoeffMatrix) -> f64 {
        max_abs(&(&self.entries - &other.entries)) / max_abs(&self.entries).max(f64::MIN_POSITIVE)
    }
}

/// `|K^T A + A K - C|_max / (|A|_max |K|_max)`.
pub fn sylvester_residual(a: &WMatrix, k: &CompanionMatrix) -> f64 {
    let n = a.nrows();
    let kw = k.wide();
    let r = kw.transpose() * a + a * kw - identity_rhs(n);
    let scale = (max_abs(a) * max_abs(kw)).max(f64::MIN_POSITIVE);
    max_abs(&r) / scale
}

/// `A = -chi(-K^T)^-1 N`.
pub fn coeff_companion(inv: &CharInvariants, tol: &Tolerances) -> Result<CoeffMatrix> {
    let k = CompanionMatrix::new(inv)?;
    let chi = horner(inv.k_wide(), &(-k.wide().transpose()));
    let n_mat = matrix_n(inv);
    let solved = solve_checked(&chi, &n_mat, Wide::EPSILON, "chi(-K^T)")?;
    let a = -solved.solution;
    let mut warnings = Vec::new();
    let ratio = hadamard_ratio(&chi, Lu::new(&chi).det());
    if ratio < WARN_RATIO {
        warnings.push(format!("det chi(-K^T) is small relative to its scale ({ratio:.3e})"));
    }
    let out = CoeffMatrix::finish(CoeffRoute::Companion, a, &k, solved.condition, warnings);
    Ok(with_residual_warning(out, tol))
}

fn with_residual_warning(mut a: CoeffMatrix, tol: &Tolerances) -> CoeffMatrix {
    if a.residual > tol.coeff {
        a.warnings.push(format!(
            "{} route residual {:.3e} exceeds {:.3e}",
            a.route.name(),
            a.residual,
            tol.coeff
        ));
    }
    a
}

/// `H_ij = k_(2j-i)` together with `det H` and the first-row cofactors.
#[derive(Debug, Clone)]
pub struct SmithTableau {
    pub h: WMatrix,
    pub det_h: Wide,
    /// `cofactors[m - 1]` is the cofactor of `H_(1,m)`.
    pub cofactors: Vec<Wide>,
}

impl SmithTableau {
    pub fn new(inv: &CharInvariants) -> Self {
        let n = inv.n();
        let h = WMatrix::from_fn(n, n, |i, j| inv.coef(2 * (j as isize + 1) - (i as isize + 1)));
        let det_h = Lu::new(&h).det();
        let cofactors = (0..n)
            .map(|m| {
                let minor = h.clone().remove_row(0).remove_column(m);
                let d = crate::linalg::det(&minor);
                if m % 2 == 0 {
                    d
                } else {
                    -d
                }
            })
            .collect();
        SmithTableau {
            h,
            det_h,
            cofactors,
        }
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// `Phi(m)` for `twice_m = 2m`: zero unless `m` is an integer in `1..=n`.
    fn phi(&self, twice_m: usize) -> Wide {
        if twice_m % 2 == 1 {
            return Wide::ZERO;
        }
        let m = twice_m / 2;
        if m == 0 || m > self.n() {
            Wide::ZERO
        } else {
            self.cofactors[m - 1]
        }
    }
}

/// Smith's closed form
/// `a_ij = (-1)^i / (2 det H) sum_r sum_s (-1)^r k_r k_s Phi((i+j+r+s)/2)`
/// with `r <= n-i`, `s <= n-j`.
pub fn coeff_smith(inv: &CharInvariants, tol: &Tolerances) -> Result<CoeffMatrix> {
    let k = CompanionMatrix::new(inv)?;
    let n = inv.n();
    let tab = SmithTableau::new(inv);
    let ratio = hadamard_ratio(&tab.h, tab.det_h);
    if ratio <= 1e3 * Wide::EPSILON {
        return Err(Error::IllConditioned {
            what: "H",
            condition: 1.0 / ratio,
        });
    }
    let mut warnings = Vec::new();
    if ratio < WARN_RATIO {
        warnings.push(format!("det H is small relative to its scale ({ratio:.3e})"));
    }
    let kw = inv.k_wide();
    let two_det = tab.det_h + tab.det_h;
    let a = WMatrix::from_fn(n, n, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        let mut s = Wide::ZERO;
        for r in 0..=(n - i) {
            for t in 0..=(n - j) {
                let phi = tab.phi(i + j + r + t);
                if phi == Wide::ZERO {
                    continue;
                }
                let term = kw[r] * kw[t] * phi;
                if r % 2 == 0 {
                    s += term;
                } else {
                    s -= term;
                }
            }
        }
        let v = s / two_det;
        if i % 2 == 1 {
            -v
        } else {
            v
        }
    });
    let out = CoeffMatrix::finish(CoeffRoute::Smith, a, &k, 1.0 / ratio, warnings);
    Ok(with_residual_warning(out, tol))
}

/// Relative gap between `det H` and
/// `(-1)^(n(n+1)/2) prod_i l_i prod_(i<j) (l_i + l_j)` for supplied
/// eigenvalues.
pub fn det_h_identity_residual(inv: &CharInvariants, eigenvalues: &[f64]) -> f64 {
    let n = inv.n();
    let tab = SmithTableau::new(inv);
    let mut prod = 1.0f64;
    for (i, &li) in eigenvalues.iter().enumerate() {
        prod *= li;
        for &lj in &eigenvalues[i + 1..] {
            prod *= li + lj;
        }
    }
    if (n * (n + 1) / 2) % 2 == 1 {
        prod = -prod;
    }
    let d = tab.det_h.to_f64();
    (d - prod).abs() / d.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{char_poly, StateMatrix};
    use approx::assert_relative_eq;

    fn inv_of(k: &[f64]) -> CharInvariants {
        CharInvariants::from_coefficients(k).unwrap()
    }

    fn assert_matrix(actual: &RMatrix, expected: &[f64], tol: f64) {
        let n = actual.nrows();
        let e = RMatrix::from_row_slice(n, n, expected);
        let err = (actual - &e).abs().max();
        assert!(err <= tol, "got {actual}, expected {e}");
    }

    #[test]
    fn companion_patterns() {
        let k = companion(&inv_of(&[1.0, -3.0, 2.0])).unwrap();
        assert_matrix(&k.matrix(), &[0.0, 1.0, -2.0, 3.0], 0.0);
        let k = companion(&inv_of(&[1.0, -0.7])).unwrap();
        assert_matrix(&k.matrix(), &[0.7], 0.0);
        let inv = inv_of(&[1.0, -6.0, 11.0, -6.0]);
        let k = companion(&inv).unwrap();
        assert_matrix(&k.matrix(), &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 6.0, -11.0, 6.0], 0.0);
        assert!(k.power_trace_mismatch(&inv) < 1e-30);
        assert_eq!(companion(&inv_of(&[1.0, -1.0, 0.0])).unwrap_err(), Error::SingularState);
    }

    #[test]
    fn n_closed_form_and_sum_form() {
        for (k, expected) in [
            (vec![1.0, -3.0, 2.0], vec![-3.0, 1.0, -1.0, 0.0]),
            (vec![1.0, -0.7], vec![1.0]),
            (
                vec![1.0, -6.0, 11.0, -6.0],
                vec![11.0, -6.0, 1.0, 6.0, -1.0, 0.0, 1.0, 0.0, 0.0],
            ),
        ] {
            let inv = inv_of(&k);
            let closed = matrix_n(&inv).map(|x| x.to_f64());
            assert_matrix(&closed, &expected, 0.0);
            let sum = matrix_n_sum(&inv, &companion(&inv).unwrap()).map(|x| x.to_f64());
            assert_matrix(&sum, &expected, 0.0);
        }
    }

    #[test]
    fn companion_route_examples() {
        let tol = Tolerances::default();
        let a = coeff_companion(&inv_of(&[1.0, -3.0, 2.0]), &tol).unwrap();
        let e: Vec<f64> = [11.0, -3.0, -3.0, 1.0].iter().map(|x| x / 12.0).collect();
        assert_matrix(&a.matrix(), &e, 1e-15);
        assert!(a.residual < 1e-30);

        let a = coeff_companion(&inv_of(&[1.0, -2.5]), &tol).unwrap();
        assert_relative_eq!(a.matrix()[(0, 0)], 0.2, max_relative = 1e-15);
    }

    #[test]
    fn companion_route_matches_n3_closed_form() {
        // e = (6, 11, 6), diag(1, 2, 3).
        let (e1, e2, e3) = (6.0, 11.0, 6.0);
        let pre = 1.0 / (2.0 * e3 * (e1 * e2 - e3));
        let upper = [
            e1 * e2 * e2 + e1 * e1 * e3 - e2 * e3,
            -e1 * e1 * e2,
            e1 * e2 - e3,
            e1 * e1 * e1 + e3,
            -e1 * e1,
            e1,
        ];
        let full = [
            upper[0], upper[1], upper[2], upper[1], upper[3], upper[4], upper[2], upper[4],
            upper[5],
        ];
        let expected: Vec<f64> = full.iter().map(|x| x * pre).collect();
        let inv = char_poly(&StateMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap());
        let tol = Tolerances::default();
        let a = coeff_companion(&inv, &tol).unwrap();
        assert_matrix(&a.matrix(), &expected, 1e-15);
        let s = coeff_smith(&inv, &tol).unwrap();
        assert_matrix(&s.matrix(), &expected, 1e-15);
    }

    #[test]
    fn smith_route_examples() {
        let tol = Tolerances::default();
        let inv = inv_of(&[1.0, -4.0]);
        let tab = SmithTableau::new(&inv);
        assert_eq!(tab.det_h.to_f64(), -4.0);
        assert_eq!(tab.cofactors[0].to_f64(), 1.0);
        let a = coeff_smith(&inv, &tol).unwrap();
        assert_relative_eq!(a.matrix()[(0, 0)], 0.125, max_relative = 1e-15);

        let inv = inv_of(&[1.0, -3.0, 2.0]);
        let tab = SmithTableau::new(&inv);
        assert_matrix(&tab.h.map(|x| x.to_f64()), &[-3.0, 0.0, 1.0, 2.0], 0.0);
        assert_eq!(tab.det_h.to_f64(), -6.0);
        let s = coeff_smith(&inv, &tol).unwrap();
        let c = coeff_companion(&inv, &tol).unwrap();
        assert!(s.deviation(&c) < 1e-30);
        assert!(s.residual < 1e-30);
    }

    #[test]
    fn det_h_identity_small_cases() {
        let inv = inv_of(&[1.0, -3.0, 2.0]);
        assert!(det_h_identity_residual(&inv, &[1.0, 2.0]) <= 1e-12);
        let inv = inv_of(&[1.0, -0.3]);
        assert!(det_h_identity_residual(&inv, &[0.3]) <= 1e-15);
        let inv = inv_of(&[1.0, -6.0, 11.0, -6.0]);
        assert_eq!(SmithTableau::new(&inv).det_h.to_f64(), 360.0);
        assert!(det_h_identity_residual(&inv, &[1.0, 2.0, 3.0]) <= 1e-14);
    }

    #[test]
    fn non_generic_state_still_solves_the_coefficient_equation() {
        let inv = char_poly(&StateMatrix::from_diagonal(&[0.5, 0.5, 2.0]).unwrap());
        let tol = Tolerances::default();
        let a = coeff_companion(&inv, &tol).unwrap();
        assert!(a.residual < 1e-28);
        let s = coeff_smith(&inv, &tol).unwrap();
        assert!(s.residual < 1e-28);
    }
}
