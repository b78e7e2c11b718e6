//! Scalar invariants of a state: power traces `p_i = Tr rho^i`,
//! characteristic coefficients `k_i` of `det(t - rho)`, elementary
//! invariants `e_i = (-1)^i k_i`, and the Hankel Gram matrix
//! `P_ij = p_(i+j-1)` that decides genericity.
//!
//! Nothing here diagonalizes. Positive definiteness is checked with a
//! Cholesky factorization and all invariants come from matrix powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_pivots, hermitian_asymmetry, hermitian_part, horner, max_abs, powers, trace,
    widen, CMatrix, Lu, RMatrix, WCMatrix, WMatrix,
};
use crate::scalar::{Field, Real};
use crate::tolerance::Tolerances;
use crate::wide::Wide;

fn check_square_finite(m: &CMatrix) -> Result<usize> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Empty);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(m.nrows())
}

fn check_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<()> {
    let asymmetry = hermitian_asymmetry(m);
    let tolerance = tol.herm * max_abs(m);
    if asymmetry > tolerance {
        return Err(Error::NotHermitian {
            asymmetry,
            tolerance,
        });
    }
    Ok(())
}

/// A nondegenerate positive Hermitian matrix. The trace is not fixed.
#[derive(Debug, Clone)]
pub struct StateMatrix {
    matrix: CMatrix,
    wide: WCMatrix,
}

impl StateMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    /// Validates Hermiticity (within `tol.herm` of the largest entry) and
    /// positive definiteness, then stores the exact Hermitian part.
    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square_finite(&m)?;
        check_hermitian(&m, tol)?;
        let matrix = hermitian_part(&m);
        if let Err((pivot, value)) = cholesky_pivots(&matrix) {
            return Err(Error::NotPositiveDefinite { pivot, value });
        }
        let wide = widen(&matrix);
        Ok(StateMatrix { matrix, wide })
    }

    pub fn from_real(m: &RMatrix) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::from_real(&RMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub(crate) fn wide(&self) -> &WCMatrix {
        &self.wide
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn is_trace_one(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
    }
}

/// A Hermitian matrix, i.e. a tangent vector at some state.
#[derive(Debug, Clone)]
pub struct TangentMatrix {
    matrix: CMatrix,
}

impl TangentMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square_finite(&m)?;
        check_hermitian(&m, tol)?;
        Ok(TangentMatrix {
            matrix: hermitian_part(&m),
        })
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_hermitian(matrix: CMatrix) -> Self {
        debug_assert!(hermitian_asymmetry(&matrix) <= 1e-12 * max_abs(&matrix).max(1.0));
        TangentMatrix { matrix }
    }

    pub fn from_real(m: &RMatrix) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(n: usize) -> Self {
        TangentMatrix {
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Fails unless `self` lives at a state of dimension `n`.
    pub fn check_dimension(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.n(),
            });
        }
        Ok(())
    }
}

/// `p_1, ..., p_count` from precomputed powers `rho^0, ..., rho^count`.
pub(crate) fn traces_of_powers(pw: &[WCMatrix], count: usize) -> Vec<Wide> {
    (1..=count).map(|i| trace(&pw[i]).re).collect()
}

/// `p_i = Tr rho^i` for `i = 1..=m_max`, by repeated multiplication.
pub fn power_traces(state: &StateMatrix, m_max: usize) -> Result<Vec<f64>> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    let pw = powers(state.wide(), m_max + 1);
    let mut out = Vec::with_capacity(m_max);
    for (i, power) in pw.iter().enumerate().skip(1) {
        let t = trace(power);
        let scale = state.n() as f64 * max_abs(power);
        let im = t.im.to_f64().abs();
        let tolerance = Tolerances::default().herm * scale;
        if im > tolerance {
            return Err(Error::NotHermitian {
                asymmetry: im,
                tolerance,
            });
        }
        debug_assert!(i <= m_max);
        out.push(t.re.to_f64());
    }
    Ok(out)
}

/// `k_0 = 1, k_1, ..., k_n` from `p_1, ..., p_n` by the Newton recursion
/// `m k_m = -sum_(r=1..m) p_r k_(m-r)`.
pub fn k_from_p<R: Real>(p: &[R], n: usize) -> Result<Vec<R>> {
    if p.len() < n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let mut k = Vec::with_capacity(n + 1);
    k.push(R::one());
    for m in 1..=n {
        let mut s = R::zero();
        for r in 1..=m {
            s += p[r - 1] * k[m - r];
        }
        k.push(-s / R::of(m as f64));
    }
    Ok(k)
}

/// Elementary invariants from power traces; `e` has the length of `p`.
pub fn e_from_p<R: Real>(p: &[R]) -> Result<Vec<R>> {
    if p.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            found: 0,
        });
    }
    let k = k_from_p(p, p.len())?;
    Ok(k[1..]
        .iter()
        .enumerate()
        .map(|(i, &ki)| if i % 2 == 0 { -ki } else { ki })
        .collect())
}

/// Power traces `p_1, ..., p_m_max` from elementary invariants
/// `e_1, ..., e_n`. Beyond `n` the recursion
/// `p_m = sum_(r=1..n) (-1)^(r+1) e_r p_(m-r)` is used.
pub fn p_from_e<R: Real>(e: &[R], m_max: usize) -> Result<Vec<R>> {
    if e.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            found: 0,
        });
    }
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    let n = e.len();
    let mut p: Vec<R> = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut s = R::zero();
        for r in 1..m.min(n + 1) {
            let term = e[r - 1] * p[m - r - 1];
            if r % 2 == 1 {
                s += term;
            } else {
                s -= term;
            }
        }
        if m <= n {
            let term = R::of(m as f64) * e[m - 1];
            if m % 2 == 1 {
                s += term;
            } else {
                s -= term;
            }
        }
        p.push(s);
    }
    Ok(p)
}

/// `e_i` as `det(T_i) / i!`, where `T_i` is the lower Hessenberg matrix of
/// power traces with `1, 2, ..., i-1` on the superdiagonal. Independent of
/// the recursion in [`e_from_p`].
pub fn e_from_p_det<R: Real>(p: &[R]) -> Result<Vec<R>> {
    if p.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut out = Vec::with_capacity(p.len());
    let mut factorial = R::one();
    for i in 1..=p.len() {
        factorial *= R::of(i as f64);
        let t = DMatrix::from_fn(i, i, |r, c| {
            if c == r + 1 {
                R::of((r + 1) as f64)
            } else if c <= r {
                p[r - c]
            } else {
                R::zero()
            }
        });
        out.push(Lu::new(&t).det() / factorial);
    }
    Ok(out)
}

/// `p_i` as the determinant of the Hessenberg matrix with first column
/// `(e_1, 2 e_2, ..., i e_i)`, `i <= e.len()`.
pub fn p_from_e_det<R: Real>(e: &[R], m_max: usize) -> Result<Vec<R>> {
    if m_max > e.len() || e.is_empty() {
        return Err(Error::LengthMismatch {
            expected: m_max.max(1),
            found: e.len(),
        });
    }
    let mut out = Vec::with_capacity(m_max);
    for i in 1..=m_max {
        let t = DMatrix::from_fn(i, i, |r, c| {
            if c == r + 1 {
                R::one()
            } else if c == 0 {
                R::of((r + 1) as f64) * e[r]
            } else if c <= r {
                e[r - c]
            } else {
                R::zero()
            }
        });
        out.push(Lu::new(&t).det());
    }
    Ok(out)
}

/// Newton identity residuals `|m k_m + sum_r p_r k_(m-r)|`, one per
/// supplied power trace, each divided by `s^m` with
/// `s = max(1, max_r |p_r|^(1/r))`. Coefficients beyond `n` are zero.
pub fn newton_residuals<R: Real>(p: &[R], k: &[R]) -> Vec<f64> {
    let n = k.len() - 1;
    let s = p
        .iter()
        .enumerate()
        .map(|(r, v)| v.to_f64().abs().powf(1.0 / (r as f64 + 1.0)))
        .fold(1.0, f64::max);
    let coef = |i: usize| if i <= n { k[i] } else { R::zero() };
    (1..=p.len())
        .map(|m| {
            let mut s_m = R::of(m as f64) * coef(m);
            for r in 1..=m {
                s_m += p[r - 1] * coef(m - r);
            }
            s_m.to_f64().abs() / s.powi(m as i32)
        })
        .collect()
}

/// Characteristic data of a state: `k_0..k_n`, `e_1..e_n`, `p_1..p_(2n-1)`.
#[derive(Debug, Clone)]
pub struct CharInvariants {
    n: usize,
    k: Vec<Wide>,
    e: Vec<Wide>,
    p: Vec<Wide>,
}

impl CharInvariants {
    /// From `p_1, ..., p_n` (extra entries are ignored).
    pub fn from_power_traces(p: &[Wide], n: usize) -> Result<Self> {
        let k = k_from_p(p, n)?;
        Self::from_k(k)
    }

    /// From `k_0, ..., k_n` with `k_0 = 1`.
    pub fn from_coefficients(k: &[f64]) -> Result<Self> {
        if k.len() < 2 {
            return Err(Error::LengthMismatch {
                expected: 2,
                found: k.len(),
            });
        }
        if k[0] != 1.0 {
            return Err(Error::InvalidArgument(format!("k_0 must be 1, got {}", k[0])));
        }
        Self::from_k(k.iter().map(|&x| Wide::from(x)).collect())
    }

    fn from_k(k: Vec<Wide>) -> Result<Self> {
        let n = k.len() - 1;
        let e: Vec<Wide> = k[1..]
            .iter()
            .enumerate()
            .map(|(i, &ki)| if i % 2 == 0 { -ki } else { ki })
            .collect();
        let p = p_from_e(&e, 2 * n - 1)?;
        Ok(CharInvariants { n, k, e, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `k_0, ..., k_n`.
    pub fn k(&self) -> Vec<f64> {
        self.k.iter().map(|x| x.to_f64()).collect()
    }

    /// `e_1, ..., e_n`.
    pub fn e(&self) -> Vec<f64> {
        self.e.iter().map(|x| x.to_f64()).collect()
    }

    /// `p_1, ..., p_(2n-1)`.
    pub fn p(&self) -> Vec<f64> {
        self.p.iter().map(|x| x.to_f64()).collect()
    }

    pub fn k_wide(&self) -> &[Wide] {
        &self.k
    }

    pub fn e_wide(&self) -> &[Wide] {
        &self.e
    }

    pub fn p_wide(&self) -> &[Wide] {
        &self.p
    }

    /// `k_i`, zero outside `0..=n`.
    pub fn coef(&self, i: isize) -> Wide {
        if i < 0 || i as usize > self.n {
            Wide::ZERO
        } else {
            self.k[i as usize]
        }
    }

    /// `det rho = (-1)^n k_n`.
    pub fn det(&self) -> f64 {
        self.e[self.n - 1].to_f64()
    }
}

/// Characteristic coefficients from the power traces of `state`.
pub fn char_poly(state: &StateMatrix) -> CharInvariants {
    let n = state.n();
    let pw = powers(state.wide(), n + 1);
    let p = traces_of_powers(&pw, n);
    CharInvariants::from_power_traces(&p, n).expect("n power traces were computed")
}

/// `chi(rho)` by Horner's rule; zero up to rounding by Cayley-Hamilton.
pub fn cayley_hamilton_residual(state: &StateMatrix, inv: &CharInvariants) -> f64 {
    let chi = horner(inv.k_wide(), state.wide());
    let scale = max_abs(state.matrix()).max(f64::MIN_POSITIVE).powi(state.n() as i32);
    max_abs(&chi) / scale
}

/// The Hankel matrix `P_ij = p_(i+j-1)`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: WMatrix,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> RMatrix {
        self.entries.map(|x| x.to_f64())
    }

    pub fn wide(&self) -> &WMatrix {
        &self.entries
    }

    pub fn det(&self) -> f64 {
        Lu::new(&self.entries).det().to_f64()
    }

    /// Largest `|(row i+1) - (row 1) K^i|`, relative to the row size.
    pub fn row_relation_residual(&self, companion: &WMatrix) -> f64 {
        let n = self.n();
        let first = self.entries.rows(0, 1).into_owned();
        let mut acc = first.clone();
        let mut worst = 0.0f64;
        for i in 1..n {
            acc = &acc * companion;
            let row = self.entries.rows(i, 1).into_owned();
            let scale = max_abs(&row).max(f64::MIN_POSITIVE);
            worst = worst.max(max_abs(&(&acc - row)) / scale);
        }
        worst
    }
}

pub fn gram_matrix(inv: &CharInvariants) -> GramMatrix {
    let n = inv.n();
    let p = inv.p_wide();
    GramMatrix {
        entries: WMatrix::from_fn(n, n, |i, j| p[i + j]),
    }
}

/// Outcome of the genericity test.
#[derive(Debug, Clone, Copy)]
pub struct GenericityReport {
    pub generic: bool,
    /// `det P`.
    pub det_p: f64,
    /// `|det P| / max(1, p_1)^(n^2)`.
    pub normalized_det: f64,
    /// Reciprocal 1-norm condition number of `D P D`, `D = diag(P_ii)^(-1/2)`.
    /// This is the quantity compared against the threshold.
    pub rcond: f64,
    pub threshold: f64,
}

impl GenericityReport {
    /// True when the decision value is within three decades of the threshold.
    pub fn near_threshold(&self) -> bool {
        self.generic && self.rcond < 1e3 * self.threshold
    }
}

/// Decides whether the spectrum is nondegenerate. `det P` vanishes exactly
/// on repeated eigenvalues; numerically the decision is made on the
/// reciprocal condition number of the diagonally scaled Gram matrix, which
/// is invariant under `rho -> c rho` and does not underflow with `n`.
pub fn is_generic(inv: &CharInvariants, tol_generic: f64) -> GenericityReport {
    let gram = gram_matrix(inv);
    let n = gram.n();
    let p = gram.wide();
    let det = Lu::new(p).det();
    let det_p = det.to_f64();
    let scale = inv.p_wide()[0].to_f64().max(1.0);
    let normalized_det = det_p.abs() / scale.powi((n * n) as i32);

    let d: Vec<Wide> = (0..n).map(|i| p[(i, i)].sqrt().recip()).collect();
    let scaled = WMatrix::from_fn(n, n, |i, j| p[(i, j)] * d[i] * d[j]);
    let lu = Lu::new(&scaled);
    let rcond = match lu.inverse() {
        Some(inv) => {
            let norm = |m: &WMatrix| {
                (0..n)
                    .map(|j| m.column(j).iter().map(|z| z.modulus()).sum::<f64>())
                    .fold(0.0, f64::max)
            };
            1.0 / (norm(&scaled) * norm(&inv))
        }
        None => 0.0,
    };
    GenericityReport {
        generic: rcond > tol_generic,
        det_p,
        normalized_det,
        rcond,
        threshold: tol_generic,
    }
}
