//! Solvers for `rho X + X rho = Y`.
//!
//! The production solver applies the characteristic polynomial to the
//! block matrix `[[-rho, Y], [0, rho]]`: its upper right block `M` gives
//! `chi(-rho) X + M = 0`, and `chi(-rho)` is invertible for positive
//! `rho`. The dense solver builds the `n^2 x n^2` matrix of `L + R` and
//! is kept as an independent reference.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::invariants::{CharInvariants, StateMatrix, TangentMatrix};
use crate::linalg::{
    hermitian_asymmetry, hermitian_part, matmul, max_abs, narrow, powers, solve_checked, widen,
    CMatrix,
};
use crate::scalar::{Field, WideComplex};
use crate::tolerance::Tolerances;
use crate::wide::Wide;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SylvesterMethod {
    BlockPoly,
    Dense,
}

#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub x: TangentMatrix,
    /// `|rho X + X rho - Y|_max`.
    pub residual: f64,
    /// `|X - X^*|_max / |X|_max` before symmetrization.
    pub asymmetry: f64,
    pub condition: f64,
    pub method: SylvesterMethod,
    pub warnings: Vec<String>,
}

/// `sum_(i=1..n) k_(n-i) sum_(j=0..i-1) (-rho)^j Y rho^(i-j-1)` from
/// `pw = [rho^0, ..., rho^(n-1)]` and `k = (k_0, ..., k_n)`.
pub fn block_upper<F: Field>(pw: &[DMatrix<F>], y: &DMatrix<F>, k: &[F::Real]) -> DMatrix<F> {
    let n = k.len() - 1;
    let rho = &pw[1.min(pw.len() - 1)];
    let mut s = y.clone();
    let mut m = s.map(|z| z * F::from_real(k[n - 1]));
    for i in 2..=n {
        // s_i = -rho s_(i-1) + Y rho^(i-1)
        s = matmul(y, &pw[i - 1]) - matmul(rho, &s);
        let c = F::from_real(k[n - i]);
        m += s.map(|z| z * c);
    }
    m
}

/// Upper right block of `chi([[-rho, Y], [0, rho]])` for a state.
pub fn chi_block_upper(state: &StateMatrix, y: &TangentMatrix, inv: &CharInvariants) -> Result<CMatrix> {
    y.check_dimension(state.n())?;
    if inv.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            found: inv.n(),
        });
    }
    let pw = powers(state.wide(), state.n());
    Ok(narrow(&block_upper(&pw, &widen(y.matrix()), inv.k_wide())))
}

fn residual(state: &StateMatrix, x: &CMatrix, y: &CMatrix) -> f64 {
    let rho = state.matrix();
    max_abs(&(rho * x + x * rho - y))
}

/// `X = -chi(-rho)^-1 M`, evaluated in double-double precision.
pub fn solve_block_poly(
    state: &StateMatrix,
    y: &TangentMatrix,
    inv: &CharInvariants,
    tol: &Tolerances,
) -> Result<SylvesterSolution> {
    y.check_dimension(state.n())?;
    let pw = powers(state.wide(), state.n() + 1);
    let chi = ChiInverse::new(&pw, inv)?;
    solve_block_poly_cached(state, &pw[..state.n()], y, inv, &chi, tol)
}

/// `chi(-rho)^-1` with the condition number of `chi(-rho)`.
#[derive(Debug, Clone)]
pub(crate) struct ChiInverse {
    inverse: DMatrix<WideComplex>,
    condition: f64,
}

impl ChiInverse {
    /// `pw` holds `rho^0, ..., rho^n`.
    pub(crate) fn new(pw: &[DMatrix<WideComplex>], inv: &CharInvariants) -> Result<Self> {
        let n = inv.n();
        let k = inv.k_wide();
        let mut chi = DMatrix::zeros(n, n);
        for (i, p) in pw[..=n].iter().enumerate() {
            let c = if i % 2 == 0 { k[n - i] } else { -k[n - i] };
            chi += p.map(|z| z * WideComplex::from_real(c));
        }
        let solved = solve_checked(&chi, &DMatrix::identity(n, n), Wide::EPSILON, "chi(-rho)")?;
        Ok(ChiInverse {
            inverse: solved.inverse,
            condition: solved.condition,
        })
    }
}

/// [`solve_block_poly`] with `rho^0..rho^(n-1)` and `chi(-rho)^-1`
/// supplied by the caller.
pub(crate) fn solve_block_poly_cached(
    state: &StateMatrix,
    pw: &[DMatrix<WideComplex>],
    y: &TangentMatrix,
    inv: &CharInvariants,
    chi: &ChiInverse,
    tol: &Tolerances,
) -> Result<SylvesterSolution> {
    let m = block_upper(pw, &widen(y.matrix()), inv.k_wide());
    let x_wide = -matmul(&chi.inverse, &m);
    Ok(finish(
        state,
        y,
        &x_wide,
        chi.condition,
        SylvesterMethod::BlockPoly,
        tol,
    ))
}

fn finish(
    state: &StateMatrix,
    y: &TangentMatrix,
    x_wide: &DMatrix<WideComplex>,
    condition: f64,
    method: SylvesterMethod,
    tol: &Tolerances,
) -> SylvesterSolution {
    let scale = max_abs(x_wide).max(f64::MIN_POSITIVE);
    let asymmetry = hermitian_asymmetry(x_wide) / scale;
    let mut warnings = Vec::new();
    if asymmetry > tol.herm {
        warnings.push(format!(
            "solution asymmetry {asymmetry:.3e} exceeds {:.3e} before symmetrization",
            tol.herm
        ));
    }
    let x = narrow(&hermitian_part(x_wide));
    let residual = residual(state, &x, y.matrix());
    if residual > tol.solve * max_abs(y.matrix()) {
        warnings.push(format!("Sylvester residual {residual:.3e} is above tolerance"));
    }
    SylvesterSolution {
        x: TangentMatrix::from_hermitian(x),
        residual,
        asymmetry,
        condition,
        method,
        warnings,
    }
}

/// Matrix of `X -> rho X + X rho` on column-major `vec(X)`:
/// `I (x) rho + rho^T (x) I`.
pub fn sum_operator(rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let id = CMatrix::identity(n, n);
    id.kronecker(rho) + rho.transpose().kronecker(&id)
}

/// Reference solver: LU on the vectorized `L + R`, in `f64`.
pub fn solve_dense(state: &StateMatrix, y: &TangentMatrix, tol: &Tolerances) -> Result<SylvesterSolution> {
    y.check_dimension(state.n())?;
    let n = state.n();
    let op = sum_operator(state.matrix());
    let rhs = nalgebra::DVector::from_column_slice(y.matrix().as_slice());
    let lu = op.lu();
    let v = lu.solve(&rhs).ok_or(Error::IllConditioned {
        what: "L + R",
        condition: f64::INFINITY,
    })?;
    let x = CMatrix::from_column_slice(n, n, v.as_slice());
    let scale = max_abs(&x).max(f64::MIN_POSITIVE);
    let asymmetry = hermitian_asymmetry(&x) / scale;
    let x = hermitian_part(&x);
    let residual = residual(state, &x, y.matrix());
    let mut warnings = Vec::new();
    if residual > tol.solve * max_abs(y.matrix()) {
        warnings.push(format!("Sylvester residual {residual:.3e} is above tolerance"));
    }
    Ok(SylvesterSolution {
        x: TangentMatrix::from_hermitian(x),
        residual,
        asymmetry,
        condition: f64::NAN,
        method: SylvesterMethod::Dense,
        warnings,
    })
}
