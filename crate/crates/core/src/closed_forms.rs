//! Explicit low-dimensional formulas in terms of the elementary
//! invariants `e = (e_1, .., e_n)` and power traces `p = (p_1, p_2, ..)`.
//! They serve as golden references for the general routes.

use nalgebra::DMatrix;

use crate::scalar::Real;

fn c<R: Real>(x: f64) -> R {
    R::of(x)
}

/// Coefficient matrix `A`, `n = 2`.
pub fn coeff_n2<R: Real>(e: &[R]) -> DMatrix<R> {
    let (e1, e2) = (e[0], e[1]);
    let s = R::one() / (c::<R>(2.0) * e1 * e2);
    DMatrix::from_row_slice(2, 2, &[e1 * e1 + e2, -e1, -e1, R::one()]) * s
}

/// `P^-1`, `n = 2`.
pub fn gram_inverse_n2<R: Real>(p: &[R]) -> DMatrix<R> {
    let (p1, p2, p3) = (p[0], p[1], p[2]);
    let s = R::one() / (p1 * p3 - p2 * p2);
    DMatrix::from_row_slice(2, 2, &[p3, -p2, -p2, p1]) * s
}

/// `2A - P^-1`, `n = 2`, from the elementary invariants.
pub fn orthogonal_form_n2_e<R: Real>(e: &[R]) -> DMatrix<R> {
    let (e1, e2) = (e[0], e[1]);
    let two = c::<R>(2.0);
    let s = two / (e1 * (e1 * e1 - c::<R>(4.0) * e2));
    DMatrix::from_row_slice(2, 2, &[-two * e2, e1, e1, -two]) * s
}

/// `2A - P^-1`, `n = 2`, from the power traces.
pub fn orthogonal_form_n2_p<R: Real>(p: &[R]) -> DMatrix<R> {
    let (p1, p2) = (p[0], p[1]);
    let two = c::<R>(2.0);
    let s = two / (p1 * (two * p2 - p1 * p1));
    DMatrix::from_row_slice(2, 2, &[p2 - p1 * p1, p1, p1, -two]) * s
}

/// Parallel part `1/4 b'^T P^-1 b`, `n = 2`, written in the differentials
/// `de_1 = Tr Y`, `de_2 = e_1 Tr Y - Tr(rho Y)` of the elementary invariants.
pub fn parallel_n2_e<R: Real>(e: &[R], de_prime: [R; 2], de: [R; 2]) -> R {
    let (e1, e2) = (e[0], e[1]);
    let two = c::<R>(2.0);
    let m = [[e1 * e2, -two * e2], [-two * e2, e1]];
    let mut q = R::zero();
    for i in 0..2 {
        for j in 0..2 {
            q += de_prime[i] * m[i][j] * de[j];
        }
    }
    q / (c::<R>(4.0) * e2 * (e1 * e1 - c::<R>(4.0) * e2))
}

/// `det P`, `n = 3`.
pub fn gram_det_n3<R: Real>(p: &[R]) -> R {
    let (p1, p2, p3, p4, p5) = (p[0], p[1], p[2], p[3], p[4]);
    -p3 * p3 * p3 + c::<R>(2.0) * p2 * p3 * p4 - p1 * p4 * p4 - p2 * p2 * p5 + p1 * p3 * p5
}

/// `P^-1`, `n = 3`.
pub fn gram_inverse_n3<R: Real>(p: &[R]) -> DMatrix<R> {
    let (p1, p2, p3, p4, p5) = (p[0], p[1], p[2], p[3], p[4]);
    let a11 = p3 * p5 - p4 * p4;
    let a12 = p3 * p4 - p2 * p5;
    let a13 = p2 * p4 - p3 * p3;
    let a22 = p1 * p5 - p3 * p3;
    let a23 = p2 * p3 - p1 * p4;
    let a33 = p1 * p3 - p2 * p2;
    let s = R::one() / gram_det_n3(p);
    DMatrix::from_row_slice(3, 3, &[a11, a12, a13, a12, a22, a23, a13, a23, a33]) * s
}

/// Coefficient matrix `A`, `n = 3`.
pub fn coeff_n3<R: Real>(e: &[R]) -> DMatrix<R> {
    let (e1, e2, e3) = (e[0], e[1], e[2]);
    let a11 = e1 * e2 * e2 + e1 * e1 * e3 - e2 * e3;
    let a12 = -e1 * e1 * e2;
    let a13 = e1 * e2 - e3;
    let a22 = e1 * e1 * e1 + e3;
    let a23 = -e1 * e1;
    let a33 = e1;
    let s = R::one() / (c::<R>(2.0) * e3 * (e1 * e2 - e3));
    DMatrix::from_row_slice(3, 3, &[a11, a12, a13, a12, a22, a23, a13, a23, a33]) * s
}
