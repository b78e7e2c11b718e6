//! Small dense kernels, generic over the working precision.
//!
//! nalgebra supplies storage and products; factorizations are done here
//! because they have to run on double-double scalars as well.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::{narrow_complex, widen_complex, Field, Real, WideComplex};
use crate::wide::Wide;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type WMatrix = DMatrix<Wide>;
pub type WCMatrix = DMatrix<WideComplex>;

/// Largest entry modulus.
pub fn max_abs<F: Field>(m: &DMatrix<F>) -> f64 {
    m.iter().map(|z| z.modulus()).fold(0.0, f64::max)
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermitian_asymmetry<F: Field>(m: &DMatrix<F>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).modulus());
        }
    }
    worst
}

/// `(m + m^*) / 2`.
pub fn hermitian_part<F: Field>(m: &DMatrix<F>) -> DMatrix<F> {
    let half = F::from_f64(0.5);
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * half
    })
}

pub fn trace<F: Field>(m: &DMatrix<F>) -> F {
    (0..m.nrows()).fold(F::zero(), |acc, i| acc + m[(i, i)])
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product<F: Field>(a: &DMatrix<F>, b: &DMatrix<F>) -> F {
    let n = a.nrows();
    let mut acc = F::zero();
    for i in 0..n {
        for k in 0..n {
            F::mul_acc(&mut acc, a[(i, k)], b[(k, i)]);
        }
    }
    acc
}

pub fn scale<F: Field>(m: &DMatrix<F>, s: F) -> DMatrix<F> {
    m.map(|z| z * s)
}

/// Plain column-major product. For the double-double scalars this is
/// several times faster than the generic BLAS-style path.
pub fn matmul<F: Field>(a: &DMatrix<F>, b: &DMatrix<F>) -> DMatrix<F> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, inner) = (a.nrows(), a.ncols());
    let mut c = DMatrix::from_element(m, b.ncols(), F::zero());
    let av = a.as_slice();
    for (j, cj) in c.as_mut_slice().chunks_mut(m.max(1)).enumerate() {
        for k in 0..inner {
            let bkj = b[(k, j)];
            for (ci, &aik) in cj.iter_mut().zip(&av[k * m..(k + 1) * m]) {
                F::mul_acc(ci, aik, bkj);
            }
        }
    }
    c
}

/// `m^0, m^1, ..., m^(count-1)`.
pub fn powers<F: Field>(m: &DMatrix<F>, count: usize) -> Vec<DMatrix<F>> {
    let n = m.nrows();
    let mut out: Vec<DMatrix<F>> = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(DMatrix::identity(n, n));
    for i in 1..count {
        let next = matmul(&out[i - 1], m);
        out.push(next);
    }
    out
}

/// Evaluates `k_0 x^n + k_1 x^(n-1) + ... + k_n` by Horner's rule.
pub fn horner<F: Field>(k: &[F::Real], x: &DMatrix<F>) -> DMatrix<F> {
    let n = x.nrows();
    let mut acc = DMatrix::<F>::zeros(n, n);
    for &c in k {
        acc = matmul(&acc, x);
        for d in 0..n {
            acc[(d, d)] += F::from_real(c);
        }
    }
    acc
}

/// Column-sum norm.
fn norm_1<F: Field>(m: &DMatrix<F>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization with partial pivoting, `P m = L U`.
#[derive(Debug, Clone)]
pub struct Lu<F: Field> {
    lu: DMatrix<F>,
    perm: Vec<usize>,
    odd: bool,
    singular: bool,
}

impl<F: Field> Lu<F> {
    pub fn new(m: &DMatrix<F>) -> Self {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "LU of a non-square matrix");
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let mut singular = false;
        for c in 0..n {
            let (p, best) = (c..n)
                .map(|r| (r, lu[(r, c)].modulus()))
                .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != c {
                lu.swap_rows(p, c);
                perm.swap(p, c);
                odd = !odd;
            }
            let pivot = lu[(c, c)];
            for r in (c + 1)..n {
                let f = lu[(r, c)] / pivot;
                lu[(r, c)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in (c + 1)..n {
                    let u = lu[(c, j)];
                    lu[(r, j)] -= f * u;
                }
            }
        }
        Lu {
            lu,
            perm,
            odd,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> F {
        if self.singular {
            return F::zero();
        }
        let d = (0..self.lu.nrows()).fold(F::one(), |acc, i| acc * self.lu[(i, i)]);
        if self.odd {
            -d
        } else {
            d
        }
    }

    /// Solves `m x = rhs`; `None` when the factorization hit a zero pivot.
    pub fn solve(&self, rhs: &DMatrix<F>) -> Option<DMatrix<F>> {
        if self.singular {
            return None;
        }
        let n = self.lu.nrows();
        let mut x = DMatrix::from_fn(n, rhs.ncols(), |i, j| rhs[(self.perm[i], j)]);
        for col in 0..rhs.ncols() {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in (i + 1)..n {
                    s -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.lu[(i, i)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<DMatrix<F>> {
        let n = self.lu.nrows();
        self.solve(&DMatrix::identity(n, n))
    }
}

pub fn det<F: Field>(m: &DMatrix<F>) -> F {
    if m.nrows() == 0 {
        return F::one();
    }
    Lu::new(m).det()
}

/// A solved linear system with the 1-norm condition number of its matrix.
#[derive(Debug, Clone)]
pub struct Solved<F: Field> {
    pub solution: DMatrix<F>,
    pub inverse: DMatrix<F>,
    pub condition: f64,
}

/// Solves `m x = rhs`, rejecting systems whose reciprocal condition number
/// falls below `precision` (the unit roundoff of the working scalar).
pub fn solve_checked<F: Field>(
    m: &DMatrix<F>,
    rhs: &DMatrix<F>,
    precision: f64,
    what: &'static str,
) -> Result<Solved<F>> {
    let lu = Lu::new(m);
    let singular = Error::IllConditioned {
        what,
        condition: f64::INFINITY,
    };
    let inverse = lu.inverse().ok_or_else(|| singular.clone())?;
    let condition = norm_1(m) * norm_1(&inverse);
    if !condition.is_finite() || condition * precision >= 1.0 {
        return Err(Error::IllConditioned { what, condition });
    }
    let solution = lu.solve(rhs).ok_or(singular)?;
    Ok(Solved {
        solution,
        inverse,
        condition,
    })
}

/// `|det m|` over the product of row 2-norms; in `[0, 1]`, small when the
/// rows are nearly dependent.
pub fn hadamard_ratio<R: Real>(m: &DMatrix<R>, det: R) -> f64 {
    let mut bound = 1.0f64;
    for i in 0..m.nrows() {
        let row: f64 = (0..m.ncols())
            .map(|j| m[(i, j)].to_f64().powi(2))
            .sum::<f64>()
            .sqrt();
        bound *= row;
    }
    if bound == 0.0 {
        0.0
    } else {
        det.to_f64().abs() / bound
    }
}

/// Cholesky factorization of a Hermitian matrix, reporting the first pivot
/// that is not strictly positive. Returns the lower factor.
pub fn cholesky_pivots(m: &CMatrix) -> std::result::Result<CMatrix, (usize, f64)> {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err((j, d));
        }
        let dj = d.sqrt();
        l[(j, j)] = Complex64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

pub fn widen(m: &CMatrix) -> WCMatrix {
    m.map(widen_complex)
}

pub fn narrow(m: &WCMatrix) -> CMatrix {
    m.map(narrow_complex)
}

pub fn widen_real(m: &RMatrix) -> WMatrix {
    m.map(Wide::from_f64)
}

pub fn narrow_real(m: &WMatrix) -> RMatrix {
    m.map(Wide::to_f64)
}

/// Real part of a complex matrix, with the largest discarded imaginary part.
pub fn real_part<R: Real>(m: &DMatrix<num_complex::Complex<R>>) -> (DMatrix<R>, f64) {
    let im = m.iter().map(|z| z.im.to_f64().abs()).fold(0.0, f64::max);
    (m.map(|z| z.re), im)
}

pub fn to_complex<R: Real>(m: &DMatrix<R>) -> DMatrix<num_complex::Complex<R>> {
    m.map(|x| num_complex::Complex::new(x, R::zero()))
}
