//! Diagonalization-based reference values. Used by the tests, the
//! self-test and for diagnostics; the metric routes never call into here.

use nalgebra::SymmetricEigen;

use crate::error::Result;
use crate::invariants::{CharInvariants, StateMatrix, TangentMatrix};
use crate::linalg::CMatrix;
use crate::metric::{MetricReport, Route};

#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the matching unit eigenvectors.
    pub vectors: CMatrix,
}

pub fn eigensystem(state: &StateMatrix) -> Eigensystem {
    let eig = SymmetricEigen::new(state.matrix().clone());
    let n = state.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Eigensystem { values, vectors }
}

pub fn eigenvalues(state: &StateMatrix) -> Vec<f64> {
    eigensystem(state).values
}

/// `1/2 sum_(a,b) <a|Y'|b> <b|Y|a> / (l_a + l_b)` in the eigenbasis.
pub fn bures_eigen_oracle(state: &StateMatrix, y_prime: &TangentMatrix, y: &TangentMatrix) -> Result<MetricReport> {
    let n = state.n();
    y_prime.check_dimension(n)?;
    y.check_dimension(n)?;
    let es = eigensystem(state);
    let u = &es.vectors;
    let yp = u.adjoint() * y_prime.matrix() * u;
    let ye = u.adjoint() * y.matrix() * u;
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            acc += yp[(a, b)] * ye[(b, a)] / (es.values[a] + es.values[b]);
        }
    }
    let mut report = MetricReport::new(Route::EigenOracle, 0.5 * acc.re);
    let distinct = es.values.windows(2).all(|w| w[1] > w[0]);
    report.generic = distinct;
    Ok(report)
}

/// `|det P - det(rho) prod_(i<j) (l_i - l_j)^2| / |det P|`.
pub fn gram_det_identity_residual(inv: &CharInvariants, eigenvalues: &[f64]) -> f64 {
    let det_p = crate::invariants::gram_matrix(inv).det();
    let mut rhs: f64 = eigenvalues.iter().product();
    for (i, &li) in eigenvalues.iter().enumerate() {
        for &lj in &eigenvalues[i + 1..] {
            rhs *= (li - lj) * (li - lj);
        }
    }
    (det_p - rhs).abs() / det_p.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::char_poly;
    use crate::linalg::RMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn oracle_hand_values() {
        let s = StateMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let off = TangentMatrix::from_real(&RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let id = TangentMatrix::from_real(&RMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(bures_eigen_oracle(&s, &off, &off).unwrap().value, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(bures_eigen_oracle(&s, &id, &id).unwrap().value, 0.375, max_relative = 1e-15);
        assert_eq!(bures_eigen_oracle(&s, &TangentMatrix::zeros(2), &off).unwrap().value, 0.0);
    }

    #[test]
    fn gram_identity_for_diag_1_2() {
        let s = StateMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        assert!(gram_det_identity_residual(&char_poly(&s), &eigenvalues(&s)) < 1e-14);
    }
}
