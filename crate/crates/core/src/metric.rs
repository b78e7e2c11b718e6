//! The Bures metric `g(Y', Y) = 1/2 Tr(Y' X)`, `rho X + X rho = Y`,
//! evaluated without diagonalization:
//!
//! * [`Route::Prop1`]: `X` from the block polynomial solver;
//! * [`Route::Prop2`]: `1/2 sum a_ij Tr(Y' rho^(i-1) Y rho^(j-1))`;
//! * [`Route::Prop4`]: the same quadratic form split into the part on
//!   matrices commuting with `rho` and its Bures-orthogonal complement,
//!   `1/4 sum b'_i (P^-1)_ij b_j + 1/4 sum (2 a_ij - (P^-1)_ij) T_ij`
//!   with `b_i = Tr(Y rho^(i-1))`. Only defined at generic states.
//!
//! [`PreparedState`] caches everything that depends on `rho` alone so
//! repeated evaluations at one state only pay for the tangent-dependent
//! work. The caches fill lazily and are safe to share across threads.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::coeffs::{coeff_companion, coeff_smith, CoeffMatrix, CoeffRoute};
use crate::error::{Error, Result};
use crate::invariants::{
    gram_matrix, is_generic, traces_of_powers, CharInvariants, GenericityReport, StateMatrix,
    TangentMatrix,
};
use crate::linalg::{
    hermitian_part, matmul, max_abs, narrow, powers, solve_checked, trace, trace_of_product, widen,
    CMatrix, WCMatrix, WMatrix,
};
use crate::scalar::{narrow_complex, Field, WideComplex};
use crate::sylvester::{solve_block_poly_cached, ChiInverse, SylvesterSolution};
use crate::tolerance::Tolerances;
use crate::wide::Wide;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Prop1,
    Prop2,
    Prop4,
    EigenOracle,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Prop1 => "prop1",
            Route::Prop2 => "prop2",
            Route::Prop4 => "prop4",
            Route::EigenOracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    pub value: f64,
    pub route: Route,
    /// Coefficient route used by `prop2`/`prop4`.
    pub coeff_route: Option<CoeffRoute>,
    /// `prop4` only; `value == parallel_part + orthogonal_part`.
    pub parallel_part: Option<f64>,
    pub orthogonal_part: Option<f64>,
    pub generic: bool,
    /// Route-specific residual: Sylvester residual for `prop1`, coefficient
    /// equation residual for `prop2`/`prop4`.
    pub residual: Option<f64>,
    pub warnings: Vec<String>,
}

impl MetricReport {
    pub(crate) fn new(route: Route, value: f64) -> Self {
        MetricReport {
            value,
            route,
            coeff_route: None,
            parallel_part: None,
            orthogonal_part: None,
            generic: false,
            residual: None,
            warnings: Vec::new(),
        }
    }
}

/// `Y = parallel + orthogonal`, with `parallel` commuting with `rho`.
#[derive(Debug, Clone)]
pub struct TangentSplit {
    pub parallel: TangentMatrix,
    pub orthogonal: TangentMatrix,
    /// Gap between the two projector formulas, relative to `|Y|`.
    pub form_deviation: f64,
}

/// Per-state cache for repeated metric evaluations.
#[derive(Debug)]
pub struct PreparedState {
    state: StateMatrix,
    tol: Tolerances,
    /// `rho^0, ..., rho^n`.
    powers: Vec<WCMatrix>,
    inv: CharInvariants,
    genericity: GenericityReport,
    strict: bool,
    companion: OnceLock<Result<CoeffMatrix>>,
    smith: OnceLock<Result<CoeffMatrix>>,
    gram_inverse: OnceLock<Result<WMatrix>>,
    chi_inverse: OnceLock<Result<ChiInverse>>,
}

impl PreparedState {
    pub fn new(state: StateMatrix, tol: &Tolerances) -> Self {
        let n = state.n();
        let powers = powers(state.wide(), n + 1);
        let p = traces_of_powers(&powers, n);
        let inv = CharInvariants::from_power_traces(&p, n).expect("n power traces were computed");
        let genericity = is_generic(&inv, tol.generic);
        PreparedState {
            state,
            tol: *tol,
            powers,
            inv,
            genericity,
            strict: false,
            companion: OnceLock::new(),
            smith: OnceLock::new(),
            gram_inverse: OnceLock::new(),
            chi_inverse: OnceLock::new(),
        }
    }

    /// Strict mode computes both coefficient routes and fails when they
    /// disagree beyond `tol.xroute` (checked at generic states only, where
    /// the coefficient matrix is unique).
    pub fn strict(state: StateMatrix, tol: &Tolerances) -> Result<Self> {
        let mut prepared = Self::new(state, tol);
        prepared.strict = true;
        prepared.cross_check()?;
        Ok(prepared)
    }

    fn cross_check(&self) -> Result<()> {
        let a = self.coefficients(CoeffRoute::Companion)?;
        let b = self.coefficients(CoeffRoute::Smith)?;
        if self.genericity.generic {
            let deviation = a.deviation(b);
            if deviation > self.tol.xroute {
                return Err(Error::RouteDisagreement {
                    deviation,
                    tolerance: self.tol.xroute,
                });
            }
        }
        Ok(())
    }

    pub fn state(&self) -> &StateMatrix {
        &self.state
    }

    pub fn n(&self) -> usize {
        self.state.n()
    }

    pub fn invariants(&self) -> &CharInvariants {
        &self.inv
    }

    pub fn genericity(&self) -> &GenericityReport {
        &self.genericity
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn coefficients(&self, route: CoeffRoute) -> Result<&CoeffMatrix> {
        let cell = match route {
            CoeffRoute::Companion => &self.companion,
            CoeffRoute::Smith => &self.smith,
        };
        cell.get_or_init(|| match route {
            CoeffRoute::Companion => coeff_companion(&self.inv, &self.tol),
            CoeffRoute::Smith => coeff_smith(&self.inv, &self.tol),
        })
        .as_ref()
        .map_err(Clone::clone)
    }

    /// `P^-1`; fails with [`Error::NotGeneric`] at non-generic states.
    pub fn gram_inverse(&self) -> Result<&WMatrix> {
        self.gram_inverse
            .get_or_init(|| {
                if !self.genericity.generic {
                    return Err(self.not_generic());
                }
                let p = gram_matrix(&self.inv);
                let n = self.n();
                let solved = solve_checked(p.wide(), &WMatrix::identity(n, n), Wide::EPSILON, "P")?;
                let g = solved.solution;
                Ok(hermitian_real(&g))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn not_generic(&self) -> Error {
        Error::NotGeneric {
            rcond: self.genericity.rcond,
            threshold: self.genericity.threshold,
        }
    }

    fn check_pair(&self, y_prime: &TangentMatrix, y: &TangentMatrix) -> Result<()> {
        y_prime.check_dimension(self.n())?;
        y.check_dimension(self.n())
    }

    fn base_report(&self, route: Route, value: f64) -> MetricReport {
        let mut r = MetricReport::new(route, value);
        r.generic = self.genericity.generic;
        r
    }

    /// Block polynomial solution of `rho X + X rho = Y` using the cache.
    pub fn solve(&self, y: &TangentMatrix) -> Result<SylvesterSolution> {
        y.check_dimension(self.n())?;
        let chi = self
            .chi_inverse
            .get_or_init(|| ChiInverse::new(&self.powers, &self.inv))
            .as_ref()
            .map_err(Clone::clone)?;
        solve_block_poly_cached(&self.state, &self.powers[..self.n()], y, &self.inv, chi, &self.tol)
    }

    /// `1/2 Tr(Y' X)` with `X` from the block polynomial solver.
    pub fn prop1(&self, y_prime: &TangentMatrix, y: &TangentMatrix) -> Result<MetricReport> {
        self.check_pair(y_prime, y)?;
        let sol = self.solve(y)?;
        let t = trace_of_product(&widen(y_prime.matrix()), &widen(sol.x.matrix()));
        let mut r = self.base_report(Route::Prop1, (t.re * Wide::from(0.5)).to_f64());
        r.residual = Some(sol.residual);
        r.warnings = sol.warnings;
        check_imaginary(&mut r, t.im.to_f64() * 0.5, &self.tol);
        Ok(r)
    }

    /// `T_ij = Tr(Y' rho^(i-1) Y rho^(j-1))`, and the traces
    /// `Tr(Y' rho^(i-1))`, `Tr(Y rho^(j-1))`.
    fn trace_table(&self, y_prime: &TangentMatrix, y: &TangentMatrix) -> TraceTable {
        let n = self.n();
        let yp = widen(y_prime.matrix());
        let yw = widen(y.matrix());
        let left: Vec<WCMatrix> = self.powers[..n].iter().map(|p| matmul(&yp, p)).collect();
        let right: Vec<WCMatrix> = self.powers[..n].iter().map(|p| matmul(&yw, p)).collect();
        let table = DMatrix::from_fn(n, n, |i, j| trace_of_product(&left[i], &right[j]));
        let b_prime = left.iter().map(|m| trace(m).re).collect();
        let b = right.iter().map(|m| trace(m).re).collect();
        TraceTable { table, b_prime, b }
    }

    /// `1/2 sum_ij a_ij T_ij` with the companion route, or both routes
    /// cross-checked in strict mode.
    pub fn prop2(&self, y_prime: &TangentMatrix, y: &TangentMatrix) -> Result<MetricReport> {
        self.prop2_with(CoeffRoute::Companion, y_prime, y)
    }

    pub fn prop2_with(
        &self,
        route: CoeffRoute,
        y_prime: &TangentMatrix,
        y: &TangentMatrix,
    ) -> Result<MetricReport> {
        self.check_pair(y_prime, y)?;
        let a = self.coefficients(route)?;
        let tt = self.trace_table(y_prime, y);
        let q = contract(a.wide(), &tt.table);
        let half = Wide::from(0.5);
        let mut r = self.base_report(Route::Prop2, (q.re * half).to_f64());
        r.coeff_route = Some(route);
        r.residual = Some(a.residual);
        r.warnings = a.warnings.clone();
        if !self.genericity.generic {
            r.warnings
                .push("state is not generic; the coefficient matrix is not unique".into());
        }
        check_imaginary(&mut r, (q.im * half).to_f64(), &self.tol);
        Ok(r)
    }

    /// Split form of the metric; refuses non-generic states.
    pub fn prop4(&self, y_prime: &TangentMatrix, y: &TangentMatrix) -> Result<MetricReport> {
        self.prop4_with(CoeffRoute::Companion, y_prime, y)
    }

    pub fn prop4_with(
        &self,
        route: CoeffRoute,
        y_prime: &TangentMatrix,
        y: &TangentMatrix,
    ) -> Result<MetricReport> {
        self.check_pair(y_prime, y)?;
        let g = self.gram_inverse()?;
        let a = self.coefficients(route)?;
        let n = self.n();
        let tt = self.trace_table(y_prime, y);
        let quarter = Wide::from(0.25);
        let mut par = Wide::ZERO;
        for i in 0..n {
            for j in 0..n {
                par += tt.b_prime[i] * g[(i, j)] * tt.b[j];
            }
        }
        let b = WMatrix::from_fn(n, n, |i, j| a.wide()[(i, j)] + a.wide()[(i, j)] - g[(i, j)]);
        let orth = contract(&b, &tt.table);
        let parallel = (par * quarter).to_f64();
        let orthogonal = (orth.re * quarter).to_f64();
        let mut r = self.base_report(Route::Prop4, parallel + orthogonal);
        r.coeff_route = Some(route);
        r.parallel_part = Some(parallel);
        r.orthogonal_part = Some(orthogonal);
        r.residual = Some(a.residual);
        r.warnings = a.warnings.clone();
        if self.genericity.near_threshold() {
            r.warnings.push(format!(
                "genericity measure {:.3e} is close to the threshold {:.3e}",
                self.genericity.rcond, self.genericity.threshold
            ));
        }
        check_imaginary(&mut r, (orth.im * quarter).to_f64(), &self.tol);
        Ok(r)
    }

    /// Orthogonal projection onto matrices commuting with `rho`:
    /// `sum_i rho^i c_i` with `c = P^-1 (Tr(Y rho^(j-1)))_j`, cross-checked
    /// against `sum_ij (P^-1)_ij rho^i Y rho^(j-1)`.
    pub fn split(&self, y: &TangentMatrix) -> Result<TangentSplit> {
        y.check_dimension(self.n())?;
        let g = self.gram_inverse()?;
        let n = self.n();
        let yw = widen(y.matrix());
        let b: Vec<Wide> = self.powers[..n].iter().map(|p| trace_of_product(&yw, p).re).collect();
        let mut p1 = WCMatrix::zeros(n, n);
        for i in 0..n {
            let mut c = Wide::ZERO;
            for j in 0..n {
                c += g[(i, j)] * b[j];
            }
            p1 += self.powers[i + 1].map(|z| z * WideComplex::from_real(c));
        }
        let p2 = self.projector_second_form(g, &yw);
        let scale = max_abs(&yw).max(max_abs(&p1)).max(f64::MIN_POSITIVE);
        let form_deviation = max_abs(&(&p1 - &p2)) / scale;

        let parallel = narrow(&hermitian_part(&p1));
        let orthogonal = y.matrix() - &parallel;
        Ok(TangentSplit {
            parallel: TangentMatrix::from_hermitian(parallel),
            orthogonal: TangentMatrix::from_hermitian(orthogonal),
            form_deviation,
        })
    }

    fn projector_second_form(&self, g: &WMatrix, yw: &WCMatrix) -> WCMatrix {
        let n = self.n();
        let left: Vec<WCMatrix> = (1..=n).map(|i| matmul(&self.powers[i], yw)).collect();
        let mut out = WCMatrix::zeros(n, n);
        for j in 0..n {
            let mut z = WCMatrix::zeros(n, n);
            for (i, l) in left.iter().enumerate() {
                let c = WideComplex::from_real(g[(i, j)]);
                z += l.map(|v| v * c);
            }
            out += matmul(&z, &self.powers[j]);
        }
        out
    }

    /// `sum_ij a_ij rho^(i-1) Y rho^(j-1)`, the action of `(L + R)^-1`
    /// through the coefficient matrix.
    pub fn apply_inverse(&self, route: CoeffRoute, y: &TangentMatrix) -> Result<CMatrix> {
        y.check_dimension(self.n())?;
        let a = self.coefficients(route)?;
        let n = self.n();
        let yw = widen(y.matrix());
        let mut out = WCMatrix::zeros(n, n);
        for j in 0..n {
            let right = matmul(&yw, &self.powers[j]);
            let mut z = WCMatrix::zeros(n, n);
            for i in 0..n {
                let c = WideComplex::from_real(a.wide()[(i, j)]);
                z += self.powers[i].map(|v| v * c);
            }
            out += matmul(&z, &right);
        }
        Ok(out.map(narrow_complex))
    }
}

struct TraceTable {
    table: DMatrix<WideComplex>,
    b_prime: Vec<Wide>,
    b: Vec<Wide>,
}

fn contract(a: &WMatrix, t: &DMatrix<WideComplex>) -> WideComplex {
    let mut acc = WideComplex::new(Wide::ZERO, Wide::ZERO);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += t[(i, j)] * WideComplex::from_real(a[(i, j)]);
        }
    }
    acc
}

fn hermitian_real(g: &WMatrix) -> WMatrix {
    let half = Wide::from(0.5);
    WMatrix::from_fn(g.nrows(), g.ncols(), |i, j| (g[(i, j)] + g[(j, i)]) * half)
}

fn check_imaginary(r: &mut MetricReport, im: f64, tol: &Tolerances) {
    if im.abs() > tol.xroute * r.value.abs().max(1.0) {
        r.warnings
            .push(format!("imaginary residue {im:.3e} discarded"));
    }
}

pub fn bures_prop1(
    state: &StateMatrix,
    y_prime: &TangentMatrix,
    y: &TangentMatrix,
    tol: &Tolerances,
) -> Result<MetricReport> {
    PreparedState::new(state.clone(), tol).prop1(y_prime, y)
}

pub fn bures_prop2(
    state: &StateMatrix,
    y_prime: &TangentMatrix,
    y: &TangentMatrix,
    tol: &Tolerances,
) -> Result<MetricReport> {
    PreparedState::new(state.clone(), tol).prop2(y_prime, y)
}

pub fn bures_prop4(
    state: &StateMatrix,
    y_prime: &TangentMatrix,
    y: &TangentMatrix,
    tol: &Tolerances,
) -> Result<MetricReport> {
    PreparedState::new(state.clone(), tol).prop4(y_prime, y)
}

pub fn project_parallel(state: &StateMatrix, y: &TangentMatrix, tol: &Tolerances) -> Result<TangentSplit> {
    PreparedState::new(state.clone(), tol).split(y)
}

/// Largest modulus of `[a, rho]`.
pub fn commutator_norm(a: &CMatrix, rho: &CMatrix) -> f64 {
    max_abs(&(a * rho - rho * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RMatrix;
    use crate::oracle::bures_eigen_oracle;
    use approx::assert_relative_eq;

    fn t(n: usize, v: &[f64]) -> TangentMatrix {
        TangentMatrix::from_real(&RMatrix::from_row_slice(n, n, v)).unwrap()
    }

    fn diag12() -> StateMatrix {
        StateMatrix::from_diagonal(&[1.0, 2.0]).unwrap()
    }

    #[test]
    fn offdiagonal_tangent_on_diag_1_2() {
        let tol = Tolerances::default();
        let y = t(2, &[0.0, 1.0, 1.0, 0.0]);
        let p = PreparedState::strict(diag12(), &tol).unwrap();
        for r in [
            p.prop1(&y, &y).unwrap(),
            p.prop2(&y, &y).unwrap(),
            p.prop2_with(CoeffRoute::Smith, &y, &y).unwrap(),
            p.prop4(&y, &y).unwrap(),
        ] {
            assert_relative_eq!(r.value, 1.0 / 3.0, max_relative = 1e-15);
            assert!(r.generic);
        }
        let r4 = p.prop4(&y, &y).unwrap();
        assert_eq!(r4.parallel_part, Some(0.0));
        assert_relative_eq!(r4.orthogonal_part.unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        // 2A - P^-1 = (1/3) [[-8, 6], [6, -4]].
        let a = p.coefficients(CoeffRoute::Companion).unwrap().matrix();
        let g = p.gram_inverse().unwrap().map(|x| x.to_f64());
        let b = a * 2.0 - g;
        let expected = RMatrix::from_row_slice(2, 2, &[-8.0, 6.0, 6.0, -4.0]) / 3.0;
        assert!((b - expected).abs().max() < 1e-15);
    }

    #[test]
    fn scalar_multiple_of_identity() {
        let tol = Tolerances::default();
        let s = StateMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let y = t(2, &[1.0, 0.0, 0.0, -1.0]);
        assert_relative_eq!(bures_prop1(&s, &y, &y, &tol).unwrap().value, 1.0, max_relative = 1e-15);
        let r2 = bures_prop2(&s, &y, &y, &tol).unwrap();
        assert_relative_eq!(r2.value, 1.0, max_relative = 1e-15);
        assert!(!r2.generic);
        let err = bures_prop4(&s, &y, &y, &tol).unwrap_err();
        assert!(matches!(err, Error::NotGeneric { .. }));
        assert!(err.to_string().contains("state is not generic"));
        assert!(project_parallel(&s, &y, &tol).is_err());
    }

    #[test]
    fn scalar_state() {
        let tol = Tolerances::default();
        let s = StateMatrix::from_diagonal(&[2.0]).unwrap();
        let r = bures_prop1(&s, &t(1, &[1.0]), &t(1, &[3.0]), &tol).unwrap();
        assert_relative_eq!(r.value, 0.375, max_relative = 1e-15);
        let r = bures_prop4(&s, &t(1, &[1.0]), &t(1, &[3.0]), &tol).unwrap();
        assert_relative_eq!(r.value, 0.375, max_relative = 1e-15);
        assert_relative_eq!(r.parallel_part.unwrap(), 0.375, max_relative = 1e-15);
    }

    #[test]
    fn zero_tangent_gives_zero() {
        let tol = Tolerances::default();
        let p = PreparedState::new(diag12(), &tol);
        let z = TangentMatrix::zeros(2);
        assert_eq!(p.prop2(&z, &z).unwrap().value, 0.0);
        let r = p.prop4(&z, &z).unwrap();
        assert_eq!((r.value, r.parallel_part, r.orthogonal_part), (0.0, Some(0.0), Some(0.0)));
    }

    #[test]
    fn diagonal_tangent_matches_oracle() {
        let tol = Tolerances::default();
        let s = diag12();
        let y = t(2, &[1.0, 0.0, 0.0, -1.0]);
        let oracle = bures_eigen_oracle(&s, &y, &y).unwrap().value;
        assert_relative_eq!(oracle, 0.375, max_relative = 1e-15);
        let r = bures_prop4(&s, &y, &y, &tol).unwrap();
        assert!((r.value - oracle).abs() <= 1e-10);
        assert_eq!(r.value, r.parallel_part.unwrap() + r.orthogonal_part.unwrap());
    }

    #[test]
    fn projector_examples() {
        let tol = Tolerances::default();
        let s = diag12();
        let sp = project_parallel(&s, &t(2, &[0.0, 1.0, 1.0, 0.0]), &tol).unwrap();
        assert!(max_abs(sp.parallel.matrix()) < 1e-15);
        let sp = project_parallel(&s, &t(2, &[0.3, 0.0, 0.0, -2.0]), &tol).unwrap();
        assert!(max_abs(&(sp.parallel.matrix() - t(2, &[0.3, 0.0, 0.0, -2.0]).matrix())) < 1e-15);
        let sp = project_parallel(&s, &t(2, &[1.0, 1.0, 1.0, 1.0]), &tol).unwrap();
        assert!(max_abs(&(sp.parallel.matrix() - t(2, &[1.0, 0.0, 0.0, 1.0]).matrix())) < 1e-15);
        assert!(max_abs(&(sp.orthogonal.matrix() - t(2, &[0.0, 1.0, 1.0, 0.0]).matrix())) < 1e-15);
        assert!(sp.form_deviation < 1e-28);
    }

    #[test]
    fn operator_reconstruction_at_non_generic_state() {
        let tol = Tolerances::default();
        let s = StateMatrix::from_diagonal(&[0.5, 0.5, 2.0]).unwrap();
        let p = PreparedState::new(s.clone(), &tol);
        let y = t(3, &[1.0, 2.0, 0.0, 2.0, -1.0, 0.5, 0.0, 0.5, 3.0]);
        for route in [CoeffRoute::Companion, CoeffRoute::Smith] {
            let x = p.apply_inverse(route, &y).unwrap();
            let back = s.matrix() * &x + &x * s.matrix();
            assert!(max_abs(&(back - y.matrix())) < 1e-13);
        }
    }
}
