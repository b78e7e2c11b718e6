//! Seeded random states (Ginibre construction) and tangent vectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{Error, Result};
use crate::invariants::{StateMatrix, TangentMatrix};
use crate::linalg::{cholesky_pivots, max_abs, CMatrix};

/// The generator behind every seeded command.
pub type StateRng = Xoshiro256StarStar;

pub fn rng_from_seed(seed: u64) -> StateRng {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Entries with independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateOptions {
    /// Relative floor `f`: the smallest eigenvalue is at least `f Tr / n`.
    pub spectrum_floor: f64,
    pub trace_one: bool,
}

impl Default for StateOptions {
    fn default() -> Self {
        StateOptions {
            spectrum_floor: 0.0,
            trace_one: false,
        }
    }
}

impl StateOptions {
    pub fn with_floor(spectrum_floor: f64) -> Self {
        StateOptions {
            spectrum_floor,
            trace_one: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let f = self.spectrum_floor;
        let bound = if self.trace_one { 1.0 / n as f64 } else { 1.0 };
        if !(f.is_finite() && (0.0..bound).contains(&f)) {
            return Err(Error::InvalidArgument(format!(
                "spectrum floor {f} is outside [0, {bound})"
            )));
        }
        Ok(())
    }
}

/// `(G G* + s I) / c` with `c = n`, or `c` the trace for trace-one states.
/// The shift is zero when a Cholesky probe shows the floor already holds.
pub fn random_state<R: Rng + ?Sized>(n: usize, opts: &StateOptions, rng: &mut R) -> Result<StateMatrix> {
    opts.validate(n)?;
    let g = complex_gaussian(n, rng);
    let mut w = &g * g.adjoint();
    w = (&w + w.adjoint()) * Complex64::new(0.5, 0.0);
    let nf = n as f64;
    let f = opts.spectrum_floor;
    let tr = w.trace().re;
    if f > 0.0 {
        let probe = &w - CMatrix::identity(n, n) * Complex64::new(f * tr / nf, 0.0);
        if cholesky_pivots(&probe).is_err() {
            let shift = f * tr / (nf * (1.0 - f));
            w += CMatrix::identity(n, n) * Complex64::new(shift, 0.0);
        }
    }
    let c = if opts.trace_one { w.trace().re } else { nf };
    StateMatrix::new(w / Complex64::new(c, 0.0))
}

/// Random Hermitian matrix scaled to largest entry modulus one.
pub fn random_tangent<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TangentMatrix {
    let g = complex_gaussian(n, rng);
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let m = max_abs(&h);
    TangentMatrix::from_hermitian(h / Complex64::new(m, 0.0))
}
