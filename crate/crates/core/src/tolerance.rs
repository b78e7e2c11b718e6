//! Numerical tolerances shared by all routes.
//!
//! Every threshold is a relative quantity; the reference scale is stated
//! next to each field. The environment variable
//! `BURESKIT_TOLERANCE_SCALE` multiplies all of them at once.

use crate::error::{Error, Result};

pub const TOLERANCE_SCALE_VAR: &str = "BURESKIT_TOLERANCE_SCALE";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity, relative to the largest entry modulus.
    pub herm: f64,
    /// Newton identity residuals, relative to the size of the power traces.
    pub newton: f64,
    /// Genericity threshold on the reciprocal condition number of the
    /// diagonally scaled Gram matrix.
    pub generic: f64,
    /// Residual of `K^T A + A K = C`, relative to `|A| |K|`.
    pub coeff: f64,
    /// Agreement between independent routes.
    pub xroute: f64,
    /// Sylvester residual, relative to `|Y|`.
    pub solve: f64,
    /// Projector cross-checks.
    pub proj: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            newton: 1e-9,
            generic: 1e-24,
            coeff: 1e-9,
            xroute: 1e-8,
            solve: 1e-9,
            proj: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn scaled(self, factor: f64) -> Self {
        Tolerances {
            herm: self.herm * factor,
            newton: self.newton * factor,
            generic: self.generic * factor,
            coeff: self.coeff * factor,
            xroute: self.xroute * factor,
            solve: self.solve * factor,
            proj: self.proj * factor,
        }
    }

    /// Defaults multiplied by `BURESKIT_TOLERANCE_SCALE` when it is set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(TOLERANCE_SCALE_VAR) {
            Ok(raw) => Ok(Self::default().scaled(parse_scale(&raw)?)),
            Err(_) => Ok(Self::default()),
        }
    }
}

fn parse_scale(raw: &str) -> Result<f64> {
    let factor: f64 = raw.trim().parse().map_err(|_| {
        Error::InvalidArgument(format!("{TOLERANCE_SCALE_VAR}={raw:?} is not a number"))
    })?;
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{TOLERANCE_SCALE_VAR} must be positive and finite, got {raw}"
        )));
    }
    Ok(factor)
}
