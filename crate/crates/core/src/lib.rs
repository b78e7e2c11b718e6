//! Bures metric on positive definite Hermitian matrices.
//!
//! The metric `g(Y', Y) = Tr(Y' X) / 2`, with `rho X + X rho = Y`, is evaluated
//! without diagonalizing `rho`: from the characteristic polynomial and power
//! traces of `rho`, through a block Sylvester solve, a coefficient matrix `A`
//! or the Gram matrix of power traces. A double-double eigenbasis formula is
//! kept as the reference.
//!
//! The entry point is [`metric::PreparedState`], which caches the invariants
//! of one state and evaluates every route against it.

pub mod bench;
pub mod closed_forms;
pub mod coeffs;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod matrix_file;
pub mod metric;
pub mod oracle;
pub mod random;
pub mod scalar;
pub mod selftest;
pub mod sylvester;
pub mod tolerance;
pub mod wide;
