//! Direct parallel-in-time solver for first- and second-order evolution
//! problems.
//!
//! Time is discretized with a boundary value method: centered differences on
//! the first `n - 1` steps and backward Euler on the last. The resulting
//! `n x n` time matrix `B` is diagonalized in closed form through the roots of
//! `U_{n-1}(x) - i T_n(x)`, which turns the all-at-once space-time system into
//! `n` independent complex-shifted spatial solves.
//!
//! - [`cheb`]: Chebyshev evaluation and the Newton root finder.
//! - [`spectral`]: eigenvector matrix, its `O(n^2)` inverse, conditioning.
//! - [`timedisc`]: time matrices, right-hand sides, geometric-step baseline.
//! - [`spatial`]: spatial operators and manufactured benchmark problems.
//! - [`pint`]: the three-step solver, simplified Newton, sequential stepping.

pub mod cheb;
pub mod error;
pub mod linalg;
pub mod pint;
pub mod spatial;
pub mod spectral;
pub mod timedisc;

pub use num_complex::Complex64;

pub use error::{Error, Result};
