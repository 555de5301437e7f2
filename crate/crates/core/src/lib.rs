//! Simulation and verification toolkit for the one-dimensional Keller-Segel system with
//! fractional diffusion,
//!
//! ```text
//! d_t rho = -Lambda^alpha rho - d_x(rho d_x c),    -d_xx c = rho,    0 < alpha <= 2,
//! ```
//!
//! posed on a large periodic box. The crate provides the spectral discretization, two
//! independent realizations of `Lambda^alpha`, an integrating-factor time stepper in the
//! physical and self-similar frames, the moment and norm diagnostics behind the global
//! existence and blow-up criteria, numerical probes of the functional inequalities, and a
//! run/sweep orchestration layer with CSV artifacts.

// `!(x > 0.0)` guards reject NaN as well; keep them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod inequality;
pub mod integrator;
pub mod operators;
pub mod runner;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};

/// Formats a number with 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}
