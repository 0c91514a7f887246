//! Implicit time discretization of the nonlinear diffusion equation with
//! hysteresis `d/dt (c u + w) - div a(x, grad u) = f`, `w = W[u]`, on a 1D
//! interval with homogeneous Dirichlet data, together with executable checks
//! of its energy estimate, L1 stability and long-time behaviour.

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod hysteresis;
mod linalg;
pub mod load;
pub mod stationary;
pub mod stepper;

pub use error::{Error, Result};
