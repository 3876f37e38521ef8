//! Heat equation with a nonlinear radiation law `du/dn = u^q` on part of the
//! boundary: Neumann kernels, free-space boundary-time integrals, two solvers
//! with blow-up detection, closed-form lifespan bounds and sweep tooling.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod freespace;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
