//! Reduced fluid–structure model of a spring-mass shell falling toward a wall
//! through a viscous fluid, with singular drag laws, an adaptive integrator
//! that never lets the shell touch the wall, and viscosity-sweep experiments
//! probing rebound in the vanishing viscosity limit.

// index loops mirror the stage and tableau formulas; negated float
// comparisons are deliberate so that NaN fails validation
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod drag;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod io;
mod linalg;
pub mod model;
pub mod quadrature;

pub use error::{Error, Result};
