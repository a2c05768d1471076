//! Numerical laboratory for the diffusion limit of the generalized Carleman
//! system on the unit interval with inflow boundary data.
//!
//! * [`model`]: grids, states, boundary/initial data and admissibility.
//! * [`entropy`]: convex family, Legendre duals, relative entropy, production.
//! * [`kinetic`]: split transport/relaxation solver for the kinetic system.
//! * [`diffusion`]: implicit solver for the limiting nonlinear diffusion.
//! * [`harness`]: epsilon sweeps, convergence metrics and bound audits.
//! * [`audit`]: seeded property checks of the convex-analysis layer.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod diffusion;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod io;
pub mod kinetic;
pub mod model;

pub use error::{Error, Result};
pub use model::{BoundaryData, Grid1D, InitPreset, InitialData, KineticState, Side, TimeFn};
