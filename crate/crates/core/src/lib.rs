//! Simulation and analytics for generalised Liouville processes: Lévy
//! random bridges split into coordinated blocks, their transition laws,
//! path samplers and statistical verification of their properties.

// `!(a < b)` guards deliberately reject NaN along with the failed comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blp;
pub mod error;
pub mod glp;
pub mod io;
pub mod kernels;
pub mod lrb;
pub mod measures;
pub mod plp;
pub mod quad;
pub mod rng;
pub mod verify;

pub use error::{GlpError, Result};
pub use kernels::{BridgeEndpoint, DensityFamily, Support};
