//! Minimum-cost wireless backhaul planning for full-duplex capable nodes.
//!
//! The crate jointly selects links, subchannels and per-subchannel transmit
//! powers. Planning solves a sequence of MILPs in which the nonlinear link
//! capacity is replaced by a conservative piecewise-linear model that is
//! re-expanded around each iterate; re-tuning adjusts powers on a fixed
//! topology by successive inner approximation. All solving is done by the
//! in-repo simplex and branch-and-bound engines.

// Parameter checks are written `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod formulation;
pub mod io;
pub mod maxflow;
pub mod model;
pub mod planner;
pub mod retuner;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
