//! Force sensing, limit-curve contact modelling and hybrid grip control for a
//! two-pad gripper, with a deterministic kinematic simulator.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod control;
pub mod error;
pub mod numeric;
pub mod planner;
pub mod sensing;
pub mod sim;

pub use error::{GripError, Result};
pub use nalgebra;
