//! Sim2real gap analysis engine: a paired sim/real RGB-D environment, a
//! small convolutional ego-pose regressor, attribution heatmaps and
//! bird's-eye back-projection.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analysis;
pub mod error;
pub mod geo;
pub mod imaging;
pub mod model;
pub mod par;
pub mod sim;
pub mod tensor;

pub use error::{Error, Result};
