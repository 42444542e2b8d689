#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod anisotropy;
pub mod curvature;
pub mod diagnostics;
pub mod error;
pub mod extents;
pub mod flow;
pub mod harness;
pub mod rescale;
pub mod sphere;
pub mod state;

pub use error::{FlowError, Result};
