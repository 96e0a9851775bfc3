//! Coresets for k-means built from determinantal point processes.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coreset;
pub mod datasets;
pub mod dpp;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kmeans;
pub mod metrics;
pub mod points;
pub mod rff;
pub mod rng;
pub mod sensitivity;
pub mod validation;

pub use error::{DppcError, ErrorClass, Result};
pub use points::PointSet;
