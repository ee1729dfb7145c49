//! Random walks on weighted graphs: heat kernels, resistance, fractal
//! renormalization, parabolic Harnack constants and scaling limits.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod families;
pub mod gh;
pub mod graph;
pub mod harnack;
pub mod kernels;
pub mod linalg;
pub mod llt;
pub mod renorm;
pub mod resistance;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Edge, MeasureTable, SpatialIndex, VertexId, WeightedGraph};
