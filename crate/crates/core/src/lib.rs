//! Numerical laboratory for the alpha-Gauss curvature flow of convex graphs
//! with a flat side (`1/2 < alpha <= 1`).

pub mod audit;
pub mod error;
pub mod graph;
pub mod grid;
pub mod hodograph;
pub mod interface;
pub mod params;
pub mod radial;

pub use error::{GcfError, Result};
pub use params::{derive_exponents, FlowParams};
