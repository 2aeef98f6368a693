//! Partition-of-unity interpolation of scattered 2D data with compactly
//! supported Wendland RBF local approximants, organized by a block-based
//! partitioning structure, plus a herbivore/grass/trees population model
//! whose extinction boundary is reconstructed as an interpolated surface.

pub mod cli;
pub mod csvio;
pub mod ecology;
pub mod error;
pub mod geometry;
pub mod pum;
pub mod rbf;
pub mod spatial;
pub mod testfn;

pub use error::{Error, Result};
pub use geometry::Point2;
pub use pum::{build_pum, PumConfig, PumModel, ScatteredData};
