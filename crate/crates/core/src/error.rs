//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("too few points: got {got}, need at least {min}")]
    TooFewPoints { got: usize, min: usize },

    #[error("no partition-of-unity center lies inside the convex hull")]
    EmptyCover,

    #[error("point ({x}, {y}) lies outside the bounding box")]
    OutOfDomain { x: f64, y: f64 },

    #[error("query radius {radius} exceeds the reach of the block stencil (block edge {edge})")]
    RadiusExceedsBlock { radius: f64, edge: f64 },

    #[error("invalid kernel radius {0}")]
    InvalidRadius(f64),

    #[error("invalid shape parameter {0}")]
    InvalidShape(f64),

    #[error("sites {0} and {1} coincide")]
    DuplicateSites(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("local system of patch {patch} is not positive definite even after regularization")]
    IllConditionedPatch { patch: usize },

    #[error("{} site(s) not covered by any patch: {0:?}", .0.len())]
    UncoveredSites(Vec<usize>),

    #[error("point ({x}, {y}) is not covered by any patch")]
    UncoveredPoint { x: f64, y: f64 },

    #[error("point ({x}, {y}) lies outside the convex hull of the data")]
    OutsideHull { x: f64, y: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing parameter(s): {}", .0.join(", "))]
    MissingParameters(Vec<String>),

    #[error("numerical blow-up at t = {t}")]
    NumericalBlowup { t: f64 },

    #[error("search structures disagree: {0}")]
    OracleMismatch(String),

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("bisection failed: {0}")]
    Bisect(String),

    #[error("model document: {0}")]
    Model(String),
}
