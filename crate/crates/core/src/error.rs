use thiserror::Error;

use crate::lattice::{Edge, Vertex};

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("expected {expected} coordinates, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("slope {0} is not in the Lipschitz simplex")]
    SlopeOutsideSimplex(String),
    #[error("not a height function: {0}")]
    NotHeightFunction(String),
    #[error("partial function is not extendable: {0}")]
    NotExtendable(String),
    #[error("local move at {vertex:?} blocked by neighbour {blocker:?}")]
    MoveBlocked { vertex: Vertex, blocker: Vertex },
    #[error("height functions differ on an infinite set (different backgrounds)")]
    IncompatibleBackgrounds,
    #[error("enumeration cap exceeded: {free} free vertices, cap {cap}")]
    EnumerationCap { free: usize, cap: usize },
    #[error("hyperdeterminant cap exceeded: (n!)^(m-1) = {work:e} > {cap:e}")]
    HyperdetCap { work: f64, cap: f64 },
    #[error("hyperdeterminant needs even rank, got {0}")]
    OddRank(usize),
    #[error("vertex {0:?} is not movable in this region")]
    NotMovable(Vertex),
    #[error("{0:?} does not contain a whole boundary component")]
    NotUnionOfBoundaries(Edge),
    #[error("region complement is not connected")]
    NotARegion,
    #[error("origin must lie outside the region")]
    OriginInRegion,
    #[error("coupling from the past did not coalesce within {0} steps")]
    NoCoalescence(u64),
    #[error("monotone coupling violated at step {step}: {detail}")]
    CouplingViolation { step: u64, detail: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Whether the error stems from a size cap rather than invalid input.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::EnumerationCap { .. } | Error::HyperdetCap { .. } | Error::NoCoalescence(_)
        )
    }
}
