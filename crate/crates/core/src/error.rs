//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Fewer than two distinct points survive deduplication, or the cluster is
    /// otherwise too thin to carry any orientation information.
    #[error("degenerate cluster: {0}")]
    DegenerateCluster(&'static str),

    /// Area was requested for a polygon with fewer than three vertices.
    #[error("degenerate polygon: {vertices} vertices")]
    DegeneratePolygon { vertices: usize },

    /// The sensor origin lies inside or on the convex hull; no visible wedge exists.
    #[error("sensor origin lies inside or on the hull")]
    OriginInsideHull,

    /// No rectangle edge could be selected as the projection edge for a boundary ray.
    #[error("no visible rectangle edge for the boundary ray")]
    NoVisibleEdge,

    /// Non-finite (NaN or infinite) coordinate fed into a public operation.
    #[error("non-finite coordinate in input")]
    NonFinite,

    /// Every orientation candidate failed edge selection.
    #[error("pose estimation failed: no orientation produced a finite score")]
    EstimationFailed,

    /// Malformed input file. `line` is 1-based where applicable, 0 for whole-file problems.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    /// Statistics were requested over an empty slice.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A simulated scan produced no points (all rays missed or were dropped).
    #[error("simulated scan is empty")]
    EmptyScan,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }
}
