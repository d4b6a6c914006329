//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("triangle {triangle} repeats a vertex index")]
    RepeatedIndex { triangle: usize },

    #[error("degenerate (zero-area) triangles at faces {faces:?}")]
    DegenerateTriangles { faces: Vec<usize> },

    #[error("non-manifold edge ({a}, {b}) shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("boundary chain starting at vertex {start} does not close")]
    OpenBoundaryChain { start: usize },

    #[error("mesh has no boundary loop")]
    NoBoundary,

    #[error("mesh has {count} boundary loops, expected exactly one (fill holes first)")]
    MultipleBoundaryLoops { count: usize },

    #[error("mesh is not edge-connected")]
    Disconnected,

    #[error("spatial query with invalid policy: {0}")]
    InvalidQuery(String),

    #[error("neighborhood query returned no points")]
    EmptyNeighborhood,

    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),

    #[error("iteration did not converge after {iterations} steps (last delta {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("{failed} of {total} vertex projections failed (limit 1%)")]
    TooManyProjectionFailures { failed: usize, total: usize },

    #[error("invalid corner specification: {0}")]
    InvalidCorners(String),

    #[error("degenerate vertex fan at vertex {vertex}: {message}")]
    DegenerateFan { vertex: usize, message: String },

    #[error("{count} flipped parametric triangles, first offenders: {first:?}")]
    FlippedTriangles { count: usize, first: Vec<usize> },

    #[error("hole fill stalled after {iterations} iterations; residual loop has {remaining} vertices: {loop_vertices:?}")]
    HoleFillStalled {
        iterations: usize,
        remaining: usize,
        loop_vertices: Vec<usize>,
    },

    #[error("hole closure produced a degenerate triangle ({a}, {b}, {c})")]
    DegenerateFill { a: usize, b: usize, c: usize },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("no data points supplied to fit")]
    EmptyFitData,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
