//! Fit tensor-product cubic B-spline surfaces to noisy, hole-ridden
//! triangulated point clouds.
//!
//! The pipeline runs five stages in a fixed order:
//!
//! 1. **Smoothing** ([`smooth`]) — every interior vertex is projected onto the
//!    moving-least-squares surface; boundary vertices are smoothed with a
//!    curve variant that preserves user-declared corners.
//! 2. **Hole filling** ([`holefill`]) — interior holes are closed with an
//!    advancing front that clips sharp boundary ears and grows well-shaped
//!    triangles from boundary edges.
//! 3. **Parameterization** ([`param`]) — mean value coordinates map the mesh
//!    to the unit square, boundary pinned by chord length.
//! 4. **Knot selection** ([`knots`]) — recursive center subdivision of the
//!    parametric domain places knots where bicubic patches cannot yet explain
//!    the data.
//! 5. **Fitting** ([`bspline`]) — windowed local least-squares fits per knot
//!    patch are blended into a global control mesh; a global SVD fit serves
//!    as the quality/runtime baseline.
//!
//! [`pipeline`] wires the stages together behind a plain-text configuration
//! and produces a machine-readable run report; the `fit` binary is a thin
//! wrapper around it. The `examples/` directory demonstrates each capability
//! in isolation.

pub mod bspline;
pub mod error;
pub mod holefill;
pub mod knots;
pub mod mesh;
pub mod mls;
pub mod numeric;
pub mod param;
pub mod pipeline;
pub mod sample;
pub mod smooth;
pub mod synth;

pub use bspline::{BasisContext, ControlMesh, WindowMode};
pub use error::{Error, Result};
pub use knots::{KnotLayout, RegionNode};
pub use mesh::io::{load_mesh, save_obj, MeshFormat};
pub use mesh::{Neighborhood, NeighborhoodPolicy, SpatialIndex, TriMesh};
pub use mls::{Bandwidth, MlsConfig};
pub use param::Parameterization;
pub use pipeline::{run_pipeline, FitterChoice, PipelineConfig, RunReport};
pub use sample::UvSample;
