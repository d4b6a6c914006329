//! Parameterized surface samples shared by knot selection and fitting.

use nalgebra::Point3;

use crate::mesh::TriMesh;
use crate::param::Parameterization;

/// A data point with its parametric location.
#[derive(Debug, Clone, Copy)]
pub struct UvSample {
    pub u: f64,
    pub v: f64,
    pub position: Point3<f64>,
}

impl UvSample {
    pub fn new(u: f64, v: f64, position: Point3<f64>) -> Self {
        Self { u, v, position }
    }
}

/// Pairs every mesh vertex with its parameterization.
pub fn samples_from(mesh: &TriMesh, param: &Parameterization) -> Vec<UvSample> {
    mesh.vertices()
        .iter()
        .zip(param.uv.iter())
        .map(|(p, &(u, v))| UvSample::new(u, v, *p))
        .collect()
}
