//! Deterministic synthetic meshes with retrievable analytic ground truth,
//! used by tests, examples and the benchmark harness.

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mesh::TriMesh;
use crate::sample::UvSample;

/// Kind of synthetic surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Flat grid at `z = 0`.
    Plane,
    /// `z = sin(2 pi x) cos(2 pi y)`.
    SinCos,
    /// A fixed polynomial of degree three, exactly representable by any open
    /// cubic tensor-product spline.
    Bicubic,
    /// Height-field patch of the unit sphere.
    SphereCap,
    /// Flat grid with the given number of interior holes punched out.
    PuncturedDisc { holes: usize },
}

/// Analytic surface behind a synthetic mesh, for oracle checks.
#[derive(Debug, Clone, Copy)]
pub enum GroundTruth {
    PlaneZ0,
    SinCos,
    Bicubic,
    Sphere { radius: f64 },
}

impl GroundTruth {
    /// Distance from a point to the ideal (noise-free) surface, measured
    /// along the height axis for height fields and radially for the sphere.
    pub fn residual(&self, p: &Point3<f64>) -> f64 {
        match *self {
            GroundTruth::PlaneZ0 => p.z.abs(),
            GroundTruth::SinCos => (p.z - sincos_height(p.x, p.y)).abs(),
            GroundTruth::Bicubic => (p.z - bicubic_height(p.x, p.y)).abs(),
            GroundTruth::Sphere { radius } => (p.coords.norm() - radius).abs(),
        }
    }
}

/// A generated mesh plus its ground truth and the analytic parameterization
/// of its vertices (grid coordinates rescaled to the unit square).
#[derive(Debug)]
pub struct SyntheticMesh {
    pub mesh: TriMesh,
    pub truth: GroundTruth,
    /// Per-vertex `(u, v)` from the generating grid.
    pub analytic_uv: Vec<(f64, f64)>,
}

impl SyntheticMesh {
    /// Vertex samples under the analytic parameterization.
    pub fn analytic_samples(&self) -> Vec<UvSample> {
        self.mesh
            .vertices()
            .iter()
            .zip(&self.analytic_uv)
            .map(|(p, &(u, v))| UvSample::new(u, v, *p))
            .collect()
    }
}

fn sincos_height(x: f64, y: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).cos()
}

fn bicubic_height(x: f64, y: f64) -> f64 {
    0.3 * x.powi(3) - 0.5 * x * x * y + 0.4 * x * y * y + 0.2 * y.powi(3) - 0.6 * x * x
        + 0.5 * x * y
        - 0.4 * y * y
        + 0.1 * x
        - 0.2 * y
        + 0.05
}

/// Standard normal deviate via Box-Muller, deterministic for a given stream.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates a deterministic synthetic mesh of roughly `n` points with
/// gaussian noise of standard deviation `sigma` along the height (or radial)
/// axis. The same `(kind, n, sigma, seed)` always yields the same mesh.
pub fn generate_synthetic(
    kind: SyntheticKind,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticMesh> {
    let m = (n as f64).sqrt().round().max(2.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (height, truth): (Box<dyn Fn(f64, f64) -> f64>, GroundTruth) = match kind {
        SyntheticKind::Plane | SyntheticKind::PuncturedDisc { .. } => {
            (Box::new(|_, _| 0.0), GroundTruth::PlaneZ0)
        }
        SyntheticKind::SinCos => (Box::new(sincos_height), GroundTruth::SinCos),
        SyntheticKind::Bicubic => (Box::new(bicubic_height), GroundTruth::Bicubic),
        SyntheticKind::SphereCap => {
            // Handled separately below (radial noise).
            (Box::new(|_, _| 0.0), GroundTruth::Sphere { radius: 1.0 })
        }
    };

    let mut vertices = Vec::with_capacity(m * m);
    let mut analytic_uv = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let u = i as f64 / (m - 1) as f64;
            let v = j as f64 / (m - 1) as f64;
            analytic_uv.push((u, v));
            match kind {
                SyntheticKind::SphereCap => {
                    let span = 0.55;
                    let x = -span + 2.0 * span * u;
                    let y = -span + 2.0 * span * v;
                    let r = 1.0 + sigma * gaussian(&mut rng);
                    let z = (1.0 - x * x - y * y).sqrt();
                    let p = Point3::new(x, y, z);
                    vertices.push(Point3::from(p.coords * r));
                }
                _ => {
                    let z = height(u, v) + sigma * gaussian(&mut rng);
                    vertices.push(Point3::new(u, v, z));
                }
            }
        }
    }

    let hole_centers: &[(f64, f64)] = match kind {
        SyntheticKind::PuncturedDisc { holes } => match holes {
            0 => &[],
            1 => &[(0.5, 0.5)],
            2 => &[(0.3, 0.35), (0.68, 0.65)],
            _ => &[(0.27, 0.27), (0.72, 0.38), (0.48, 0.74)],
        },
        _ => &[],
    };
    let hole_radius = match kind {
        SyntheticKind::PuncturedDisc { holes } if holes > 1 => 0.07,
        _ => 0.09,
    };

    let mut triangles = Vec::new();
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            let a = i * m + j;
            let b = (i + 1) * m + j;
            let c = (i + 1) * m + j + 1;
            let d = i * m + j + 1;
            for tri in [[a, b, c], [a, c, d]] {
                let centroid_u = (analytic_uv[tri[0]].0 + analytic_uv[tri[1]].0 + analytic_uv[tri[2]].0) / 3.0;
                let centroid_v = (analytic_uv[tri[0]].1 + analytic_uv[tri[1]].1 + analytic_uv[tri[2]].1) / 3.0;
                let in_hole = hole_centers.iter().any(|&(cx, cy)| {
                    ((centroid_u - cx).powi(2) + (centroid_v - cy).powi(2)).sqrt() < hole_radius
                });
                if !in_hole {
                    triangles.push(tri);
                }
            }
        }
    }

    // Clean up pinched boundary vertices (a vertex with more than two
    // incident boundary edges) by deleting one incident triangle at a time;
    // hole shapes on a regular grid rarely need this, but it keeps the
    // generated boundary loops disjoint.
    loop {
        let mut edge_count = std::collections::BTreeMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        let mut boundary_per_vertex = std::collections::BTreeMap::new();
        for (&(a, b), &count) in &edge_count {
            if count == 1 {
                *boundary_per_vertex.entry(a).or_insert(0usize) += 1;
                *boundary_per_vertex.entry(b).or_insert(0usize) += 1;
            }
        }
        let Some((&pinched, _)) = boundary_per_vertex.iter().find(|&(_, &c)| c > 2) else {
            break;
        };
        let Some(pos) = triangles.iter().position(|t| t.contains(&pinched)) else {
            break;
        };
        triangles.remove(pos);
    }

    // Unreferenced vertices (inside holes) are dropped by the mesh builder;
    // remap the analytic uv list the same way.
    let mut referenced = vec![false; vertices.len()];
    for tri in &triangles {
        for &v in tri {
            referenced[v] = true;
        }
    }
    let kept_uv: Vec<(f64, f64)> = analytic_uv
        .iter()
        .zip(&referenced)
        .filter(|&(_, &r)| r)
        .map(|(&uv, _)| uv)
        .collect();

    let mesh = TriMesh::from_parts(vertices, triangles)?;
    Ok(SyntheticMesh {
        mesh,
        truth,
        analytic_uv: kept_uv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_has_exact_count_and_flat_geometry() {
        let s = generate_synthetic(SyntheticKind::Plane, 2500, 0.0, 1).unwrap();
        assert_eq!(s.mesh.vertices().len(), 2500);
        assert!(s.mesh.vertices().iter().all(|p| p.z == 0.0));
        assert_eq!(s.mesh.boundary_loops().len(), 1);
    }

    #[test]
    fn sincos_matches_height_function() {
        let s = generate_synthetic(SyntheticKind::SinCos, 2500, 0.0, 7).unwrap();
        for p in s.mesh.vertices() {
            assert!((p.z - sincos_height(p.x, p.y)).abs() < 1e-12);
        }
    }

    #[test]
    fn punctured_disc_has_hole_loops() {
        let s = generate_synthetic(SyntheticKind::PuncturedDisc { holes: 1 }, 2500, 0.0, 3).unwrap();
        assert_eq!(s.mesh.boundary_loops().len(), 2);
        let s = generate_synthetic(SyntheticKind::PuncturedDisc { holes: 3 }, 8100, 0.0, 3).unwrap();
        assert_eq!(s.mesh.boundary_loops().len(), 4);
    }

    #[test]
    fn same_seed_same_mesh() {
        let a = generate_synthetic(SyntheticKind::SinCos, 400, 0.05, 42).unwrap();
        let b = generate_synthetic(SyntheticKind::SinCos, 400, 0.05, 42).unwrap();
        for (x, y) in a.mesh.vertices().iter().zip(b.mesh.vertices()) {
            assert_eq!(x.z.to_bits(), y.z.to_bits());
        }
        let c = generate_synthetic(SyntheticKind::SinCos, 400, 0.05, 43).unwrap();
        assert!(a
            .mesh
            .vertices()
            .iter()
            .zip(c.mesh.vertices())
            .any(|(x, y)| x.z != y.z));
    }

    #[test]
    fn analytic_uv_follows_dropped_vertices() {
        let s = generate_synthetic(SyntheticKind::PuncturedDisc { holes: 3 }, 2500, 0.0, 3).unwrap();
        assert_eq!(s.analytic_uv.len(), s.mesh.vertices().len());
        for (p, &(u, v)) in s.mesh.vertices().iter().zip(&s.analytic_uv) {
            assert_eq!(p.x, u);
            assert_eq!(p.y, v);
        }
    }
}
