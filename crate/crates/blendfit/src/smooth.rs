//! Noise removal by MLS projection.
//!
//! The surface pass projects every interior vertex onto the MLS surface.
//! Boundary vertices need their own treatment: their normals need not align
//! with the surface normals, so each boundary vertex is projected onto an MLS
//! *curve* fit over neighbors taken along its own boundary piece. Pieces are
//! delimited by user-declared corner vertices, which are never moved.

use nalgebra::{Point3, Unit, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Neighborhood, NeighborhoodPolicy, SpatialIndex, TriMesh};
use crate::mls::{theta, MlsConfig};
use crate::numeric::{sym3_eigen_ascending, weighted_lsq};

/// A line `point + s * direction` fit to a neighborhood.
#[derive(Debug, Clone)]
pub struct MlsLine {
    pub point: Point3<f64>,
    pub direction: Unit<Vector3<f64>>,
}

/// Boundary vertices declared as sharp corners, in loop order.
#[derive(Debug, Clone, Default)]
pub struct CornerSpec {
    indices: Vec<usize>,
}

impl CornerSpec {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Checks that all corners sit on one boundary loop of `mesh` and that
    /// their order follows the loop (up to rotation). Returns the loop index
    /// and the corners' positions within that loop.
    pub fn resolve(&self, mesh: &TriMesh) -> Result<Option<(usize, Vec<usize>)>> {
        if self.indices.is_empty() {
            return Ok(None);
        }
        let loops = mesh.boundary_loops();
        let Some(loop_idx) = loops
            .iter()
            .position(|lp| self.indices.iter().all(|c| lp.contains(c)))
        else {
            return Err(Error::InvalidCorners(
                "corner vertices do not all lie on one boundary loop".into(),
            ));
        };
        let lp = &loops[loop_idx];
        let positions: Vec<usize> = self
            .indices
            .iter()
            .map(|c| lp.iter().position(|v| v == c).unwrap())
            .collect();
        // Loop order up to rotation: positions must be strictly increasing
        // after rotating the minimum to the front.
        if positions.len() > 1 {
            let min_at = positions
                .iter()
                .enumerate()
                .min_by_key(|&(_, &p)| p)
                .map(|(i, _)| i)
                .unwrap();
            let rotated: Vec<usize> = (0..positions.len())
                .map(|k| positions[(min_at + k) % positions.len()])
                .collect();
            if !rotated.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidCorners(
                    "corner vertices are not in loop order".into(),
                ));
            }
        }
        Ok(Some((loop_idx, positions)))
    }
}

/// Outcome of a smoothing pass.
#[derive(Debug)]
pub struct SmoothOutcome {
    pub mesh: TriMesh,
    /// Vertices whose projection failed and were left in place.
    pub skipped_vertices: Vec<usize>,
    /// Boundary pieces too short to smooth (boundary pass only).
    pub skipped_pieces: usize,
}

/// Projects every interior vertex onto the MLS surface. Boundary vertices and
/// connectivity are untouched. Fails when more than 1% of the vertices cannot
/// be projected.
pub fn smooth_surface(mesh: &TriMesh, cfg: &MlsConfig) -> Result<SmoothOutcome> {
    cfg.validate()?;
    let index = SpatialIndex::build(mesh.vertices().to_vec())?;
    let results: Vec<Option<Point3<f64>>> = (0..mesh.vertices().len())
        .into_par_iter()
        .map(|v| {
            if mesh.is_boundary_vertex(v) {
                return Some(mesh.vertices()[v]);
            }
            let hint = mesh.vertex_normal(v);
            crate::mls::project_point_with_hint(&mesh.vertices()[v], &index, cfg, Some(&hint)).ok()
        })
        .collect();

    let mut vertices = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (v, r) in results.into_iter().enumerate() {
        match r {
            Some(p) => vertices.push(p),
            None => {
                vertices.push(mesh.vertices()[v]);
                skipped.push(v);
            }
        }
    }
    if skipped.len() * 100 > mesh.vertices().len() {
        return Err(Error::TooManyProjectionFailures {
            failed: skipped.len(),
            total: mesh.vertices().len(),
        });
    }
    Ok(SmoothOutcome {
        mesh: mesh.with_vertices(vertices)?,
        skipped_vertices: skipped,
        skipped_pieces: 0,
    })
}

/// Fits the optimal MLS line for the neighborhood of `r`, alternating weight
/// updates with the closed-form optimum (weighted centroid + dominant
/// principal axis). The returned point is the projection of `r` onto the line.
pub fn fit_mls_line(
    r: &Point3<f64>,
    nbrs: &Neighborhood,
    points: &[Point3<f64>],
    cfg: &MlsConfig,
) -> Result<MlsLine> {
    if nbrs.len() < 2 {
        return Err(Error::DegenerateNeighborhood(format!(
            "line fit needs at least 2 points, got {}",
            nbrs.len()
        )));
    }
    let h = cfg.bandwidth_for(nbrs)?;

    let line_objective = |q: &Point3<f64>, u: &Vector3<f64>| -> f64 {
        nbrs.members
            .iter()
            .map(|&(i, _)| {
                let d = points[i] - q;
                let w = theta(d.norm(), h);
                (d - u * d.dot(u)).norm_squared() * w
            })
            .sum()
    };

    let mut q = *r;
    let mut best: Option<(Point3<f64>, Vector3<f64>, f64)> = None;
    let tol2 = cfg.convergence_tol * cfg.convergence_tol;
    let mut prev_u: Option<Vector3<f64>> = None;
    for _ in 0..cfg.max_iterations {
        let mut wsum = 0.0;
        let mut centroid = Vector3::zeros();
        for &(i, _) in &nbrs.members {
            let w = theta((points[i] - q).norm(), h);
            wsum += w;
            centroid += points[i].coords * w;
        }
        let centroid = Point3::from(centroid / wsum);
        let mut scatter = nalgebra::Matrix3::zeros();
        for &(i, _) in &nbrs.members {
            let w = theta((points[i] - q).norm(), h);
            let d = points[i] - centroid;
            scatter += d * d.transpose() * w;
        }
        let (evals, evecs) = sym3_eigen_ascending(&scatter);
        if evals[2] <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateNeighborhood(
                "all neighborhood points coincide; no line direction".into(),
            ));
        }
        let mut u = evecs[2];
        if let Some(p) = prev_u {
            if u.dot(&p) < 0.0 {
                u = -u;
            }
        }
        prev_u = Some(u);
        // q is the projection of r onto the fitted line.
        let q_new = centroid + u * u.dot(&(r - centroid));
        let obj = line_objective(&q_new, &u);
        let improved = best.map(|(_, _, b)| obj < b).unwrap_or(true);
        let delta = best.map(|(_, _, b)| (b - obj).abs()).unwrap_or(f64::INFINITY);
        if improved {
            best = Some((q_new, u, obj));
        }
        let moved = (q_new - q).norm();
        q = q_new;
        if delta < tol2 || moved < cfg.convergence_tol {
            break;
        }
    }
    let (point, direction, _) = best.unwrap();
    Ok(MlsLine {
        point,
        direction: Unit::new_normalize(direction),
    })
}

/// Projects a boundary point onto the local MLS curve: fit a line, build the
/// frame `(u, r - q, u x (r - q))`, fit two weighted quadratics `v(u)`, `w(u)`
/// and evaluate the parametric curve at `u = 0`.
pub fn project_boundary_point(
    r: &Point3<f64>,
    nbrs: &Neighborhood,
    points: &[Point3<f64>],
    cfg: &MlsConfig,
) -> Result<Point3<f64>> {
    let line = fit_mls_line(r, nbrs, points, cfg)?;
    let h = cfg.bandwidth_for(nbrs)?;
    let q = line.point;
    let a1 = line.direction.into_inner();
    let radial = r - q;
    let a2 = if radial.norm() > 1e-12 * (1.0 + nbrs.mean_distance()) {
        (radial - a1 * radial.dot(&a1)).normalize()
    } else {
        // r lies on the line: any unit vector orthogonal to it works.
        crate::numeric::orthonormal_tangents(&line.direction).0
    };
    let a3 = a1.cross(&a2);

    let n = nbrs.len();
    if n < 3 {
        return Err(Error::DegenerateNeighborhood(format!(
            "curve fit needs at least 3 points, got {n}"
        )));
    }
    let mut design = nalgebra::DMatrix::zeros(n, 3);
    let mut rhs = nalgebra::DMatrix::zeros(n, 2);
    let mut weights = Vec::with_capacity(n);
    for (row, &(i, _)) in nbrs.members.iter().enumerate() {
        let d = points[i] - q;
        let s = d.dot(&a1);
        design[(row, 0)] = 1.0;
        design[(row, 1)] = s;
        design[(row, 2)] = s * s;
        rhs[(row, 0)] = d.dot(&a2);
        rhs[(row, 1)] = d.dot(&a3);
        weights.push(theta(d.norm(), h));
    }
    let sol = weighted_lsq(&design, &rhs, Some(&weights), 1e-8);
    Ok(q + a2 * sol.coeffs[(0, 0)] + a3 * sol.coeffs[(0, 1)])
}

/// Smooths boundary vertices piece by piece. Pieces are delimited by the
/// declared corners; corner vertices are returned bit-identical. Neighborhoods
/// are gathered along the loop (arc-length nearest within the same piece), not
/// from the volumetric index. Interior vertices are untouched.
pub fn smooth_boundary(mesh: &TriMesh, corners: &CornerSpec, cfg: &MlsConfig) -> Result<SmoothOutcome> {
    cfg.validate()?;
    let resolved = corners.resolve(mesh)?;
    let k = match cfg.neighborhood {
        NeighborhoodPolicy::KNearest(k) => k,
        NeighborhoodPolicy::Radius(_) => 15,
    };

    let mut vertices = mesh.vertices().to_vec();
    let mut skipped_vertices = Vec::new();
    let mut skipped_pieces = 0usize;

    for (loop_idx, lp) in mesh.boundary_loops().iter().enumerate() {
        // Pieces of this loop: index ranges between consecutive corners, or
        // the whole loop as one cyclic piece.
        let corner_positions: Vec<usize> = match &resolved {
            Some((l, positions)) if *l == loop_idx => {
                let mut p = positions.clone();
                p.sort_unstable();
                p
            }
            _ => Vec::new(),
        };

        let pieces: Vec<(Vec<usize>, bool)> = if corner_positions.is_empty() {
            // One closed cyclic piece.
            vec![(lp.clone(), true)]
        } else {
            let m = corner_positions.len();
            (0..m)
                .map(|k| {
                    let from = corner_positions[k];
                    let to = corner_positions[(k + 1) % m];
                    let mut piece = Vec::new();
                    let mut i = from;
                    loop {
                        piece.push(lp[i]);
                        if i == to {
                            break;
                        }
                        i = (i + 1) % lp.len();
                    }
                    (piece, false)
                })
                .collect()
        };

        for (piece, cyclic) in pieces {
            if piece.len() < 3 {
                skipped_pieces += 1;
                continue;
            }
            // Cumulative arc length along the piece.
            let mut arc = vec![0.0f64];
            for w in piece.windows(2) {
                let d = (vertices[w[1]] - vertices[w[0]]).norm();
                arc.push(arc.last().unwrap() + d);
            }
            let total = if cyclic {
                arc.last().unwrap() + (vertices[piece[0]] - vertices[*piece.last().unwrap()]).norm()
            } else {
                *arc.last().unwrap()
            };

            let movable: Vec<usize> = if cyclic {
                (0..piece.len()).collect()
            } else {
                (1..piece.len() - 1).collect()
            };

            let original: Vec<Point3<f64>> = piece.iter().map(|&v| vertices[v]).collect();
            for &pi in &movable {
                let v = piece[pi];
                // Arc-length k-nearest within the piece.
                let mut by_arc: Vec<(usize, f64)> = (0..piece.len())
                    .map(|j| {
                        let d = (arc[j] - arc[pi]).abs();
                        let d = if cyclic { d.min(total - d) } else { d };
                        (j, d)
                    })
                    .collect();
                by_arc.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                by_arc.truncate(k.min(piece.len()));
                let center = original[pi];
                let mut members: Vec<(usize, f64)> = by_arc
                    .iter()
                    .map(|&(j, _)| (j, (original[j] - center).norm()))
                    .collect();
                members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                let nbrs = Neighborhood { center, members };
                match project_boundary_point(&center, &nbrs, &original, cfg) {
                    Ok(p) => vertices[v] = p,
                    Err(_) => skipped_vertices.push(v),
                }
            }
        }
    }

    Ok(SmoothOutcome {
        mesh: mesh.with_vertices(vertices)?,
        skipped_vertices,
        skipped_pieces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mls::Bandwidth;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn all_neighbors(points: &[Point3<f64>], center: Point3<f64>) -> Neighborhood {
        let mut members: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - center).norm()))
            .collect();
        members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Neighborhood { center, members }
    }

    fn grid_mesh(m: usize, z: impl Fn(f64, f64) -> f64) -> TriMesh {
        let mut vertices = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let x = i as f64 / (m - 1) as f64;
                let y = j as f64 / (m - 1) as f64;
                vertices.push(Point3::new(x, y, z(x, y)));
            }
        }
        let mut triangles = Vec::new();
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                let a = i * m + j;
                let b = (i + 1) * m + j;
                let c = (i + 1) * m + j + 1;
                let d = i * m + j + 1;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        TriMesh::from_parts(vertices, triangles).unwrap()
    }

    #[test]
    fn line_fit_exact_on_collinear_points() {
        let points = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let r = Point3::new(0.9, 0.1, 0.0);
        let nbrs = all_neighbors(&points, r);
        let cfg = MlsConfig {
            bandwidth: Bandwidth::Fixed(4.0),
            ..MlsConfig::default()
        };
        let line = fit_mls_line(&r, &nbrs, &points, &cfg).unwrap();
        assert_relative_eq!(line.direction.x.abs(), 1.0, epsilon = 1e-12);
        assert!(line.point.y.abs() < 1e-12);
        assert!(line.point.z.abs() < 1e-12);
    }

    #[test]
    fn noisy_line_direction_within_tolerance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let length = 2.0;
        let sigma = 0.02 * length;
        let points: Vec<Point3<f64>> = (0..40)
            .map(|i| {
                let s = length * i as f64 / 39.0;
                Point3::new(
                    s,
                    sigma * (rng.gen::<f64>() * 2.0 - 1.0),
                    sigma * (rng.gen::<f64>() * 2.0 - 1.0),
                )
            })
            .collect();
        let r = Point3::new(1.0, 0.0, 0.0);
        let nbrs = all_neighbors(&points, r);
        let cfg = MlsConfig::default();
        let line = fit_mls_line(&r, &nbrs, &points, &cfg).unwrap();

        // Unweighted total-least-squares oracle.
        let centroid: Vector3<f64> =
            points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / points.len() as f64;
        let mut scatter = nalgebra::Matrix3::zeros();
        for p in &points {
            let d = p.coords - centroid;
            scatter += d * d.transpose();
        }
        let (_, evecs) = sym3_eigen_ascending(&scatter);
        let oracle_dir = evecs[2];

        let angle = line.direction.dot(&oracle_dir).abs().min(1.0).acos();
        assert!(angle < 5.0_f64.to_radians(), "angle {}", angle.to_degrees());
        let angle_true = line.direction.x.abs().min(1.0).acos();
        assert!(angle_true < 5.0_f64.to_radians());
    }

    #[test]
    fn coincident_points_error() {
        let points = vec![Point3::new(1.0, 1.0, 1.0); 5];
        let r = Point3::new(1.0, 1.0, 1.0);
        let nbrs = all_neighbors(&points, r);
        let cfg = MlsConfig {
            bandwidth: Bandwidth::Fixed(1.0),
            ..MlsConfig::default()
        };
        assert!(matches!(
            fit_mls_line(&r, &nbrs, &points, &cfg),
            Err(Error::DegenerateNeighborhood(_))
        ));
    }

    #[test]
    fn boundary_projection_onto_straight_segment() {
        let points: Vec<Point3<f64>> = (0..9)
            .map(|i| Point3::new(i as f64 * 0.25, 0.0, 0.0))
            .collect();
        let r = Point3::new(1.0, 0.08, 0.0);
        let nbrs = all_neighbors(&points, r);
        let cfg = MlsConfig::default();
        let p = project_boundary_point(&r, &nbrs, &points, &cfg).unwrap();
        assert!(p.y.abs() < 1e-9, "residual y {:e}", p.y);
        assert!(p.z.abs() < 1e-9);
    }

    #[test]
    fn boundary_projection_improves_circle_point() {
        let radius = 1.0;
        let points: Vec<Point3<f64>> = (0..60)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 60.0;
                Point3::new(radius * a.cos(), radius * a.sin(), 0.0)
            })
            .collect();
        let r = Point3::new(1.05 * radius, 0.0, 0.0);
        let mut nbrs = all_neighbors(&points, r);
        nbrs.members.truncate(15);
        let cfg = MlsConfig::default();
        let p = project_boundary_point(&r, &nbrs, &points, &cfg).unwrap();
        let before = (r.coords.norm() - radius).abs();
        let after = (p.coords.norm() - radius).abs();
        assert!(after < before, "before {before:e}, after {after:e}");
    }

    #[test]
    fn boundary_projection_on_parabola() {
        // Dense samples of the planar parabola y = x^2.
        let points: Vec<Point3<f64>> = (0..201)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 200.0;
                Point3::new(x, x * x, 0.0)
            })
            .collect();
        let r = Point3::new(0.3, 0.3 * 0.3 + 0.02, 0.0);
        let mut nbrs = all_neighbors(&points, r);
        nbrs.members.truncate(25);
        let cfg = MlsConfig::default();
        let p = project_boundary_point(&r, &nbrs, &points, &cfg).unwrap();
        // Dense-sampling nearest-point oracle.
        let nearest = (0..20001)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 20000.0;
                (p - Point3::new(x, x * x, 0.0)).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-3, "distance to parabola {nearest:e}");
    }

    #[test]
    fn surface_smoothing_is_identity_on_clean_plane() {
        let mesh = grid_mesh(20, |_, _| 0.0);
        let cfg = MlsConfig::default();
        let out = smooth_surface(&mesh, &cfg).unwrap();
        let diag = mesh.bbox_diagonal();
        for (a, b) in mesh.vertices().iter().zip(out.mesh.vertices()) {
            assert!((a - b).norm() < 1e-6 * diag);
        }
        assert!(out.skipped_vertices.is_empty());
    }

    #[test]
    fn surface_smoothing_halves_noise_rms() {
        let m = 40;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let diag = (2.0f64).sqrt();
        let sigma = 0.01 * diag;
        let clean = grid_mesh(m, |_, _| 0.0);
        let noisy_vertices: Vec<Point3<f64>> = clean
            .vertices()
            .iter()
            .map(|p| {
                let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-12), rng.gen());
                let g = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                Point3::new(p.x, p.y, p.z + sigma * g)
            })
            .collect();
        let noisy = clean.with_vertices(noisy_vertices).unwrap();
        let cfg = MlsConfig {
            neighborhood: NeighborhoodPolicy::KNearest(30),
            ..MlsConfig::default()
        };
        let out = smooth_surface(&noisy, &cfg).unwrap();
        let interior: Vec<usize> = (0..noisy.vertices().len())
            .filter(|&v| !noisy.is_boundary_vertex(v))
            .collect();
        let rms = |mesh: &TriMesh| {
            (interior
                .iter()
                .map(|&v| mesh.vertices()[v].z.powi(2))
                .sum::<f64>()
                / interior.len() as f64)
                .sqrt()
        };
        let before = rms(&noisy);
        let after = rms(&out.mesh);
        assert!(after <= 0.5 * before, "before {before:e}, after {after:e}");
        assert_eq!(noisy.triangles(), out.mesh.triangles());
    }

    #[test]
    fn single_triangle_smoothing_falls_back() {
        let mesh = TriMesh::from_parts(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        // All vertices are on the boundary; the pass is the identity.
        let out = smooth_surface(&mesh, &MlsConfig::default()).unwrap();
        assert_eq!(mesh.vertices(), out.mesh.vertices());
    }

    #[test]
    fn straight_rectangle_boundary_unchanged() {
        let mesh = grid_mesh(6, |_, _| 0.0);
        let lp = &mesh.boundary_loops()[0];
        // Corners of the grid are the four extreme vertices.
        let corners: Vec<usize> = lp
            .iter()
            .copied()
            .filter(|&v| {
                let p = mesh.vertices()[v];
                (p.x == 0.0 || p.x == 1.0) && (p.y == 0.0 || p.y == 1.0)
            })
            .collect();
        assert_eq!(corners.len(), 4);
        let spec = CornerSpec::new(corners);
        let out = smooth_boundary(&mesh, &spec, &MlsConfig::default()).unwrap();
        for (a, b) in mesh.vertices().iter().zip(out.mesh.vertices()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn corners_bit_identical_under_noisy_boundary() {
        let m = 8;
        let clean = grid_mesh(m, |_, _| 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let vertices: Vec<Point3<f64>> = clean
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, p)| {
                if clean.is_boundary_vertex(v) {
                    Point3::new(p.x, p.y, p.z + 0.01 * (rng.gen::<f64>() - 0.5))
                } else {
                    *p
                }
            })
            .collect();
        let noisy = clean.with_vertices(vertices).unwrap();
        let lp = &noisy.boundary_loops()[0];
        let corners: Vec<usize> = lp
            .iter()
            .copied()
            .filter(|&v| {
                let p = noisy.vertices()[v];
                (p.x == 0.0 || p.x == 1.0) && (p.y == 0.0 || p.y == 1.0)
            })
            .collect();
        let spec = CornerSpec::new(corners.clone());
        let out = smooth_boundary(&noisy, &spec, &MlsConfig::default()).unwrap();
        for &c in &corners {
            let a = noisy.vertices()[c];
            let b = out.mesh.vertices()[c];
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
        // Interior untouched.
        for v in 0..noisy.vertices().len() {
            if !noisy.is_boundary_vertex(v) {
                assert_eq!(noisy.vertices()[v], out.mesh.vertices()[v]);
            }
        }
    }

    #[test]
    fn noisy_circle_boundary_rms_drops() {
        // Fan disc: circle boundary around a center vertex.
        let n = 80;
        let radius = 1.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut vertices = vec![Point3::new(0.0, 0.0, 0.0)];
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let rr = radius * (1.0 + 0.02 * (rng.gen::<f64>() * 2.0 - 1.0));
            vertices.push(Point3::new(rr * a.cos(), rr * a.sin(), 0.0));
        }
        let triangles: Vec<[usize; 3]> = (0..n)
            .map(|i| [0, 1 + i, 1 + (i + 1) % n])
            .collect();
        let mesh = TriMesh::from_parts(vertices, triangles).unwrap();
        let out = smooth_boundary(&mesh, &CornerSpec::none(), &MlsConfig::default()).unwrap();
        let rms = |mesh: &TriMesh| {
            let lp = &mesh.boundary_loops()[0];
            (lp.iter()
                .map(|&v| (mesh.vertices()[v].coords.norm() - radius).powi(2))
                .sum::<f64>()
                / lp.len() as f64)
                .sqrt()
        };
        let before = rms(&mesh);
        let after = rms(&out.mesh);
        assert!(
            after <= 0.6 * before,
            "radial RMS before {before:e}, after {after:e}"
        );
    }
}
