//! Mesh parameterization over the unit square with mean value coordinates.
//!
//! The boundary loop is pinned to the square by cumulative chord length, with
//! four corner vertices (user-declared or auto-selected) mapped to the square
//! corners. Every interior vertex is then expressed as a convex combination
//! of its one-ring neighbors and the resulting linear system is solved by
//! Gauss-Seidel sweeps in a fixed vertex order, so results are reproducible
//! bit for bit.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::smooth::CornerSpec;

/// Per-interior-vertex convex weights over the one-ring.
#[derive(Debug, Clone)]
pub struct ConvexWeights {
    /// `(interior vertex, row)` pairs; each row holds `(neighbor, weight)`
    /// entries that are positive and sum to one.
    pub rows: Vec<(usize, Vec<(usize, f64)>)>,
}

/// Boundary assignment produced by [`pin_boundary`].
#[derive(Debug, Clone)]
pub struct BoundaryUv {
    /// Boundary vertices as they appear in the loop.
    pub loop_vertices: Vec<usize>,
    /// Unit-square coordinates per loop vertex.
    pub uv: Vec<(f64, f64)>,
    /// The four vertices mapped to the square corners.
    pub corner_indices: [usize; 4],
}

/// Bijection from mesh vertices to the unit square.
#[derive(Debug, Clone)]
pub struct Parameterization {
    /// Per-vertex `(u, v)` in `[0, 1]^2`.
    pub uv: Vec<(f64, f64)>,
    /// The boundary pinning that produced it.
    pub pinned: BoundaryUv,
    /// Gauss-Seidel sweeps used by the solve.
    pub iterations: usize,
}

/// Mean value coordinates of an interior vertex over its one-ring:
/// `w_j ∝ (tan(α/2) + tan(β/2)) / |v - v_j|` with the angles at `v` in the
/// two triangles flanking edge `(v, v_j)`. The returned row is normalized.
pub fn mean_value_weights(mesh: &TriMesh, v: usize) -> Result<Vec<(usize, f64)>> {
    if mesh.is_boundary_vertex(v) {
        return Err(Error::DegenerateFan {
            vertex: v,
            message: "vertex is on the boundary; no full triangle fan".into(),
        });
    }
    let ring = ordered_one_ring(mesh, v)?;
    let center = mesh.vertices()[v];
    let k = ring.len();

    // Angle at `v` in triangle (v, ring[j], ring[j+1]).
    let mut fan_angles = Vec::with_capacity(k);
    for j in 0..k {
        let a = mesh.vertices()[ring[j]] - center;
        let b = mesh.vertices()[ring[(j + 1) % k]] - center;
        let cross = a.cross(&b).norm();
        let angle = cross.atan2(a.dot(&b));
        if !(angle > 0.0 && angle < std::f64::consts::PI) {
            return Err(Error::DegenerateFan {
                vertex: v,
                message: format!("degenerate fan angle {angle}"),
            });
        }
        fan_angles.push(angle);
    }

    let mut row = Vec::with_capacity(k);
    let mut sum = 0.0;
    for j in 0..k {
        let before = fan_angles[(j + k - 1) % k];
        let after = fan_angles[j];
        let dist = (mesh.vertices()[ring[j]] - center).norm();
        if dist <= 0.0 {
            return Err(Error::DegenerateFan {
                vertex: v,
                message: "zero-length edge in fan".into(),
            });
        }
        let w = ((before / 2.0).tan() + (after / 2.0).tan()) / dist;
        sum += w;
        row.push((ring[j], w));
    }
    for entry in &mut row {
        entry.1 /= sum;
    }
    Ok(row)
}

/// One-ring of an interior vertex, ordered by chaining the opposite edges of
/// the incident triangles.
fn ordered_one_ring(mesh: &TriMesh, v: usize) -> Result<Vec<usize>> {
    let tris = mesh.vertex_triangles(v);
    if tris.is_empty() {
        return Err(Error::DegenerateFan {
            vertex: v,
            message: "vertex has no incident triangles".into(),
        });
    }
    // For each incident triangle rotated to (v, a, b), record a -> b.
    let mut next = std::collections::BTreeMap::new();
    for &t in tris {
        let tri = mesh.triangles()[t];
        let pos = tri.iter().position(|&x| x == v).unwrap();
        let a = tri[(pos + 1) % 3];
        let b = tri[(pos + 2) % 3];
        if next.insert(a, b).is_some() {
            return Err(Error::DegenerateFan {
                vertex: v,
                message: "non-manifold fan".into(),
            });
        }
    }
    let start = *next.keys().next().unwrap();
    let mut ring = vec![start];
    let mut current = start;
    loop {
        let Some(&n) = next.get(&current) else {
            return Err(Error::DegenerateFan {
                vertex: v,
                message: "open fan; vertex is not interior".into(),
            });
        };
        if n == start {
            break;
        }
        ring.push(n);
        current = n;
        if ring.len() > next.len() {
            return Err(Error::DegenerateFan {
                vertex: v,
                message: "fan does not close".into(),
            });
        }
    }
    if ring.len() != next.len() {
        return Err(Error::DegenerateFan {
            vertex: v,
            message: "fan has more than one cycle".into(),
        });
    }
    Ok(ring)
}

/// Pins a boundary loop to the unit square by cumulative chord length.
///
/// Corners map to `(0,0), (1,0), (1,1), (0,1)` in loop order. When no corners
/// are given, the four boundary vertices closest to the cumulative
/// chord-length fractions 0, 1/4, 1/2, 3/4 are picked.
pub fn pin_boundary(
    lp: &[usize],
    positions: &[Point3<f64>],
    corners: Option<&[usize]>,
) -> Result<BoundaryUv> {
    let n = lp.len();
    if n < 4 {
        return Err(Error::InvalidCorners(format!(
            "boundary loop has {n} vertices; at least 4 required"
        )));
    }

    // Cumulative chord length around the loop.
    let mut cum = vec![0.0f64; n + 1];
    for i in 0..n {
        let d = (positions[lp[(i + 1) % n]] - positions[lp[i]]).norm();
        cum[i + 1] = cum[i] + d;
    }
    let total = cum[n];

    let corner_positions: [usize; 4] = match corners {
        Some(c) => {
            if c.len() != 4 {
                return Err(Error::InvalidCorners(format!(
                    "exactly 4 corners required, got {}",
                    c.len()
                )));
            }
            let mut pos = [0usize; 4];
            for (k, ci) in c.iter().enumerate() {
                pos[k] = lp.iter().position(|v| v == ci).ok_or_else(|| {
                    Error::InvalidCorners(format!("corner vertex {ci} is not on the boundary loop"))
                })?;
            }
            // Loop order up to rotation.
            let min_at = (0..4).min_by_key(|&i| pos[i]).unwrap();
            let rotated: Vec<usize> = (0..4).map(|k| pos[(min_at + k) % 4]).collect();
            if !rotated.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidCorners(
                    "corner vertices are not in loop order".into(),
                ));
            }
            pos
        }
        None => {
            let mut pos = [0usize; 4];
            let mut used = [usize::MAX; 4];
            for (k, frac) in [0.0, 0.25, 0.5, 0.75].into_iter().enumerate() {
                let target = frac * total;
                let mut best = (usize::MAX, f64::INFINITY);
                for i in 0..n {
                    if used.contains(&i) {
                        continue;
                    }
                    let d = (cum[i] - target).abs();
                    let d = d.min(total - d);
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                pos[k] = best.0;
                used[k] = best.0;
            }
            pos.sort_unstable();
            pos
        }
    };

    // Walk the four sides.
    let side_uv = |side: usize, t: f64| -> (f64, f64) {
        match side {
            0 => (t, 0.0),
            1 => (1.0, t),
            2 => (1.0 - t, 1.0),
            _ => (0.0, 1.0 - t),
        }
    };
    let mut uv = vec![(0.0, 0.0); n];
    for side in 0..4 {
        let from = corner_positions[side];
        let to = corner_positions[(side + 1) % 4];
        let span = if to > from {
            cum[to] - cum[from]
        } else {
            total - cum[from] + cum[to]
        };
        let mut i = from;
        loop {
            let walked = if i >= from {
                cum[i] - cum[from]
            } else {
                total - cum[from] + cum[i]
            };
            let t = if span > 0.0 { walked / span } else { 0.0 };
            uv[i] = side_uv(side, t.clamp(0.0, 1.0));
            if i == to {
                // The destination corner is owned by the next side.
                break;
            }
            i = (i + 1) % n;
        }
    }
    // Corners exactly on the square corners.
    for (k, &p) in corner_positions.iter().enumerate() {
        uv[p] = match k {
            0 => (0.0, 0.0),
            1 => (1.0, 0.0),
            2 => (1.0, 1.0),
            _ => (0.0, 1.0),
        };
    }

    Ok(BoundaryUv {
        loop_vertices: lp.to_vec(),
        uv,
        corner_indices: [
            lp[corner_positions[0]],
            lp[corner_positions[1]],
            lp[corner_positions[2]],
            lp[corner_positions[3]],
        ],
    })
}

const SOLVE_TOL: f64 = 1e-10;
const SOLVE_CAP: usize = 100_000;

/// Solves the convex-combination system: every interior vertex equals the
/// weighted average of its neighbors in the parametric domain.
pub fn solve_parameterization(mesh: &TriMesh, pinned: &BoundaryUv) -> Result<Parameterization> {
    if mesh.boundary_loops().len() != 1 {
        return Err(Error::MultipleBoundaryLoops {
            count: mesh.boundary_loops().len(),
        });
    }
    if !mesh.is_connected() {
        return Err(Error::Disconnected);
    }

    let n = mesh.vertices().len();
    let mut uv = vec![(0.5, 0.5); n];
    for (&v, &coords) in pinned.loop_vertices.iter().zip(pinned.uv.iter()) {
        uv[v] = coords;
    }

    let interior: Vec<usize> = (0..n).filter(|&v| !mesh.is_boundary_vertex(v)).collect();
    let rows: Vec<Vec<(usize, f64)>> = interior
        .iter()
        .map(|&v| mean_value_weights(mesh, v))
        .collect::<Result<_>>()?;

    let mut iterations = 0usize;
    loop {
        // Gauss-Seidel sweep in fixed ascending order.
        for (row, &v) in rows.iter().zip(&interior) {
            let mut acc = (0.0, 0.0);
            for &(j, w) in row {
                acc.0 += w * uv[j].0;
                acc.1 += w * uv[j].1;
            }
            uv[v] = acc;
        }
        iterations += 1;
        // True residual in the max norm.
        let mut residual = 0.0f64;
        for (row, &v) in rows.iter().zip(&interior) {
            let mut acc = (0.0, 0.0);
            for &(j, w) in row {
                acc.0 += w * uv[j].0;
                acc.1 += w * uv[j].1;
            }
            residual = residual
                .max((uv[v].0 - acc.0).abs())
                .max((uv[v].1 - acc.1).abs());
        }
        if residual < SOLVE_TOL {
            break;
        }
        if iterations >= SOLVE_CAP {
            return Err(Error::NonConvergence {
                iterations,
                last_delta: residual,
            });
        }
    }

    // Injectivity proxy: all parametric triangles on one side.
    let signed_area = |t: &[usize; 3]| -> f64 {
        let (a, b, c) = (uv[t[0]], uv[t[1]], uv[t[2]]);
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let mut positive = 0usize;
    let mut negative = 0usize;
    for t in mesh.triangles() {
        let s = signed_area(t);
        if s > 0.0 {
            positive += 1;
        } else if s < 0.0 {
            negative += 1;
        }
    }
    let flipped = positive.min(negative) + (mesh.triangles().len() - positive - negative);
    if flipped > 0 {
        let minority_positive = positive < negative;
        let offenders: Vec<usize> = mesh
            .triangles()
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let s = signed_area(t);
                s == 0.0 || (s > 0.0) == minority_positive
            })
            .map(|(i, _)| i)
            .take(8)
            .collect();
        return Err(Error::FlippedTriangles {
            count: flipped,
            first: offenders,
        });
    }

    Ok(Parameterization {
        uv,
        pinned: pinned.clone(),
        iterations,
    })
}

/// Convenience wrapper: classify the single boundary loop, pin it (using the
/// corner spec when it has exactly four entries) and solve.
pub fn parameterize(mesh: &TriMesh, corners: &CornerSpec) -> Result<Parameterization> {
    if mesh.boundary_loops().len() != 1 {
        return Err(Error::MultipleBoundaryLoops {
            count: mesh.boundary_loops().len(),
        });
    }
    let lp = &mesh.boundary_loops()[0];
    let corner_arg = if corners.indices().len() == 4 {
        Some(corners.indices())
    } else {
        None
    };
    let pinned = pin_boundary(lp, mesh.vertices(), corner_arg)?;
    solve_parameterization(mesh, &pinned)
}

/// Builds all mean-value rows; exposed for validation and reporting.
pub fn convex_weights(mesh: &TriMesh) -> Result<ConvexWeights> {
    let rows = (0..mesh.vertices().len())
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .map(|v| mean_value_weights(mesh, v).map(|row| (v, row)))
        .collect::<Result<_>>()?;
    Ok(ConvexWeights { rows })
}
