//! Indexed triangle mesh: validation, adjacency and boundary-loop extraction.
//!
//! A [`TriMesh`] is manifold-with-boundary by construction: every edge is
//! shared by at most two triangles, degenerate triangles are rejected and
//! vertices not referenced by any triangle are dropped. Boundary loops are
//! extracted once at construction. Each loop is traversed so that the mesh
//! interior lies to the left of every directed edge, which fixes a
//! consistent orientation for the hole-filling stage.

pub mod io;
pub mod spatial;

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub use spatial::{Neighborhood, NeighborhoodPolicy, SpatialIndex};

/// Indexed triangle mesh with derived boundary loops.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
    boundary_flags: Vec<bool>,
    dropped_unreferenced: usize,
}

impl TriMesh {
    /// Builds a mesh from raw vertices and triangles, validating all
    /// structural invariants.
    ///
    /// Unreferenced vertices are dropped (their count is reported through
    /// [`TriMesh::dropped_unreferenced`]); indices are remapped accordingly.
    pub fn from_parts(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        // Index validity.
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(Error::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::RepeatedIndex { triangle: t });
            }
        }

        // Drop unreferenced vertices.
        let mut referenced = vec![false; vertices.len()];
        for tri in &triangles {
            for &i in tri {
                referenced[i] = true;
            }
        }
        let dropped = referenced.iter().filter(|&&r| !r).count();
        let (vertices, triangles) = if dropped > 0 {
            let mut remap = vec![usize::MAX; vertices.len()];
            let mut kept = Vec::with_capacity(vertices.len() - dropped);
            for (i, v) in vertices.iter().enumerate() {
                if referenced[i] {
                    remap[i] = kept.len();
                    kept.push(*v);
                }
            }
            let tris = triangles
                .iter()
                .map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]])
                .collect();
            (kept, tris)
        } else {
            (vertices, triangles)
        };

        // Degenerate-area check.
        let mut degenerate = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            let a = vertices[tri[0]];
            let b = vertices[tri[1]];
            let c = vertices[tri[2]];
            let cross = (b - a).cross(&(c - a)).norm();
            let scale = (b - a).norm().max((c - a).norm()).max((c - b).norm());
            if cross <= f64::EPSILON * 100.0 * scale * scale {
                degenerate.push(t);
            }
        }
        if !degenerate.is_empty() {
            return Err(Error::DegenerateTriangles { faces: degenerate });
        }

        // Edge incidence: at most two triangles per undirected edge.
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edge_count {
            if count > 2 {
                return Err(Error::NonManifoldEdge { a, b, count });
            }
        }

        let boundary_loops = extract_boundary_loops_impl(&triangles, &edge_count)?;

        let mut vertex_triangles = vec![Vec::new(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                vertex_triangles[i].push(t);
            }
        }
        let mut boundary_flags = vec![false; vertices.len()];
        for lp in &boundary_loops {
            for &v in lp {
                boundary_flags[v] = true;
            }
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_loops,
            vertex_triangles,
            boundary_flags,
            dropped_unreferenced: dropped,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary loops, each an ordered closed cycle of vertex indices with the
    /// mesh interior to the left of every directed edge.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    /// Number of unreferenced vertices dropped at construction.
    pub fn dropped_unreferenced(&self) -> usize {
        self.dropped_unreferenced
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_flags[v]
    }

    /// Triangles incident to a vertex.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    /// Unit normal of a triangle (right-hand rule over the stored winding).
    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangles[t];
        let n = (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
        n.normalize()
    }

    /// Area-weighted average normal of the triangles incident to a vertex.
    pub fn vertex_normal(&self, v: usize) -> Vector3<f64> {
        let mut n = Vector3::zeros();
        for &t in &self.vertex_triangles[v] {
            let [a, b, c] = self.triangles[t];
            n += (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
        }
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::z()
        }
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (hi - lo).norm()
    }

    /// Returns a mesh with identical connectivity and replaced vertex
    /// positions. Used by the smoothing passes, which move vertices but never
    /// touch the triangulation.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "vertex count mismatch: {} != {}",
                vertices.len(),
                self.vertices.len()
            )));
        }
        Ok(Self {
            vertices,
            triangles: self.triangles.clone(),
            boundary_loops: self.boundary_loops.clone(),
            vertex_triangles: self.vertex_triangles.clone(),
            boundary_flags: self.boundary_flags.clone(),
            dropped_unreferenced: self.dropped_unreferenced,
        })
    }

    /// True when every triangle is reachable from the first one across shared
    /// edges.
    pub fn is_connected(&self) -> bool {
        if self.triangles.is_empty() {
            return true;
        }
        let mut seen_vertex = vec![false; self.vertices.len()];
        let mut seen_tri = vec![false; self.triangles.len()];
        let mut stack = vec![0usize];
        seen_tri[0] = true;
        while let Some(t) = stack.pop() {
            for &v in &self.triangles[t] {
                if !seen_vertex[v] {
                    seen_vertex[v] = true;
                    for &t2 in &self.vertex_triangles[v] {
                        if !seen_tri[t2] {
                            seen_tri[t2] = true;
                            stack.push(t2);
                        }
                    }
                }
            }
        }
        seen_tri.iter().all(|&s| s)
    }
}

/// Extracts boundary loops of a mesh.
///
/// Boundary edges are directed as they appear in their unique incident
/// triangle, which places the mesh interior on the left. Chains start at the
/// smallest unused directed edge and follow the smallest available successor,
/// so extraction order is deterministic.
pub fn extract_boundary_loops(mesh: &TriMesh) -> Result<Vec<Vec<usize>>> {
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }
    extract_boundary_loops_impl(&mesh.triangles, &edge_count)
}

fn extract_boundary_loops_impl(
    triangles: &[[usize; 3]],
    edge_count: &BTreeMap<(usize, usize), usize>,
) -> Result<Vec<Vec<usize>>> {
    // Directed boundary edges, in the direction they appear in their triangle.
    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut n_edges = 0usize;
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if edge_count[&(a.min(b), a.max(b))] == 1 {
                outgoing.entry(a).or_default().push(b);
                n_edges += 1;
            }
        }
    }
    for targets in outgoing.values_mut() {
        targets.sort_unstable();
    }

    let mut loops = Vec::new();
    let mut consumed = 0usize;
    let starts: Vec<usize> = outgoing.keys().copied().collect();
    for start in starts {
        while outgoing.get(&start).is_some_and(|v| !v.is_empty()) {
            let mut cycle = vec![start];
            let mut current = outgoing.get_mut(&start).unwrap().remove(0);
            consumed += 1;
            while current != start {
                cycle.push(current);
                let next = match outgoing.get_mut(&current) {
                    Some(targets) if !targets.is_empty() => targets.remove(0),
                    _ => return Err(Error::OpenBoundaryChain { start: current }),
                };
                consumed += 1;
                current = next;
            }
            loops.push(cycle);
        }
    }
    debug_assert_eq!(consumed, n_edges);
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    /// Regular grid over [0,1]^2 at z = 0 with m x m vertices.
    pub(crate) fn grid_mesh(m: usize) -> TriMesh {
        let mut vertices = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let x = i as f64 / (m - 1) as f64;
                let y = j as f64 / (m - 1) as f64;
                vertices.push(p(x, y, 0.0));
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
    fn single_triangle_has_one_loop() {
        let mesh = TriMesh::from_parts(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(mesh.triangles().len(), 1);
        assert_eq!(mesh.boundary_loops().len(), 1);
        assert_eq!(mesh.boundary_loops()[0].len(), 3);
    }

    #[test]
    fn closed_tetrahedron_has_no_loops() {
        let mesh = TriMesh::from_parts(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
                p(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap();
        assert!(mesh.boundary_loops().is_empty());
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let result = TriMesh::from_parts(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
                p(0.0, 0.0, 1.0),
                p(1.0, 1.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]],
        );
        assert!(matches!(result, Err(Error::NonManifoldEdge { count: 3, .. })));
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let result = TriMesh::from_parts(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        );
        assert!(matches!(
            result,
            Err(Error::DegenerateTriangles { faces }) if faces == vec![0]
        ));
    }

    #[test]
    fn unreferenced_vertices_dropped() {
        let mesh = TriMesh::from_parts(
            vec![
                p(0.0, 0.0, 0.0),
                p(9.0, 9.0, 9.0),
                p(1.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
            ],
            vec![[0, 2, 3]],
        )
        .unwrap();
        assert_eq!(mesh.vertices().len(), 3);
        assert_eq!(mesh.dropped_unreferenced(), 1);
    }

    #[test]
    fn unit_square_has_one_loop_of_four() {
        let mesh = grid_mesh(2);
        assert_eq!(mesh.boundary_loops().len(), 1);
        assert_eq!(mesh.boundary_loops()[0].len(), 4);
    }

    #[test]
    fn grid_with_removed_quad_has_two_loops() {
        let full = grid_mesh(5);
        // Remove the two triangles of the central quad (i=2, j=2).
        let removed: Vec<[usize; 3]> = full
            .triangles()
            .iter()
            .copied()
            .filter(|t| {
                let quad = [2 * 5 + 2, 3 * 5 + 2, 3 * 5 + 3, 2 * 5 + 3];
                !t.iter().all(|v| quad.contains(v))
            })
            .collect();
        let mesh = TriMesh::from_parts(full.vertices().to_vec(), removed).unwrap();
        assert_eq!(mesh.boundary_loops().len(), 2);
    }

    #[test]
    fn boundary_edge_count_equals_loop_length_sum() {
        for m in [2usize, 3, 5, 8] {
            let mesh = grid_mesh(m);
            let boundary_edges = 4 * (m - 1);
            let total: usize = mesh.boundary_loops().iter().map(|l| l.len()).sum();
            assert_eq!(total, boundary_edges);
        }
    }

    #[test]
    fn loops_keep_interior_on_left() {
        // Upward-facing grid: the outer loop must run counterclockwise when
        // viewed from +z.
        let mesh = grid_mesh(3);
        let lp = &mesh.boundary_loops()[0];
        let mut area2 = 0.0;
        for k in 0..lp.len() {
            let a = mesh.vertices()[lp[k]];
            let b = mesh.vertices()[lp[(k + 1) % lp.len()]];
            area2 += a.x * b.y - b.x * a.y;
        }
        assert!(area2 > 0.0);
    }
}
