//! Spatial acceleration for nearest-neighbor and radius queries.
//!
//! A balanced kd-tree over vertex positions. Query results are sorted by
//! `(distance, index)` so ties break deterministically and always match a
//! brute-force scan.

use nalgebra::Point3;

use crate::error::{Error, Result};

/// How a neighborhood is gathered around a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborhoodPolicy {
    /// The `k` nearest points (clamped to the number of available points).
    KNearest(usize),
    /// All points within Euclidean distance `r`.
    Radius(f64),
}

/// A set of points near a query center, sorted by ascending distance.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub center: Point3<f64>,
    /// `(vertex index, distance to center)` pairs.
    pub members: Vec<(usize, f64)>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Mean distance from the center to the members.
    pub fn mean_distance(&self) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        self.members.iter().map(|&(_, d)| d).sum::<f64>() / self.members.len() as f64
    }
}

struct Node {
    axis: usize,
    /// Index into `order` of the median point stored at this node.
    point: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// kd-tree over a fixed set of points. Immutable after construction.
pub struct SpatialIndex {
    points: Vec<Point3<f64>>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl SpatialIndex {
    /// Builds the index. Requires at least one point.
    pub fn build(points: Vec<Point3<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidQuery("index built over zero points".into()));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_node(&points, &mut order, 0, points.len(), &mut nodes);
        Ok(Self {
            points,
            nodes,
            root,
        })
    }

    fn build_node(
        points: &[Point3<f64>],
        order: &mut [usize],
        lo: usize,
        hi: usize,
        nodes: &mut Vec<Node>,
    ) -> Option<usize> {
        if lo >= hi {
            return None;
        }
        let slice = &mut order[lo..hi];
        // Split on the axis with the widest extent.
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in slice.iter() {
            for a in 0..3 {
                min[a] = min[a].min(points[i][a]);
                max[a] = max[a].max(points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (max[a] - min[a]).total_cmp(&(max[b] - min[b])))
            .unwrap();
        let mid = slice.len() / 2;
        slice.sort_unstable_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
        let point = slice[mid];
        let idx = nodes.len();
        nodes.push(Node {
            axis,
            point,
            left: None,
            right: None,
        });
        let left = Self::build_node(points, order, lo, lo + mid, nodes);
        let right = Self::build_node(points, order, lo + mid + 1, hi, nodes);
        nodes[idx].left = left;
        nodes[idx].right = right;
        Some(idx)
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Runs a query under the given policy.
    pub fn query(&self, center: &Point3<f64>, policy: &NeighborhoodPolicy) -> Result<Neighborhood> {
        match *policy {
            NeighborhoodPolicy::KNearest(k) => {
                if k == 0 {
                    return Err(Error::InvalidQuery("k-nearest with k = 0".into()));
                }
                Ok(self.k_nearest(center, k))
            }
            NeighborhoodPolicy::Radius(r) => {
                if r <= 0.0 {
                    return Err(Error::InvalidQuery(format!("radius query with r = {r}")));
                }
                Ok(self.within_radius(center, r))
            }
        }
    }

    /// The `k` nearest points to `center`, clamped to the available count.
    pub fn k_nearest(&self, center: &Point3<f64>, k: usize) -> Neighborhood {
        let k = k.min(self.points.len());
        // Bounded worst list: (distance, index), kept sorted descending by
        // (distance, index) so the current worst is at the end.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_visit(self.root, center, k, &mut best);
        let mut members: Vec<(usize, f64)> = best.into_iter().map(|(d, i)| (i, d)).collect();
        members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Neighborhood {
            center: *center,
            members,
        }
    }

    fn knn_visit(
        &self,
        node: Option<usize>,
        center: &Point3<f64>,
        k: usize,
        best: &mut Vec<(f64, usize)>,
    ) {
        let Some(idx) = node else { return };
        let n = &self.nodes[idx];
        let p = self.points[n.point];
        let d = (p - center).norm();
        let entry = (d, n.point);
        if best.len() < k {
            best.push(entry);
            best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        } else if entry < *best.last().unwrap() {
            best.pop();
            best.push(entry);
            best.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        let delta = center[n.axis] - p[n.axis];
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.knn_visit(near, center, k, best);
        let worst = best.last().map(|w| w.0).unwrap_or(f64::INFINITY);
        if best.len() < k || delta.abs() <= worst {
            self.knn_visit(far, center, k, best);
        }
    }

    /// All points within `r` of `center`, sorted by distance. May be empty;
    /// the caller decides the fallback.
    pub fn within_radius(&self, center: &Point3<f64>, r: f64) -> Neighborhood {
        let mut members = Vec::new();
        self.radius_visit(self.root, center, r, &mut members);
        members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Neighborhood {
            center: *center,
            members,
        }
    }

    fn radius_visit(
        &self,
        node: Option<usize>,
        center: &Point3<f64>,
        r: f64,
        out: &mut Vec<(usize, f64)>,
    ) {
        let Some(idx) = node else { return };
        let n = &self.nodes[idx];
        let p = self.points[n.point];
        let d = (p - center).norm();
        if d <= r {
            out.push((n.point, d));
        }
        let delta = center[n.axis] - p[n.axis];
        if delta - r <= 0.0 {
            self.radius_visit(n.left, center, r, out);
        }
        if delta + r >= 0.0 {
            self.radius_visit(n.right, center, r, out);
        }
    }
}

/// Brute-force reference query used by tests and by property checks.
pub fn brute_force_query(
    points: &[Point3<f64>],
    center: &Point3<f64>,
    policy: &NeighborhoodPolicy,
) -> Neighborhood {
    let mut members: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - center).norm()))
        .collect();
    members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    match *policy {
        NeighborhoodPolicy::KNearest(k) => members.truncate(k.min(points.len())),
        NeighborhoodPolicy::Radius(r) => members.retain(|&(_, d)| d <= r),
    }
    Neighborhood {
        center: *center,
        members,
    }
}
