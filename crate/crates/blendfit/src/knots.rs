//! Adaptive knot placement by recursive domain subdivision.
//!
//! A region of the parametric domain is split at its center into four
//! children whenever one bicubic polynomial patch per coordinate cannot fit
//! its data within `kappa` (mean per-point residual norm). The tensor-product
//! constraint makes each direction's knot vector the union of all leaf
//! boundaries in that direction; repeating the end knots to multiplicity four
//! yields the open cubic knot vector with `n_p + 7` entries.
//!
//! All breakpoints are dyadic rationals (center splits of `[0, 1]`), so knot
//! vectors are reproducible bit for bit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::numeric::weighted_lsq;
use crate::param::Parameterization;
use crate::sample::{samples_from, UvSample};

/// Axis-aligned parametric rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        u0: 0.0,
        u1: 1.0,
        v0: 0.0,
        v1: 1.0,
    };

    fn center(&self) -> (f64, f64) {
        ((self.u0 + self.u1) / 2.0, (self.v0 + self.v1) / 2.0)
    }
}

/// Node of the region-decomposition tree.
#[derive(Debug, Clone)]
pub struct RegionNode {
    pub rect: Rect,
    /// Four children tiling `rect` (SW, SE, NW, NE), or none for a leaf.
    pub children: Option<Box<[RegionNode; 4]>>,
    /// Mean per-point bicubic residual of the data in `rect`.
    pub local_error: f64,
    pub depth: usize,
    pub point_count: usize,
}

impl RegionNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn leaf_count(&self) -> usize {
        match &self.children {
            None => 1,
            Some(c) => c.iter().map(RegionNode::leaf_count).sum(),
        }
    }

    pub fn max_depth(&self) -> usize {
        match &self.children {
            None => self.depth,
            Some(c) => c.iter().map(RegionNode::max_depth).max().unwrap(),
        }
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&RegionNode)) {
        match &self.children {
            None => f(self),
            Some(c) => {
                for child in c.iter() {
                    child.visit_leaves(f);
                }
            }
        }
    }
}

/// Open-cubic knot vectors for both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotLayout {
    pub u_knots: Vec<f64>,
    pub v_knots: Vec<f64>,
    pub patches_u: usize,
    pub patches_v: usize,
}

impl KnotLayout {
    /// Uniform layout with `n_p` patches per direction over `[0, 1]`.
    pub fn uniform(patches_u: usize, patches_v: usize) -> Result<Self> {
        if patches_u == 0 || patches_v == 0 {
            return Err(Error::InvalidParameter(
                "a layout needs at least one patch per direction".into(),
            ));
        }
        let breaks = |n: usize| -> Vec<f64> { (0..=n).map(|i| i as f64 / n as f64).collect() };
        Ok(Self {
            u_knots: open_cubic(&breaks(patches_u)),
            v_knots: open_cubic(&breaks(patches_v)),
            patches_u,
            patches_v,
        })
    }
}

/// Clamps a breakpoint sequence into an open cubic knot vector
/// (end multiplicity 4).
fn open_cubic(breakpoints: &[f64]) -> Vec<f64> {
    let mut knots = Vec::with_capacity(breakpoints.len() + 6);
    for _ in 0..3 {
        knots.push(breakpoints[0]);
    }
    knots.extend_from_slice(breakpoints);
    for _ in 0..3 {
        knots.push(*breakpoints.last().unwrap());
    }
    knots
}

/// Mean per-point residual norm of one unweighted bicubic least-squares fit
/// per coordinate over the points of a region. Regions with fewer than 16
/// points report zero (treated as converged).
pub fn local_cubic_error(points: &[UvSample], rect: &Rect) -> f64 {
    if points.len() < 16 {
        return 0.0;
    }
    let n = points.len();
    let mut design = DMatrix::zeros(n, 16);
    let mut rhs = DMatrix::zeros(n, 3);
    // Map to [-1, 1]^2 for conditioning.
    let su = |u: f64| 2.0 * (u - rect.u0) / (rect.u1 - rect.u0).max(f64::MIN_POSITIVE) - 1.0;
    let sv = |v: f64| 2.0 * (v - rect.v0) / (rect.v1 - rect.v0).max(f64::MIN_POSITIVE) - 1.0;
    for (row, p) in points.iter().enumerate() {
        let (x, y) = (su(p.u), sv(p.v));
        let xs = [1.0, x, x * x, x * x * x];
        let ys = [1.0, y, y * y, y * y * y];
        for a in 0..4 {
            for b in 0..4 {
                design[(row, a * 4 + b)] = xs[a] * ys[b];
            }
        }
        rhs[(row, 0)] = p.position.x;
        rhs[(row, 1)] = p.position.y;
        rhs[(row, 2)] = p.position.z;
    }
    let sol = weighted_lsq(&design, &rhs, None, 0.0);
    let fit = design * sol.coeffs;
    let mut total = 0.0;
    for row in 0..n {
        let dx = fit[(row, 0)] - rhs[(row, 0)];
        let dy = fit[(row, 1)] - rhs[(row, 1)];
        let dz = fit[(row, 2)] - rhs[(row, 2)];
        total += (dx * dx + dy * dy + dz * dz).sqrt();
    }
    total / n as f64
}

/// Recursively subdivides `[0, 1]^2` at region centers until each region's
/// data fits a bicubic within `kappa` or `max_depth` is reached.
///
/// Points on a split line go to the upper region (half-open rectangles,
/// closed on the domain's upper edges).
pub fn decompose(samples: &[UvSample], kappa: f64, max_depth: usize) -> Result<RegionNode> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    let indices: Vec<usize> = (0..samples.len()).collect();
    Ok(decompose_region(samples, indices, Rect::UNIT, 0, kappa, max_depth))
}

/// [`decompose`] over the vertices of a parameterized mesh.
pub fn decompose_mesh(
    param: &Parameterization,
    mesh: &TriMesh,
    kappa: f64,
    max_depth: usize,
) -> Result<RegionNode> {
    decompose(&samples_from(mesh, param), kappa, max_depth)
}

fn decompose_region(
    samples: &[UvSample],
    indices: Vec<usize>,
    rect: Rect,
    depth: usize,
    kappa: f64,
    max_depth: usize,
) -> RegionNode {
    let points: Vec<UvSample> = indices.iter().map(|&i| samples[i]).collect();
    let local_error = local_cubic_error(&points, &rect);
    if local_error <= kappa || depth == max_depth {
        return RegionNode {
            rect,
            children: None,
            local_error,
            depth,
            point_count: indices.len(),
        };
    }
    let (cu, cv) = rect.center();
    let quads = [
        Rect { u0: rect.u0, u1: cu, v0: rect.v0, v1: cv },
        Rect { u0: cu, u1: rect.u1, v0: rect.v0, v1: cv },
        Rect { u0: rect.u0, u1: cu, v0: cv, v1: rect.v1 },
        Rect { u0: cu, u1: rect.u1, v0: cv, v1: rect.v1 },
    ];
    let mut buckets: [Vec<usize>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for &i in &indices {
        let s = &samples[i];
        let right = s.u >= cu;
        let top = s.v >= cv;
        buckets[(top as usize) * 2 + (right as usize)].push(i);
    }
    let point_count = indices.len();
    let children: Vec<RegionNode> = quads
        .into_iter()
        .zip(buckets)
        .map(|(quad, bucket)| decompose_region(samples, bucket, quad, depth + 1, kappa, max_depth))
        .collect();
    let children: [RegionNode; 4] = children.try_into().unwrap();
    RegionNode {
        rect,
        children: Some(Box::new(children)),
        local_error,
        depth,
        point_count,
    }
}

/// Derives the open cubic knot vectors from a decomposition tree: each
/// direction's breakpoints are the union of all leaf boundaries in that
/// direction, end knots repeated to multiplicity 4.
pub fn layout_knots(tree: &RegionNode) -> KnotLayout {
    let mut us: Vec<f64> = Vec::new();
    let mut vs: Vec<f64> = Vec::new();
    tree.visit_leaves(&mut |leaf| {
        us.push(leaf.rect.u0);
        us.push(leaf.rect.u1);
        vs.push(leaf.rect.v0);
        vs.push(leaf.rect.v1);
    });
    for list in [&mut us, &mut vs] {
        list.sort_by(f64::total_cmp);
        list.dedup();
    }
    KnotLayout {
        patches_u: us.len() - 1,
        patches_v: vs.len() - 1,
        u_knots: open_cubic(&us),
        v_knots: open_cubic(&vs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use rand::{Rng, SeedableRng};

    fn bicubic(u: f64, v: f64) -> f64 {
        0.3 * u.powi(3) - 0.5 * u * u * v + 0.4 * u * v * v + 0.2 * v.powi(3) - 0.6 * u * u
            + 0.5 * u * v
            - 0.4 * v * v
            + 0.1 * u
            - 0.2 * v
            + 0.05
    }

    fn grid_samples(m: usize, f: impl Fn(f64, f64) -> f64) -> Vec<UvSample> {
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let u = i as f64 / (m - 1) as f64;
                let v = j as f64 / (m - 1) as f64;
                out.push(UvSample::new(u, v, Point3::new(u, v, f(u, v))));
            }
        }
        out
    }

    #[test]
    fn exact_bicubic_has_tiny_error() {
        let samples = grid_samples(12, bicubic);
        let err = local_cubic_error(&samples, &Rect::UNIT);
        assert!(err < 1e-9, "error {err:e}");
    }

    #[test]
    fn empty_region_reports_zero() {
        assert_eq!(local_cubic_error(&[], &Rect::UNIT), 0.0);
    }

    #[test]
    fn error_matches_dense_normal_equation_oracle() {
        let samples = grid_samples(10, |u, v| (2.0 * std::f64::consts::PI * u).sin()
            * (2.0 * std::f64::consts::PI * v).sin());
        let got = local_cubic_error(&samples, &Rect::UNIT);

        // Dense normal-equations solve per coordinate over the same basis.
        let n = samples.len();
        let mut design = DMatrix::<f64>::zeros(n, 16);
        let mut rhs = DMatrix::<f64>::zeros(n, 3);
        for (row, p) in samples.iter().enumerate() {
            let x = 2.0 * p.u - 1.0;
            let y = 2.0 * p.v - 1.0;
            let xs = [1.0, x, x * x, x * x * x];
            let ys = [1.0, y, y * y, y * y * y];
            for a in 0..4 {
                for b in 0..4 {
                    design[(row, a * 4 + b)] = xs[a] * ys[b];
                }
            }
            rhs[(row, 0)] = p.position.x;
            rhs[(row, 1)] = p.position.y;
            rhs[(row, 2)] = p.position.z;
        }
        let ata = design.transpose() * &design;
        let atb = design.transpose() * &rhs;
        let sol = ata.lu().solve(&atb).unwrap();
        let fit = &design * sol;
        let mut want = 0.0;
        for row in 0..n {
            let mut sq = 0.0;
            for c in 0..3 {
                sq += (fit[(row, c)] - rhs[(row, c)]).powi(2);
            }
            want += sq.sqrt();
        }
        want /= n as f64;
        approx::assert_relative_eq!(got, want, epsilon = 1e-10);
    }

    #[test]
    fn bicubic_data_keeps_root_as_leaf() {
        let samples = grid_samples(20, bicubic);
        let tree = decompose(&samples, 1e-6, 5).unwrap();
        assert!(tree.is_leaf());
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn kappa_zero_forces_full_depth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<UvSample> = grid_samples(40, |u, v| {
            (7.3 * u).sin() * (9.1 * v).cos()
        })
        .into_iter()
        .map(|mut s| {
            s.position.z += 0.05 * (rng.gen::<f64>() - 0.5);
            s
        })
        .collect();
        let tree = decompose(&samples, 0.0, 2).unwrap();
        assert_eq!(tree.leaf_count(), 16);
        assert_eq!(tree.max_depth(), 2);
    }

    #[test]
    fn kappa_between_root_and_child_errors_gives_four_leaves() {
        let samples = grid_samples(50, |u, v| {
            (2.0 * std::f64::consts::PI * u).sin() * (2.0 * std::f64::consts::PI * v).sin()
        });
        let root_error = local_cubic_error(&samples, &Rect::UNIT);
        // Largest child error.
        let mut child_error = 0.0f64;
        for (u0, v0) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)] {
            let rect = Rect { u0, u1: u0 + 0.5, v0, v1: v0 + 0.5 };
            let pts: Vec<UvSample> = samples
                .iter()
                .copied()
                .filter(|s| {
                    let right = s.u >= 0.5;
                    let top = s.v >= 0.5;
                    (right == (u0 > 0.0)) && (top == (v0 > 0.0))
                })
                .collect();
            child_error = child_error.max(local_cubic_error(&pts, &rect));
        }
        assert!(child_error < root_error, "{child_error} vs {root_error}");
        let kappa = (child_error + root_error) / 2.0;
        let tree = decompose(&samples, kappa, 5).unwrap();
        assert_eq!(tree.leaf_count(), 4);
    }

    #[test]
    fn single_leaf_layout_has_eight_knots() {
        let samples = grid_samples(10, bicubic);
        let tree = decompose(&samples, 1.0, 5).unwrap();
        let layout = layout_knots(&tree);
        assert_eq!(layout.patches_u, 1);
        assert_eq!(layout.u_knots, vec![0.0; 4].iter().chain([1.0; 4].iter()).copied().collect::<Vec<_>>());
        assert_eq!(layout.u_knots.len(), layout.patches_u + 7);
    }

    #[test]
    fn depth_one_layout_has_nine_knots() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let samples: Vec<UvSample> = grid_samples(30, |u, v| (8.0 * u * v).sin())
            .into_iter()
            .map(|mut s| {
                s.position.z += 0.05 * (rng.gen::<f64>() - 0.5);
                s
            })
            .collect();
        let tree = decompose(&samples, 0.0, 1).unwrap();
        let layout = layout_knots(&tree);
        assert_eq!(layout.patches_u, 2);
        assert_eq!(layout.u_knots, vec![0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn quadrant_refinement_unions_breakpoints() {
        // Hand-built tree: split the root, then split only the SW quadrant.
        let leaf = |rect: Rect, depth: usize| RegionNode {
            rect,
            children: None,
            local_error: 0.0,
            depth,
            point_count: 0,
        };
        let sw_children = [
            leaf(Rect { u0: 0.0, u1: 0.25, v0: 0.0, v1: 0.25 }, 2),
            leaf(Rect { u0: 0.25, u1: 0.5, v0: 0.0, v1: 0.25 }, 2),
            leaf(Rect { u0: 0.0, u1: 0.25, v0: 0.25, v1: 0.5 }, 2),
            leaf(Rect { u0: 0.25, u1: 0.5, v0: 0.25, v1: 0.5 }, 2),
        ];
        let sw = RegionNode {
            rect: Rect { u0: 0.0, u1: 0.5, v0: 0.0, v1: 0.5 },
            children: Some(Box::new(sw_children)),
            local_error: 1.0,
            depth: 1,
            point_count: 0,
        };
        let root_children = [
            sw,
            leaf(Rect { u0: 0.5, u1: 1.0, v0: 0.0, v1: 0.5 }, 1),
            leaf(Rect { u0: 0.0, u1: 0.5, v0: 0.5, v1: 1.0 }, 1),
            leaf(Rect { u0: 0.5, u1: 1.0, v0: 0.5, v1: 1.0 }, 1),
        ];
        let tree = RegionNode {
            rect: Rect::UNIT,
            children: Some(Box::new(root_children)),
            local_error: 1.0,
            depth: 0,
            point_count: 0,
        };
        let layout = layout_knots(&tree);
        assert_eq!(layout.patches_u, 3);
        assert_eq!(
            layout.u_knots,
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 1.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn knot_count_identity_over_random_trees() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let m = 20 + (rng.gen::<u32>() % 20) as usize;
            let fx = 2.0 + 8.0 * rng.gen::<f64>();
            let fy = 2.0 + 8.0 * rng.gen::<f64>();
            let noise = 0.02 * rng.gen::<f64>();
            let samples: Vec<UvSample> = grid_samples(m, |u, v| (fx * u).sin() * (fy * v).cos())
                .into_iter()
                .map(|mut s| {
                    s.position.z += noise * (rng.gen::<f64>() - 0.5);
                    s
                })
                .collect();
            let kappa = 10.0f64.powf(-1.0 - 3.0 * rng.gen::<f64>());
            let depth = 1 + (rng.gen::<u32>() % 4) as usize;
            let tree = decompose(&samples, kappa, depth).unwrap();
            let layout = layout_knots(&tree);
            assert_eq!(layout.u_knots.len(), layout.patches_u + 7);
            assert_eq!(layout.v_knots.len(), layout.patches_v + 7);
            // End multiplicity 4.
            assert!(layout.u_knots[..4].iter().all(|&k| k == 0.0));
            assert!(layout.u_knots[layout.u_knots.len() - 4..].iter().all(|&k| k == 1.0));
        }
    }

    #[test]
    fn decreasing_kappa_never_decreases_leaves() {
        let samples = grid_samples(40, |u, v| {
            (2.0 * std::f64::consts::PI * u).sin() * (2.0 * std::f64::consts::PI * v).cos()
        });
        let kappas = [0.5, 0.1, 0.02, 0.004, 0.0008, 0.0];
        let mut last = 0usize;
        for k in kappas {
            let tree = decompose(&samples, k, 4).unwrap();
            let leaves = tree.leaf_count();
            assert!(leaves >= last, "kappa {k}: {leaves} < {last}");
            last = leaves;
        }
    }

    #[test]
    fn every_point_lies_in_exactly_one_leaf() {
        let samples = grid_samples(25, |u, v| (9.0 * u).sin() * (7.0 * v).sin());
        let tree = decompose(&samples, 1e-3, 3).unwrap();
        let mut total = 0usize;
        tree.visit_leaves(&mut |leaf| total += leaf.point_count);
        assert_eq!(total, samples.len());
    }
}
