//! Advancing-front hole filling.
//!
//! Holes are closed in four repeating steps: (1) clip boundary "ears" where
//! two adjacent edges meet at an angle below `phi`, (2) grow a candidate
//! point from every front edge along the perpendicular bisector in a local
//! MLS plane and lift it onto the MLS surface, (3) attach each candidate to
//! its closest boundary edge unless the new triangle would cross a nearby
//! boundary edge in the local parameterization, (4) repeat until three
//! vertices remain, then close them with a single triangle.
//!
//! The loop with the greatest total edge length is treated as the outer
//! boundary; every other loop is a hole. Holes are filled sequentially in
//! extraction order so results are deterministic.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{SpatialIndex, TriMesh};
use crate::mls::{fit_reference_plane, project_point_with_hint, MlsConfig};
use crate::numeric::orthonormal_tangents;

/// Rule for the front advance distance `d(e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvanceRule {
    /// Isosceles triangle with both new sides equal to the average edge
    /// length `a`: `d(e) = sqrt(4a^2 - e^2) / 2`.
    Isosceles,
    /// Equilateral triangle with side `e`: `d(e) = (sqrt(3)/2) e`.
    Equilateral,
}

/// Parameters of the hole-filling stage.
#[derive(Debug, Clone)]
pub struct FillParams {
    /// Ear-clipping angle threshold, radians.
    pub phi: f64,
    pub advance_rule: AdvanceRule,
    /// Outer-iteration cap per hole; `None` means 50x the initial edge count.
    pub max_front_iterations: Option<usize>,
    /// Crossing tests consider boundary edges within this multiple of the
    /// average edge length.
    pub locality_factor: f64,
}

impl Default for FillParams {
    fn default() -> Self {
        Self {
            phi: 5.0 * std::f64::consts::PI / 9.0,
            advance_rule: AdvanceRule::Isosceles,
            max_front_iterations: None,
            locality_factor: 3.0,
        }
    }
}

impl FillParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi >= 0.0 && self.phi < std::f64::consts::PI) {
            return Err(Error::Config(format!(
                "phi must lie in [0, pi), got {}",
                self.phi
            )));
        }
        if !(self.locality_factor > 0.0) {
            return Err(Error::Config("locality_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Boundary loops split into the outer boundary and holes.
#[derive(Debug, Clone)]
pub struct ClassifiedLoops {
    /// Index of the outer loop in `mesh.boundary_loops()`.
    pub outer: usize,
    /// Indices of the hole loops, in extraction order.
    pub holes: Vec<usize>,
    /// Set when two loops tied for the greatest length.
    pub tie_warning: bool,
}

/// Splits boundary loops into outer boundary (greatest total edge length)
/// and holes. Ties go to the first loop in extraction order, with a warning.
pub fn classify_loops(mesh: &TriMesh) -> Result<ClassifiedLoops> {
    let loops = mesh.boundary_loops();
    if loops.is_empty() {
        return Err(Error::NoBoundary);
    }
    let length = |lp: &[usize]| -> f64 {
        (0..lp.len())
            .map(|i| {
                (mesh.vertices()[lp[(i + 1) % lp.len()]] - mesh.vertices()[lp[i]]).norm()
            })
            .sum()
    };
    let lengths: Vec<f64> = loops.iter().map(|lp| length(lp)).collect();
    let mut outer = 0;
    for (i, &l) in lengths.iter().enumerate() {
        if l > lengths[outer] {
            outer = i;
        }
    }
    let tie_warning = lengths
        .iter()
        .enumerate()
        .any(|(i, &l)| i != outer && l == lengths[outer]);
    let holes = (0..loops.len()).filter(|&i| i != outer).collect();
    Ok(ClassifiedLoops {
        outer,
        holes,
        tie_warning,
    })
}

/// Front advance distance `d(e)` for the isosceles rule, with the degenerate
/// fallback `d(e) = (sqrt(3)/2) e` when `e >= 2a`.
pub fn front_advance_distance(e: f64, a: f64) -> f64 {
    if e < 2.0 * a {
        (4.0 * a * a - e * e).sqrt() / 2.0
    } else {
        3.0f64.sqrt() / 2.0 * e
    }
}

fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Exact 2D segment intersection. Segments that merely share an endpoint
/// value do not count as crossing.
pub fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    if p1 == q1 || p1 == q2 || p2 == q1 || p2 == q2 {
        return false;
    }
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Outcome of filling all holes.
#[derive(Debug)]
pub struct FillOutcome {
    pub mesh: TriMesh,
    pub holes_filled: usize,
    pub triangles_added: usize,
    pub vertices_added: usize,
    /// Uses of the degenerate-case advance distance (`e >= 2a`).
    pub distance_fallbacks: usize,
    pub warnings: Vec<String>,
}

/// Working state of the advancing front. The public step methods mirror the
/// stages of the procedure so they can be exercised (and tested) one by one.
pub struct HoleFiller {
    params: FillParams,
    cfg: MlsConfig,
    positions: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    incident: Vec<Vec<usize>>,
    outer: Vec<usize>,
    pending: Vec<Vec<usize>>,
    active: Vec<usize>,
    avg_edge: f64,
    index: Option<SpatialIndex>,
    holes_filled: usize,
    triangles_added: usize,
    vertices_added: usize,
    distance_fallbacks: usize,
    warnings: Vec<String>,
}

impl HoleFiller {
    pub fn new(mesh: &TriMesh, params: FillParams, cfg: MlsConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let classified = classify_loops(mesh)?;
        let loops = mesh.boundary_loops();
        let mut warnings = Vec::new();
        if classified.tie_warning {
            warnings.push("two boundary loops tie for outer; keeping extraction order".into());
        }
        let mut incident = vec![Vec::new(); mesh.vertices().len()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                incident[v].push(t);
            }
        }
        Ok(Self {
            params,
            cfg,
            positions: mesh.vertices().to_vec(),
            triangles: mesh.triangles().to_vec(),
            incident,
            outer: loops[classified.outer].clone(),
            pending: classified.holes.iter().map(|&i| loops[i].clone()).collect(),
            active: Vec::new(),
            avg_edge: 0.0,
            index: None,
            holes_filled: 0,
            triangles_added: 0,
            vertices_added: 0,
            distance_fallbacks: 0,
            warnings,
        })
    }

    /// Number of holes still to fill.
    pub fn remaining_holes(&self) -> usize {
        self.pending.len()
    }

    /// Makes the next pending hole the active front.
    pub fn start_next_hole(&mut self) -> bool {
        if self.pending.is_empty() {
            return false;
        }
        self.active = self.pending.remove(0);
        self.avg_edge = self.loop_mean_edge(&self.active);
        self.rebuild_index();
        true
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    fn loop_mean_edge(&self, lp: &[usize]) -> f64 {
        (0..lp.len())
            .map(|i| (self.positions[lp[(i + 1) % lp.len()]] - self.positions[lp[i]]).norm())
            .sum::<f64>()
            / lp.len() as f64
    }

    fn rebuild_index(&mut self) {
        self.index = SpatialIndex::build(self.positions.clone()).ok();
    }

    fn vertex_normal(&self, v: usize) -> Vector3<f64> {
        let mut n = Vector3::zeros();
        for &t in &self.incident[v] {
            let [a, b, c] = self.triangles[t];
            n += (self.positions[b] - self.positions[a])
                .cross(&(self.positions[c] - self.positions[a]));
        }
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::z()
        }
    }

    fn add_triangle(&mut self, tri: [usize; 3]) {
        let t = self.triangles.len();
        self.triangles.push(tri);
        for &v in &tri {
            self.incident[v].push(t);
        }
        self.triangles_added += 1;
    }

    /// All current boundary edges (outer loop, pending holes, active front).
    fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        let mut push_loop = |lp: &[usize]| {
            for i in 0..lp.len() {
                edges.push((lp[i], lp[(i + 1) % lp.len()]));
            }
        };
        push_loop(&self.outer);
        for lp in &self.pending {
            push_loop(lp);
        }
        push_loop(&self.active);
        edges
    }

    /// Tests whether the segment `(p, q)` (given as positions, with the
    /// indices of its endpoints when they are existing vertices) crosses any
    /// nearby boundary edge after projection into the plane `(origin, t1, t2)`.
    #[allow(clippy::too_many_arguments)]
    fn segment_hits_boundary(
        &self,
        p: Point3<f64>,
        q: Point3<f64>,
        p_idx: Option<usize>,
        q_idx: Option<usize>,
        origin: Point3<f64>,
        t1: Vector3<f64>,
        t2: Vector3<f64>,
    ) -> bool {
        let reach = self.params.locality_factor * self.avg_edge + (q - p).norm();
        let mid = nalgebra::center(&p, &q);
        let project = |x: Point3<f64>| -> [f64; 2] {
            let d = x - origin;
            [d.dot(&t1), d.dot(&t2)]
        };
        let p2 = project(p);
        let q2 = project(q);
        for (a, b) in self.boundary_edges() {
            if Some(a) == p_idx || Some(a) == q_idx || Some(b) == p_idx || Some(b) == q_idx {
                continue;
            }
            let pa = self.positions[a];
            let pb = self.positions[b];
            if (pa - mid).norm() > reach && (pb - mid).norm() > reach {
                continue;
            }
            if segments_cross(p2, q2, project(pa), project(pb)) {
                return true;
            }
        }
        false
    }

    /// Interior angle of the hole at `active[i]`, measured on the hole side.
    fn hole_angle(&self, i: usize) -> f64 {
        let len = self.active.len();
        let v_prev = self.active[(i + len - 1) % len];
        let v = self.active[i];
        let v_next = self.active[(i + 1) % len];
        let a = self.positions[v_prev] - self.positions[v];
        let b = self.positions[v_next] - self.positions[v];
        let n = self.vertex_normal(v);
        let cross = a.cross(&b);
        let theta = cross.norm().atan2(a.dot(&b));
        if n.dot(&cross) >= 0.0 {
            theta
        } else {
            2.0 * std::f64::consts::PI - theta
        }
    }

    /// Step 1: repeatedly insert a triangle across every adjacent edge pair
    /// meeting at less than `phi`, provided the chord stays clear of nearby
    /// boundary edges. Returns the number of ears clipped.
    pub fn clip_ears(&mut self) -> usize {
        let mut clipped = 0;
        let mut progress = true;
        while progress && self.active.len() > 3 {
            progress = false;
            let mut i = 0;
            while i < self.active.len() && self.active.len() > 3 {
                let angle = self.hole_angle(i);
                if angle < self.params.phi {
                    let len = self.active.len();
                    let v_prev = self.active[(i + len - 1) % len];
                    let v = self.active[i];
                    let v_next = self.active[(i + 1) % len];
                    let p_prev = self.positions[v_prev];
                    let p = self.positions[v];
                    let p_next = self.positions[v_next];
                    let area2 = (p - p_prev).cross(&(p_next - p_prev)).norm();
                    let scale = (p - p_prev).norm().max((p_next - p_prev).norm());
                    let n = self.vertex_normal(v);
                    let (t1, t2) = orthonormal_tangents(&nalgebra::Unit::new_normalize(n));
                    let degenerate = area2 <= f64::EPSILON * 100.0 * scale * scale;
                    if !degenerate
                        && !self.segment_hits_boundary(
                            p_prev,
                            p_next,
                            Some(v_prev),
                            Some(v_next),
                            p,
                            t1,
                            t2,
                        )
                    {
                        self.add_triangle([v_prev, v_next, v]);
                        self.active.remove(i);
                        clipped += 1;
                        progress = true;
                        continue;
                    }
                }
                i += 1;
            }
        }
        clipped
    }

    /// Step 2: one candidate per front edge. The candidate sits at distance
    /// `d(e)` along the in-hole perpendicular bisector in the local MLS plane
    /// and is then lifted onto the MLS surface. Edges whose MLS fit fails are
    /// skipped this round.
    pub fn grow_candidates(&mut self) -> Vec<Point3<f64>> {
        self.rebuild_index();
        let Some(index) = &self.index else {
            return Vec::new();
        };
        let mut candidates = Vec::new();
        let len = self.active.len();
        for i in 0..len {
            let e1 = self.active[i];
            let e2 = self.active[(i + 1) % len];
            let p1 = self.positions[e1];
            let p2 = self.positions[e2];
            let mid = nalgebra::center(&p1, &p2);
            let hint = (self.vertex_normal(e1) + self.vertex_normal(e2)).normalize();
            let nbrs = match index.query(&mid, &self.cfg.neighborhood) {
                Ok(n) if !n.is_empty() => n,
                _ => continue,
            };
            let plane = match fit_reference_plane(&mid, &nbrs, index.points(), &self.cfg, Some(&hint)) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let (t1, t2) = orthonormal_tangents(&plane.normal);
            let q = plane.foot();
            let a2 = {
                let d = p1 - q;
                [d.dot(&t1), d.dot(&t2)]
            };
            let b2 = {
                let d = p2 - q;
                [d.dot(&t1), d.dot(&t2)]
            };
            let ex = b2[0] - a2[0];
            let ey = b2[1] - a2[1];
            let e_len = (ex * ex + ey * ey).sqrt();
            if e_len <= 0.0 {
                continue;
            }
            let d = match self.params.advance_rule {
                AdvanceRule::Isosceles => {
                    if e_len >= 2.0 * self.avg_edge {
                        self.distance_fallbacks += 1;
                    }
                    front_advance_distance(e_len, self.avg_edge)
                }
                AdvanceRule::Equilateral => 3.0f64.sqrt() / 2.0 * e_len,
            };
            // In-hole side of the directed edge: edge x normal.
            let in_hole3 = (p2 - p1).normalize().cross(&plane.normal);
            let in_hole2 = [in_hole3.dot(&t1), in_hole3.dot(&t2)];
            let mut perp = [-ey / e_len, ex / e_len];
            if perp[0] * in_hole2[0] + perp[1] * in_hole2[1] < 0.0 {
                perp = [-perp[0], -perp[1]];
            }
            let cand2 = [
                (a2[0] + b2[0]) / 2.0 + d * perp[0],
                (a2[1] + b2[1]) / 2.0 + d * perp[1],
            ];
            let cand3 = q + t1 * cand2[0] + t2 * cand2[1];
            match project_point_with_hint(&cand3, index, &self.cfg, Some(&plane.normal)) {
                Ok(lifted) => candidates.push(lifted),
                Err(_) => continue,
            }
        }
        candidates
    }

    /// Step 3: attach a candidate to its closest current boundary edge unless
    /// one of the two new edges crosses a nearby boundary edge in the local
    /// parameterization. Returns whether the candidate was accepted.
    pub fn attach_candidate(&mut self, p: Point3<f64>) -> bool {
        if self.active.len() < 3 {
            return false;
        }
        let len = self.active.len();
        let seg_dist = |a: Point3<f64>, b: Point3<f64>| -> f64 {
            let ab = b - a;
            let t = (p - a).dot(&ab) / ab.norm_squared().max(f64::MIN_POSITIVE);
            let t = t.clamp(0.0, 1.0);
            (p - (a + ab * t)).norm()
        };
        let mut best = (0usize, f64::INFINITY);
        for i in 0..len {
            let d = seg_dist(
                self.positions[self.active[i]],
                self.positions[self.active[(i + 1) % len]],
            );
            if d < best.1 {
                best = (i, d);
            }
        }
        let e1 = self.active[best.0];
        let e2 = self.active[(best.0 + 1) % len];
        let p1 = self.positions[e1];
        let p2 = self.positions[e2];

        let area2 = (p1 - p2).cross(&(p - p2)).norm();
        let scale = (p1 - p2).norm().max((p - p2).norm());
        if area2 <= f64::EPSILON * 100.0 * scale * scale {
            return false;
        }

        // Local plane for the crossing test: MLS plane at the triangle
        // centroid, falling back to the triangle's own plane.
        let centroid = Point3::from((p.coords + p1.coords + p2.coords) / 3.0);
        let hint = (self.vertex_normal(e1) + self.vertex_normal(e2)).normalize();
        let (origin, t1, t2) = match self.index.as_ref().and_then(|index| {
            index
                .query(&centroid, &self.cfg.neighborhood)
                .ok()
                .filter(|n| !n.is_empty())
                .and_then(|nbrs| {
                    fit_reference_plane(&centroid, &nbrs, index.points(), &self.cfg, Some(&hint)).ok()
                })
        }) {
            Some(plane) => {
                let (t1, t2) = orthonormal_tangents(&plane.normal);
                (plane.foot(), t1, t2)
            }
            None => {
                let n = nalgebra::Unit::new_normalize((p1 - p2).cross(&(p - p2)));
                let (t1, t2) = orthonormal_tangents(&n);
                (centroid, t1, t2)
            }
        };

        if self.segment_hits_boundary(p, p1, None, Some(e1), origin, t1, t2)
            || self.segment_hits_boundary(p, p2, None, Some(e2), origin, t1, t2)
        {
            return false;
        }

        let new_idx = self.positions.len();
        self.positions.push(p);
        self.incident.push(Vec::new());
        self.vertices_added += 1;
        self.add_triangle([e2, e1, new_idx]);
        self.active.insert(best.0 + 1, new_idx);
        true
    }

    /// Step 4 terminal case: closes a three-vertex front with one triangle.
    pub fn close_triangle(&mut self) -> Result<()> {
        debug_assert_eq!(self.active.len(), 3);
        let (a, b, c) = (self.active[0], self.active[1], self.active[2]);
        let area2 = (self.positions[b] - self.positions[c])
            .cross(&(self.positions[a] - self.positions[c]))
            .norm();
        let scale = (self.positions[b] - self.positions[c])
            .norm()
            .max((self.positions[a] - self.positions[c]).norm());
        if area2 <= f64::EPSILON * 100.0 * scale * scale {
            return Err(Error::DegenerateFill { a, b, c });
        }
        self.add_triangle([c, b, a]);
        self.active.clear();
        self.holes_filled += 1;
        Ok(())
    }

    /// Runs the full advancing front on the active hole.
    pub fn fill_active(&mut self) -> Result<()> {
        let cap = self
            .params
            .max_front_iterations
            .unwrap_or(50 * self.active.len().max(1));
        let mut iterations = 0usize;
        loop {
            if self.active.len() == 3 {
                return self.close_triangle();
            }
            self.clip_ears();
            if self.active.len() == 3 {
                continue;
            }
            let candidates = self.grow_candidates();
            for p in candidates {
                if self.active.len() == 3 {
                    break;
                }
                self.attach_candidate(p);
            }
            iterations += 1;
            if self.active.len() >= 3 && iterations > cap {
                return Err(Error::HoleFillStalled {
                    iterations,
                    remaining: self.active.len(),
                    loop_vertices: self.active.clone(),
                });
            }
        }
    }

    /// Rebuilds a validated mesh from the accumulated geometry.
    pub fn finish(self) -> Result<FillOutcome> {
        let mesh = TriMesh::from_parts(self.positions, self.triangles)?;
        if mesh.boundary_loops().len() != 1 {
            return Err(Error::MultipleBoundaryLoops {
                count: mesh.boundary_loops().len(),
            });
        }
        Ok(FillOutcome {
            mesh,
            holes_filled: self.holes_filled,
            triangles_added: self.triangles_added,
            vertices_added: self.vertices_added,
            distance_fallbacks: self.distance_fallbacks,
            warnings: self.warnings,
        })
    }
}

/// Fills every hole of the mesh. Pre-existing vertices and triangles are
/// never moved or deleted; the result has exactly one boundary loop.
pub fn fill_holes(mesh: &TriMesh, params: &FillParams, cfg: &MlsConfig) -> Result<FillOutcome> {
    let classified = classify_loops(mesh)?;
    if classified.holes.is_empty() {
        return Ok(FillOutcome {
            mesh: mesh.clone(),
            holes_filled: 0,
            triangles_added: 0,
            vertices_added: 0,
            distance_fallbacks: 0,
            warnings: if classified.tie_warning {
                vec!["two boundary loops tie for outer; keeping extraction order".into()]
            } else {
                Vec::new()
            },
        });
    }
    let mut filler = HoleFiller::new(mesh, params.clone(), cfg.clone())?;
    while filler.start_next_hole() {
        filler.fill_active()?;
    }
    filler.finish()
}
