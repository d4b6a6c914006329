//! Cubic B-spline machinery: basis evaluation over open knot vectors, the
//! windowing function for local fits, and the tensor-product control mesh
//! with evaluation, error metrics and serialization.

pub mod fit;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::UvSample;

pub use fit::{
    blend_curve, blend_surface, fit_blended_surface, fit_global_surface, fit_local_patch_curve,
    fit_local_patch_surface, BlendedFit, CurvePatchFit, GlobalFit, SurfacePatchFit,
};

/// Fixed spline degree.
pub const DEGREE: usize = 3;

/// Weighting mode for the local fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Weight 1 on the patch interval, exponential falloff beyond it.
    Gaussian,
    /// Indicator of the (closed) patch interval. Test mode: makes cubic
    /// reproduction by the blended fit exact.
    Truncated,
}

/// An open cubic knot vector for one parameter direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisContext {
    knots: Vec<f64>,
}

impl BasisContext {
    /// Validates an open cubic knot vector: end multiplicity 4, nondecreasing,
    /// strictly increasing interior knots.
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 8 {
            return Err(Error::InvalidKnots(format!(
                "need at least 8 knots, got {}",
                knots.len()
            )));
        }
        let n = knots.len();
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        if knots[..4].iter().any(|&k| k != knots[0]) {
            return Err(Error::InvalidKnots("first knot must have multiplicity 4".into()));
        }
        if knots[n - 4..].iter().any(|&k| k != knots[n - 1]) {
            return Err(Error::InvalidKnots("last knot must have multiplicity 4".into()));
        }
        if knots[3..n - 3].windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidKnots(
                "interior knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots })
    }

    /// Builds the context from distinct breakpoints by repeating the end
    /// knots to multiplicity 4.
    pub fn from_breakpoints(breakpoints: &[f64]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidKnots("need at least 2 breakpoints".into()));
        }
        let mut knots = Vec::with_capacity(breakpoints.len() + 6);
        for _ in 0..3 {
            knots.push(breakpoints[0]);
        }
        knots.extend_from_slice(breakpoints);
        for _ in 0..3 {
            knots.push(*breakpoints.last().unwrap());
        }
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions (= control points per direction).
    pub fn num_basis(&self) -> usize {
        self.knots.len() - 4
    }

    /// Number of knot spans with nonzero length.
    pub fn num_patches(&self) -> usize {
        self.knots.len() - 7
    }

    /// Valid parameter range `[t_3, t_{n-4}]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[3], self.knots[self.knots.len() - 4])
    }

    /// Patch interval `[t_{3+p}, t_{4+p}]`.
    pub fn patch_interval(&self, p: usize) -> (f64, f64) {
        (self.knots[3 + p], self.knots[4 + p])
    }

    /// Knot-span index `s` with `t` in `[t_s, t_{s+1})` (the last span is
    /// closed at the domain end).
    pub fn span_of(&self, t: f64) -> Result<usize> {
        let n = self.knots.len();
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain { value: t, lo, hi });
        }
        let count = self.knots[3..n - 3].partition_point(|&k| k <= t);
        Ok((3 + count - 1).min(n - 5))
    }

    /// Knot span containing `t` and the values of the four cubic basis
    /// functions (indices `span-3 ..= span`) that are nonzero there. The
    /// values are nonnegative and sum to one.
    pub fn eval_basis(&self, t: f64) -> Result<(usize, [f64; 4])> {
        let s = self.span_of(t)?;
        let k = &self.knots;
        let mut values = [0.0f64; 4];
        values[0] = 1.0;
        let mut left = [0.0f64; 4];
        let mut right = [0.0f64; 4];
        for j in 1..=DEGREE {
            left[j] = t - k[s + 1 - j];
            right[j] = k[s + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            values[j] = saved;
        }
        Ok((s, values))
    }

    /// Value of the single basis function `j` at `t` (zero outside its
    /// support).
    pub fn basis_value(&self, j: usize, t: f64) -> Result<f64> {
        let (s, values) = self.eval_basis(t)?;
        if j + 3 < s || j > s {
            return Ok(0.0);
        }
        Ok(values[j + 3 - s])
    }

    /// Patch index (span minus 3) of `t`.
    pub fn patch_of(&self, t: f64) -> Result<usize> {
        Ok(self.span_of(t)? - 3)
    }
}

/// Windowing weight around the interval `[lo, hi]`: one inside, exponential
/// falloff beyond. The falloff below `lo` decays over the width of the
/// previous knot interval, the falloff above `hi` over the interval's own
/// width. Zero-width falloffs (clamped ends) give weight zero outside.
pub fn window_weight(t: f64, lo: f64, hi: f64, lower_width: f64, upper_width: f64) -> f64 {
    if t < lo {
        if lower_width <= 0.0 {
            0.0
        } else {
            let d = t - lo;
            (-d * d / (lower_width * lower_width / 4.0)).exp()
        }
    } else if t <= hi {
        1.0
    } else if upper_width <= 0.0 {
        0.0
    } else {
        let d = t - hi;
        (-d * d / (upper_width * upper_width / 4.0)).exp()
    }
}

/// One direction's window for a local patch fit.
#[derive(Debug, Clone, Copy)]
pub struct PatchWindow {
    pub lo: f64,
    pub hi: f64,
    pub lower_width: f64,
    pub upper_width: f64,
    pub mode: WindowMode,
}

impl PatchWindow {
    pub fn for_patch(ctx: &BasisContext, p: usize, mode: WindowMode) -> Self {
        let (lo, hi) = ctx.patch_interval(p);
        Self {
            lo,
            hi,
            lower_width: lo - ctx.knots()[2 + p],
            upper_width: hi - lo,
            mode,
        }
    }

    pub fn weight(&self, t: f64) -> f64 {
        match self.mode {
            WindowMode::Gaussian => {
                window_weight(t, self.lo, self.hi, self.lower_width, self.upper_width)
            }
            WindowMode::Truncated => {
                if t >= self.lo && t <= self.hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Parameter range where the weight exceeds `cutoff`, scaled by `mult`.
    pub fn reach(&self, cutoff: f64, mult: f64) -> (f64, f64) {
        match self.mode {
            WindowMode::Truncated => (self.lo, self.hi),
            WindowMode::Gaussian => {
                let factor = (cutoff.recip().ln()).sqrt() / 2.0 * mult;
                (
                    self.lo - factor * self.lower_width,
                    self.hi + factor * self.upper_width,
                )
            }
        }
    }
}

/// Grid of 3D control points defining a tensor-product cubic B-spline
/// surface. `rows` indexes the u direction, `cols` the v direction; storage
/// is row-major.
#[derive(Debug, Clone)]
pub struct ControlMesh {
    points: Vec<Vector3<f64>>,
    rows: usize,
    cols: usize,
    u_basis: BasisContext,
    v_basis: BasisContext,
}

#[derive(Serialize, Deserialize)]
struct ControlMeshRecord {
    rows: usize,
    cols: usize,
    u_knots: Vec<f64>,
    v_knots: Vec<f64>,
    /// Row-major `rows x cols` grid of xyz control points.
    control_points: Vec<[f64; 3]>,
}

impl ControlMesh {
    pub fn new(
        points: Vec<Vector3<f64>>,
        u_basis: BasisContext,
        v_basis: BasisContext,
    ) -> Result<Self> {
        let rows = u_basis.num_basis();
        let cols = v_basis.num_basis();
        if points.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "control grid needs {} x {} = {} points, got {}",
                rows,
                cols,
                rows * cols,
                points.len()
            )));
        }
        Ok(Self {
            points,
            rows,
            cols,
            u_basis,
            v_basis,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Vector3<f64> {
        self.points[i * self.cols + j]
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn u_basis(&self) -> &BasisContext {
        &self.u_basis
    }

    pub fn v_basis(&self) -> &BasisContext {
        &self.v_basis
    }

    /// Evaluates the surface through the 4x4 nonzero stencil.
    pub fn evaluate(&self, u: f64, v: f64) -> Result<Point3<f64>> {
        let (su, bu) = self.u_basis.eval_basis(u)?;
        let (sv, bv) = self.v_basis.eval_basis(v)?;
        let mut acc = Vector3::zeros();
        for a in 0..4 {
            let i = su - 3 + a;
            for b in 0..4 {
                let j = sv - 3 + b;
                acc += self.points[i * self.cols + j] * (bu[a] * bv[b]);
            }
        }
        Ok(Point3::from(acc))
    }

    pub fn to_json(&self) -> String {
        let record = ControlMeshRecord {
            rows: self.rows,
            cols: self.cols,
            u_knots: self.u_basis.knots().to_vec(),
            v_knots: self.v_basis.knots().to_vec(),
            control_points: self.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        };
        serde_json::to_string_pretty(&record).expect("control mesh serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: ControlMeshRecord = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("control mesh json: {e}")))?;
        let u_basis = BasisContext::new(record.u_knots)?;
        let v_basis = BasisContext::new(record.v_knots)?;
        if record.rows != u_basis.num_basis() || record.cols != v_basis.num_basis() {
            return Err(Error::Config(
                "control mesh dimensions do not match the knot vectors".into(),
            ));
        }
        Self::new(
            record
                .control_points
                .iter()
                .map(|&[x, y, z]| Vector3::new(x, y, z))
                .collect(),
            u_basis,
            v_basis,
        )
    }

    /// Tessellates the surface into an OBJ string with `(nu+1) x (nv+1)`
    /// samples.
    pub fn tessellate_obj(&self, nu: usize, nv: usize) -> Result<String> {
        let (u0, u1) = self.u_basis.domain();
        let (v0, v1) = self.v_basis.domain();
        let mut out = String::new();
        for i in 0..=nu {
            let u = u0 + (u1 - u0) * i as f64 / nu as f64;
            for j in 0..=nv {
                let v = v0 + (v1 - v0) * j as f64 / nv as f64;
                let p = self.evaluate(u, v)?;
                out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
            }
        }
        let stride = nv + 1;
        for i in 0..nu {
            for j in 0..nv {
                let a = i * stride + j + 1;
                let b = (i + 1) * stride + j + 1;
                let c = (i + 1) * stride + j + 2;
                let d = i * stride + j + 2;
                out.push_str(&format!("f {a} {b} {c}\n"));
                out.push_str(&format!("f {a} {c} {d}\n"));
            }
        }
        Ok(out)
    }
}

/// Mean Euclidean distance between the data points and their surface
/// evaluations.
pub fn fit_error(mesh: &ControlMesh, data: &[UvSample]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let total: f64 = data
        .iter()
        .map(|s| match mesh.evaluate(s.u, s.v) {
            Ok(p) => (p - s.position).norm(),
            Err(_) => 0.0,
        })
        .sum();
    total / data.len() as f64
}
