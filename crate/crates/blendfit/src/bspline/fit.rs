//! Local least-squares patch fits, blending into a global control mesh, and
//! the global least-squares baseline.
//!
//! Each knot patch gets its own small weighted least-squares problem over the
//! four (curve) or sixteen (surface) basis functions that are nonzero there,
//! with data gathered from the patch and its neighbors under the windowing
//! function. Coefficients of adjoining patches that address the same global
//! control point are then averaged: interior points blend two (curve) or up
//! to four (surface) local values, end points are copied from the extreme
//! patch. The global fit solves one dense least-squares problem through the
//! SVD and is the accuracy/runtime baseline the blended method is measured
//! against.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knots::KnotLayout;
use crate::numeric::weighted_lsq;
use crate::sample::UvSample;

use super::{BasisContext, ControlMesh, PatchWindow, WindowMode};

/// Window weights below this threshold are dropped when gathering data for a
/// local fit; with the gaussian falloff this keeps the patch plus its
/// immediate neighbors.
const WINDOW_CUTOFF: f64 = 1e-4;

/// Ridge scale for rank-deficient local systems.
const LOCAL_RIDGE: f64 = 1e-10;

/// Coefficients of one local curve fit.
#[derive(Debug, Clone)]
pub struct CurvePatchFit {
    pub patch: usize,
    pub coeffs: [f64; 4],
    /// Set when the system was rank deficient and ridge-regularized.
    pub ridged: bool,
    pub points_used: usize,
}

/// 4x4 control points of one local surface fit.
#[derive(Debug, Clone)]
pub struct SurfacePatchFit {
    pub patch_u: usize,
    pub patch_v: usize,
    /// `coeffs[ju][jv]` pairs with basis `(patch_u + ju, patch_v + jv)`.
    pub coeffs: [[Vector3<f64>; 4]; 4],
    pub ridged: bool,
    pub points_used: usize,
}

/// Fits the four locally nonzero basis coefficients of one curve patch by
/// windowed weighted least squares over `(t, f)` data from the patch and its
/// neighbors.
pub fn fit_local_patch_curve(
    patch: usize,
    data: &[(f64, f64)],
    ctx: &BasisContext,
    mode: WindowMode,
) -> Result<CurvePatchFit> {
    let window = PatchWindow::for_patch(ctx, patch, mode);
    let weighted: Vec<(f64, f64, f64)> = data
        .iter()
        .filter_map(|&(t, f)| {
            let w = window.weight(t);
            (w > WINDOW_CUTOFF || (mode == WindowMode::Truncated && w > 0.0))
                .then_some((t, f, w))
        })
        .collect();
    if weighted.is_empty() {
        return Err(Error::EmptyFitData);
    }
    let n = weighted.len();
    let mut design = DMatrix::zeros(n, 4);
    let mut rhs = DMatrix::zeros(n, 1);
    let mut weights = Vec::with_capacity(n);
    for (row, &(t, f, w)) in weighted.iter().enumerate() {
        let (span, values) = ctx.eval_basis(t)?;
        for j in 0..4 {
            let basis_index = patch + j;
            design[(row, j)] = if basis_index + 3 >= span && basis_index <= span {
                values[basis_index + 3 - span]
            } else {
                0.0
            };
        }
        rhs[(row, 0)] = f;
        weights.push(w);
    }
    let sol = weighted_lsq(&design, &rhs, Some(&weights), LOCAL_RIDGE);
    let mut coeffs = [0.0; 4];
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c = sol.coeffs[(j, 0)];
    }
    Ok(CurvePatchFit {
        patch,
        coeffs,
        ridged: sol.ridged,
        points_used: n,
    })
}

/// Fits the sixteen locally nonzero tensor-product coefficients of one
/// surface patch under the tensor-product window.
pub fn fit_local_patch_surface(
    patch_u: usize,
    patch_v: usize,
    data: &[UvSample],
    u_ctx: &BasisContext,
    v_ctx: &BasisContext,
    mode: WindowMode,
) -> Result<SurfacePatchFit> {
    let wu = PatchWindow::for_patch(u_ctx, patch_u, mode);
    let wv = PatchWindow::for_patch(v_ctx, patch_v, mode);
    let weighted: Vec<(UvSample, f64)> = data
        .iter()
        .filter_map(|s| {
            let w = wu.weight(s.u) * wv.weight(s.v);
            (w > WINDOW_CUTOFF || (mode == WindowMode::Truncated && w > 0.0))
                .then_some((*s, w))
        })
        .collect();
    if weighted.is_empty() {
        return Err(Error::EmptyFitData);
    }
    let n = weighted.len();
    let mut design = DMatrix::zeros(n, 16);
    let mut rhs = DMatrix::zeros(n, 3);
    let mut weights = Vec::with_capacity(n);
    for (row, (s, w)) in weighted.iter().enumerate() {
        let (su, bu) = u_ctx.eval_basis(s.u)?;
        let (sv, bv) = v_ctx.eval_basis(s.v)?;
        for ju in 0..4 {
            let iu = patch_u + ju;
            let fu = if iu + 3 >= su && iu <= su {
                bu[iu + 3 - su]
            } else {
                0.0
            };
            for jv in 0..4 {
                let iv = patch_v + jv;
                let fv = if iv + 3 >= sv && iv <= sv {
                    bv[iv + 3 - sv]
                } else {
                    0.0
                };
                design[(row, ju * 4 + jv)] = fu * fv;
            }
        }
        rhs[(row, 0)] = s.position.x;
        rhs[(row, 1)] = s.position.y;
        rhs[(row, 2)] = s.position.z;
        weights.push(*w);
    }
    let sol = weighted_lsq(&design, &rhs, Some(&weights), LOCAL_RIDGE);
    let mut coeffs = [[Vector3::zeros(); 4]; 4];
    for ju in 0..4 {
        for jv in 0..4 {
            let k = ju * 4 + jv;
            coeffs[ju][jv] = Vector3::new(
                sol.coeffs[(k, 0)],
                sol.coeffs[(k, 1)],
                sol.coeffs[(k, 2)],
            );
        }
    }
    Ok(SurfacePatchFit {
        patch_u,
        patch_v,
        coeffs,
        ridged: sol.ridged,
        points_used: n,
    })
}

/// Per-direction blending rule: which `(patch, slot)` local coefficients feed
/// global coefficient `i`. Interior coefficients average the two middle slots
/// of the adjacent patches; the two coefficients at each end are copied from
/// the extreme patch.
fn blend_contributions(i: usize, n_p: usize) -> Vec<(usize, usize)> {
    if i == 0 {
        vec![(0, 0)]
    } else if i == 1 {
        vec![(0, 1)]
    } else if i == n_p + 1 {
        vec![(n_p - 1, 2)]
    } else if i == n_p + 2 {
        vec![(n_p - 1, 3)]
    } else {
        vec![(i - 2, 2), (i - 1, 1)]
    }
}

/// Blends per-patch curve fits into the `n_p + 3` global coefficients.
pub fn blend_curve(locals: &[CurvePatchFit]) -> Vec<f64> {
    let n_p = locals.len();
    (0..n_p + 3)
        .map(|i| {
            let contributions = blend_contributions(i, n_p);
            let sum: f64 = contributions
                .iter()
                .map(|&(p, slot)| locals[p].coeffs[slot])
                .sum();
            sum / contributions.len() as f64
        })
        .collect()
}

/// Blends the grid of local surface fits into the global control mesh:
/// control point `(I, J)` averages the coinciding local coefficients of the
/// 1, 2, or 4 adjoining patches selected by the per-direction rule.
pub fn blend_surface(
    locals: &[SurfacePatchFit],
    u_ctx: &BasisContext,
    v_ctx: &BasisContext,
) -> Result<ControlMesh> {
    let n_pu = u_ctx.num_patches();
    let n_pv = v_ctx.num_patches();
    if locals.len() != n_pu * n_pv {
        return Err(Error::InvalidParameter(format!(
            "expected {} local fits, got {}",
            n_pu * n_pv,
            locals.len()
        )));
    }
    let rows = n_pu + 3;
    let cols = n_pv + 3;
    let mut points = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let u_contrib = blend_contributions(i, n_pu);
        for j in 0..cols {
            let v_contrib = blend_contributions(j, n_pv);
            let mut acc = Vector3::zeros();
            let mut count = 0usize;
            for &(pu, ju) in &u_contrib {
                for &(pv, jv) in &v_contrib {
                    acc += locals[pu * n_pv + pv].coeffs[ju][jv];
                    count += 1;
                }
            }
            points.push(acc / count as f64);
        }
    }
    ControlMesh::new(points, u_ctx.clone(), v_ctx.clone())
}

/// Result of the blended surface fit, with the instrumentation the run
/// report exposes.
#[derive(Debug)]
pub struct BlendedFit {
    pub mesh: ControlMesh,
    /// Number of local systems solved (= patch-grid cell count).
    pub local_systems: usize,
    pub mean_points_per_system: f64,
    /// Local systems that hit the ridge fallback.
    pub ridged_systems: usize,
    /// Patches whose gathering window had to be widened to reach 16 points.
    pub widened_systems: usize,
}

/// Blended-local-fits surface fit: one windowed least-squares system per knot
/// patch, solved independently (in parallel), then blended into the global
/// control mesh.
pub fn fit_blended_surface(
    data: &[UvSample],
    layout: &KnotLayout,
    mode: WindowMode,
) -> Result<BlendedFit> {
    if data.is_empty() {
        return Err(Error::EmptyFitData);
    }
    let u_ctx = BasisContext::new(layout.u_knots.clone())?;
    let v_ctx = BasisContext::new(layout.v_knots.clone())?;
    let n_pu = u_ctx.num_patches();
    let n_pv = v_ctx.num_patches();

    // Bucket samples by patch cell for linear-time gathering.
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); n_pu * n_pv];
    for (k, s) in data.iter().enumerate() {
        let pu = u_ctx.patch_of(s.u)?;
        let pv = v_ctx.patch_of(s.v)?;
        cells[pu * n_pv + pv].push(k);
    }

    let u_breaks: Vec<f64> = u_ctx.knots()[3..3 + n_pu + 1].to_vec();
    let v_breaks: Vec<f64> = v_ctx.knots()[3..3 + n_pv + 1].to_vec();
    let patch_range = |breaks: &[f64], lo: f64, hi: f64| -> (usize, usize) {
        // Patches [first, last] whose interval intersects [lo, hi].
        let n = breaks.len() - 1;
        let first = breaks[..n].partition_point(|&b| b < lo).saturating_sub(0);
        let first = first.min(n).saturating_sub(usize::from(first > 0 && breaks[first] > lo));
        let last = breaks[1..].partition_point(|&b| b < hi).min(n - 1);
        (first.min(last), last)
    };

    let fits: Vec<Result<(SurfacePatchFit, bool)>> = (0..n_pu * n_pv)
        .into_par_iter()
        .map(|cell| {
            let pu = cell / n_pv;
            let pv = cell % n_pv;
            let wu = PatchWindow::for_patch(&u_ctx, pu, mode);
            let wv = PatchWindow::for_patch(&v_ctx, pv, mode);
            let mut widened = false;
            let mut mult = 1.0;
            let mut gathered: Vec<UvSample> = Vec::new();
            loop {
                let (ulo, uhi) = wu.reach(WINDOW_CUTOFF, mult);
                let (vlo, vhi) = wv.reach(WINDOW_CUTOFF, mult);
                let (u_first, u_last) = patch_range(&u_breaks, ulo, uhi);
                let (v_first, v_last) = patch_range(&v_breaks, vlo, vhi);
                gathered.clear();
                for gu in u_first..=u_last {
                    for gv in v_first..=v_last {
                        for &k in &cells[gu * n_pv + gv] {
                            gathered.push(data[k]);
                        }
                    }
                }
                let full_cover = u_first == 0
                    && v_first == 0
                    && u_last == n_pu - 1
                    && v_last == n_pv - 1;
                let enough = match mode {
                    WindowMode::Gaussian => {
                        gathered
                            .iter()
                            .filter(|s| wu.weight(s.u) * wv.weight(s.v) > WINDOW_CUTOFF)
                            .count()
                            >= 16
                    }
                    WindowMode::Truncated => true,
                };
                if enough || full_cover || mode == WindowMode::Truncated {
                    break;
                }
                mult *= 2.0;
                widened = true;
            }
            fit_local_patch_surface(pu, pv, &gathered, &u_ctx, &v_ctx, mode)
                .map(|fit| (fit, widened))
        })
        .collect();

    let mut locals = Vec::with_capacity(fits.len());
    let mut ridged_systems = 0usize;
    let mut widened_systems = 0usize;
    let mut total_points = 0usize;
    for fit in fits {
        let (fit, widened) = fit?;
        ridged_systems += usize::from(fit.ridged);
        widened_systems += usize::from(widened);
        total_points += fit.points_used;
        locals.push(fit);
    }
    let local_systems = locals.len();
    let mesh = blend_surface(&locals, &u_ctx, &v_ctx)?;
    Ok(BlendedFit {
        mesh,
        local_systems,
        mean_points_per_system: total_points as f64 / local_systems as f64,
        ridged_systems,
        widened_systems,
    })
}

/// Result of the global least-squares baseline.
#[derive(Debug)]
pub struct GlobalFit {
    pub mesh: ControlMesh,
    /// Set when the design matrix was rank deficient.
    pub rank_deficient: bool,
}

/// Global least-squares fit of all control points at once, solved through
/// the singular value decomposition.
pub fn fit_global_surface(data: &[UvSample], layout: &KnotLayout) -> Result<GlobalFit> {
    if data.is_empty() {
        return Err(Error::EmptyFitData);
    }
    let u_ctx = BasisContext::new(layout.u_knots.clone())?;
    let v_ctx = BasisContext::new(layout.v_knots.clone())?;
    let a = u_ctx.num_basis();
    let b = v_ctx.num_basis();
    let n = data.len();

    let mut design = DMatrix::zeros(n, a * b);
    let mut rhs = DMatrix::zeros(n, 3);
    for (row, s) in data.iter().enumerate() {
        let (su, bu) = u_ctx.eval_basis(s.u)?;
        let (sv, bv) = v_ctx.eval_basis(s.v)?;
        for off_u in 0..4 {
            let i = su - 3 + off_u;
            for off_v in 0..4 {
                let j = sv - 3 + off_v;
                design[(row, i * b + j)] = bu[off_u] * bv[off_v];
            }
        }
        rhs[(row, 0)] = s.position.x;
        rhs[(row, 1)] = s.position.y;
        rhs[(row, 2)] = s.position.z;
    }
    let sol = weighted_lsq(&design, &rhs, None, 0.0);
    let points: Vec<Vector3<f64>> = (0..a * b)
        .map(|k| Vector3::new(sol.coeffs[(k, 0)], sol.coeffs[(k, 1)], sol.coeffs[(k, 2)]))
        .collect();
    Ok(GlobalFit {
        mesh: ControlMesh::new(points, u_ctx, v_ctx)?,
        rank_deficient: sol.ridged,
    })
}
