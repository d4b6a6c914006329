//! Batch pipeline: configuration, stage driver, run report and the fitter
//! benchmark harness.
//!
//! Stages always run in the order smoothing, hole filling, parameterization,
//! knot selection, fitting. Smoothing and hole filling can be skipped;
//! parameterization and fitting cannot. Identical configuration and seed
//! produce bit-identical geometry outputs and report values (timings aside).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::bspline::{fit_blended_surface, fit_error, fit_global_surface, WindowMode};
use crate::error::{Error, Result};
use crate::holefill::{fill_holes, AdvanceRule, FillParams};
use crate::knots::{decompose_mesh, layout_knots, KnotLayout};
use crate::mesh::io::{load_mesh, obj_string, save_obj, write_text, MeshFormat};
use crate::mesh::TriMesh;
use crate::mls::{Bandwidth, MlsConfig};
use crate::param::parameterize;
use crate::sample::{samples_from, UvSample};
use crate::smooth::{smooth_boundary, smooth_surface, CornerSpec};
use crate::synth::{generate_synthetic, SyntheticKind};

/// Which fitter(s) to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitterChoice {
    Blended,
    Global,
    Both,
}

/// Pipeline configuration: a plain `key = value` file plus command-line
/// overrides. Unknown keys are rejected.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: Option<MeshFormat>,
    pub out_dir: PathBuf,
    pub corners: Vec<usize>,
    pub k_neighbors: usize,
    pub bandwidth: Bandwidth,
    /// `None` resolves to 1e-7 x bounding-box diagonal.
    pub convergence_tol: Option<f64>,
    pub smoothing_passes: usize,
    pub skip_smoothing: bool,
    pub skip_hole_fill: bool,
    pub phi: f64,
    pub fill_rule: AdvanceRule,
    pub max_front_iterations: Option<usize>,
    /// `None` resolves to 0.5% of the bounding-box diagonal.
    pub kappa: Option<f64>,
    pub max_depth: usize,
    /// Skip adaptive knot selection and use this many uniform patches per
    /// direction instead.
    pub uniform_patches: Option<usize>,
    pub window: WindowMode,
    pub fitter: FitterChoice,
    pub dump_intermediate: Option<PathBuf>,
    pub seed: u64,
    /// Samples per direction for the tessellated surface OBJ; 0 disables it.
    pub tessellation: usize,
    pub export_uv: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            format: None,
            out_dir: PathBuf::from("fit-output"),
            corners: Vec::new(),
            k_neighbors: 15,
            bandwidth: Bandwidth::AdaptiveMeanDistance,
            convergence_tol: None,
            smoothing_passes: 1,
            skip_smoothing: false,
            skip_hole_fill: false,
            phi: 5.0 * std::f64::consts::PI / 9.0,
            fill_rule: AdvanceRule::Isosceles,
            max_front_iterations: None,
            kappa: None,
            max_depth: 5,
            uniform_patches: None,
            window: WindowMode::Gaussian,
            fitter: FitterChoice::Both,
            dump_intermediate: None,
            seed: 0,
            tessellation: 48,
            export_uv: false,
        }
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("expected a boolean, got {other:?}"))),
    }
}

impl PipelineConfig {
    /// Parses a configuration file. Relative paths are resolved against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.input = base.join(&cfg.input);
        cfg.out_dir = base.join(&cfg.out_dir);
        if let Some(d) = &cfg.dump_intermediate {
            cfg.dump_intermediate = Some(base.join(d));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `key = value` text. Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got {line:?}",
                    ln + 1
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one configuration key from its textual value. Shared by the file
    /// parser and the command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("key {key}: {what}: {value:?}"));
        match key {
            "input" => self.input = PathBuf::from(value),
            "format" => {
                self.format = Some(match value {
                    "obj" => MeshFormat::Obj,
                    "ply" => MeshFormat::Ply,
                    _ => return Err(bad("expected obj or ply")),
                })
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            "corners" => {
                self.corners = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(|_| bad("expected vertex indices")))
                    .collect::<Result<_>>()?;
            }
            "k_neighbors" => {
                self.k_neighbors = value.parse().map_err(|_| bad("expected an integer"))?;
                if self.k_neighbors == 0 {
                    return Err(bad("must be at least 1"));
                }
            }
            "bandwidth" => {
                self.bandwidth = if value == "adaptive" {
                    Bandwidth::AdaptiveMeanDistance
                } else {
                    let h: f64 = value.parse().map_err(|_| bad("expected adaptive or a number"))?;
                    if h <= 0.0 {
                        return Err(bad("must be positive"));
                    }
                    Bandwidth::Fixed(h)
                };
            }
            "convergence_tol" => {
                self.convergence_tol = if value == "auto" {
                    None
                } else {
                    let t: f64 = value.parse().map_err(|_| bad("expected auto or a number"))?;
                    if t <= 0.0 {
                        return Err(bad("must be positive"));
                    }
                    Some(t)
                };
            }
            "smoothing_passes" => {
                self.smoothing_passes = value.parse().map_err(|_| bad("expected an integer"))?;
            }
            "skip_smoothing" => self.skip_smoothing = parse_bool(value)?,
            "skip_hole_fill" => self.skip_hole_fill = parse_bool(value)?,
            "phi" => {
                self.phi = value.parse().map_err(|_| bad("expected a number"))?;
                if !(self.phi >= 0.0 && self.phi < std::f64::consts::PI) {
                    return Err(bad("must lie in [0, pi)"));
                }
            }
            "fill_rule" => {
                self.fill_rule = match value {
                    "isosceles" => AdvanceRule::Isosceles,
                    "equilateral" => AdvanceRule::Equilateral,
                    _ => return Err(bad("expected isosceles or equilateral")),
                };
            }
            "max_front_iterations" => {
                self.max_front_iterations =
                    Some(value.parse().map_err(|_| bad("expected an integer"))?);
            }
            "kappa" => {
                self.kappa = if value == "auto" {
                    None
                } else {
                    let k: f64 = value.parse().map_err(|_| bad("expected auto or a number"))?;
                    if k < 0.0 {
                        return Err(bad("must be nonnegative"));
                    }
                    Some(k)
                };
            }
            "max_depth" => {
                self.max_depth = value.parse().map_err(|_| bad("expected an integer"))?;
            }
            "uniform_patches" => {
                let n: usize = value.parse().map_err(|_| bad("expected an integer"))?;
                if n == 0 {
                    return Err(bad("must be at least 1"));
                }
                self.uniform_patches = Some(n);
            }
            "window" => {
                self.window = match value {
                    "gaussian" => WindowMode::Gaussian,
                    "truncated" => WindowMode::Truncated,
                    _ => return Err(bad("expected gaussian or truncated")),
                };
            }
            "fitter" => {
                self.fitter = match value {
                    "blended" => FitterChoice::Blended,
                    "global" => FitterChoice::Global,
                    "both" => FitterChoice::Both,
                    _ => return Err(bad("expected blended, global or both")),
                };
            }
            "dump_intermediate" => self.dump_intermediate = Some(PathBuf::from(value)),
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            "tessellation" => {
                self.tessellation = value.parse().map_err(|_| bad("expected an integer"))?;
            }
            "export_uv" => self.export_uv = parse_bool(value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(Error::Config("input path is required".into()));
        }
        if self.smoothing_passes == 0 && !self.skip_smoothing {
            return Err(Error::Config(
                "smoothing_passes must be at least 1 (or set skip_smoothing)".into(),
            ));
        }
        Ok(())
    }

    fn mls_config(&self, bbox_diagonal: f64) -> MlsConfig {
        MlsConfig {
            bandwidth: self.bandwidth,
            neighborhood: crate::mesh::NeighborhoodPolicy::KNearest(self.k_neighbors),
            max_iterations: 30,
            convergence_tol: self
                .convergence_tol
                .unwrap_or(1e-7 * bbox_diagonal.max(f64::MIN_POSITIVE)),
        }
    }
}

/// Per-stage mesh statistics.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub name: String,
    pub vertices_before: usize,
    pub vertices_after: usize,
    pub triangles_before: usize,
    pub triangles_after: usize,
    pub notes: Vec<String>,
}

/// Per-fitter result record.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fitter: String,
    pub error_per_point: f64,
    pub control_rows: usize,
    pub control_cols: usize,
    pub local_systems: Option<usize>,
    pub mean_points_per_system: Option<f64>,
    pub ridged_systems: usize,
    pub rank_deficient: bool,
}

/// Full run report; the JSON twin is the `Serialize` form, with all timings
/// isolated under `timings_seconds`.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunReport {
    pub input: String,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub u_knots: Vec<f64>,
    pub v_knots: Vec<f64>,
    pub patches_u: usize,
    pub patches_v: usize,
    pub fits: Vec<FitReport>,
    pub warnings: Vec<String>,
    pub timings_seconds: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "input: {}", self.input);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "stages:");
        for s in &self.stages {
            let _ = writeln!(
                out,
                "  {:<16} vertices {} -> {}, triangles {} -> {}{}",
                s.name,
                s.vertices_before,
                s.vertices_after,
                s.triangles_before,
                s.triangles_after,
                self.timings_seconds
                    .get(&s.name)
                    .map(|t| format!(", {t:.3}s"))
                    .unwrap_or_default()
            );
            for note in &s.notes {
                let _ = writeln!(out, "    note: {note}");
            }
        }
        let _ = writeln!(
            out,
            "knots: {} x {} patches ({} + 7 = {} u-knots, {} + 7 = {} v-knots)",
            self.patches_u,
            self.patches_v,
            self.patches_u,
            self.u_knots.len(),
            self.patches_v,
            self.v_knots.len()
        );
        let fmt_knots = |ks: &[f64]| {
            ks.iter()
                .map(|k| format!("{k}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "u_knots: {}", fmt_knots(&self.u_knots));
        let _ = writeln!(out, "v_knots: {}", fmt_knots(&self.v_knots));
        for f in &self.fits {
            let _ = writeln!(
                out,
                "fit[{}]: error/point {:.6e}, control mesh {} x {}{}{}{}",
                f.fitter,
                f.error_per_point,
                f.control_rows,
                f.control_cols,
                f.local_systems
                    .map(|n| format!(", {n} local systems"))
                    .unwrap_or_default(),
                f.mean_points_per_system
                    .map(|m| format!(", {m:.1} points/system"))
                    .unwrap_or_default(),
                self.timings_seconds
                    .get(&format!("fit_{}", f.fitter))
                    .map(|t| format!(", {t:.3}s"))
                    .unwrap_or_default()
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn stage_report(
    name: &str,
    before: (usize, usize),
    mesh: &TriMesh,
    notes: Vec<String>,
) -> StageReport {
    StageReport {
        name: name.to_string(),
        vertices_before: before.0,
        vertices_after: mesh.vertices().len(),
        triangles_before: before.1,
        triangles_after: mesh.triangles().len(),
        notes,
    }
}

fn write_report(cfg: &PipelineConfig, report: &RunReport) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    write_text(&cfg.out_dir.join("report.txt"), &report.to_text())?;
    write_text(&cfg.out_dir.join("report.json"), &report.to_json())
}

/// Runs the full pipeline. The report (and any intermediate dumps) are
/// written to `cfg.out_dir`; when a stage fails, the partial report is still
/// written before the error is returned.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = RunReport {
        input: cfg.input.display().to_string(),
        seed: cfg.seed,
        ..RunReport::default()
    };
    match run_stages(cfg, &mut report) {
        Ok(()) => {
            write_report(cfg, &report)?;
            Ok(report)
        }
        Err(e) => {
            report.warnings.push(format!("aborted: {e}"));
            let _ = write_report(cfg, &report);
            Err(e)
        }
    }
}

fn dump_mesh(cfg: &PipelineConfig, name: &str, mesh: &TriMesh, uv: Option<&[(f64, f64)]>) {
    if let Some(dir) = &cfg.dump_intermediate {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = save_obj(mesh, &dir.join(name), uv);
        }
    }
}

fn run_stages(cfg: &PipelineConfig, report: &mut RunReport) -> Result<()> {
    // Load.
    let t0 = Instant::now();
    let format = match cfg.format {
        Some(f) => f,
        None => MeshFormat::from_path(&cfg.input)?,
    };
    let mut mesh = load_mesh(&cfg.input, format)?;
    let mut notes = Vec::new();
    if mesh.dropped_unreferenced() > 0 {
        notes.push(format!(
            "dropped {} unreferenced vertices",
            mesh.dropped_unreferenced()
        ));
    }
    report.timings_seconds.insert("load".into(), t0.elapsed().as_secs_f64());
    report.stages.push(stage_report(
        "load",
        (mesh.vertices().len(), mesh.triangles().len()),
        &mesh,
        notes,
    ));

    let diag = mesh.bbox_diagonal();
    let mls = cfg.mls_config(diag);
    let corners = CornerSpec::new(cfg.corners.clone());

    // Smoothing: surface pass first, then the boundary pass.
    if !cfg.skip_smoothing {
        let t = Instant::now();
        let before = (mesh.vertices().len(), mesh.triangles().len());
        let mut notes = Vec::new();
        for pass in 0..cfg.smoothing_passes {
            let surface = smooth_surface(&mesh, &mls)?;
            if !surface.skipped_vertices.is_empty() {
                notes.push(format!(
                    "pass {}: {} interior projections failed and were kept",
                    pass + 1,
                    surface.skipped_vertices.len()
                ));
            }
            dump_mesh(cfg, &format!("smoothed_surface_{}.obj", pass + 1), &surface.mesh, None);
            let boundary = smooth_boundary(&surface.mesh, &corners, &mls)?;
            if boundary.skipped_pieces > 0 {
                notes.push(format!(
                    "pass {}: {} boundary pieces too short to smooth",
                    pass + 1,
                    boundary.skipped_pieces
                ));
            }
            mesh = boundary.mesh;
            dump_mesh(cfg, &format!("smoothed_{}.obj", pass + 1), &mesh, None);
        }
        report
            .timings_seconds
            .insert("smoothing".into(), t.elapsed().as_secs_f64());
        report
            .stages
            .push(stage_report("smoothing", before, &mesh, notes));
    }

    // Hole filling.
    if !cfg.skip_hole_fill {
        let t = Instant::now();
        let before = (mesh.vertices().len(), mesh.triangles().len());
        let params = FillParams {
            phi: cfg.phi,
            advance_rule: cfg.fill_rule,
            max_front_iterations: cfg.max_front_iterations,
            ..FillParams::default()
        };
        let outcome = fill_holes(&mesh, &params, &mls)?;
        let mut notes = vec![format!(
            "{} holes filled, {} triangles and {} vertices added",
            outcome.holes_filled, outcome.triangles_added, outcome.vertices_added
        )];
        if outcome.distance_fallbacks > 0 {
            notes.push(format!(
                "{} advance distances hit the degenerate fallback",
                outcome.distance_fallbacks
            ));
        }
        report.warnings.extend(outcome.warnings.clone());
        mesh = outcome.mesh;
        dump_mesh(cfg, "filled.obj", &mesh, None);
        report
            .timings_seconds
            .insert("hole_fill".into(), t.elapsed().as_secs_f64());
        report
            .stages
            .push(stage_report("hole_fill", before, &mesh, notes));
    }

    // Parameterization.
    let t = Instant::now();
    let before = (mesh.vertices().len(), mesh.triangles().len());
    let param = parameterize(&mesh, &corners)?;
    report
        .timings_seconds
        .insert("parameterization".into(), t.elapsed().as_secs_f64());
    report.stages.push(stage_report(
        "parameterization",
        before,
        &mesh,
        vec![format!("{} solver sweeps", param.iterations)],
    ));
    if cfg.export_uv || cfg.dump_intermediate.is_some() {
        dump_mesh(cfg, "param.obj", &mesh, Some(&param.uv));
    }
    if cfg.export_uv {
        std::fs::create_dir_all(&cfg.out_dir).ok();
        write_text(
            &cfg.out_dir.join("param.obj"),
            &obj_string(&mesh, Some(&param.uv)),
        )?;
    }

    let samples = samples_from(&mesh, &param);

    // Knot selection.
    let t = Instant::now();
    let (layout, knot_note) = match cfg.uniform_patches {
        Some(n) => (
            KnotLayout::uniform(n, n)?,
            format!("uniform layout with {n} patches per direction"),
        ),
        None => {
            let kappa = cfg.kappa.unwrap_or(0.005 * diag);
            let tree = decompose_mesh(&param, &mesh, kappa, cfg.max_depth)?;
            let layout = layout_knots(&tree);
            (
                layout,
                format!(
                    "kappa {kappa:.6e}, {} leaf regions, depth {}",
                    tree.leaf_count(),
                    tree.max_depth()
                ),
            )
        }
    };
    report
        .timings_seconds
        .insert("knot_selection".into(), t.elapsed().as_secs_f64());
    report.stages.push(stage_report(
        "knot_selection",
        (mesh.vertices().len(), mesh.triangles().len()),
        &mesh,
        vec![knot_note],
    ));
    report.u_knots = layout.u_knots.clone();
    report.v_knots = layout.v_knots.clone();
    report.patches_u = layout.patches_u;
    report.patches_v = layout.patches_v;

    // Fitting.
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    if matches!(cfg.fitter, FitterChoice::Blended | FitterChoice::Both) {
        let t = Instant::now();
        let blended = fit_blended_surface(&samples, &layout, cfg.window)?;
        let secs = t.elapsed().as_secs_f64();
        report.timings_seconds.insert("fit_blended".into(), secs);
        let error = fit_error(&blended.mesh, &samples);
        report.fits.push(FitReport {
            fitter: "blended".into(),
            error_per_point: error,
            control_rows: blended.mesh.rows(),
            control_cols: blended.mesh.cols(),
            local_systems: Some(blended.local_systems),
            mean_points_per_system: Some(blended.mean_points_per_system),
            ridged_systems: blended.ridged_systems,
            rank_deficient: false,
        });
        if blended.widened_systems > 0 {
            report.warnings.push(format!(
                "{} local systems widened their window to gather 16 points",
                blended.widened_systems
            ));
        }
        write_text(
            &cfg.out_dir.join("control_mesh_blended.json"),
            &blended.mesh.to_json(),
        )?;
        if cfg.tessellation > 0 {
            write_text(
                &cfg.out_dir.join("surface_blended.obj"),
                &blended.mesh.tessellate_obj(cfg.tessellation, cfg.tessellation)?,
            )?;
        }
    }
    if matches!(cfg.fitter, FitterChoice::Global | FitterChoice::Both) {
        let t = Instant::now();
        let global = fit_global_surface(&samples, &layout)?;
        let secs = t.elapsed().as_secs_f64();
        report.timings_seconds.insert("fit_global".into(), secs);
        let error = fit_error(&global.mesh, &samples);
        report.fits.push(FitReport {
            fitter: "global".into(),
            error_per_point: error,
            control_rows: global.mesh.rows(),
            control_cols: global.mesh.cols(),
            local_systems: None,
            mean_points_per_system: None,
            ridged_systems: 0,
            rank_deficient: global.rank_deficient,
        });
        if global.rank_deficient {
            report
                .warnings
                .push("global fit design matrix was rank deficient".into());
        }
        write_text(
            &cfg.out_dir.join("control_mesh_global.json"),
            &global.mesh.to_json(),
        )?;
        if cfg.tessellation > 0 {
            write_text(
                &cfg.out_dir.join("surface_global.obj"),
                &global.mesh.tessellate_obj(cfg.tessellation, cfg.tessellation)?,
            )?;
        }
    }
    Ok(())
}

/// One row of the benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub fitter: String,
    pub points: usize,
    pub control_size: usize,
    pub median_seconds: f64,
}

/// Timing table for the two fitters over data and control-mesh sizes.
#[derive(Debug, Clone, Serialize, Default)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchRow>,
}

impl BenchmarkTable {
    pub fn median(&self, fitter: &str, points: usize, control_size: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.fitter == fitter && r.points == points && r.control_size == control_size)
            .map(|r| r.median_seconds)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("fitter    points   mesh     median_s\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<9} {:<8} {:<8} {:.4}",
                r.fitter,
                r.points,
                format!("{0}x{0}", r.control_size),
                r.median_seconds
            );
        }
        out
    }
}

/// Benchmarks both fitters on synthetic data. `mesh_sizes` are control-grid
/// sizes per direction (e.g. 13 for a 13x13 control mesh). Zero repetitions
/// produce an empty table.
pub fn benchmark_fitters(
    point_counts: &[usize],
    mesh_sizes: &[usize],
    repetitions: usize,
) -> Result<BenchmarkTable> {
    let mut table = BenchmarkTable::default();
    if repetitions == 0 {
        return Ok(table);
    }
    for &m in mesh_sizes {
        if m < 4 {
            return Err(Error::InvalidParameter(format!(
                "control size {m} is below the cubic minimum of 4"
            )));
        }
        let layout = KnotLayout::uniform(m - 3, m - 3)?;
        for &l in point_counts {
            let synthetic = generate_synthetic(SyntheticKind::SinCos, l, 0.005, 7)?;
            let samples: Vec<UvSample> = synthetic.analytic_samples();
            let mut blended_times = Vec::with_capacity(repetitions);
            let mut global_times = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                let t = Instant::now();
                let _ = fit_blended_surface(&samples, &layout, WindowMode::Gaussian)?;
                blended_times.push(t.elapsed().as_secs_f64());
                let t = Instant::now();
                let _ = fit_global_surface(&samples, &layout)?;
                global_times.push(t.elapsed().as_secs_f64());
            }
            let median = |mut xs: Vec<f64>| -> f64 {
                xs.sort_by(f64::total_cmp);
                xs[xs.len() / 2]
            };
            table.rows.push(BenchRow {
                fitter: "blended".into(),
                points: samples.len(),
                control_size: m,
                median_seconds: median(blended_times),
            });
            table.rows.push(BenchRow {
                fitter: "global".into(),
                points: samples.len(),
                control_size: m,
                median_seconds: median(global_times),
            });
        }
    }
    Ok(table)
}
