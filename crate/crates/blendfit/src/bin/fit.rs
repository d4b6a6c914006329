//! Batch driver: `fit <config> [overrides]`. Parses the configuration file,
//! applies command-line overrides, runs the pipeline and prints the report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use blendfit::pipeline::{run_pipeline, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "fit",
    about = "Fit a tensor-product cubic B-spline surface to a triangulated point cloud"
)]
struct Cli {
    /// Path to a key = value configuration file.
    config: PathBuf,

    /// Ear-clipping angle threshold (radians).
    #[arg(long)]
    phi: Option<f64>,

    /// Knot-subdivision error threshold.
    #[arg(long)]
    kappa: Option<f64>,

    /// Maximum knot-subdivision depth.
    #[arg(long = "max-depth")]
    max_depth: Option<usize>,

    /// Neighborhood size for the MLS fits.
    #[arg(long = "k-neighbors")]
    k_neighbors: Option<usize>,

    /// Local-fit window: gaussian or truncated.
    #[arg(long)]
    window: Option<String>,

    /// Fitter to run: blended, global or both.
    #[arg(long)]
    fitter: Option<String>,

    /// Directory for intermediate mesh dumps.
    #[arg(long = "dump-intermediate")]
    dump_intermediate: Option<PathBuf>,

    /// Seed recorded in the report (synthetic-data workflows).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (defaults to the config file's out_dir).
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn apply_overrides(cfg: &mut PipelineConfig, cli: &Cli) -> blendfit::Result<()> {
    if let Some(v) = cli.phi {
        cfg.set("phi", &v.to_string())?;
    }
    if let Some(v) = cli.kappa {
        cfg.set("kappa", &v.to_string())?;
    }
    if let Some(v) = cli.max_depth {
        cfg.set("max_depth", &v.to_string())?;
    }
    if let Some(v) = cli.k_neighbors {
        cfg.set("k_neighbors", &v.to_string())?;
    }
    if let Some(v) = &cli.window {
        cfg.set("window", v)?;
    }
    if let Some(v) = &cli.fitter {
        cfg.set("fitter", v)?;
    }
    if let Some(v) = &cli.dump_intermediate {
        cfg.dump_intermediate = Some(v.clone());
    }
    if let Some(v) = cli.seed {
        cfg.set("seed", &v.to_string())?;
    }
    if let Some(v) = &cli.out_dir {
        cfg.out_dir = v.clone();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match PipelineConfig::from_file(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = apply_overrides(&mut cfg, &cli) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    match run_pipeline(&cfg) {
        Ok(report) => {
            print!("{}", report.to_text());
            println!("report written to {}", cfg.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
