use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use psvs::pipeline::{parse_kappas, run_pipeline, RunConfig};

/// Posterior summary variable selection for SUR models.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Key-value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Response table (CSV with header).
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Predictor table (CSV with header).
    #[arg(long)]
    predictors: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `random` or `fixed`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    point_mass: Option<bool>,
    /// Comma-separated κ levels.
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
}

fn build_config(args: Args) -> psvs::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.responses {
        cfg.responses = Some(v);
    }
    if let Some(v) = args.predictors {
        cfg.predictors = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.mode {
        cfg.mode = v.parse()?;
    }
    if let Some(v) = args.point_mass {
        cfg.ssvs.point_mass = v;
    }
    if let Some(v) = args.kappa {
        cfg.kappas = parse_kappas(&v)?;
    }
    if let Some(v) = args.grid_size {
        cfg.grid_size = v;
    }
    if let Some(v) = args.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = args.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = args.n_iter {
        cfg.ssvs.n_iter = v;
    }
    if let Some(v) = args.burn_in {
        cfg.ssvs.burn_in = v;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let result = build_config(Args::parse()).and_then(|cfg| run_pipeline(&cfg));
    match result {
        Ok(report) => {
            for ks in &report.selections {
                println!(
                    "kappa {}: {} links at lambda {:.6e} (pi {:.4}{})",
                    ks.kappa,
                    ks.selection.support.len(),
                    ks.selection.lambda,
                    ks.selection.pi,
                    if ks.selection.qualified { "" } else { ", not qualified" }
                );
            }
            println!("report: {}", report.report_file.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
