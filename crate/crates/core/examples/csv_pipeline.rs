//! The file-based workflow the `psvs` binary drives: CSV tables in, a
//! key-value config, and the artifact directory out.
//!
//! cargo run --release --example csv_pipeline

use psvs::io::write_matrix;
use psvs::pipeline::{run_pipeline, RunConfig};
use psvs::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> psvs::Result<()> {
    let dir = std::env::temp_dir().join("psvs-csv-pipeline");
    std::fs::create_dir_all(&dir)?;
    let (data, _) = generate_synthetic(&SyntheticSpec { seed: 17, ..Default::default() })?;
    write_matrix(&dir.join("responses.csv"), &data.response_names, &data.raw_y())?;
    write_matrix(&dir.join("predictors.csv"), &data.predictor_names, &data.raw_x())?;

    let config_path = dir.join("run.conf");
    std::fs::write(&config_path, include_str!("psvs.conf"))?;
    let mut cfg = RunConfig::from_file(&config_path)?;
    cfg.output_dir = dir.join("out");
    let report = run_pipeline(&cfg)?;
    print!("{}", std::fs::read_to_string(&report.report_file)?);
    Ok(())
}
