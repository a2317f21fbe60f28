//! The four prior/predictor scenarios on one dataset. Only the predictor
//! mode and the point-mass switch differ between runs.
//!
//! cargo run --release --example scenarios

use psvs::pipeline::{run_on_dataset, RunConfig, Scenario};
use psvs::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> psvs::Result<()> {
    let spec = SyntheticSpec { n: 400, p: 8, q: 5, support: vec![0, 2, 5], coefficient: 1.5, seed: 4, ..Default::default() };
    let (data, truth) = generate_synthetic(&spec)?;
    let mut base = RunConfig {
        output_dir: std::env::temp_dir().join("psvs-scenarios"),
        kappas: vec![0.125],
        ..Default::default()
    };
    base.factor.k = 2;
    println!("generating links: {}", truth.links().len());
    for scenario in Scenario::ALL {
        let report = run_on_dataset(&data, &scenario.configure(&base))?;
        let sel = report.selection_at(0.125).unwrap();
        let sd_mid = report.loss_gap.delta_sd[report.loss_gap.lambdas.len() / 2];
        println!(
            "{:<20} links {:>2}  λ {:.3e}  π {:.3}  sd(Δ) at mid-grid {:.3e}",
            scenario.name(),
            sel.support.len(),
            sel.lambda,
            sel.pi,
            sd_mid
        );
    }
    println!("artifacts under {}", base.output_dir.display());
    Ok(())
}
