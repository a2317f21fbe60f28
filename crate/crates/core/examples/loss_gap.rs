//! Loss gap and selection: Monte Carlo `Δ_λ`, its credible band, `π_λ`, and
//! the sparsest summary with `π_λ > κ` for several κ.
//!
//! cargo run --release --example loss_gap

use psvs::loss_gap::{delta_samples, select_model, LossGapOptions};
use psvs::moments::{build_lasso_problem, compute_moments};
use psvs::path::{lambda_grid, solve_path};
use psvs::ssvs::{run_chain, SsvsConfig};
use psvs::synthetic::{generate_synthetic, SyntheticSpec};
use psvs::PredictorMode;

fn main() -> psvs::Result<()> {
    let spec = SyntheticSpec { n: 400, p: 8, q: 4, support: vec![0, 5], coefficient: 1.2, seed: 9, ..Default::default() };
    let (data, _) = generate_synthetic(&spec)?;
    let cfg = SsvsConfig { n_iter: 3000, burn_in: 500, ..Default::default() };
    let chain = run_chain(&data, &cfg, &psvs::factor::FactorConfig { k: 2, ..Default::default() })?;

    let moments = compute_moments(&chain.draws, PredictorMode::Random, None)?;
    let problem = build_lasso_problem(&moments);
    let path = solve_path(&problem, &lambda_grid(&problem, 25, 1e-3)?)?;
    let result = delta_samples(&path, &chain.draws, PredictorMode::Random, None, LossGapOptions::default())?;

    println!("{:>11} {:>11} {:>23} {:>6} {:>5}", "lambda", "mean gap", "75% band", "pi", "links");
    for k in 0..result.lambdas.len() {
        let (lo, hi) = result.delta_quantiles[k];
        println!(
            "{:>11.4e} {:>11.4e} [{:>10.3e}, {:>10.3e}] {:>6.3} {:>5}",
            result.lambdas[k], result.delta_mean[k], lo, hi, result.pi[k], result.support_sizes[k]
        );
    }
    for kappa in [0.02, 0.125, 0.325, 0.475] {
        let sel = select_model(&result, &path, kappa);
        println!("κ = {kappa:<6} → grid entry {:>2}, {} links, π = {:.3}", sel.index, sel.support.len(), sel.pi);
    }
    Ok(())
}
