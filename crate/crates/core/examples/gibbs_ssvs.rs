//! Stochastic search over the shared inclusion vector: chain visit
//! frequencies against the enumerated model posterior.
//!
//! cargo run --release --example gibbs_ssvs

use nalgebra::{DMatrix, DVector};
use psvs::factor::FactorConfig;
use psvs::ssvs::{exact_model_posterior, inclusion_frequencies, run_chain, ModelIndicator, ModelPrior, SsvsConfig};
use psvs::synthetic::{generate_synthetic, SyntheticSpec};

fn main() -> psvs::Result<()> {
    let mut beta = DMatrix::zeros(4, 3);
    beta[(0, 0)] = 0.4;
    beta[(0, 1)] = -0.3;
    beta[(2, 2)] = 0.15;
    let spec = SyntheticSpec {
        n: 150,
        p: 4,
        q: 3,
        beta: Some(beta),
        b: Some(DVector::zeros(3)),
        idiosyncratic_var: 1.0,
        seed: 3,
        ..Default::default()
    };
    let (data, _) = generate_synthetic(&spec)?;

    for prior in [ModelPrior::Uniform, ModelPrior::MultiplicityAdjusted] {
        let exact = exact_model_posterior(&data, prior)?;
        let cfg = SsvsConfig {
            n_iter: 21_000,
            burn_in: 1000,
            model_prior: prior,
            residual_factor: false,
            ..Default::default()
        };
        let chain = run_chain(&data, &cfg, &FactorConfig { k: 1, ..Default::default() })?;
        let mut visits = [0usize; 16];
        for d in &chain.draws {
            visits[ModelIndicator(d.params.alpha.clone()).mask() as usize] += 1;
        }
        println!("model prior: {prior}");
        println!("  model  exact   chain");
        for mask in 0..16 {
            let freq = visits[mask] as f64 / chain.draws.len() as f64;
            if exact[mask] > 0.005 || freq > 0.005 {
                let alpha = ModelIndicator::from_mask(mask as u64, 4);
                let bits: String = alpha.0.iter().map(|a| if *a { '1' } else { '0' }).collect();
                println!("  {bits}   {:.3}   {freq:.3}", exact[mask]);
            }
        }
        println!("  inclusion frequencies: {:.3?}\n", inclusion_frequencies(&chain.draws));
    }
    Ok(())
}
