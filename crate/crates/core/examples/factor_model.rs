//! Latent factor model for the predictors: Gibbs estimate of
//! `Σx = BBᵀ + Λ` against the generating covariance and the sample covariance.
//!
//! cargo run --release --example factor_model

use nalgebra::{DMatrix, DVector};
use psvs::factor::{gibbs_sweep_factor, FactorConfig, FactorState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> psvs::Result<()> {
    let (n, p, k) = (400, 8, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let b_true = DMatrix::from_fn(p, k, |_, _| rng.random_range(-1.0..1.0));
    let lambda_true = DVector::from_fn(p, |_, _| rng.random_range(0.2..0.6));
    let sigma_true = &b_true * b_true.transpose() + DMatrix::from_diagonal(&lambda_true);
    let chol = sigma_true.clone().cholesky().unwrap().l();
    let z: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let x: DMatrix<f64> = z * chol.transpose();
    let xc = DMatrix::from_fn(n, p, |t, i| x[(t, i)] - x.column(i).mean());

    let cfg = FactorConfig { k, ..Default::default() };
    let mut state = FactorState::initialize(&xc, &cfg)?;
    let mut mean = DMatrix::zeros(p, p);
    let (burn, keep) = (500, 2000);
    for it in 0..burn + keep {
        gibbs_sweep_factor(&xc, &mut state, &cfg, &mut rng)?;
        if it >= burn {
            mean += state.sigma_x();
        }
    }
    mean /= keep as f64;
    let sample = xc.tr_mul(&xc) / (n - 1) as f64;
    let rel = |m: &DMatrix<f64>| (m - &sigma_true).norm() / sigma_true.norm();
    println!("relative Frobenius error of Σx");
    println!("  factor-model posterior mean: {:.4}", rel(&mean));
    println!("  sample covariance:           {:.4}", rel(&sample));
    Ok(())
}
