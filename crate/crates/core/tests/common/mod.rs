#![allow(dead_code)]

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use psvs::moments::{MomentSet, PredictorMode};
use psvs::pipeline::RunConfig;
use psvs::synthetic::SyntheticSpec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.25
}

pub fn random_moments(q: usize, p: usize, rng: &mut ChaCha8Rng) -> MomentSet {
    let a = DMatrix::from_fn(q, p, |_, _| rng.random_range(-2.0..2.0));
    let s = random_spd(p, rng);
    let m = random_spd(q, rng);
    MomentSet::from_parts(a, s, m, PredictorMode::Random).unwrap()
}

/// The seeded recovery benchmark: 5 responses, 10 predictors, 3 of which
/// drive every response, and a residual covariance with one common factor.
pub fn benchmark_spec() -> SyntheticSpec {
    SyntheticSpec {
        n: 500,
        p: 10,
        q: 5,
        support: vec![0, 3, 6],
        coefficient: 2.0,
        predictor_factors: 2,
        residual_loading: 0.5,
        idiosyncratic_var: 0.25,
        seed: 2024,
        ..Default::default()
    }
}

pub fn benchmark_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        output_dir: out.to_path_buf(),
        kappas: vec![0.125],
        seed: 2024,
        grid_size: 50,
        grid_ratio: 1e-3,
        replicates: 10_000,
        ..Default::default()
    };
    cfg.ssvs.n_iter = 5000;
    cfg.ssvs.burn_in = 1000;
    cfg.factor.k = 2;
    cfg
}

/// Marginal likelihood ratios by brute-force numerical integration.
///
/// `y | a, β, σ ~ N(a1 + Xβ, σ²I)` with X centered,
/// `β | σ ~ N(0, gσ²(XᵀX)⁻¹)`, a flat prior on the intercept `a` and the
/// `σ⁻¹` prior on σ. β is integrated out through the dense covariance
/// `σ²(I + g X(XᵀX)⁻¹Xᵀ)`; `a` and `log σ` with composite Simpson rules.
pub mod quadrature {
    use super::*;

    fn simpson(m: usize) -> Vec<f64> {
        (0..=m)
            .map(|i| match i {
                0 => 1.0,
                _ if i == m => 1.0,
                _ if i % 2 == 1 => 4.0,
                _ => 2.0,
            })
            .collect()
    }

    fn log_marginal(y: &DVector<f64>, shape: &DMatrix<f64>) -> f64 {
        let n = y.len() as f64;
        let chol = shape.clone().cholesky().expect("covariance shape is PD");
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let ones = DVector::from_element(y.len(), 1.0);
        let ci_y = chol.solve(y);
        let ci_1 = chol.solve(&ones);
        let (yy, y1, c11) = (y.dot(&ci_y), ones.dot(&ci_y), ones.dot(&ci_1));
        let ybar = y.mean();
        let spread = (y.map(|v| (v - ybar).powi(2)).sum() / n).sqrt().max(1e-12);

        let (mu, ms) = (1600, 800);
        let (u_lo, u_hi) = (spread.ln() - 8.0, spread.ln() + 4.0);
        let (s_lo, s_hi) = (-12.0, 12.0);
        let (hu, hs) = ((u_hi - u_lo) / mu as f64, (s_hi - s_lo) / ms as f64);
        let (wu, ws) = (simpson(mu), simpson(ms));
        let mut terms = Vec::with_capacity((mu + 1) * (ms + 1));
        for (iu, wi) in wu.iter().enumerate() {
            let sigma = (u_lo + iu as f64 * hu).exp();
            for (is, wj) in ws.iter().enumerate() {
                let a = ybar + sigma * (s_lo + is as f64 * hs);
                let quad = yy - 2.0 * a * y1 + a * a * c11;
                let log_lik = -0.5 * n * (2.0 * std::f64::consts::PI * sigma * sigma).ln()
                    - 0.5 * log_det
                    - quad / (2.0 * sigma * sigma);
                terms.push(log_lik + sigma.ln() + (wi * wj * hu * hs / 9.0).ln());
            }
        }
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    /// `log m_α(y) − log m_0(y)`; `x` must have centered columns.
    pub fn log_bayes_factor(y: &DVector<f64>, x: &DMatrix<f64>, g: f64) -> f64 {
        let n = y.len();
        let gram = x.transpose() * x;
        let proj = x * gram.try_inverse().expect("invertible Gram") * x.transpose();
        log_marginal(y, &(DMatrix::identity(n, n) + proj * g)) - log_marginal(y, &DMatrix::identity(n, n))
    }
}
