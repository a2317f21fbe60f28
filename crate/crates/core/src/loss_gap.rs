//! Monte Carlo loss gap `Δ_λ = ℒ(γ_λ) − ℒ(γ*)` and the probability
//! `π_λ = Pr(Δ_λ < 0)`, plus κ-threshold model selection.
//!
//! Replicate `r` draws from its own ChaCha stream (`seed`, stream `r`), so
//! results do not depend on thread scheduling. Every λ is evaluated on the
//! same replicate draws.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_strict, quantile_sorted, KahanSum};
use crate::model::{residual_covariance, PosteriorDraw, PredictiveSampler};
use crate::moments::PredictorMode;
use crate::path::SummaryPath;

pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_BAND: f64 = 0.75;

/// `½ (y − γx)ᵀ Ω (y − γx)`.
pub fn loss_at(y: &DVector<f64>, x: &DVector<f64>, omega: &DMatrix<f64>, gamma: &DMatrix<f64>) -> f64 {
    let r = y - gamma * x;
    0.5 * r.dot(&(omega * &r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGapResult {
    pub lambdas: Vec<f64>,
    /// `delta_samples[k][r]`: replicate `r` at grid entry `k`.
    pub delta_samples: Vec<Vec<f64>>,
    pub delta_mean: Vec<f64>,
    pub delta_sd: Vec<f64>,
    /// `(lower, upper)` of the central band.
    pub delta_quantiles: Vec<(f64, f64)>,
    pub pi: Vec<f64>,
    pub support_sizes: Vec<usize>,
    pub band: f64,
    pub mode: PredictorMode,
}

impl LossGapResult {
    pub fn replicates(&self) -> usize {
        self.delta_samples.first().map_or(0, Vec::len)
    }

    /// Monte Carlo standard error of each `delta_mean`.
    pub fn delta_se(&self) -> Vec<f64> {
        let r = self.replicates().max(1) as f64;
        self.delta_sd.iter().map(|sd| sd / r.sqrt()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGapOptions {
    pub replicates: usize,
    pub band: f64,
    pub seed: u64,
}

impl Default for LossGapOptions {
    fn default() -> Self {
        LossGapOptions {
            replicates: DEFAULT_REPLICATES,
            band: DEFAULT_BAND,
            seed: 1,
        }
    }
}

/// Per-draw quantities reused across replicates.
enum Prepared {
    Random {
        omega: DMatrix<f64>,
        sampler: PredictiveSampler,
    },
    Fixed {
        omega: DMatrix<f64>,
        /// `βᵀ XᵀX`.
        mean_c: DMatrix<f64>,
        psi_chol: DMatrix<f64>,
        /// `½ tr[Ω γ_λ S γ_λᵀ]` per grid entry.
        quad: Vec<f64>,
    },
}

pub fn delta_samples(
    path: &SummaryPath,
    draws: &[PosteriorDraw],
    mode: PredictorMode,
    x_observed: Option<&DMatrix<f64>>,
    opts: LossGapOptions,
) -> Result<LossGapResult> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws("no posterior draws for the loss gap".into()));
    }
    if path.is_empty() {
        return Err(Error::InvalidParameter("empty summary path".into()));
    }
    if opts.replicates == 0 {
        return Err(Error::InvalidParameter("replicate count must be positive".into()));
    }
    if !(opts.band > 0.0 && opts.band < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "band coverage must lie in (0, 1), got {}",
            opts.band
        )));
    }
    let (q, p) = path.gamma_star.shape();
    if draws[0].params.p() != p || draws[0].params.q() != q {
        return Err(Error::InvalidParameter(format!(
            "path is {q}×{p} but draws have q = {}, p = {}",
            draws[0].params.q(),
            draws[0].params.p()
        )));
    }

    let fixed_design = match mode {
        PredictorMode::Fixed => {
            let x = x_observed.ok_or_else(|| {
                Error::InvalidParameter("fixed-mode loss gap needs the observed X".into())
            })?;
            if x.ncols() != p {
                return Err(Error::InvalidParameter(format!(
                    "observed X has {} columns, expected {p}",
                    x.ncols()
                )));
            }
            let xtx = crate::linalg::symmetrize(&x.tr_mul(x));
            let chol = cholesky_strict(&xtx, "XᵀX")?.l();
            Some((x.nrows() as f64, xtx, chol))
        }
        PredictorMode::Random => None,
    };

    let diffs: Vec<DMatrix<f64>> = path.gammas.iter().map(|g| g - &path.gamma_star).collect();

    let prepared: Vec<Prepared> = draws
        .par_iter()
        .map(|d| -> Result<Prepared> {
            let omega = d.params.omega();
            Ok(match &fixed_design {
                None => Prepared::Random {
                    sampler: PredictiveSampler::new(&d.params)?,
                    omega,
                },
                Some((_, xtx, _)) => {
                    let psi = residual_covariance(&d.params.b, &d.params.psi_tilde);
                    let psi_chol = cholesky_strict(&psi, "Psi")?.l();
                    let quad = path
                        .gammas
                        .iter()
                        .map(|g| 0.5 * (&omega * g * xtx).component_mul(g).sum())
                        .collect();
                    Prepared::Fixed {
                        mean_c: d.params.beta.tr_mul(xtx),
                        psi_chol,
                        quad,
                        omega,
                    }
                }
            })
        })
        .collect::<Result<_>>()?;

    let per_replicate: Vec<Vec<f64>> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            let d = &prepared[rng.random_range(0..prepared.len())];
            match d {
                Prepared::Random { omega, sampler } => {
                    let (x, y) = sampler.sample_centered(&mut rng);
                    let base = loss_at(&y, &x, omega, &path.gamma_star);
                    path.gammas.iter().map(|g| loss_at(&y, &x, omega, g) - base).collect()
                }
                Prepared::Fixed { omega, mean_c, psi_chol, quad } => {
                    let (n, _, xtx_chol) = fixed_design.as_ref().unwrap();
                    // ỸᵀX = βᵀXᵀX + EᵀX, and vec(EᵀX) ~ N(0, XᵀX ⊗ Ψ)
                    let z = DMatrix::from_fn(q, p, |_, _| StandardNormal.sample(&mut rng));
                    let c = mean_c + psi_chol * z * xtx_chol.transpose();
                    let omega_c = omega * c;
                    let base = quad[quad.len() - 1];
                    diffs
                        .iter()
                        .zip(quad)
                        .map(|(dg, qk)| (-(omega_c.component_mul(dg).sum()) + qk - base) / n)
                        .collect()
                }
            }
        })
        .collect();

    Ok(summarize(path, per_replicate, mode, opts.band))
}

fn summarize(path: &SummaryPath, per_replicate: Vec<Vec<f64>>, mode: PredictorMode, band: f64) -> LossGapResult {
    let g = path.len();
    let r = per_replicate.len();
    let mut delta_samples = vec![Vec::with_capacity(r); g];
    for rep in per_replicate {
        for (k, v) in rep.into_iter().enumerate() {
            delta_samples[k].push(v);
        }
    }
    let mut delta_mean = Vec::with_capacity(g);
    let mut delta_sd = Vec::with_capacity(g);
    let mut delta_quantiles = Vec::with_capacity(g);
    let mut pi = Vec::with_capacity(g);
    for (k, samples) in delta_samples.iter().enumerate() {
        let mean = samples.iter().copied().collect::<KahanSum>().total() / r as f64;
        let ss = samples.iter().map(|v| (v - mean).powi(2)).collect::<KahanSum>().total();
        delta_sd.push(if r > 1 { (ss / (r - 1) as f64).sqrt() } else { 0.0 });
        delta_mean.push(mean);
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        delta_quantiles.push((
            quantile_sorted(&sorted, (1.0 - band) / 2.0),
            quantile_sorted(&sorted, (1.0 + band) / 2.0),
        ));
        pi.push(if path.lambdas[k] == 0.0 {
            1.0
        } else {
            samples.iter().filter(|v| **v < 0.0).count() as f64 / r as f64
        });
    }
    LossGapResult {
        lambdas: path.lambdas.clone(),
        delta_samples,
        delta_mean,
        delta_sd,
        delta_quantiles,
        pi,
        support_sizes: path.support_sizes(),
        band,
        mode,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub lambda: f64,
    pub gamma: DMatrix<f64>,
    pub support: Vec<(usize, usize)>,
    pub pi: f64,
    /// False when no grid entry had `π > κ` and the densest model was returned.
    pub qualified: bool,
}

/// The sparsest (largest-λ) summary with `π_λ > κ`.
pub fn select_model(result: &LossGapResult, path: &SummaryPath, kappa: f64) -> Selection {
    let pick = |index: usize, qualified: bool| Selection {
        index,
        lambda: path.lambdas[index],
        gamma: path.gammas[index].clone(),
        support: path.support_sets[index].clone(),
        pi: result.pi[index],
        qualified,
    };
    match result.pi.iter().position(|&p| p > kappa) {
        Some(k) => pick(k, true),
        None => {
            let densest = (0..path.len())
                .max_by_key(|&k| (path.support_sets[k].len(), k))
                .unwrap_or(0);
            pick(densest, false)
        }
    }
}
