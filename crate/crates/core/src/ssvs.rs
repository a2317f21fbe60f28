//! Matrix-variate stochastic search variable selection for `Y | X`.
//!
//! A single inclusion vector `α` is shared by all q responses. With a g-prior
//! on each response's coefficients and the non-informative `σ⁻¹` prior on its
//! scale, the marginal likelihood of `Y` factorizes over response columns, so
//! the Bayes factor of `α` against the null model is a product of univariate
//! g-prior Bayes factors, each with its own empirical-Bayes `g`.
//!
//! Residual cross-correlation is carried by one latent factor:
//! `ε_t = b f_t + ε̃_t` with `f_t ~ N(0, 1)` and `ε̃_t ~ N(0, Ψ̃)`, `Ψ̃`
//! diagonal, so `Ψ = b bᵀ + Ψ̃`. Conditional on `(f, b)` the stochastic
//! search runs on the adjusted responses `Y − f bᵀ`.
//!
//! All Bayes-factor and inclusion-probability arithmetic happens in log space.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::factor::{gibbs_sweep_factor, FactorConfig, FactorState};
use crate::linalg::{sample_inverse_gamma, solve_lower_transpose};
use crate::model::{column_means, Dataset, JointParams, PosteriorDraw};

/// Upper bound on the empirical-Bayes `g`; reached when a model fits (almost) perfectly.
pub const G_CAP: f64 = 1e6;

/// Relative pivot size below which a Gram submatrix is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPrior {
    Uniform,
    /// Equal total mass on every model size.
    MultiplicityAdjusted,
}

impl std::str::FromStr for ModelPrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(ModelPrior::Uniform),
            "multiplicity_adjusted" | "multiplicity-adjusted" | "multiplicity" => {
                Ok(ModelPrior::MultiplicityAdjusted)
            }
            other => Err(Error::Config(format!("unknown model prior `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelPrior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelPrior::Uniform => "uniform",
            ModelPrior::MultiplicityAdjusted => "multiplicity_adjusted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsvsConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub model_prior: ModelPrior,
    /// `false` pins `α` to all ones (no point-mass component).
    pub point_mass: bool,
    pub seed: u64,
    /// Sample the residual latent factor; when off, `b ≡ 0` and Ψ is diagonal.
    pub residual_factor: bool,
    /// Prior variance of each residual loading `b_j`.
    pub residual_loading_prior_var: f64,
}

impl Default for SsvsConfig {
    fn default() -> Self {
        SsvsConfig {
            n_iter: 5000,
            burn_in: 1000,
            thin: 1,
            model_prior: ModelPrior::Uniform,
            point_mass: true,
            seed: 1,
            residual_factor: true,
            residual_loading_prior_var: 1.0,
        }
    }
}

impl SsvsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 {
            return Err(Error::Config("n_iter must be positive".into()));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if !(self.residual_loading_prior_var > 0.0) {
            return Err(Error::Config("residual loading prior variance must be positive".into()));
        }
        Ok(())
    }
}

/// Binary inclusion vector over the p predictors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelIndicator(pub Vec<bool>);

impl ModelIndicator {
    pub fn empty(p: usize) -> Self {
        ModelIndicator(vec![false; p])
    }

    pub fn full(p: usize) -> Self {
        ModelIndicator(vec![true; p])
    }

    /// Model whose included predictors are the set bits of `mask`.
    pub fn from_mask(mask: u64, p: usize) -> Self {
        ModelIndicator((0..p).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (i, &on)| if on { m | 1 << i } else { m })
    }

    pub fn p(&self) -> usize {
        self.0.len()
    }

    /// Number of included predictors, `k_α`.
    pub fn size(&self) -> usize {
        self.0.iter().filter(|&&a| a).count()
    }

    pub fn included(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }
}

/// Cross-products of centered `X` and `Y` that every subset regression needs.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    n: usize,
    gram: DMatrix<f64>,
    xty: DMatrix<f64>,
    yty: DVector<f64>,
}

/// Least-squares fit of every response on the predictors selected by `α`.
#[derive(Debug, Clone)]
pub struct SubsetFit {
    pub included: Vec<usize>,
    /// Cholesky of `X_αᵀX_α`; `None` for the null model.
    chol: Option<Cholesky<f64, Dyn>>,
    /// Least-squares coefficients, k×q.
    pub coef: DMatrix<f64>,
    pub sse: DVector<f64>,
    pub sse_null: DVector<f64>,
}

impl SubsetFit {
    pub fn k(&self) -> usize {
        self.included.len()
    }

    pub fn r_squared(&self, i: usize) -> f64 {
        if self.sse_null[i] <= 0.0 {
            return 0.0;
        }
        (1.0 - self.sse[i] / self.sse_null[i]).clamp(0.0, 1.0)
    }
}

impl SufficientStats {
    /// `x` and `y` must already be column-centered.
    pub fn new(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        SufficientStats {
            n: x.nrows(),
            gram: x.transpose() * x,
            xty: x.transpose() * y,
            yty: DVector::from_iterator(y.ncols(), y.column_iter().map(|c| c.norm_squared())),
        }
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        SufficientStats::new(&ds.x, &ds.y)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.gram.nrows()
    }

    pub fn q(&self) -> usize {
        self.xty.ncols()
    }

    pub fn fit(&self, alpha: &ModelIndicator) -> Result<SubsetFit> {
        let included = alpha.included();
        let k = included.len();
        let q = self.q();
        if k == 0 {
            return Ok(SubsetFit {
                included,
                chol: None,
                coef: DMatrix::zeros(0, q),
                sse: self.yty.clone(),
                sse_null: self.yty.clone(),
            });
        }
        if k + 1 >= self.n {
            return Err(Error::SingularDesign(format!(
                "model with {k} predictors needs N > k + 1, N = {}",
                self.n
            )));
        }
        let sub = self.gram.select_rows(&included).select_columns(&included);
        let max_diag = sub.diagonal().max();
        let chol = Cholesky::new(sub).ok_or_else(|| {
            Error::SingularDesign(format!("X_alpha for predictors {included:?} is rank deficient"))
        })?;
        let l = chol.l_dirty();
        let min_pivot = (0..k).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if !(max_diag > 0.0) || min_pivot < SINGULAR_PIVOT * max_diag {
            return Err(Error::SingularDesign(format!(
                "X_alpha for predictors {included:?} is numerically rank deficient"
            )));
        }
        let xty = self.xty.select_rows(&included);
        let coef = chol.solve(&xty);
        let sse = DVector::from_fn(q, |i, _| {
            (self.yty[i] - xty.column(i).dot(&coef.column(i))).max(0.0)
        });
        Ok(SubsetFit {
            included,
            chol: Some(chol),
            coef,
            sse,
            sse_null: self.yty.clone(),
        })
    }

    /// `log B_{α0} = Σᵢ log B̃ᵢ`, each term with its own empirical-Bayes `g`.
    pub fn log_bayes_factor(&self, alpha: &ModelIndicator) -> Result<f64> {
        let fit = self.fit(alpha)?;
        Ok(log_bayes_factor_of_fit(&fit, self.n))
    }
}

fn log_bayes_factor_of_fit(fit: &SubsetFit, n: usize) -> f64 {
    let k = fit.k();
    if k == 0 {
        return 0.0;
    }
    (0..fit.sse.len())
        .map(|i| {
            if fit.sse_null[i] <= 0.0 {
                return 0.0;
            }
            let g = empirical_bayes_g(fit.r_squared(i), k, n).unwrap_or(0.0);
            log_bayes_factor_univariate(fit.sse[i], fit.sse_null[i], g, k, n)
        })
        .sum()
}

/// Residual sums of squares of response `i` under `α` and under the null model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsePair {
    pub sse_alpha: f64,
    pub sse_null: f64,
    pub r_squared: f64,
}

pub fn sse_pair(dataset: &Dataset, alpha: &ModelIndicator, i: usize) -> Result<SsePair> {
    let fit = SufficientStats::from_dataset(dataset).fit(alpha)?;
    Ok(SsePair {
        sse_alpha: fit.sse[i],
        sse_null: fit.sse_null[i],
        r_squared: fit.r_squared(i),
    })
}

/// Local empirical-Bayes `ĝ = max{F − 1, 0}` with the regression F statistic
/// `F = (R²/k) / ((1 − R²)/(N − 1 − k))`, capped at [`G_CAP`].
pub fn empirical_bayes_g(r_squared: f64, k_alpha: usize, n: usize) -> Result<f64> {
    if k_alpha == 0 || k_alpha + 2 > n {
        return Err(Error::InvalidParameter(format!(
            "empirical-Bayes g needs 1 <= k <= N - 2, got k = {k_alpha}, N = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&r_squared) {
        return Err(Error::InvalidParameter(format!("R² = {r_squared} outside [0, 1]")));
    }
    if r_squared >= 1.0 {
        return Ok(G_CAP);
    }
    let f = (r_squared / k_alpha as f64) / ((1.0 - r_squared) / (n - 1 - k_alpha) as f64);
    Ok((f - 1.0).clamp(0.0, G_CAP))
}

/// Log of the univariate g-prior Bayes factor against the null model,
///
/// ```text
/// B = (1 + g)^{(N−k−1)/2} / (1 + g·SSE_α/SSE₀)^{(N−1)/2}
/// ```
///
/// which is the ratio of marginal likelihoods with the intercept and `β`
/// integrated out under the g-prior and `σ` under `σ⁻¹`.
pub fn log_bayes_factor_univariate(
    sse_alpha: f64,
    sse_null: f64,
    g: f64,
    k_alpha: usize,
    n: usize,
) -> f64 {
    debug_assert!(sse_null > 0.0);
    if g == 0.0 {
        return 0.0;
    }
    let ratio = sse_alpha / sse_null;
    let n = n as f64;
    let k = k_alpha as f64;
    0.5 * (n - k - 1.0) * g.ln_1p() - 0.5 * (n - 1.0) * (g * ratio).ln_1p()
}

pub fn bayes_factor_univariate(
    sse_alpha: f64,
    sse_null: f64,
    g: f64,
    k_alpha: usize,
    n: usize,
) -> f64 {
    log_bayes_factor_univariate(sse_alpha, sse_null, g, k_alpha, n).exp()
}

/// Log Bayes factor of `α` against the null model for the whole response matrix.
pub fn log_bayes_factor_matrix(dataset: &Dataset, alpha: &ModelIndicator) -> Result<f64> {
    SufficientStats::from_dataset(dataset).log_bayes_factor(alpha)
}

/// Log prior mass of a model. Uniform returns 0 (an unnormalized constant);
/// the multiplicity-adjusted prior is `1 / ((p + 1)·C(p, k))`.
pub fn model_prior_log(alpha: &ModelIndicator, kind: ModelPrior) -> f64 {
    match kind {
        ModelPrior::Uniform => 0.0,
        ModelPrior::MultiplicityAdjusted => {
            let p = alpha.p();
            let k = alpha.size();
            -((p + 1) as f64).ln() - ln_binomial(p, k)
        }
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum()
}

/// `p = e^a / (e^a + e^b)` computed without overflow.
pub fn inclusion_probability(log_score_in: f64, log_score_out: f64) -> f64 {
    let d = log_score_out - log_score_in;
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

/// Caches `log B_{α0} + log P(M_α)` per model for one fixed response matrix.
#[derive(Debug)]
pub struct ModelScorer<'a> {
    stats: &'a SufficientStats,
    prior: ModelPrior,
    cache: HashMap<ModelIndicator, Option<f64>>,
}

impl<'a> ModelScorer<'a> {
    pub fn new(stats: &'a SufficientStats, prior: ModelPrior) -> Self {
        ModelScorer {
            stats,
            prior,
            cache: HashMap::new(),
        }
    }

    /// Unnormalized log posterior of a model; `None` if its design is singular.
    pub fn log_score(&mut self, alpha: &ModelIndicator) -> Result<Option<f64>> {
        if let Some(v) = self.cache.get(alpha) {
            return Ok(*v);
        }
        let score = match self.stats.log_bayes_factor(alpha) {
            Ok(lbf) => Some(lbf + model_prior_log(alpha, self.prior)),
            Err(Error::SingularDesign(_)) => None,
            Err(e) => return Err(e),
        };
        self.cache.insert(alpha.clone(), score);
        Ok(score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaStep {
    /// Component resampled with inclusion probability `p_i`.
    Sampled { inclusion_prob: f64 },
    /// Both candidate models were singular; the component was left alone.
    BothSingular,
}

/// Resamples component `i` of `α` from its full conditional.
pub fn gibbs_step_alpha_scored<R: Rng + ?Sized>(
    scorer: &mut ModelScorer<'_>,
    alpha: &mut ModelIndicator,
    i: usize,
    rng: &mut R,
) -> Result<AlphaStep> {
    let mut with = alpha.clone();
    with.0[i] = true;
    let mut without = alpha.clone();
    without.0[i] = false;
    let prob = match (scorer.log_score(&with)?, scorer.log_score(&without)?) {
        (Some(a), Some(b)) => inclusion_probability(a, b),
        (Some(_), None) => 1.0,
        (None, Some(_)) => 0.0,
        (None, None) => return Ok(AlphaStep::BothSingular),
    };
    alpha.0[i] = rng.random::<f64>() < prob;
    Ok(AlphaStep::Sampled {
        inclusion_prob: prob,
    })
}

/// Single-site Gibbs update of `α_i` on a dataset.
pub fn gibbs_step_alpha<R: Rng + ?Sized>(
    dataset: &Dataset,
    alpha: &mut ModelIndicator,
    i: usize,
    config: &SsvsConfig,
    rng: &mut R,
) -> Result<AlphaStep> {
    if !config.point_mass {
        alpha.0.fill(true);
        return Ok(AlphaStep::Sampled { inclusion_prob: 1.0 });
    }
    let stats = SufficientStats::from_dataset(dataset);
    let mut scorer = ModelScorer::new(&stats, config.model_prior);
    gibbs_step_alpha_scored(&mut scorer, alpha, i, rng)
}

/// Sequential scan over components `0..p`. Returns the number of
/// both-singular events.
pub fn sweep_alpha<R: Rng + ?Sized>(
    scorer: &mut ModelScorer<'_>,
    alpha: &mut ModelIndicator,
    rng: &mut R,
) -> Result<usize> {
    let mut skipped = 0;
    for i in 0..alpha.p() {
        if gibbs_step_alpha_scored(scorer, alpha, i, rng)? == AlphaStep::BothSingular {
            skipped += 1;
        }
    }
    Ok(skipped)
}

/// Exact posterior over all `2^p` models by enumeration. Only for small p.
pub fn exact_model_posterior(dataset: &Dataset, prior: ModelPrior) -> Result<Vec<f64>> {
    let p = dataset.p();
    if p > 20 {
        return Err(Error::InvalidParameter(format!("enumeration over 2^{p} models refused")));
    }
    let stats = SufficientStats::from_dataset(dataset);
    let mut logs = Vec::with_capacity(1 << p);
    for mask in 0..(1u64 << p) {
        let alpha = ModelIndicator::from_mask(mask, p);
        let score = match stats.log_bayes_factor(&alpha) {
            Ok(v) => v + model_prior_log(&alpha, prior),
            Err(Error::SingularDesign(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        logs.push(score);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Draws `(β, σ²)` given `α` under the g-prior with per-response `g`.
///
/// `σᵢ² ~ IG((N−1)/2, (SSE₀ + g·SSE_α) / (2(1+g)))` and
/// `β_α⁽ⁱ⁾ | σᵢ ~ N(g/(1+g)·β̂, g/(1+g)·σᵢ²(X_αᵀX_α)⁻¹)`; rows outside `α` are zero.
pub fn sample_beta_sigma_stats<R: Rng + ?Sized>(
    stats: &SufficientStats,
    alpha: &ModelIndicator,
    g_per_response: &[f64],
    rng: &mut R,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (p, q, n) = (stats.p(), stats.q(), stats.n());
    if g_per_response.len() != q {
        return Err(Error::InvalidParameter(format!(
            "expected {q} g values, got {}",
            g_per_response.len()
        )));
    }
    let fit = stats.fit(alpha)?;
    let k = fit.k();
    let mut beta = DMatrix::zeros(p, q);
    let mut sigma2 = DVector::zeros(q);
    let shape = 0.5 * (n - 1) as f64;
    for i in 0..q {
        let g = if k == 0 { 0.0 } else { g_per_response[i] };
        let shrink = g / (1.0 + g);
        let scale = 0.5 * (fit.sse_null[i] + g * fit.sse[i]) / (1.0 + g);
        sigma2[i] = sample_inverse_gamma(shape, scale.max(f64::MIN_POSITIVE), rng);
        if k == 0 || g == 0.0 {
            continue;
        }
        let chol = fit.chol.as_ref().expect("non-null model has a factorization");
        let z = DMatrix::from_fn(k, 1, |_, _| StandardNormal.sample(rng));
        let noise = solve_lower_transpose(&chol.l(), &z) * (shrink * sigma2[i]).sqrt();
        for (r, &row) in fit.included.iter().enumerate() {
            beta[(row, i)] = shrink * fit.coef[(r, i)] + noise[(r, 0)];
        }
    }
    Ok((beta, sigma2))
}

pub fn sample_beta_sigma<R: Rng + ?Sized>(
    dataset: &Dataset,
    alpha: &ModelIndicator,
    g_per_response: &[f64],
    rng: &mut R,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    sample_beta_sigma_stats(&SufficientStats::from_dataset(dataset), alpha, g_per_response, rng)
}

/// Empirical-Bayes `g` for every response under `α` (0 for the null model).
pub fn empirical_bayes_g_all(stats: &SufficientStats, alpha: &ModelIndicator) -> Result<Vec<f64>> {
    let fit = stats.fit(alpha)?;
    let k = fit.k();
    (0..stats.q())
        .map(|i| {
            if k == 0 {
                Ok(0.0)
            } else {
                empirical_bayes_g(fit.r_squared(i), k, stats.n())
            }
        })
        .collect()
}

/// Mean and variance of `f_t | e_t, b, Ψ̃`: `N(v·bᵀΨ̃⁻¹e_t, v)`, `v = (1 + bᵀΨ̃⁻¹b)⁻¹`.
pub fn residual_factor_conditional(
    e_t: &DVector<f64>,
    b: &DVector<f64>,
    psi_tilde: &DVector<f64>,
) -> (f64, f64) {
    let w = b.component_div(psi_tilde);
    let v = 1.0 / (1.0 + b.dot(&w));
    (v * w.dot(e_t), v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFactorDraw {
    pub f: DVector<f64>,
    pub b: DVector<f64>,
    pub psi_tilde: DVector<f64>,
}

/// Gibbs update of the residual latent factor given residuals `e = Y − Xβ` (N×q):
/// scores `f`, then loadings `b` (normal prior with variance `b_prior_var`),
/// then `Ψ̃` (inverse-gamma under the `σ⁻¹` prior) treating `f` as a regressor.
pub fn sample_residual_factor<R: Rng + ?Sized>(
    residuals: &DMatrix<f64>,
    b: &DVector<f64>,
    psi_tilde: &DVector<f64>,
    b_prior_var: f64,
    rng: &mut R,
) -> Result<ResidualFactorDraw> {
    let (n, q) = residuals.shape();
    if b.len() != q || psi_tilde.len() != q {
        return Err(Error::InvalidParameter("residual factor dimensions mismatch".into()));
    }
    if psi_tilde.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("psi_tilde entries must be positive".into()));
    }
    let w = b.component_div(psi_tilde);
    let v = 1.0 / (1.0 + b.dot(&w));
    let sd = v.sqrt();
    let proj = residuals * &w;
    let f = DVector::from_fn(n, |t, _| {
        v * proj[t] + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    });

    let ff = f.norm_squared();
    let fe = residuals.transpose() * &f;
    let mut b_new = DVector::zeros(q);
    let mut psi_new = DVector::zeros(q);
    for j in 0..q {
        let prec = ff / psi_tilde[j] + 1.0 / b_prior_var;
        let mean = fe[j] / psi_tilde[j] / prec;
        let z: f64 = StandardNormal.sample(rng);
        b_new[j] = mean + z / prec.sqrt();
    }
    let shape = 0.5 * (n.max(2) - 1) as f64;
    for j in 0..q {
        let ssr: f64 = (0..n)
            .map(|t| (residuals[(t, j)] - b_new[j] * f[t]).powi(2))
            .sum();
        psi_new[j] = sample_inverse_gamma(shape, (0.5 * ssr).max(f64::MIN_POSITIVE), rng);
    }
    Ok(ResidualFactorDraw {
        f,
        b: b_new,
        psi_tilde: psi_new,
    })
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<PosteriorDraw>,
    /// α updates skipped because both candidate models were singular.
    pub singular_skips: usize,
}

/// Runs one Gibbs chain for the full joint model.
///
/// Each iteration: (i) sequential α sweep on the factor-adjusted responses
/// (skipped when `point_mass` is off), (ii) `(β, σ²)` from the g-prior
/// posterior, (iii) residual latent factor `(f, b, Ψ̃)`, (iv) one sweep of the
/// predictor factor model, and finally `μy`.
pub fn run_chain(
    dataset: &Dataset,
    config: &SsvsConfig,
    factor_config: &FactorConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    let (n, p, q) = (dataset.n(), dataset.p(), dataset.q());
    factor_config.validate(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut alpha = ModelIndicator::full(p);
    let mut b = DVector::zeros(q);
    let mut f = DVector::zeros(n);
    let mut factor_state = FactorState::initialize(&dataset.x, factor_config)?;

    let mut draws = Vec::new();
    let mut singular_skips = 0;

    for iter in 0..config.n_iter {
        let step = |e: Error| {
            Error::InvalidParameter(format!("Gibbs sweep {iter} failed: {e}"))
        };
        // responses with the residual factor removed, re-centered
        let mut y_adj = &dataset.y - &f * b.transpose();
        let means = column_means(&y_adj);
        for (j, mut col) in y_adj.column_iter_mut().enumerate() {
            col.add_scalar_mut(-means[j]);
        }
        let stats = SufficientStats::new(&dataset.x, &y_adj);

        if config.point_mass {
            let mut scorer = ModelScorer::new(&stats, config.model_prior);
            singular_skips += sweep_alpha(&mut scorer, &mut alpha, &mut rng).map_err(step)?;
        } else {
            alpha.0.fill(true);
        }

        let g = empirical_bayes_g_all(&stats, &alpha).map_err(step)?;
        let (beta_draw, sigma2) =
            sample_beta_sigma_stats(&stats, &alpha, &g, &mut rng).map_err(step)?;
        let beta = beta_draw;
        let mut psi_tilde = sigma2;

        if config.residual_factor {
            let residuals = &dataset.y - &dataset.x * &beta;
            let draw = sample_residual_factor(
                &residuals,
                &b,
                &psi_tilde,
                config.residual_loading_prior_var,
                &mut rng,
            )
            .map_err(step)?;
            f = draw.f;
            b = draw.b;
            psi_tilde = draw.psi_tilde;
        }

        gibbs_sweep_factor(&dataset.x, &mut factor_state, factor_config, &mut rng)
            .map_err(step)?;

        // μy | · ~ N(ȳ + βᵀ(μx − x̄), Ψ/N) in the original units
        let mu_x = &factor_state.mu_x + &dataset.x_mean;
        let shift = beta.transpose() * &factor_state.mu_x;
        let fz: f64 = StandardNormal.sample(&mut rng);
        let z = crate::linalg::standard_normal_vector(q, &mut rng);
        let noise = (&b * fz + psi_tilde.map(f64::sqrt).component_mul(&z)) / (n as f64).sqrt();
        let mu_y = &dataset.y_mean + shift + noise;

        if iter >= config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin) {
            draws.push(PosteriorDraw {
                iteration: iter,
                params: JointParams {
                    beta: beta.clone(),
                    b: b.clone(),
                    psi_tilde: psi_tilde.clone(),
                    b_load: factor_state.b_load.clone(),
                    lambda: factor_state.lambda.clone(),
                    mu_x,
                    mu_y,
                    alpha: alpha.0.clone(),
                },
            });
        }
    }
    Ok(ChainOutput {
        draws,
        singular_skips,
    })
}

/// Runs `chains` independent chains with seeds `seed, seed + 1, …` on separate
/// threads and concatenates their draws in chain order.
pub fn run_chains(
    dataset: &Dataset,
    config: &SsvsConfig,
    factor_config: &FactorConfig,
    chains: usize,
) -> Result<ChainOutput> {
    let chains = chains.max(1);
    let results: Vec<Result<ChainOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..chains)
            .map(|c| {
                let cfg = SsvsConfig {
                    seed: config.seed.wrapping_add(c as u64),
                    ..config.clone()
                };
                s.spawn(move || run_chain(dataset, &cfg, factor_config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let mut out = ChainOutput {
        draws: Vec::new(),
        singular_skips: 0,
    };
    for r in results {
        let r = r?;
        out.draws.extend(r.draws);
        out.singular_skips += r.singular_skips;
    }
    Ok(out)
}

/// Fraction of draws that include each predictor.
pub fn inclusion_frequencies(draws: &[PosteriorDraw]) -> Vec<f64> {
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    let p = first.params.alpha.len();
    let mut counts = vec![0usize; p];
    for d in draws {
        for (c, &a) in counts.iter_mut().zip(&d.params.alpha) {
            *c += a as usize;
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / draws.len() as f64)
        .collect()
}
