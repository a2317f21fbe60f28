//! Latent factor model for the predictor marginal:
//! `x_t = μx + B f_t + v_t`, `f_t ~ N(0, I_k)`, `v_t ~ N(0, Λ)` with `Λ` diagonal,
//! so that `Σx = B Bᵀ + Λ`.
//!
//! Loadings carry no identification constraint; only `Σx` and `μx` are used
//! downstream and both are invariant to rotations of `B`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_strict, sample_inverse_gamma, solve_lower_transpose};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorConfig {
    /// Number of latent factors.
    pub k: usize,
    /// Prior variance of each loading.
    pub prior_scale_loadings: f64,
    pub prior_shape_idio: f64,
    pub prior_scale_idio: f64,
    /// Prior variance of each component of μx (Φ = prior_var_mu·I).
    pub prior_var_mu: f64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            k: 3,
            prior_scale_loadings: 1.0,
            prior_shape_idio: 2.0,
            prior_scale_idio: 1.0,
            prior_var_mu: 100.0,
        }
    }
}

impl FactorConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.k > p {
            return Err(Error::Config(format!(
                "number of predictor factors k = {} exceeds p = {p}",
                self.k
            )));
        }
        let positive = [
            self.prior_scale_loadings,
            self.prior_shape_idio,
            self.prior_scale_idio,
            self.prior_var_mu,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("factor prior parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    /// Loadings, p×k.
    pub b_load: DMatrix<f64>,
    /// Diagonal of Λ.
    pub lambda: DVector<f64>,
    pub mu_x: DVector<f64>,
    /// Latent scores, N×k.
    pub scores: DMatrix<f64>,
}

impl FactorState {
    /// Starting point from the leading principal components of the sample covariance.
    pub fn initialize(x: &DMatrix<f64>, config: &FactorConfig) -> Result<Self> {
        let (n, p) = x.shape();
        config.validate(p)?;
        let mu = crate::model::column_means(x);
        let mut xc = x.clone();
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-mu[j]);
        }
        let cov = xc.transpose() * &xc / (n.max(2) - 1) as f64;
        let eig = cov.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut b_load = DMatrix::zeros(p, config.k);
        for (c, &idx) in order.iter().take(config.k).enumerate() {
            let scale = eig.eigenvalues[idx].max(0.0).sqrt();
            b_load.set_column(c, &(eig.eigenvectors.column(idx) * scale * 0.9));
        }
        let implied = &b_load * b_load.transpose();
        let lambda = DVector::from_fn(p, |j, _| {
            (cov[(j, j)] - implied[(j, j)]).max(0.1 * cov[(j, j)]).max(1e-8)
        });
        Ok(FactorState {
            b_load,
            lambda,
            mu_x: mu,
            scores: DMatrix::zeros(n, config.k),
        })
    }

    pub fn sigma_x(&self) -> DMatrix<f64> {
        sigma_x_of(self)
    }
}

/// Σx = B Bᵀ + Λ.
pub fn sigma_x_of(state: &FactorState) -> DMatrix<f64> {
    low_rank_plus_diagonal(&state.b_load, &state.lambda)
}

pub(crate) fn low_rank_plus_diagonal(b: &DMatrix<f64>, diag: &DVector<f64>) -> DMatrix<f64> {
    let mut out = b * b.transpose();
    for (j, d) in diag.iter().enumerate() {
        out[(j, j)] += d;
    }
    out
}

/// One full conjugate sweep: scores, loadings, idiosyncratic variances, then μx.
pub fn gibbs_sweep_factor<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    state: &mut FactorState,
    config: &FactorConfig,
    rng: &mut R,
) -> Result<()> {
    let (n, p) = x.shape();
    config.validate(p)?;
    let k = config.k;
    if state.b_load.shape() != (p, k) || state.lambda.len() != p || state.mu_x.len() != p {
        return Err(Error::InvalidParameter(format!(
            "factor state does not match p = {p}, k = {k}"
        )));
    }
    if state.lambda.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("Lambda entries must be positive".into()));
    }

    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-state.mu_x[j]);
    }

    // f_t | · ~ N(V Bᵀ Λ⁻¹ x_t, V), V = (I + Bᵀ Λ⁻¹ B)⁻¹
    if k > 0 {
        let inv_lambda = state.lambda.map(|v| 1.0 / v);
        let scaled_b = DMatrix::from_fn(p, k, |j, c| state.b_load[(j, c)] * inv_lambda[j]);
        let precision = DMatrix::identity(k, k) + state.b_load.transpose() * &scaled_b;
        let chol = cholesky_strict(&precision, "factor score precision")?;
        let means = chol.solve(&(scaled_b.transpose() * xc.transpose()));
        let z = DMatrix::from_fn(k, n, |_, _| StandardNormal.sample(rng));
        let noise = solve_lower_transpose(&chol.l(), &z);
        state.scores = (means + noise).transpose();
    } else {
        state.scores = DMatrix::zeros(n, 0);
    }

    // loadings row j | · ~ N(P⁻¹ Fᵀ x_j / λ_j, P⁻¹), P = FᵀF/λ_j + I/s²
    if k > 0 {
        let ftf = state.scores.transpose() * &state.scores;
        let ftx = state.scores.transpose() * &xc;
        let prior_prec = 1.0 / config.prior_scale_loadings;
        for j in 0..p {
            let lam = state.lambda[j];
            let precision = &ftf / lam + DMatrix::identity(k, k) * prior_prec;
            let chol = cholesky_strict(&precision, "loading precision")?;
            let rhs = ftx.column(j) / lam;
            let mean = chol.solve(&rhs);
            let z = DMatrix::from_fn(k, 1, |_, _| StandardNormal.sample(rng));
            let draw = mean + solve_lower_transpose(&chol.l(), &z);
            state.b_load.set_row(j, &draw.transpose());
        }
    }

    // λ_j | · ~ IG(a + N/2, b + SSR_j/2)
    let fitted = &state.scores * state.b_load.transpose();
    let resid = &xc - &fitted;
    for j in 0..p {
        let ssr = resid.column(j).norm_squared();
        state.lambda[j] = sample_inverse_gamma(
            config.prior_shape_idio + 0.5 * n as f64,
            config.prior_scale_idio + 0.5 * ssr,
            rng,
        );
    }

    // μ_j | · ~ N(m, 1/prec), prec = N/λ_j + 1/φ
    for j in 0..p {
        let lam = state.lambda[j];
        let prec = n as f64 / lam + 1.0 / config.prior_var_mu;
        let s: f64 = (0..n).map(|t| x[(t, j)] - fitted[(t, j)]).sum();
        let mean = s / lam / prec;
        let z: f64 = StandardNormal.sample(rng);
        state.mu_x[j] = mean + z / prec.sqrt();
    }
    Ok(())
}
