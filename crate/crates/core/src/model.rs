//! Joint model parameterization for `(Y, X)`.
//!
//! The predictors follow `X ~ N(μx, Σx)` with `Σx = B Bᵀ + Λ`, and responses
//! follow `Y = μy + βᵀ(X − μx) + ε` with `ε ~ N(0, Ψ)`, `Ψ = b bᵀ + Ψ̃`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, cholesky_strict, standard_normal_vector};

/// Observed data with columns centered at their sample means.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Centered responses, N×q.
    pub y: DMatrix<f64>,
    /// Centered predictors, N×p.
    pub x: DMatrix<f64>,
    pub y_mean: DVector<f64>,
    pub x_mean: DVector<f64>,
    pub response_names: Vec<String>,
    pub predictor_names: Vec<String>,
}

impl Dataset {
    /// Validates raw (uncentered) data, centers both matrices and keeps the means.
    pub fn new(
        y_raw: DMatrix<f64>,
        x_raw: DMatrix<f64>,
        response_names: Vec<String>,
        predictor_names: Vec<String>,
    ) -> Result<Self> {
        let n = y_raw.nrows();
        if x_raw.nrows() != n {
            return Err(Error::InvalidDataset(format!(
                "responses have {n} rows but predictors have {}",
                x_raw.nrows()
            )));
        }
        let (q, p) = (y_raw.ncols(), x_raw.ncols());
        if q == 0 || p == 0 {
            return Err(Error::InvalidDataset(
                "need at least one response and one predictor".into(),
            ));
        }
        if n <= p + 1 {
            return Err(Error::InvalidDataset(format!(
                "need N > p + 1 observations, got N = {n}, p = {p}"
            )));
        }
        if !all_finite(&y_raw) || !all_finite(&x_raw) {
            return Err(Error::InvalidDataset("non-finite values in data".into()));
        }
        if response_names.len() != q || predictor_names.len() != p {
            return Err(Error::InvalidDataset(format!(
                "expected {q} response and {p} predictor names, got {} and {}",
                response_names.len(),
                predictor_names.len()
            )));
        }
        let y_mean = column_means(&y_raw);
        let x_mean = column_means(&x_raw);
        let y = center(y_raw, &y_mean);
        let x = center(x_raw, &x_mean);
        Ok(Dataset {
            y,
            x,
            y_mean,
            x_mean,
            response_names,
            predictor_names,
        })
    }

    /// Like [`Dataset::new`] with generated names `y1..yq`, `x1..xp`.
    pub fn unnamed(y_raw: DMatrix<f64>, x_raw: DMatrix<f64>) -> Result<Self> {
        let q = y_raw.ncols();
        let p = x_raw.ncols();
        Dataset::new(
            y_raw,
            x_raw,
            (1..=q).map(|j| format!("y{j}")).collect(),
            (1..=p).map(|i| format!("x{i}")).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn raw_y(&self) -> DMatrix<f64> {
        uncenter(&self.y, &self.y_mean)
    }

    pub fn raw_x(&self) -> DMatrix<f64> {
        uncenter(&self.x, &self.x_mean)
    }
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

fn center(mut m: DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    m
}

fn uncenter(m: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(means[j]);
    }
    out
}

/// Full parameter set of the joint model.
#[derive(Debug, Clone, PartialEq)]
pub struct JointParams {
    /// Regression coefficients, p×q (column j holds the coefficients of response j).
    pub beta: DMatrix<f64>,
    /// Residual latent-factor loadings, length q.
    pub b: DVector<f64>,
    /// Idiosyncratic residual variances (diagonal of Ψ̃), length q.
    pub psi_tilde: DVector<f64>,
    /// Predictor factor loadings, p×k.
    pub b_load: DMatrix<f64>,
    /// Idiosyncratic predictor variances (diagonal of Λ), length p.
    pub lambda: DVector<f64>,
    pub mu_x: DVector<f64>,
    pub mu_y: DVector<f64>,
    /// Model indicator; `alpha[i] == false` forces row i of `beta` to zero.
    pub alpha: Vec<bool>,
}

impl JointParams {
    pub fn p(&self) -> usize {
        self.beta.nrows()
    }

    pub fn q(&self) -> usize {
        self.beta.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q) = (self.p(), self.q());
        let dims_ok = self.b.len() == q
            && self.psi_tilde.len() == q
            && self.b_load.nrows() == p
            && self.lambda.len() == p
            && self.mu_x.len() == p
            && self.mu_y.len() == q
            && self.alpha.len() == p;
        if !dims_ok {
            return Err(Error::InvalidParameter(format!(
                "inconsistent dimensions for p = {p}, q = {q}"
            )));
        }
        let finite = all_finite(&self.beta)
            && self.b.iter().all(|v| v.is_finite())
            && all_finite(&self.b_load)
            && self.mu_x.iter().all(|v| v.is_finite())
            && self.mu_y.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite entries".into()));
        }
        if self.psi_tilde.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(
                "psi_tilde entries must be finite and positive".into(),
            ));
        }
        if self.lambda.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(
                "Lambda entries must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    /// Ψ = b bᵀ + Ψ̃.
    pub fn psi(&self) -> DMatrix<f64> {
        residual_covariance(&self.b, &self.psi_tilde)
    }

    /// Ω = Ψ⁻¹ via the rank-one update formula.
    pub fn omega(&self) -> DMatrix<f64> {
        residual_precision(&self.b, &self.psi_tilde)
    }

    /// Σx = B Bᵀ + Λ.
    pub fn sigma_x(&self) -> DMatrix<f64> {
        crate::factor::low_rank_plus_diagonal(&self.b_load, &self.lambda)
    }
}

pub fn residual_covariance(b: &DVector<f64>, psi_tilde: &DVector<f64>) -> DMatrix<f64> {
    b * b.transpose() + DMatrix::from_diagonal(psi_tilde)
}

/// `(b bᵀ + D)⁻¹ = D⁻¹ − D⁻¹ b bᵀ D⁻¹ / (1 + bᵀ D⁻¹ b)` for diagonal `D`.
pub fn residual_precision(b: &DVector<f64>, psi_tilde: &DVector<f64>) -> DMatrix<f64> {
    let w = b.component_div(psi_tilde);
    let denom = 1.0 + b.dot(&w);
    let mut omega = DMatrix::from_diagonal(&psi_tilde.map(|v| 1.0 / v));
    omega -= (&w * w.transpose()) / denom;
    omega
}

/// One retained Gibbs state.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub iteration: usize,
    pub params: JointParams,
}

/// Covariance of the stacked vector `(Y, X)`:
///
/// ```text
/// [ βᵀΣxβ + Ψ   βᵀΣx ]
/// [ Σxβ         Σx   ]
/// ```
pub fn block_covariance(params: &JointParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let (p, q) = (params.p(), params.q());
    let sigma_x = params.sigma_x();
    let sx_beta = &sigma_x * &params.beta;
    let upper = params.beta.transpose() * &sx_beta + params.psi();

    let mut out = DMatrix::zeros(q + p, q + p);
    out.view_mut((0, 0), (q, q)).copy_from(&upper);
    out.view_mut((0, q), (q, p)).copy_from(&sx_beta.transpose());
    out.view_mut((q, 0), (p, q)).copy_from(&sx_beta);
    out.view_mut((q, q), (p, p)).copy_from(&sigma_x);
    // exact symmetry; the products above agree only up to rounding
    Ok(crate::linalg::symmetrize(&out))
}

/// Posterior-predictive sampler for one parameter state, with the
/// factorizations computed once.
#[derive(Debug, Clone)]
pub struct PredictiveSampler {
    mu_x: DVector<f64>,
    mu_y: DVector<f64>,
    beta_t: DMatrix<f64>,
    sigma_x_chol: DMatrix<f64>,
    b: DVector<f64>,
    psi_tilde_sd: DVector<f64>,
}

impl PredictiveSampler {
    pub fn new(params: &JointParams) -> Result<Self> {
        params.validate()?;
        let chol = cholesky_strict(&params.sigma_x(), "Sigma_x")?;
        Ok(PredictiveSampler {
            mu_x: params.mu_x.clone(),
            mu_y: params.mu_y.clone(),
            beta_t: params.beta.transpose(),
            sigma_x_chol: chol.l(),
            b: params.b.clone(),
            psi_tilde_sd: params.psi_tilde.map(f64::sqrt),
        })
    }

    /// Draws the deviations `(x̃ − μx, ỹ − μy)`.
    pub fn sample_centered<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
        let zx = standard_normal_vector(self.mu_x.len(), rng);
        let dx = &self.sigma_x_chol * zx;
        let f: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        let z = standard_normal_vector(self.b.len(), rng);
        let eps = &self.b * f + self.psi_tilde_sd.component_mul(&z);
        let dy = &self.beta_t * &dx + eps;
        (dx, dy)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
        let (dx, dy) = self.sample_centered(rng);
        (dx + &self.mu_x, dy + &self.mu_y)
    }
}

/// Draws `(x̃, ỹ)` from `p(ỹ | x̃, Θ) p(x̃ | Θ)`.
pub fn sample_predictive<R: Rng + ?Sized>(
    params: &JointParams,
    rng: &mut R,
) -> Result<(DVector<f64>, DVector<f64>)> {
    Ok(PredictiveSampler::new(params)?.sample(rng))
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_beta_gives_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = random_params(3, 2, 2, &mut rng);
        params.beta.fill(0.0);
        let cov = block_covariance(&params).unwrap();
        assert!(cov.view((0, 2), (2, 3)).iter().all(|v| *v == 0.0));
        assert!(cov.view((2, 0), (3, 2)).iter().all(|v| *v == 0.0));
        assert!((cov.view((0, 0), (2, 2)) - params.psi()).norm() < 1e-15);
        assert!((cov.view((2, 2), (3, 3)) - params.sigma_x()).norm() < 1e-15);
    }

    #[test]
    fn scalar_block_covariance() {
        let cov = block_covariance(&scalar_params(2.0, 1.0, 3.0)).unwrap();
        assert_eq!(cov, DMatrix::from_row_slice(2, 2, &[7.0, 2.0, 2.0, 1.0]));
    }

    #[test]
    fn non_finite_params_rejected() {
        let mut params = scalar_params(2.0, 1.0, 3.0);
        params.beta[(0, 0)] = f64::NAN;
        assert!(matches!(
            block_covariance(&params),
            Err(Error::InvalidParameter(_))
        ));
        let mut params = scalar_params(2.0, 1.0, 3.0);
        params.psi_tilde[0] = 0.0;
        assert!(block_covariance(&params).is_err());
    }

    #[test]
    fn block_covariance_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = random_params(2, 3, 1, &mut rng);
        let cov = block_covariance(&params).unwrap();
        let min_eig = cov.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig > 0.0);

        let sampler = PredictiveSampler::new(&params).unwrap();
        let n = 1_000_000;
        let dim = 5;
        let mut acc = DMatrix::<f64>::zeros(dim, dim);
        let mut sq = DMatrix::<f64>::zeros(dim, dim);
        for _ in 0..n {
            let (dx, dy) = sampler.sample_centered(&mut rng);
            let v = DVector::from_iterator(dim, dy.iter().chain(dx.iter()).copied());
            let outer = &v * v.transpose();
            sq += outer.component_mul(&outer);
            acc += outer;
        }
        let mean = &acc / n as f64;
        for r in 0..dim {
            for c in 0..dim {
                let var = sq[(r, c)] / n as f64 - mean[(r, c)].powi(2);
                let se = (var / n as f64).sqrt();
                assert!(
                    (mean[(r, c)] - cov[(r, c)]).abs() < 4.0 * se + 1e-12,
                    "entry ({r},{c}): mc {} vs {}",
                    mean[(r, c)],
                    cov[(r, c)]
                );
            }
        }
    }

    #[test]
    fn degenerate_noise_copies_predictors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = JointParams {
            beta: DMatrix::identity(2, 2),
            b: DVector::zeros(2),
            psi_tilde: DVector::from_element(2, 1e-300),
            b_load: DMatrix::from_row_slice(2, 1, &[0.5, -0.3]),
            lambda: DVector::from_element(2, 1.0),
            mu_x: DVector::zeros(2),
            mu_y: DVector::zeros(2),
            alpha: vec![true; 2],
        };
        for _ in 0..100 {
            let (x, y) = sample_predictive(&params, &mut rng).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn predictor_mean_law_of_large_numbers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = random_params(3, 2, 2, &mut rng);
        let sampler = PredictiveSampler::new(&params).unwrap();
        let n = 100_000;
        let mut sum = DVector::<f64>::zeros(3);
        for _ in 0..n {
            sum += sampler.sample(&mut rng).0;
        }
        let mean = sum / n as f64;
        let sx = params.sigma_x();
        for i in 0..3 {
            let se = (sx[(i, i)] / n as f64).sqrt();
            assert!((mean[i] - params.mu_x[i]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn predictive_cross_covariance_matches_off_diagonal_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = random_params(2, 2, 1, &mut rng);
        let sampler = PredictiveSampler::new(&params).unwrap();
        let target = params.beta.transpose() * params.sigma_x();
        let n = 1_000_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        let mut sq = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let (x, y) = sampler.sample(&mut rng);
            let outer = (y - &params.mu_y) * (x - &params.mu_x).transpose();
            sq += outer.component_mul(&outer);
            acc += outer;
        }
        let mean = acc / n as f64;
        for r in 0..2 {
            for c in 0..2 {
                let se = ((sq[(r, c)] / n as f64 - mean[(r, c)].powi(2)) / n as f64).sqrt();
                assert!((mean[(r, c)] - target[(r, c)]).abs() < 4.0 * se);
            }
        }
    }

    #[test]
    fn rank_one_precision_inverts_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = random_params(2, 4, 1, &mut rng);
        let prod = params.psi() * params.omega();
        assert!((prod - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn dataset_requires_enough_rows() {
        let y = DMatrix::from_element(3, 1, 1.0);
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(
            Dataset::unnamed(y, x),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn dataset_centers_and_restores() {
        let y = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 6.0]);
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 0.0, 1.0]);
        let ds = Dataset::unnamed(y.clone(), x).unwrap();
        assert_eq!(ds.y_mean[0], 3.0);
        assert!(ds.y.column(0).sum().abs() < 1e-15);
        assert_eq!(ds.raw_y(), y);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn block_covariance_symmetric_pd_and_identity(seed in any::<u64>(), p in 1usize..5, q in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let k = p.min(2);
                let params = random_params(p, q, k, &mut rng);
                let cov = block_covariance(&params).unwrap();
                prop_assert_eq!(cov.clone(), cov.transpose());
                prop_assert!(cov.clone().symmetric_eigen().eigenvalues.min() > 0.0);
                let upper = cov.view((0, 0), (q, q)).into_owned() - params.psi();
                let direct = params.beta.transpose() * params.sigma_x() * &params.beta;
                prop_assert!((upper - direct).norm() <= 1e-12 * (1.0 + cov.norm()));
            }
        }
    }
}
