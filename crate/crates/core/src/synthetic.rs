//! Synthetic data from the joint model, with the generating parameters kept
//! as ground truth for recovery checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Dataset, JointParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Predictors with nonzero coefficients; every response loads on each of them.
    pub support: Vec<usize>,
    /// Typical coefficient magnitude; entries are drawn from `±c·[0.75, 1.25]`.
    pub coefficient: f64,
    /// Latent factors driving the predictors.
    pub predictor_factors: usize,
    /// Typical magnitude of the residual latent-factor loadings `b`.
    pub residual_loading: f64,
    /// Diagonal of Ψ̃.
    pub idiosyncratic_var: f64,
    pub seed: u64,
    /// Explicit coefficients (p×q); overrides `support`/`coefficient`.
    pub beta: Option<DMatrix<f64>>,
    /// Explicit residual loadings (length q); overrides `residual_loading`.
    pub b: Option<DVector<f64>>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 500,
            p: 10,
            q: 5,
            support: vec![0, 3, 6],
            coefficient: 1.0,
            predictor_factors: 2,
            residual_loading: 0.5,
            idiosyncratic_var: 0.5,
            seed: 1,
            beta: None,
            b: None,
        }
    }
}

/// The parameters the data were generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub params: JointParams,
    pub support: Vec<usize>,
}

impl GroundTruth {
    /// `(response, predictor)` pairs with a nonzero generating coefficient.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let beta = &self.params.beta;
        let mut out = Vec::new();
        for i in 0..beta.nrows() {
            for j in 0..beta.ncols() {
                if beta[(i, j)] != 0.0 {
                    out.push((j, i));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, GroundTruth)> {
    let (n, p, q) = (spec.n, spec.p, spec.q);
    if let Some(&bad) = spec.support.iter().find(|&&i| i >= p && spec.beta.is_none()) {
        return Err(Error::InvalidParameter(format!(
            "support index {bad} out of range for p = {p}"
        )));
    }
    let k = spec.predictor_factors.min(p);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let beta = match &spec.beta {
        Some(b) => {
            if b.shape() != (p, q) {
                return Err(Error::InvalidParameter("explicit beta must be p×q".into()));
            }
            b.clone()
        }
        None => {
            let mut beta = DMatrix::zeros(p, q);
            for &i in &spec.support {
                for j in 0..q {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    beta[(i, j)] = sign * spec.coefficient * rng.random_range(0.75..1.25);
                }
            }
            beta
        }
    };
    let b = match &spec.b {
        Some(b) => b.clone(),
        None => DVector::from_fn(q, |_, _| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * spec.residual_loading * rng.random_range(0.5..1.0)
        }),
    };
    let b_load = DMatrix::from_fn(p, k, |_, _| rng.random_range(-0.8..0.8));
    let lambda: DVector<f64> = DVector::from_fn(p, |_, _| rng.random_range(0.5..1.0));
    let mu_x = DVector::from_fn(p, |_, _| rng.random_range(-0.5..0.5));
    let mu_y = DVector::from_fn(q, |_, _| rng.random_range(-0.5..0.5));
    let psi_tilde = DVector::from_element(q, spec.idiosyncratic_var);

    let scores = DMatrix::from_fn(n, k, |_, _| normal(&mut rng));
    let idio = DMatrix::from_fn(n, p, |_, j| lambda[j].sqrt() * normal(&mut rng));
    let dx = &scores * b_load.transpose() + idio;
    let f = DVector::from_fn(n, |_, _| normal(&mut rng));
    let eps = DMatrix::from_fn(n, q, |t, j| b[j] * f[t] + psi_tilde[j].sqrt() * normal(&mut rng));
    let dy = &dx * &beta + eps;

    let x = DMatrix::from_fn(n, p, |t, i| mu_x[i] + dx[(t, i)]);
    let y = DMatrix::from_fn(n, q, |t, j| mu_y[j] + dy[(t, j)]);

    let alpha = (0..p).map(|i| beta.row(i).iter().any(|v| *v != 0.0)).collect();
    let support = (0..p).filter(|&i| beta.row(i).iter().any(|v| *v != 0.0)).collect();
    let params = JointParams {
        beta,
        b,
        psi_tilde,
        b_load,
        lambda,
        mu_x,
        mu_y,
        alpha,
    };
    let dataset = Dataset::unnamed(y, x)?;
    Ok((dataset, GroundTruth { params, support }))
}
