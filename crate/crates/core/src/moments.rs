//! Expected-loss moments and the Kronecker-structured lasso design.
//!
//! For a summary matrix `γ` (q×p), the posterior expected loss is, up to a
//! constant, `tr[M γ S γᵀ] − 2 tr[A γᵀ]` with
//!
//! * random predictors: `A = E[Ω Ỹ X̃ᵀ]`, `S = E[X̃ X̃ᵀ] = mean Σx`, `M = mean Ω`;
//! * fixed predictors: `A = E[Ω Ỹᵀ X]`, `S = XᵀX`, `M = mean Ω`.
//!
//! With `M = L Lᵀ` and `S = Q Qᵀ` the objective equals
//! `‖(Qᵀ ⊗ Lᵀ) vec(γ) − vec(L⁻¹ A Q⁻ᵀ)‖²` plus a constant. `vec` stacks
//! columns, so design column `i·q + j` (0-based) belongs to response `j`
//! and predictor `i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, solve_lower, solve_lower_transpose, symmetrize};
use crate::model::PosteriorDraw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorMode {
    Random,
    Fixed,
}

impl std::str::FromStr for PredictorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(PredictorMode::Random),
            "fixed" => Ok(PredictorMode::Fixed),
            other => Err(Error::Config(format!("unknown predictor mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for PredictorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictorMode::Random => "random",
            PredictorMode::Fixed => "fixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    /// q×p.
    pub a: DMatrix<f64>,
    /// p×p.
    pub s: DMatrix<f64>,
    /// q×q.
    pub m: DMatrix<f64>,
    /// Lower Cholesky factor of `M` (after any jitter).
    pub l: DMatrix<f64>,
    /// Lower Cholesky factor of `S` (after any jitter).
    pub s_chol: DMatrix<f64>,
    pub mode: PredictorMode,
    pub jitter_m: f64,
    pub jitter_s: f64,
}

impl MomentSet {
    pub fn from_parts(
        a: DMatrix<f64>,
        s: DMatrix<f64>,
        m: DMatrix<f64>,
        mode: PredictorMode,
    ) -> Result<Self> {
        let (q, p) = a.shape();
        if s.shape() != (p, p) || m.shape() != (q, q) {
            return Err(Error::InvalidParameter(format!(
                "moment shapes disagree: A {q}×{p}, S {:?}, M {:?}",
                s.shape(),
                m.shape()
            )));
        }
        let s = symmetrize(&s);
        let m = symmetrize(&m);
        let (l, jitter_m) = cholesky_with_jitter(&m, "M")?;
        let (s_chol, jitter_s) = cholesky_with_jitter(&s, "S")?;
        Ok(MomentSet {
            a,
            s,
            m,
            l,
            s_chol,
            mode,
            jitter_m,
            jitter_s,
        })
    }

    pub fn p(&self) -> usize {
        self.a.ncols()
    }

    pub fn q(&self) -> usize {
        self.a.nrows()
    }

    /// `tr[M γ S γᵀ] − 2 tr[A γᵀ]`.
    pub fn expected_loss(&self, gamma: &DMatrix<f64>) -> f64 {
        let quad = (&self.m * gamma * &self.s).component_mul(gamma).sum();
        quad - 2.0 * self.a.component_mul(gamma).sum()
    }
}

/// Posterior means of the loss moments over the retained draws.
///
/// `x_observed` is the centered design, required in fixed mode.
pub fn compute_moments(
    draws: &[PosteriorDraw],
    mode: PredictorMode,
    x_observed: Option<&DMatrix<f64>>,
) -> Result<MomentSet> {
    let first = draws
        .first()
        .ok_or_else(|| Error::EmptyDraws("no posterior draws to summarize".into()))?;
    let (p, q) = (first.params.p(), first.params.q());
    let xtx = match mode {
        PredictorMode::Fixed => {
            let x = x_observed.ok_or_else(|| {
                Error::InvalidParameter("fixed-predictor moments need the observed X".into())
            })?;
            if x.ncols() != p {
                return Err(Error::InvalidParameter(format!(
                    "observed X has {} columns, draws have p = {p}",
                    x.ncols()
                )));
            }
            Some(x.transpose() * x)
        }
        PredictorMode::Random => None,
    };

    let mut a = DMatrix::zeros(q, p);
    let mut s = DMatrix::zeros(p, p);
    let mut m = DMatrix::zeros(q, q);
    for d in draws {
        let omega = d.params.omega();
        let omega_bt = &omega * d.params.beta.transpose();
        match mode {
            PredictorMode::Random => {
                let sigma_x = d.params.sigma_x();
                a += &omega_bt * &sigma_x;
                s += sigma_x;
            }
            PredictorMode::Fixed => a += omega_bt,
        }
        m += omega;
    }
    let count = draws.len() as f64;
    a /= count;
    m /= count;
    let s = match xtx {
        Some(xtx) => {
            a *= &xtx;
            xtx
        }
        None => s / count,
    };
    MomentSet::from_parts(a, s, m, mode)
}

/// `min ‖design·v − target‖² + λ‖v‖₁` with `v = vec(γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem {
    /// `Qᵀ ⊗ Lᵀ`, (pq)×(pq).
    pub design: DMatrix<f64>,
    /// `vec(L⁻¹ A Q⁻ᵀ)`.
    pub target: DVector<f64>,
    pub p: usize,
    pub q: usize,
    /// `column_map[c] = (response, predictor)`.
    pub column_map: Vec<(usize, usize)>,
}

impl LassoProblem {
    /// Builds a problem from an arbitrary design and target (no Kronecker structure).
    pub fn from_design(design: DMatrix<f64>, target: DVector<f64>, q: usize, p: usize) -> Result<Self> {
        if design.nrows() != target.len() || design.ncols() != p * q {
            return Err(Error::InvalidParameter(format!(
                "design {:?} incompatible with target {} and p·q = {}",
                design.shape(),
                target.len(),
                p * q
            )));
        }
        Ok(LassoProblem {
            design,
            target,
            p,
            q,
            column_map: column_map(q, p),
        })
    }

    pub fn n_coef(&self) -> usize {
        self.p * self.q
    }

    /// `‖design·v − target‖² + λ‖v‖₁`.
    pub fn objective(&self, v: &DVector<f64>, lambda: f64) -> f64 {
        (&self.design * v - &self.target).norm_squared() + lambda * v.lp_norm(1)
    }

    pub fn to_gamma(&self, v: &DVector<f64>) -> DMatrix<f64> {
        vec_to_gamma(v, self.q, self.p)
    }

    pub fn to_vec(&self, gamma: &DMatrix<f64>) -> DVector<f64> {
        gamma_to_vec(gamma)
    }
}

pub fn column_map(q: usize, p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|i| (0..q).map(move |j| (j, i))).collect()
}

/// Column-stacking `vec`.
pub fn gamma_to_vec(gamma: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(gamma.as_slice())
}

pub fn vec_to_gamma(v: &DVector<f64>, q: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(q, p, v.as_slice())
}

pub fn build_lasso_problem(moments: &MomentSet) -> LassoProblem {
    let (q, p) = (moments.q(), moments.p());
    let design = moments
        .s_chol
        .transpose()
        .kronecker(&moments.l.transpose());
    // L⁻¹ A, then (L⁻¹A) Q⁻ᵀ = (Q⁻¹ (L⁻¹A)ᵀ)ᵀ
    let la = solve_lower(&moments.l, &moments.a);
    let target_mat = solve_lower(&moments.s_chol, &la.transpose()).transpose();
    LassoProblem {
        design,
        target: gamma_to_vec(&target_mat),
        p,
        q,
        column_map: column_map(q, p),
    }
}

/// `γ* = M⁻¹ A S⁻¹`, the minimizer of the unpenalized expected loss.
pub fn unpenalized_summary(moments: &MomentSet) -> DMatrix<f64> {
    let l = &moments.l;
    let m_inv_a = solve_lower_transpose(l, &solve_lower(l, &moments.a));
    let qf = &moments.s_chol;
    solve_lower_transpose(qf, &solve_lower(qf, &m_inv_a.transpose())).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::random_params;
    use crate::model::{JointParams, PredictiveSampler};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    fn random_moments(q: usize, p: usize, rng: &mut ChaCha8Rng) -> MomentSet {
        let a = DMatrix::from_fn(q, p, |_, _| rng.random_range(-2.0..2.0));
        let s = random_spd(p, rng);
        let m = random_spd(q, rng);
        MomentSet::from_parts(a, s, m, PredictorMode::Random).unwrap()
    }

    fn draw(params: JointParams) -> PosteriorDraw {
        PosteriorDraw { iteration: 0, params }
    }

    #[test]
    fn zero_beta_gives_zero_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = random_params(3, 2, 1, &mut rng);
        params.beta.fill(0.0);
        let ms = compute_moments(&[draw(params)], PredictorMode::Random, None).unwrap();
        assert!(ms.a.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_moments_give_a_equal_beta_transpose() {
        let p = 3;
        let q = 2;
        let mut beta = DMatrix::zeros(p, q);
        beta[(0, 0)] = 1.0;
        beta[(1, 1)] = 1.0;
        let params = JointParams {
            beta: beta.clone(),
            b: DVector::zeros(q),
            psi_tilde: DVector::from_element(q, 1.0),
            b_load: DMatrix::zeros(p, 0),
            lambda: DVector::from_element(p, 1.0),
            mu_x: DVector::zeros(p),
            mu_y: DVector::zeros(q),
            alpha: vec![true; p],
        };
        let ms = compute_moments(&[draw(params)], PredictorMode::Random, None).unwrap();
        assert_eq!(ms.a, beta.transpose());
        assert_eq!(ms.s, DMatrix::identity(p, p));
        assert_eq!(ms.m, DMatrix::identity(q, q));
    }

    #[test]
    fn empty_draws_rejected() {
        assert!(matches!(
            compute_moments(&[], PredictorMode::Random, None),
            Err(Error::EmptyDraws(_))
        ));
    }

    #[test]
    fn fixed_mode_requires_design_and_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws: Vec<_> = (0..5).map(|_| draw(random_params(3, 2, 1, &mut rng))).collect();
        assert!(compute_moments(&draws, PredictorMode::Fixed, None).is_err());
        let x = DMatrix::from_fn(20, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = compute_moments(&draws, PredictorMode::Fixed, Some(&x)).unwrap();
        let b = compute_moments(&draws, PredictorMode::Fixed, Some(&x)).unwrap();
        let xtx = x.transpose() * &x;
        assert_eq!(a.s, symmetrize(&xtx));
        assert_eq!(a.s, b.s);
    }

    #[test]
    fn random_mode_a_matches_predictive_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, q) = (3, 2);
        let draws: Vec<_> = (0..200).map(|_| draw(random_params(p, q, 1, &mut rng))).collect();
        let ms = compute_moments(&draws, PredictorMode::Random, None).unwrap();

        let per_draw = 1000;
        let mut mean = DMatrix::<f64>::zeros(q, p);
        let mut var_of_mean = DMatrix::<f64>::zeros(q, p);
        for d in &draws {
            let sampler = PredictiveSampler::new(&d.params).unwrap();
            let omega = d.params.omega();
            let mut sum = DMatrix::<f64>::zeros(q, p);
            let mut sq = DMatrix::<f64>::zeros(q, p);
            for _ in 0..per_draw {
                let (x, y) = sampler.sample_centered(&mut rng);
                let prod = &omega * y * x.transpose();
                sq += prod.component_mul(&prod);
                sum += prod;
            }
            let m_d = &sum / per_draw as f64;
            let v_d = (&sq / per_draw as f64 - m_d.component_mul(&m_d)) / per_draw as f64;
            mean += m_d;
            var_of_mean += v_d;
        }
        let nd = draws.len() as f64;
        mean /= nd;
        var_of_mean /= nd * nd;
        for r in 0..q {
            for c in 0..p {
                let se = var_of_mean[(r, c)].sqrt();
                assert!(
                    (mean[(r, c)] - ms.a[(r, c)]).abs() < 4.0 * se,
                    "A[{r},{c}]: mc {} vs {} (se {se})",
                    mean[(r, c)],
                    ms.a[(r, c)]
                );
            }
        }
    }

    #[test]
    fn cholesky_factors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ms = random_moments(3, 4, &mut rng);
        assert!((&ms.l * ms.l.transpose() - &ms.m).norm() / ms.m.norm() < 1e-10);
        assert!((&ms.s_chol * ms.s_chol.transpose() - &ms.s).norm() / ms.s.norm() < 1e-10);
    }

    #[test]
    fn scalar_response_reduces_to_univariate_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(1, 3, |_, _| rng.random_range(-1.0..1.0));
        let s = random_spd(3, &mut rng);
        let ms = MomentSet::from_parts(a.clone(), s.clone(), DMatrix::from_element(1, 1, 1.0), PredictorMode::Random).unwrap();
        let prob = build_lasso_problem(&ms);
        assert!((&prob.design - ms.s_chol.transpose()).norm() < 1e-15);
        // target = Q⁻¹ Aᵀ = Qᵀ (A S⁻¹)ᵀ
        let a_sinv = s.clone().cholesky().unwrap().solve(&a.transpose());
        let expected = ms.s_chol.transpose() * a_sinv;
        assert!((&prob.target - expected.column(0)).norm() < 1e-12);
    }

    #[test]
    fn identity_moments_give_identity_design() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let ms = MomentSet::from_parts(a.clone(), DMatrix::identity(3, 3), DMatrix::identity(2, 2), PredictorMode::Random).unwrap();
        let prob = build_lasso_problem(&ms);
        assert_eq!(prob.design, DMatrix::identity(6, 6));
        assert_eq!(prob.target, gamma_to_vec(&a));
        assert_eq!(prob.column_map[0], (0, 0));
        assert_eq!(prob.column_map[1], (1, 0));
        assert_eq!(prob.column_map[2], (0, 1));
    }

    #[test]
    fn design_is_kronecker_of_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ms = random_moments(2, 3, &mut rng);
        let prob = build_lasso_problem(&ms);
        let (qt, lt) = (ms.s_chol.transpose(), ms.l.transpose());
        for (c, &(j, i)) in prob.column_map.iter().enumerate() {
            for (r, &(jr, ir)) in prob.column_map.iter().enumerate() {
                assert_eq!(prob.design[(r, c)], qt[(ir, i)] * lt[(jr, j)]);
            }
        }
    }

    #[test]
    fn lasso_objective_differs_by_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ms = random_moments(3, 4, &mut rng);
        let prob = build_lasso_problem(&ms);
        let diffs: Vec<f64> = (0..20)
            .map(|_| {
                let gamma = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-2.0..2.0));
                let lasso = (&prob.design * gamma_to_vec(&gamma) - &prob.target).norm_squared();
                lasso - ms.expected_loss(&gamma)
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / 20.0;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 19.0;
        assert!(var < 1e-16, "variance {var}");
        assert!((mean - prob.target.norm_squared()).abs() < 1e-9);
    }

    #[test]
    fn unpenalized_summary_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let ms = MomentSet::from_parts(a.clone(), DMatrix::identity(2, 2), DMatrix::identity(2, 2), PredictorMode::Random).unwrap();
        assert!((unpenalized_summary(&ms) - a).norm() < 1e-15);

        let ms = MomentSet::from_parts(
            DMatrix::from_element(1, 1, 3.0),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 5.0),
            PredictorMode::Random,
        )
        .unwrap();
        assert!((unpenalized_summary(&ms)[(0, 0)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unpenalized_summary_matches_gradient_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ms = random_moments(3, 2, &mut rng);
        let target = unpenalized_summary(&ms);
        // gradient of tr[MγSγᵀ] − 2tr[Aγᵀ] is 2(MγS − A); the Hessian norm is
        // bounded by 2·‖M‖·‖S‖
        let lip = 2.0 * ms.m.norm() * ms.s.norm();
        for _ in 0..5 {
            let mut gamma = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-5.0..5.0));
            for _ in 0..200_000 {
                let grad = (&ms.m * &gamma * &ms.s - &ms.a) * 2.0;
                if grad.amax() < 1e-12 {
                    break;
                }
                gamma -= grad / lip;
            }
            assert!((gamma - &target).amax() < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn transposed_design_maps_target_back_to_a(seed in any::<u64>(), q in 1usize..5, p in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ms = random_moments(q, p, &mut rng);
            let prob = build_lasso_problem(&ms);
            let back = prob.design.transpose() * &prob.target;
            prop_assert!((back - gamma_to_vec(&ms.a)).amax() < 1e-9 * (1.0 + ms.a.amax()));
        }

        #[test]
        fn vec_roundtrip(seed in any::<u64>(), q in 1usize..5, p in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gamma = DMatrix::from_fn(q, p, |_, _| rng.random_range(-1.0..1.0));
            let v = gamma_to_vec(&gamma);
            for (c, &(j, i)) in column_map(q, p).iter().enumerate() {
                prop_assert_eq!(v[c], gamma[(j, i)]);
            }
            prop_assert_eq!(vec_to_gamma(&v, q, p), gamma);
        }
    }
}
