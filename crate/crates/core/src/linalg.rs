//! Small dense linear-algebra and sampling helpers shared by the samplers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Initial jitter, relative to the mean diagonal entry.
pub const JITTER_START: f64 = 1e-10;
/// Number of tenfold jitter escalations attempted after the plain factorization.
pub const JITTER_STEPS: usize = 6;

/// Lower Cholesky factor of a symmetric matrix, adding `ε·(tr/dim)·I` with
/// `ε = 1e-10, 1e-9, …` when the plain factorization fails.
///
/// Returns the factor and the jitter that was added (0 when none was needed).
pub fn cholesky_with_jitter(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, f64)> {
    let dim = m.nrows();
    if dim == 0 || dim != m.ncols() {
        return Err(Error::IllConditioned(format!(
            "{what}: expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned(format!("{what}: non-finite entries")));
    }
    let sym = symmetrize(m);
    if let Some(ch) = Cholesky::new(sym.clone()) {
        return Ok((ch.l(), 0.0));
    }
    let scale = (sym.trace() / dim as f64).abs().max(f64::MIN_POSITIVE);
    let mut eps = JITTER_START;
    for _ in 0..=JITTER_STEPS {
        let jitter = eps * scale;
        let shifted = &sym + DMatrix::<f64>::identity(dim, dim) * jitter;
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok((ch.l(), jitter));
        }
        eps *= 10.0;
    }
    Err(Error::IllConditioned(format!(
        "{what}: Cholesky failed after {JITTER_STEPS} jitter escalations"
    )))
}

/// Cholesky of a matrix that must already be positive definite.
pub fn cholesky_strict(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::InvalidParameter(format!("{what} is not positive definite")))
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solves `L x = b` for lower-triangular `L`, column by column.
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    l.solve_lower_triangular(b)
        .expect("Cholesky factor has a zero on its diagonal")
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    l.tr_solve_lower_triangular(b)
        .expect("Cholesky factor has a zero on its diagonal")
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Draws `mean + L z` with `z` standard normal.
pub fn sample_mvn_chol<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    chol_lower: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let z = standard_normal_vector(mean.len(), rng);
    mean + chol_lower * z
}

/// Inverse-gamma draw with density ∝ x^{-shape-1} exp(-scale / x).
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && scale > 0.0);
    let gamma = Gamma::new(shape, 1.0 / scale).expect("valid gamma parameters");
    1.0 / gamma.sample(rng)
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Compensated (Kahan–Babuška) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = prob.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
