//! Cyclic coordinate descent for `min ‖D v − t‖² + λ‖v‖₁` along a λ grid.
//!
//! The quadratic has no ½ factor, so the gradient of the smooth part is
//! `2(Hv − c)` with `H = DᵀD`, `c = Dᵀt`, and the all-zero solution is
//! optimal for every `λ ≥ λ_max = 2‖c‖∞`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moments::LassoProblem;

/// KKT tolerance every stored solution is certified against.
pub const KKT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Relative coefficient-change tolerance per sweep.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_sweeps: 10_000,
            tol: 1e-9,
        }
    }
}

/// The sparse summaries `γ_λ` along a decreasing grid ending at `λ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPath {
    pub lambdas: Vec<f64>,
    /// q×p, one per grid entry.
    pub gammas: Vec<DMatrix<f64>>,
    /// The `λ = 0` solution.
    pub gamma_star: DMatrix<f64>,
    /// `(response, predictor)` pairs with a nonzero coefficient, per grid entry.
    pub support_sets: Vec<Vec<(usize, usize)>>,
}

impl SummaryPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.support_sets.iter().map(Vec::len).collect()
    }
}

/// `DᵀD` and `Dᵀt`, which is all coordinate descent needs.
#[derive(Debug, Clone)]
pub struct Gram {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl Gram {
    pub fn new(problem: &LassoProblem) -> Self {
        Gram {
            h: problem.design.tr_mul(&problem.design),
            c: problem.design.tr_mul(&problem.target),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        2.0 * self.c.amax()
    }
}

pub fn lambda_max(problem: &LassoProblem) -> f64 {
    2.0 * problem.design.tr_mul(&problem.target).amax()
}

/// `grid_size` log-spaced values from `λ_max` to `ratio·λ_max`, then `0`.
pub fn lambda_grid(problem: &LassoProblem, grid_size: usize, ratio: f64) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 2, got {grid_size}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let lmax = lambda_max(problem);
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(Error::DegenerateGrid(
            "designᵀ·target is zero, so every summary on the path is zero".into(),
        ));
    }
    let (hi, lo) = (lmax.ln(), (ratio * lmax).ln());
    let step = (lo - hi) / (grid_size - 1) as f64;
    let mut grid: Vec<f64> = (0..grid_size).map(|i| (hi + step * i as f64).exp()).collect();
    grid[0] = lmax;
    grid[grid_size - 1] = ratio * lmax;
    grid.push(0.0);
    Ok(grid)
}

fn soft_threshold(z: f64, tau: f64) -> f64 {
    if z > tau {
        z - tau
    } else if z < -tau {
        z + tau
    } else {
        0.0
    }
}

/// Largest KKT residual of `v` at `λ`.
pub fn kkt_violation(gram: &Gram, v: &DVector<f64>, lambda: f64) -> f64 {
    let grad = (&gram.h * v - &gram.c) * 2.0;
    grad.iter()
        .zip(v.iter())
        .map(|(&g, &vj)| {
            if vj != 0.0 {
                (g + lambda * vj.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn solve_lasso(
    problem: &LassoProblem,
    lambda: f64,
    warm_start: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    solve_lasso_gram(&Gram::new(problem), lambda, warm_start, SolverOptions::default())
}

pub fn solve_lasso_gram(
    gram: &Gram,
    lambda: f64,
    warm_start: Option<&DVector<f64>>,
    opts: SolverOptions,
) -> Result<DVector<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("λ must be finite and ≥ 0, got {lambda}")));
    }
    let n = gram.c.len();
    if lambda == 0.0 {
        if let Some(v) = least_squares(gram) {
            return Ok(v);
        }
    }
    let mut v = match warm_start {
        Some(w) if w.len() == n => w.clone(),
        Some(w) => {
            return Err(Error::InvalidParameter(format!(
                "warm start has length {}, expected {n}",
                w.len()
            )))
        }
        None => DVector::zeros(n),
    };
    if lambda >= gram.lambda_max() {
        return Ok(DVector::zeros(n));
    }
    // certify well inside the public tolerance
    let target = 1e-2 * KKT_TOLERANCE;
    let tau = lambda / 2.0;
    let mut hv = &gram.h * &v;
    let mut max_change = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        max_change = 0.0;
        for j in 0..n {
            let hjj = gram.h[(j, j)];
            if hjj <= 0.0 {
                continue;
            }
            let old = v[j];
            let z = gram.c[j] - (hv[j] - hjj * old);
            let new = soft_threshold(z, tau) / hjj;
            let delta = new - old;
            if delta != 0.0 {
                v[j] = new;
                hv.axpy(delta, &gram.h.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tol * (1.0 + v.amax()) {
            let kkt = kkt_violation(gram, &v, lambda);
            if kkt <= target {
                return Ok(v);
            }
            if let Some(w) = polish_active_set(gram, &v, lambda) {
                if kkt_violation(gram, &w, lambda) <= target {
                    return Ok(w);
                }
            }
            // refresh the accumulated product before sweeping on
            hv = &gram.h * &v;
        }
    }
    let kkt = kkt_violation(gram, &v, lambda);
    if kkt <= KKT_TOLERANCE {
        return Ok(v);
    }
    Err(Error::NoConvergence {
        sweeps: opts.max_sweeps,
        max_change,
        kkt,
    })
}

/// Exact solution on the current active set with its sign pattern held
/// fixed: `H_AA w_A = c_A − (λ/2) s_A`.
fn polish_active_set(gram: &Gram, v: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let active: Vec<usize> = (0..v.len()).filter(|&j| v[j] != 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let h_aa = gram.h.select_rows(&active).select_columns(&active);
    let rhs = DVector::from_iterator(
        active.len(),
        active.iter().map(|&j| gram.c[j] - 0.5 * lambda * v[j].signum()),
    );
    let chol = h_aa.cholesky()?;
    let w_a = chol.solve(&rhs);
    let mut w = DVector::zeros(v.len());
    for (&j, &x) in active.iter().zip(w_a.iter()) {
        if x.signum() != v[j].signum() {
            return None;
        }
        w[j] = x;
    }
    Some(w)
}

/// Direct solve of `Hv = c` with one step of iterative refinement.
fn least_squares(gram: &Gram) -> Option<DVector<f64>> {
    let chol = gram.h.clone().cholesky()?;
    let mut v = chol.solve(&gram.c);
    let r = &gram.c - &gram.h * &v;
    v += chol.solve(&r);
    if v.iter().all(|x| x.is_finite()) && kkt_violation(gram, &v, 0.0) <= KKT_TOLERANCE {
        Some(v)
    } else {
        None
    }
}

/// Solves along `grid` with warm starts from the previous entry.
///
/// The grid must be strictly decreasing and end at `0`.
pub fn solve_path(problem: &LassoProblem, grid: &[f64]) -> Result<SummaryPath> {
    solve_path_with(problem, grid, SolverOptions::default())
}

pub fn solve_path_with(
    problem: &LassoProblem,
    grid: &[f64],
    opts: SolverOptions,
) -> Result<SummaryPath> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty λ grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidParameter("λ grid must be strictly decreasing".into()));
    }
    if *grid.last().unwrap() != 0.0 {
        return Err(Error::InvalidParameter("λ grid must end at 0".into()));
    }
    let gram = Gram::new(problem);
    let mut warm = DVector::zeros(problem.n_coef());
    let mut gammas = Vec::with_capacity(grid.len());
    let mut support_sets = Vec::with_capacity(grid.len());
    for &lambda in grid {
        warm = solve_lasso_gram(&gram, lambda, Some(&warm), opts)?;
        support_sets.push(
            warm.iter()
                .zip(&problem.column_map)
                .filter(|(v, _)| **v != 0.0)
                .map(|(_, &pair)| pair)
                .collect(),
        );
        gammas.push(problem.to_gamma(&warm));
    }
    let gamma_star = gammas.last().unwrap().clone();
    Ok(SummaryPath {
        lambdas: grid.to_vec(),
        gammas,
        gamma_star,
        support_sets,
    })
}
