//! Least squares and l1-penalized solvers over a fixed design.
//!
//! The penalized problem is
//!
//! ```text
//! min_beta (1/n) ||y - X beta||^2 + lambda * sum_j |beta_j|
//! ```
//!
//! solved by cyclic coordinate descent with exact soft-threshold updates:
//! with `a_j = (2/n) ||x_j||^2` and `c_j = (2/n) x_j' (r + x_j beta_j)`, the
//! coordinate minimizer is `soft(c_j, lambda) / a_j`. A solution is certified
//! through the subgradient conditions, with `g_j = (2/n) x_j' r`:
//! `g_j = lambda * sign(beta_j)` on the active set and `|g_j| <= lambda` off
//! it. `ols_fit` is the unpenalized case, solved by SVD so rank-deficient
//! systems return the minimum-norm minimizer.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1, ArrayView2, Zip};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LassoConfig {
    pub lambda: f64,
    /// A sweep that moves no coefficient by more than `tol` triggers the
    /// stationarity check.
    pub tol: f64,
    pub max_sweeps: usize,
    /// When false, the first column (the intercept by convention) is left
    /// unpenalized.
    pub penalize_intercept: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: 0.0,
            tol: 1e-7,
            max_sweeps: 10_000,
            penalize_intercept: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub beta: Array1<f64>,
    pub sweeps_used: usize,
    /// True once the stationarity certificate held. Converged results satisfy
    /// `kkt_residual <= 10 * tol * max(1, lambda)`.
    pub converged: bool,
    /// Largest violation of the stationarity conditions (gradient scale 2/n).
    pub kkt_residual: f64,
    /// Set when least squares hit a rank-deficient system and returned the
    /// minimum-norm minimizer.
    pub rank_deficient: bool,
}

fn validate_problem(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "design must have at least one row and one column".into(),
        ));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "outcome length",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("outcome".into()));
    }
    Ok(())
}

/// Least squares by SVD. Rank-deficient systems (including `J > n`) return
/// the minimum-Euclidean-norm minimizer with `rank_deficient` set.
pub fn ols_fit(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<SolveResult> {
    validate_problem(&x, &y)?;
    let n = x.nrows();
    let p = x.ncols();
    let mat = DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let rhs = DVector::from_fn(n, |i, _| y[i]);
    let svd = mat.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = max_sv * f64::EPSILON * n.max(p) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let solution = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::InvalidArgument(format!("SVD solve failed: {e}")))?;
    let beta = Array1::from_iter(solution.iter().cloned());

    let residual = residual_of(&x, &y, &beta);
    let scale = 2.0 / n as f64;
    let kkt = (0..p)
        .map(|j| (x.column(j).dot(&residual) * scale).abs())
        .fold(0.0_f64, f64::max);
    Ok(SolveResult {
        beta,
        sweeps_used: 0,
        converged: true,
        kkt_residual: kkt,
        rank_deficient: rank < p,
    })
}

/// Smallest penalty for which the all-zero vector is optimal:
/// `(2/n) max_j |x_j' y|`.
///
/// Panics if the shapes disagree.
pub fn lambda_max(x: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
    assert_eq!(x.nrows(), y.len(), "design and outcome disagree on n");
    let scale = 2.0 / x.nrows() as f64;
    (0..x.ncols())
        .map(|j| (x.column(j).dot(&y) * scale).abs())
        .fold(0.0_f64, f64::max)
}

fn soft(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

fn residual_of(x: &ArrayView2<f64>, y: &ArrayView1<f64>, beta: &Array1<f64>) -> Array1<f64> {
    let mut r = y.to_owned();
    r -= &x.dot(beta);
    r
}

struct Descent<'x, 'y> {
    x: ArrayView2<'x, f64>,
    y: ArrayView1<'y, f64>,
    lambda: f64,
    penalize_intercept: bool,
    n: f64,
    col_sq: Vec<f64>,
    beta: Array1<f64>,
    residual: Array1<f64>,
}

impl<'x, 'y> Descent<'x, 'y> {
    fn new(
        x: ArrayView2<'x, f64>,
        y: ArrayView1<'y, f64>,
        cfg: &LassoConfig,
        beta: Array1<f64>,
    ) -> Self {
        let col_sq: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).dot(&x.column(j))).collect();
        let residual = residual_of(&x, &y, &beta);
        Descent {
            x,
            y,
            lambda: cfg.lambda,
            penalize_intercept: cfg.penalize_intercept,
            n: x.nrows() as f64,
            col_sq,
            beta,
            residual,
        }
    }

    fn penalized(&self, j: usize) -> bool {
        self.penalize_intercept || j != 0
    }

    /// One pass over `columns`; returns the largest coefficient move.
    fn sweep(&mut self, columns: impl Iterator<Item = usize>) -> f64 {
        let mut max_delta = 0.0_f64;
        for j in columns {
            let sq = self.col_sq[j];
            if sq == 0.0 {
                continue;
            }
            let col = self.x.column(j);
            let scale = 2.0 / self.n;
            let c = scale * (col.dot(&self.residual) + sq * self.beta[j]);
            let a = scale * sq;
            let updated = if self.penalized(j) {
                soft(c, self.lambda) / a
            } else {
                c / a
            };
            let delta = updated - self.beta[j];
            if delta != 0.0 {
                Zip::from(&mut self.residual)
                    .and(&col)
                    .for_each(|r, &v| *r -= delta * v);
                self.beta[j] = updated;
            }
            max_delta = max_delta.max(delta.abs());
        }
        max_delta
    }

    fn objective(&self) -> f64 {
        let rss = self.residual.dot(&self.residual) / self.n;
        let l1: f64 = self
            .beta
            .iter()
            .enumerate()
            .filter(|(j, _)| self.penalized(*j))
            .map(|(_, b)| b.abs())
            .sum();
        rss + self.lambda * l1
    }

    /// Refreshes the residual exactly and returns the largest violation of
    /// the stationarity conditions.
    fn certify(&mut self) -> f64 {
        self.residual = residual_of(&self.x, &self.y, &self.beta);
        let scale = 2.0 / self.n;
        let mut worst = 0.0_f64;
        for j in 0..self.x.ncols() {
            let g = scale * self.x.column(j).dot(&self.residual);
            let violation = if !self.penalized(j) {
                g.abs()
            } else if self.beta[j] != 0.0 {
                (g - self.lambda * self.beta[j].signum()).abs()
            } else {
                (g.abs() - self.lambda).max(0.0)
            };
            worst = worst.max(violation);
        }
        worst
    }
}

fn validate_config(cfg: &LassoConfig) -> Result<()> {
    if !cfg.lambda.is_finite() || cfg.lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and >= 0, got {}",
            cfg.lambda
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be > 0".into()));
    }
    if cfg.max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
    }
    Ok(())
}

/// Cyclic coordinate descent from a cold start.
pub fn lasso_fit(x: ArrayView2<f64>, y: ArrayView1<f64>, cfg: &LassoConfig) -> Result<SolveResult> {
    let beta = Array1::zeros(x.ncols());
    lasso_fit_warm(x, y, cfg, beta)
}

/// Coordinate descent from an explicit starting point (used by the path).
pub(crate) fn lasso_fit_warm(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    cfg: &LassoConfig,
    beta0: Array1<f64>,
) -> Result<SolveResult> {
    validate_problem(&x, &y)?;
    validate_config(cfg)?;
    if beta0.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            what: "warm start length",
            expected: x.ncols(),
            got: beta0.len(),
        });
    }

    let p = x.ncols();
    let mut state = Descent::new(x, y, cfg, beta0);
    // Certified well inside the documented `10 * tol * max(1, lambda)` bound.
    let kkt_target = 0.1 * cfg.tol * cfg.lambda.max(1.0);

    let mut sweeps = 0usize;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut prev_objective = state.objective();

    while sweeps < cfg.max_sweeps {
        let delta = state.sweep(0..p);
        sweeps += 1;
        let objective = state.objective();
        debug_assert!(
            objective <= prev_objective + 1e-12 * (1.0 + prev_objective.abs()),
            "objective rose: {prev_objective} -> {objective}"
        );
        prev_objective = objective;

        if delta <= cfg.tol {
            kkt = state.certify();
            if kkt <= kkt_target {
                converged = true;
                break;
            }
            // keep sweeping; each full pass keeps contracting toward the optimum
            continue;
        }

        // refine the current active set before the next verification sweep
        let active: Vec<usize> = (0..p)
            .filter(|&j| state.beta[j] != 0.0 || !state.penalized(j))
            .collect();
        while sweeps < cfg.max_sweeps {
            let inner = state.sweep(active.iter().copied());
            sweeps += 1;
            let objective = state.objective();
            debug_assert!(
                objective <= prev_objective + 1e-12 * (1.0 + prev_objective.abs()),
                "objective rose in active set: {prev_objective} -> {objective}"
            );
            prev_objective = objective;
            if inner <= cfg.tol {
                break;
            }
        }
    }
    if !converged {
        kkt = state.certify();
        converged = kkt <= kkt_target;
    }

    Ok(SolveResult {
        beta: state.beta,
        sweeps_used: sweeps,
        converged,
        kkt_residual: kkt,
        rank_deficient: false,
    })
}

/// Fits along a strictly decreasing penalty sequence, each solution warm
/// starting the next.
pub fn lasso_path(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambdas: &[f64],
    cfg: &LassoConfig,
) -> Result<Vec<SolveResult>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("lambda path is empty".into()));
    }
    for pair in lambdas.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidArgument(format!(
                "lambda path must be strictly decreasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidArgument(
            "lambda path entries must be finite and >= 0".into(),
        ));
    }

    let mut results = Vec::with_capacity(lambdas.len());
    let mut warm = Array1::zeros(x.ncols());
    for &lambda in lambdas {
        let step = LassoConfig {
            lambda,
            ..cfg.clone()
        };
        let result = lasso_fit_warm(x, y, &step, warm.clone())?;
        warm = result.beta.clone();
        results.push(result);
    }
    Ok(results)
}
