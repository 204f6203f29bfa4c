//! Fit/predict lifecycle: hyperparameter defaults, min-max feature
//! normalization, k-fold cross-validation, and JSON persistence.
//!
//! `fit_sieve` maps training features into `[0,1]^d` by a per-dimension
//! min-max transform, builds the first `J` tensor product terms of the
//! canonical order, and solves for coefficients by least squares or the
//! penalized coordinate descent solver. `predict` replays the stored
//! transform (clamping out-of-range inputs to the boundary) and evaluates
//! the expansion, so in-sample predictions reproduce the training fit
//! bit for bit.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::design::build_design;
use crate::error::{Error, Result};
use crate::index::{index_matrix_for_count, IndexMatrix, MEMORY_BUDGET_ENTRIES};
use crate::solver::{lambda_max, lasso_path, ols_fit, LassoConfig, SolveResult};

/// Default multiplier in the basis-count rule `J = c0 * n^(1/3) * ln(n)^(D'-1)`.
pub const DEFAULT_BASIS_MULTIPLIER: f64 = 5.0;

/// Training data: an `n x d` feature matrix and an outcome per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    outcome: Array1<f64>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, outcome: Array1<f64>) -> Result<Self> {
        if features.nrows() != outcome.len() {
            return Err(Error::DimensionMismatch {
                what: "outcome length",
                expected: features.nrows(),
                got: outcome.len(),
            });
        }
        if features.nrows() == 0 {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidArgument("dataset has no feature columns".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features".into()));
        }
        if outcome.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("outcome".into()));
        }
        Ok(Dataset { features, outcome })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn outcome(&self) -> ndarray::ArrayView1<'_, f64> {
        self.outcome.view()
    }

    /// Rows `idx`, in the given order.
    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            outcome: self.outcome.select(Axis(0), idx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Plain least squares (minimum-norm when rank deficient).
    Ols,
    /// l1-penalized least squares by coordinate descent.
    Lasso,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Ols => write!(f, "ols"),
            Estimator::Lasso => write!(f, "lasso"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(Estimator::Ols),
            "lasso" | "penalized" => Ok(Estimator::Lasso),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator '{other}', expected ols or lasso"
            ))),
        }
    }
}

/// Cross-validation plan. The penalty grid is geometric from the full-data
/// `lambda_max` down three decades; the J grid defaults to the single
/// resolved basis count.
#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    /// Number of penalty values on the geometric path.
    pub lambda_grid: usize,
    /// Candidate basis counts; empty means "the resolved J only".
    pub j_grid: Vec<usize>,
    /// Seed for the fold shuffle.
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            lambda_grid: 20,
            j_grid: Vec::new(),
            seed: 0,
        }
    }
}

/// One (grid point, fold) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRecord {
    pub j: usize,
    pub lambda: f64,
    pub fold: usize,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub basis: BasisKind,
    pub estimator: Estimator,
    /// Interaction cap D'; 0 resolves to `min(2, d)`, values above `d` clamp.
    pub d_prime: usize,
    /// Basis count; 0 resolves to the default rule.
    pub j: usize,
    /// Penalty; 0 resolves to `sqrt(ln(J)/n)`. Ignored by OLS.
    pub lambda: f64,
    /// When present, `fit_sieve` selects (J, lambda) by cross-validation.
    pub cv: Option<CvConfig>,
    pub penalize_intercept: bool,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            basis: BasisKind::Cosine,
            estimator: Estimator::Lasso,
            d_prime: 0,
            j: 0,
            lambda: 0.0,
            cv: None,
            penalize_intercept: true,
            tol: 1e-7,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub n_train: usize,
    pub lambda: f64,
    pub converged: bool,
}

/// A fitted expansion. Immutable; safe to share across threads for predict.
#[derive(Debug, Clone)]
pub struct SieveModel {
    kind: BasisKind,
    index: Arc<IndexMatrix>,
    beta: Array1<f64>,
    /// Per-dimension (min, max) from the training features.
    normalizer: Vec<(f64, f64)>,
    meta: ModelMeta,
}

impl SieveModel {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn index(&self) -> &IndexMatrix {
        &self.index
    }

    pub fn beta(&self) -> &Array1<f64> {
        &self.beta
    }

    pub fn normalizer(&self) -> &[(f64, f64)] {
        &self.normalizer
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn d(&self) -> usize {
        self.index.d()
    }

    pub fn d_prime(&self) -> usize {
        self.index.d_prime()
    }

    /// Number of expansion terms.
    pub fn j(&self) -> usize {
        self.index.len()
    }
}

fn resolve_d_prime(cfg_d_prime: usize, d: usize) -> usize {
    if cfg_d_prime == 0 {
        d.min(2)
    } else {
        cfg_d_prime.min(d)
    }
}

fn default_j(n: usize, d: usize, d_prime: usize) -> usize {
    let n_f = n as f64;
    let log_factor = n_f.ln().max(1.0).powi(d_prime as i32 - 1);
    let raw = DEFAULT_BASIS_MULTIPLIER * n_f.powf(1.0 / 3.0) * log_factor;
    let uncapped = if raw.is_finite() && raw < usize::MAX as f64 {
        raw.ceil() as usize
    } else {
        usize::MAX
    };
    let budget_cap = (MEMORY_BUDGET_ENTRIES / d as u64).min(usize::MAX as u64) as usize;
    uncapped.min(budget_cap).min(50 * n).max(1)
}

fn default_lambda(j: usize, n: usize) -> f64 {
    ((j as f64).ln() / n as f64).sqrt()
}

/// Rule-based defaults: `J = ceil(5 n^(1/3) max(1, ln n)^(D'-1))` capped by
/// the index memory budget and by `50 n`, with `lambda = sqrt(ln(J)/n)`.
pub fn default_hyperparams(n: usize, d: usize, d_prime: usize) -> Result<FitConfig> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if d < 1 || d_prime < 1 {
        return Err(Error::InvalidArgument(format!(
            "dimensions must be >= 1, got d={d}, d_prime={d_prime}"
        )));
    }
    let d_prime = d_prime.min(d);
    let j = default_j(n, d, d_prime);
    Ok(FitConfig {
        d_prime,
        j,
        lambda: default_lambda(j, n),
        ..FitConfig::default()
    })
}

fn compute_normalizer(features: ArrayView2<f64>) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(features.ncols());
    for (dim, col) in features.axis_iter(Axis(1)).enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in col.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi > lo) {
            return Err(Error::DegenerateFeature { dim });
        }
        out.push((lo, hi));
    }
    Ok(out)
}

/// Min-max map into `[0,1]` with boundary clamping. Training rows land
/// inside `[0,1]` exactly, so the clamp is the identity on them.
fn apply_normalizer(features: ArrayView2<f64>, normalizer: &[(f64, f64)]) -> Array2<f64> {
    let mut out = features.to_owned();
    for (k, &(lo, hi)) in normalizer.iter().enumerate() {
        let range = hi - lo;
        for v in out.column_mut(k).iter_mut() {
            *v = ((*v - lo) / range).clamp(0.0, 1.0);
        }
    }
    out
}

fn validate_fit_config(cfg: &FitConfig) -> Result<()> {
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

/// Fits on a pre-normalized design; shared by the public fit and the CV loop.
fn solve_for_beta(
    design: ArrayView2<f64>,
    outcome: ndarray::ArrayView1<f64>,
    estimator: Estimator,
    lambda: f64,
    cfg: &FitConfig,
) -> Result<SolveResult> {
    match estimator {
        Estimator::Ols => ols_fit(design, outcome),
        Estimator::Lasso => {
            let solver_cfg = LassoConfig {
                lambda,
                tol: cfg.tol,
                max_sweeps: cfg.max_sweeps,
                penalize_intercept: cfg.penalize_intercept,
            };
            // a one-step path is a cold-started fit
            Ok(lasso_path(design, outcome, &[lambda], &solver_cfg)?.remove(0))
        }
    }
}

/// Fits the sieve estimator. With `cfg.cv` present, (J, lambda) come from
/// [`cross_validate`] first; the returned model is refit on all rows.
///
/// Solver non-convergence does not error here; it is reported through
/// `meta.converged`.
pub fn fit_sieve(data: &Dataset, cfg: &FitConfig) -> Result<SieveModel> {
    if data.n() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            data.n()
        )));
    }
    validate_fit_config(cfg)?;

    if cfg.cv.is_some() {
        let (best, _) = cross_validate(data, cfg)?;
        let chosen = FitConfig { cv: None, ..best };
        return fit_sieve(data, &chosen);
    }

    let n = data.n();
    let d = data.d();
    let d_prime = resolve_d_prime(cfg.d_prime, d);
    let j = if cfg.j == 0 {
        default_j(n, d, d_prime)
    } else {
        cfg.j
    };
    let lambda = match cfg.estimator {
        Estimator::Ols => 0.0,
        Estimator::Lasso => {
            if cfg.lambda == 0.0 {
                default_lambda(j, n)
            } else {
                cfg.lambda
            }
        }
    };

    let normalizer = compute_normalizer(data.features())?;
    let normalized = apply_normalizer(data.features(), &normalizer);
    let index = Arc::new(index_matrix_for_count(d, d_prime, j)?);
    let design = build_design(normalized.view(), cfg.basis, Arc::clone(&index))?;
    let solved = solve_for_beta(design.values(), data.outcome(), cfg.estimator, lambda, cfg)?;

    Ok(SieveModel {
        kind: cfg.basis,
        index,
        beta: solved.beta,
        normalizer,
        meta: ModelMeta {
            n_train: n,
            lambda,
            converged: solved.converged,
        },
    })
}

/// Rows are processed in blocks so the transient design stays small.
const PREDICT_BLOCK_ROWS: usize = 4096;

/// Evaluates the fitted expansion at each row of `features`.
pub fn predict(model: &SieveModel, features: ArrayView2<f64>) -> Result<Array1<f64>> {
    if features.ncols() != model.d() {
        return Err(Error::DimensionMismatch {
            what: "feature dimensions",
            expected: model.d(),
            got: features.ncols(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction features".into()));
    }
    let m = features.nrows();
    let mut out = Array1::zeros(m);
    for start in (0..m).step_by(PREDICT_BLOCK_ROWS) {
        let stop = (start + PREDICT_BLOCK_ROWS).min(m);
        let block = features.slice(s![start..stop, ..]);
        let normalized = apply_normalizer(block, &model.normalizer);
        let design = build_design(normalized.view(), model.kind, Arc::clone(&model.index))?;
        let values = design.values().dot(&model.beta);
        out.slice_mut(s![start..stop]).assign(&values);
    }
    Ok(out)
}

/// Deterministic fold assignment: a seeded shuffle of row indices dealt
/// round-robin, so fold sizes differ by at most one.
pub(crate) fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (pos, &i) in idx.iter().enumerate() {
        out[pos % folds].push(i);
    }
    out
}

/// Geometric penalty path from `top` spanning three decades, largest first.
pub(crate) fn lambda_grid(top: f64, points: usize) -> Vec<f64> {
    if !(top > 0.0) {
        return vec![0.0];
    }
    if points <= 1 {
        return vec![top];
    }
    (0..points)
        .map(|i| top * 10f64.powf(-3.0 * i as f64 / (points - 1) as f64))
        .collect()
}

/// K-fold selection of (J, lambda) over the grid described by `cfg.cv`.
/// Returns the winning configuration (cv cleared) and the full table, one
/// record per (grid point, fold). Ties break toward the larger penalty,
/// then the smaller J.
pub fn cross_validate(data: &Dataset, cfg: &FitConfig) -> Result<(FitConfig, Vec<CvRecord>)> {
    let cv = cfg
        .cv
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("cross_validate requires cfg.cv".into()))?;
    let n = data.n();
    if cv.folds < 2 || cv.folds > n {
        return Err(Error::InvalidArgument(format!(
            "folds must lie in 2..=n, got {} with n={n}",
            cv.folds
        )));
    }
    validate_fit_config(cfg)?;

    let d = data.d();
    let d_prime = resolve_d_prime(cfg.d_prime, d);
    let mut j_grid: Vec<usize> = if cv.j_grid.is_empty() {
        vec![if cfg.j == 0 {
            default_j(n, d, d_prime)
        } else {
            cfg.j
        }]
    } else {
        cv.j_grid.clone()
    };
    j_grid.sort_unstable();
    j_grid.dedup();
    if j_grid[0] == 0 {
        return Err(Error::InvalidArgument("J grid entries must be >= 1".into()));
    }
    let j_max = *j_grid.last().unwrap();

    let index = Arc::new(index_matrix_for_count(d, d_prime, j_max)?);

    // Penalty grids are anchored at the full-data lambda_max per J so every
    // fold scores the same grid points.
    let lambda_grids: Vec<Vec<f64>> = match cfg.estimator {
        Estimator::Ols => j_grid.iter().map(|_| vec![0.0]).collect(),
        Estimator::Lasso => {
            let normalizer = compute_normalizer(data.features())?;
            let normalized = apply_normalizer(data.features(), &normalizer);
            let design = build_design(normalized.view(), cfg.basis, Arc::clone(&index))?;
            j_grid
                .iter()
                .map(|&j| {
                    let top = lambda_max(design.values().slice(s![.., ..j]), data.outcome());
                    lambda_grid(top, cv.lambda_grid)
                })
                .collect()
        }
    };

    let folds = fold_assignment(n, cv.folds, cv.seed);
    let fold_tables: Vec<Vec<CvRecord>> = folds
        .par_iter()
        .enumerate()
        .map(|(fold_id, val_idx)| -> Result<Vec<CvRecord>> {
            let train_idx: Vec<usize> = {
                let mut in_val = vec![false; n];
                for &i in val_idx {
                    in_val[i] = true;
                }
                (0..n).filter(|&i| !in_val[i]).collect()
            };
            let train = data.subset(&train_idx);
            let val = data.subset(val_idx);

            let normalizer = compute_normalizer(train.features())?;
            let train_norm = apply_normalizer(train.features(), &normalizer);
            let val_norm = apply_normalizer(val.features(), &normalizer);
            let train_design = build_design(train_norm.view(), cfg.basis, Arc::clone(&index))?;
            let val_design = build_design(val_norm.view(), cfg.basis, Arc::clone(&index))?;

            let train_values = train_design.values();
            let val_values = val_design.values();
            let mut records = Vec::new();
            for (j_pos, &j) in j_grid.iter().enumerate() {
                let train_slice = train_values.slice(s![.., ..j]);
                let val_slice = val_values.slice(s![.., ..j]);
                let betas: Vec<Array1<f64>> = match cfg.estimator {
                    Estimator::Ols => vec![ols_fit(train_slice, train.outcome())?.beta],
                    Estimator::Lasso => {
                        let solver_cfg = LassoConfig {
                            lambda: 0.0,
                            tol: cfg.tol,
                            max_sweeps: cfg.max_sweeps,
                            penalize_intercept: cfg.penalize_intercept,
                        };
                        lasso_path(train_slice, train.outcome(), &lambda_grids[j_pos], &solver_cfg)?
                            .into_iter()
                            .map(|r| r.beta)
                            .collect()
                    }
                };
                for (lambda, beta) in lambda_grids[j_pos].iter().zip(betas) {
                    let fitted = val_slice.dot(&beta);
                    let mse = (&fitted - &val.outcome())
                        .mapv(|r| r * r)
                        .mean()
                        .unwrap_or(f64::NAN);
                    records.push(CvRecord {
                        j,
                        lambda: *lambda,
                        fold: fold_id,
                        mse,
                    });
                }
            }
            Ok(records)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table: Vec<CvRecord> = fold_tables.into_iter().flatten().collect();
    table.sort_by(|a, b| {
        a.j.cmp(&b.j)
            .then(b.lambda.partial_cmp(&a.lambda).unwrap())
            .then(a.fold.cmp(&b.fold))
    });

    // mean over folds per grid point, in grid order
    let mut best: Option<(usize, f64, f64)> = None;
    for (j_pos, &j) in j_grid.iter().enumerate() {
        for &lambda in &lambda_grids[j_pos] {
            let fold_mses: Vec<f64> = table
                .iter()
                .filter(|r| r.j == j && r.lambda == lambda)
                .map(|r| r.mse)
                .collect();
            let mean = fold_mses.iter().sum::<f64>() / fold_mses.len() as f64;
            let better = match best {
                None => true,
                Some((bj, bl, bm)) => {
                    mean < bm
                        || (mean == bm && (lambda > bl || (lambda == bl && j < bj)))
                }
            };
            if better {
                best = Some((j, lambda, mean));
            }
        }
    }
    let (best_j, best_lambda, _) = best.expect("grid is non-empty");

    let winner = FitConfig {
        d_prime,
        j: best_j,
        lambda: best_lambda,
        cv: None,
        ..cfg.clone()
    };
    Ok((winner, table))
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    basis: String,
    d: usize,
    d_prime: usize,
    index: Vec<Vec<u32>>,
    beta: Vec<f64>,
    normalizer: Vec<[f64; 2]>,
    meta: ModelMeta,
}

/// Writes the model as versioned JSON. Floats use the shortest decimal that
/// round-trips, so a reload reproduces predictions bit for bit.
pub fn save_model(model: &SieveModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        basis: model.kind.to_string(),
        d: model.d(),
        d_prime: model.d_prime(),
        index: model.index.rows().map(|r| r.to_vec()).collect(),
        beta: model.beta.to_vec(),
        normalizer: model.normalizer.iter().map(|&(lo, hi)| [lo, hi]).collect(),
        meta: model.meta.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SieveModel> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {}, expected {MODEL_FORMAT_VERSION}",
            file.version
        )));
    }
    let kind: BasisKind = file
        .basis
        .parse()
        .map_err(|e| Error::ModelFormat(format!("{e}")))?;
    let index = IndexMatrix::from_rows(file.d, file.d_prime, &file.index)?;
    if file.beta.len() != index.len() {
        return Err(Error::ModelFormat(format!(
            "beta has {} entries, index has {} rows",
            file.beta.len(),
            index.len()
        )));
    }
    if file.beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::ModelFormat("beta contains non-finite entries".into()));
    }
    if file.normalizer.len() != file.d {
        return Err(Error::ModelFormat(format!(
            "normalizer has {} entries, expected {}",
            file.normalizer.len(),
            file.d
        )));
    }
    for (dim, pair) in file.normalizer.iter().enumerate() {
        if !pair.iter().all(|v| v.is_finite()) || !(pair[1] > pair[0]) {
            return Err(Error::ModelFormat(format!(
                "normalizer for dimension {dim} must satisfy min < max, got [{}, {}]",
                pair[0], pair[1]
            )));
        }
    }
    Ok(SieveModel {
        kind,
        index: Arc::new(index),
        beta: Array1::from_vec(file.beta),
        normalizer: file.normalizer.iter().map(|p| (p[0], p[1])).collect(),
        meta: file.meta,
    })
}
