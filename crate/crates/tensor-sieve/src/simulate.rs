//! Synthetic benchmarks: known regression truths on the unit cube, SNR-scaled
//! Gaussian noise, method comparison, and a convergence-rate experiment.
//!
//! Truths depend on the first `D` of `d` coordinates; estimators are never
//! told which. Noise variance is `||f||^2 / snr` with the squared norm
//! estimated once by seeded Monte Carlo and cached, so identical specs give
//! bit-identical datasets across runs and thread counts.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::index::{generate_index_matrix, IndexMatrix};
use crate::kernel::{krr_fit, KrrModel};
use crate::model::{
    self, fit_sieve, fold_assignment, lambda_grid, CvConfig, Dataset, Estimator, FitConfig,
    SieveModel,
};

/// Sample count for the cached Monte Carlo estimate of `||f||^2`.
const NORM_MC_DRAWS: usize = 100_000;
const NORM_MC_SEED: u64 = 0x6f72_6163_6c65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruthKind {
    /// Additive cubic plus pairwise quadratic interactions.
    Poly,
    /// Sum of cosine products over all frequency tuples with magnitude <= 8.
    Cos,
    /// Pure interactions with zero main effects.
    Interaction,
}

impl fmt::Display for TruthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TruthKind::Poly => "poly",
            TruthKind::Cos => "cos",
            TruthKind::Interaction => "interaction",
        };
        write!(f, "{name}")
    }
}

impl FromStr for TruthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poly" => Ok(TruthKind::Poly),
            "cos" => Ok(TruthKind::Cos),
            "interaction" => Ok(TruthKind::Interaction),
            other => Err(Error::InvalidArgument(format!(
                "unknown truth '{other}', expected poly, cos, or interaction"
            ))),
        }
    }
}

/// Normalized Legendre polynomial values used by the truths: `Leg(x,2) = x`,
/// `Leg(x,3) = (3x^2 - 1)/2`.
pub fn legendre(x: f64, j: usize) -> Result<f64> {
    match j {
        2 => Ok(x),
        3 => Ok((3.0 * x * x - 1.0) / 2.0),
        other => Err(Error::InvalidArgument(format!(
            "legendre truth component supports j in {{2, 3}}, got {other}"
        ))),
    }
}

fn require_active_coords(x: &[f64], big_d: usize, min_d: usize) -> Result<()> {
    if big_d < min_d {
        return Err(Error::InvalidArgument(format!(
            "this truth needs D >= {min_d}, got {big_d}"
        )));
    }
    if x.len() < big_d {
        return Err(Error::DimensionMismatch {
            what: "active coordinates",
            expected: big_d,
            got: x.len(),
        });
    }
    Ok(())
}

/// Maps `[0,1]` to `[-1,1]` for the Legendre components.
fn unit_to_sym(v: f64) -> f64 {
    2.0 * (v - 0.5)
}

/// `sum_k Leg(u_k, 3) + Leg(u_k, 2) Leg(u_{k+1}, 2)` over `k = 1..D-1`,
/// with `u = 2(x - 1/2)`.
pub fn truth_poly(x: &[f64], big_d: usize) -> Result<f64> {
    require_active_coords(x, big_d, 2)?;
    let mut acc = 0.0;
    for k in 0..big_d - 1 {
        let u = unit_to_sym(x[k]);
        let v = unit_to_sym(x[k + 1]);
        acc += legendre(u, 3)? + legendre(u, 2)? * legendre(v, 2)?;
    }
    Ok(acc)
}

/// `sum_k Leg(u_k, 2) Leg(u_{k+1}, 3)`: every conditional mean given one
/// coordinate is zero, so additive fits see nothing.
pub fn truth_interaction(x: &[f64], big_d: usize) -> Result<f64> {
    require_active_coords(x, big_d, 2)?;
    let mut acc = 0.0;
    for k in 0..big_d - 1 {
        let u = unit_to_sym(x[k]);
        let v = unit_to_sym(x[k + 1]);
        acc += legendre(u, 2)? * legendre(v, 3)?;
    }
    Ok(acc)
}

fn cos_index(big_d: usize) -> Result<Arc<IndexMatrix>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<IndexMatrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("cos index cache");
    if let Some(found) = guard.get(&big_d) {
        return Ok(Arc::clone(found));
    }
    let index = Arc::new(generate_index_matrix(big_d, big_d, 8)?);
    guard.insert(big_d, Arc::clone(&index));
    Ok(index)
}

/// Sum over all frequency tuples `j` in `(N+)^D` with product at most 8 of
/// `prod_k cos((j_k - 1) pi x_k)`. At the origin every term is 1, so the
/// value is the tuple count `T_D(8)`.
pub fn truth_cos(x: &[f64], big_d: usize) -> Result<f64> {
    require_active_coords(x, big_d, 1)?;
    let index = cos_index(big_d)?;
    let mut acc = 0.0;
    for row in index.rows() {
        let mut term = 1.0;
        for (k, &j) in row.iter().enumerate() {
            if j > 1 {
                term *= ((j - 1) as f64 * std::f64::consts::PI * x[k]).cos();
            }
        }
        acc += term;
    }
    Ok(acc)
}

/// Dispatch on the truth family.
pub fn truth_value(kind: TruthKind, x: &[f64], big_d: usize) -> Result<f64> {
    match kind {
        TruthKind::Poly => truth_poly(x, big_d),
        TruthKind::Cos => truth_cos(x, big_d),
        TruthKind::Interaction => truth_interaction(x, big_d),
    }
}

fn kahan_push(sum: &mut f64, comp: &mut f64, v: f64) {
    let y = v - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Squared L2 norm of the truth over the uniform cube, by seeded Monte Carlo
/// with 10^5 draws. The value is cached per (kind, D).
pub fn truth_norm_sq(kind: TruthKind, big_d: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(TruthKind, usize), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("norm cache").get(&(kind, big_d)) {
        return Ok(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_MC_SEED);
    let mut x = vec![0.0; big_d];
    let mut sum = 0.0;
    let mut comp = 0.0;
    for _ in 0..NORM_MC_DRAWS {
        for coord in x.iter_mut() {
            *coord = rng.gen::<f64>();
        }
        let f = truth_value(kind, &x, big_d)?;
        kahan_push(&mut sum, &mut comp, f * f);
    }
    let value = sum / NORM_MC_DRAWS as f64;
    cache
        .lock()
        .expect("norm cache")
        .insert((kind, big_d), value);
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub truth: TruthKind,
    /// Ambient dimension: features are uniform on `[0,1]^d`.
    pub d: usize,
    /// Active dimension: the truth reads the first `big_d` coordinates.
    pub big_d: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub snr: f64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidArgument("d must be >= 1".into()));
        }
        if self.big_d > self.d {
            return Err(Error::InvalidArgument(format!(
                "active dimension D={} exceeds d={}",
                self.big_d, self.d
            )));
        }
        let min_d = match self.truth {
            TruthKind::Cos => 1,
            TruthKind::Poly | TruthKind::Interaction => 2,
        };
        if self.big_d < min_d {
            return Err(Error::InvalidArgument(format!(
                "truth {} needs D >= {min_d}, got {}",
                self.truth, self.big_d
            )));
        }
        if self.n_train < 2 || self.n_test < 1 {
            return Err(Error::InvalidArgument(format!(
                "need n_train >= 2 and n_test >= 1, got {} and {}",
                self.n_train, self.n_test
            )));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "snr must be finite and > 0, got {}",
                self.snr
            )));
        }
        Ok(())
    }
}

fn sample_split(
    spec: &SimulationSpec,
    stream: u64,
    rows: usize,
    sigma: f64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let features = Array2::from_shape_fn((rows, spec.d), |_| rng.gen::<f64>());
    let noise_dist = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidArgument(format!("bad noise scale: {e}")))?;
    let mut outcome = Array1::zeros(rows);
    for i in 0..rows {
        let row = features.row(i);
        let f = truth_value(spec.truth, row.as_slice().expect("row-major"), spec.big_d)?;
        outcome[i] = f + noise_dist.sample(&mut rng);
    }
    Dataset::new(features, outcome)
}

/// Draws (train, test) sets: features uniform on the cube, outcomes the truth
/// plus Normal(0, ||f||^2 / snr) noise. Train uses generator stream 1 and
/// test stream 2, so the split is reproducible and independent.
pub fn generate_dataset(spec: &SimulationSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let sigma = (truth_norm_sq(spec.truth, spec.big_d)? / spec.snr).sqrt();
    let train = sample_split(spec, 1, spec.n_train, sigma)?;
    let test = sample_split(spec, 2, spec.n_test, sigma)?;
    Ok((train, test))
}

/// Test-set quality: mean squared error and generalization R^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    /// `1 - mse / Var(Y_test)`; absent when the test outcome is constant.
    pub r2: Option<f64>,
}

/// Anything that maps feature rows to predictions.
pub trait Predictor {
    fn predict_rows(&self, features: ArrayView2<f64>) -> Result<Array1<f64>>;
}

impl Predictor for SieveModel {
    fn predict_rows(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        model::predict(self, features)
    }
}

impl Predictor for KrrModel {
    fn predict_rows(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.predict(features)
    }
}

/// MSE and R^2 on a held-out set. R^2 uses the population-style variance of
/// the test outcomes (divide by m).
pub fn evaluate(predictor: &dyn Predictor, test: &Dataset) -> Result<Metrics> {
    let preds = predictor.predict_rows(test.features())?;
    let m = test.n() as f64;

    let mut mse_sum = 0.0;
    let mut mse_comp = 0.0;
    let mut y_sum = 0.0;
    let mut y_comp = 0.0;
    for (p, y) in preds.iter().zip(test.outcome().iter()) {
        kahan_push(&mut mse_sum, &mut mse_comp, (p - y) * (p - y));
        kahan_push(&mut y_sum, &mut y_comp, *y);
    }
    let mse = mse_sum / m;
    let y_mean = y_sum / m;

    let mut var_sum = 0.0;
    let mut var_comp = 0.0;
    for y in test.outcome().iter() {
        kahan_push(&mut var_sum, &mut var_comp, (y - y_mean) * (y - y_mean));
    }
    let var = var_sum / m;

    let r2 = if var > 0.0 { Some(1.0 - mse / var) } else { None };
    debug_assert!(mse >= 0.0);
    debug_assert!(r2.map_or(true, |v| v <= 1.0));
    Ok(Metrics { mse, r2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    SieveOls,
    SieveLasso,
    /// Penalized sieve restricted to main effects (D' = 1).
    SieveAdditive,
    Krr,
    /// Kernel ridge on the truth's active dimensions only.
    KrrOracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::SieveOls => "sieve-ols",
            Method::SieveLasso => "sieve-lasso",
            Method::SieveAdditive => "sieve-additive",
            Method::Krr => "krr",
            Method::KrrOracle => "krr-oracle",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sieve-ols" => Ok(Method::SieveOls),
            "sieve-lasso" => Ok(Method::SieveLasso),
            "sieve-additive" => Ok(Method::SieveAdditive),
            "krr" => Ok(Method::Krr),
            "krr-oracle" => Ok(Method::KrrOracle),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}', expected sieve-ols, sieve-lasso, \
                 sieve-additive, krr, or krr-oracle"
            ))),
        }
    }
}

/// How the comparison engine fits each method.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub replicates: usize,
    /// 0 disables cross-validation; >= 2 selects hyperparameters per
    /// replicate on shared folds.
    pub cv_folds: usize,
    /// Interaction cap for the sieve methods; 0 resolves to `min(2, d)`.
    /// `sieve-additive` always uses 1.
    pub d_prime: usize,
    pub basis: BasisKind,
    /// Penalty path length for cross-validation.
    pub lambda_grid: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            methods: vec![Method::SieveLasso],
            replicates: 10,
            cv_folds: 0,
            d_prime: 0,
            basis: BasisKind::Cosine,
            lambda_grid: 20,
        }
    }
}

/// One (method, replicate) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: Method,
    pub truth: TruthKind,
    pub d: usize,
    pub big_d: usize,
    pub n: usize,
    pub snr: f64,
    pub seed: u64,
    pub mse: f64,
    pub r2: Option<f64>,
}

/// Candidate basis counts for cross-validated OLS: the rule default and two
/// cheaper alternatives.
fn ols_j_grid(default: usize) -> Vec<usize> {
    let mut grid = vec![
        (default / 4).max(1),
        (default / 2).max(1),
        default.max(1),
    ];
    grid.sort_unstable();
    grid.dedup();
    grid
}

fn sieve_fit_config(
    method: Method,
    cfg: &RunConfig,
    d: usize,
    n: usize,
    rep_seed: u64,
) -> FitConfig {
    let (estimator, d_prime) = match method {
        Method::SieveOls => (Estimator::Ols, cfg.d_prime),
        Method::SieveLasso => (Estimator::Lasso, cfg.d_prime),
        Method::SieveAdditive => (Estimator::Lasso, 1),
        _ => unreachable!("sieve config for sieve methods only"),
    };
    let cv = if cfg.cv_folds >= 2 {
        let resolved_d_prime = if d_prime == 0 { d.min(2) } else { d_prime.min(d) };
        let default = model::default_hyperparams(n, d, resolved_d_prime)
            .map(|c| c.j)
            .unwrap_or(1);
        Some(CvConfig {
            folds: cfg.cv_folds,
            lambda_grid: cfg.lambda_grid,
            // OLS has no penalty knob, so its grid varies J instead
            j_grid: if estimator == Estimator::Ols {
                ols_j_grid(default)
            } else {
                vec![default]
            },
            seed: rep_seed,
        })
    } else {
        None
    };
    FitConfig {
        basis: cfg.basis,
        estimator,
        d_prime,
        cv,
        ..FitConfig::default()
    }
}

/// Picks the kernel ridge penalty by k-fold CV over a geometric grid from 1
/// down three decades; ties go to the larger (more regularized) value.
fn krr_select_ridge(
    data: &Dataset,
    folds: usize,
    seed: u64,
    grid_points: usize,
    active: Option<&[usize]>,
) -> Result<f64> {
    let grid = lambda_grid(1.0, grid_points);
    let assignment = fold_assignment(data.n(), folds, seed);
    let n = data.n();
    let mut best = (grid[0], f64::INFINITY);
    for &ridge in &grid {
        let mut mse_acc = 0.0;
        for val_idx in &assignment {
            let mut in_val = vec![false; n];
            for &i in val_idx {
                in_val[i] = true;
            }
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_val[i]).collect();
            let train_features = data.features().select(ndarray::Axis(0), &train_idx);
            let train_outcome = data.outcome().select(ndarray::Axis(0), &train_idx);
            let val_features = data.features().select(ndarray::Axis(0), val_idx);
            let val_outcome = data.outcome().select(ndarray::Axis(0), val_idx);
            let train = Dataset::new(train_features, train_outcome)?;
            let fit = krr_fit(&train, ridge, active.map(|a| a.to_vec()))?;
            let preds = fit.predict(val_features.view())?;
            let mse = (&preds - &val_outcome).mapv(|r| r * r).mean().unwrap();
            mse_acc += mse;
        }
        let mean = mse_acc / folds as f64;
        if mean < best.1 {
            best = (ridge, mean);
        }
    }
    Ok(best.0)
}

fn run_one(
    method: Method,
    spec: &SimulationSpec,
    cfg: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    rep_seed: u64,
) -> Result<Metrics> {
    match method {
        Method::SieveOls | Method::SieveLasso | Method::SieveAdditive => {
            let fit_cfg = sieve_fit_config(method, cfg, spec.d, train.n(), rep_seed);
            let model = fit_sieve(train, &fit_cfg)?;
            evaluate(&model, test)
        }
        Method::Krr | Method::KrrOracle => {
            let active: Option<Vec<usize>> = match method {
                Method::KrrOracle => Some((0..spec.big_d).collect()),
                _ => None,
            };
            let ridge = if cfg.cv_folds >= 2 {
                krr_select_ridge(
                    train,
                    cfg.cv_folds,
                    rep_seed,
                    cfg.lambda_grid,
                    active.as_deref(),
                )?
            } else {
                1.0 / train.n() as f64
            };
            let model = krr_fit(train, ridge, active)?;
            evaluate(&model, test)
        }
    }
}

/// Runs every requested method on `cfg.replicates` independently seeded
/// datasets (replicate r uses `spec.seed + r`); all methods within a
/// replicate share its train/test draw. Records appear in (replicate,
/// method) order.
pub fn run_methods(spec: &SimulationSpec, cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    if cfg.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }
    if cfg.replicates < 1 {
        return Err(Error::InvalidArgument("replicates must be >= 1".into()));
    }

    let tables: Vec<Vec<RunRecord>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<RunRecord>> {
            let rep_seed = spec.seed.wrapping_add(r as u64);
            let rep_spec = SimulationSpec {
                seed: rep_seed,
                ..spec.clone()
            };
            let (train, test) = generate_dataset(&rep_spec)?;
            let mut records = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let metrics = run_one(method, &rep_spec, cfg, &train, &test, rep_seed)?;
                records.push(RunRecord {
                    method,
                    truth: spec.truth,
                    d: spec.d,
                    big_d: spec.big_d,
                    n: spec.n_train,
                    snr: spec.snr,
                    seed: rep_seed,
                    mse: metrics.mse,
                    r2: metrics.r2,
                });
            }
            Ok(records)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tables.into_iter().flatten().collect())
}

/// Per-n averaged MSE against the noiseless truth and the fitted log-log
/// slope.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub ns: Vec<usize>,
    pub mses: Vec<f64>,
    pub slope: f64,
}

/// The default basis-count rule for the rate experiment.
pub fn cube_root_rule(n: usize) -> usize {
    (n as f64).powf(1.0 / 3.0).ceil() as usize
}

/// Measures how fast univariate least-squares risk decays with n. For each
/// sample size the truth is fit with `j_rule(n)` cosine terms on noisy draws
/// (noise scaled to `snr`) and scored against the noiseless truth on a fresh
/// test set; MSEs are averaged over `replicates` and a least-squares line is
/// fit to (log n, log MSE).
pub fn rate_experiment<F>(
    truth: &F,
    n_list: &[usize],
    snr: f64,
    replicates: usize,
    seed: u64,
    j_rule: &(dyn Fn(usize) -> usize + Sync),
) -> Result<RateResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n_list.len() < 4 {
        return Err(Error::InvalidArgument(
            "rate experiment needs at least 4 sample sizes".into(),
        ));
    }
    let lo = *n_list.iter().min().unwrap();
    let hi = *n_list.iter().max().unwrap();
    if lo < 2 || (hi as f64) < lo as f64 * 10f64.powf(1.5) {
        return Err(Error::InvalidArgument(
            "sample sizes must span at least 1.5 decades".into(),
        ));
    }
    if !(snr > 0.0) || replicates < 1 {
        return Err(Error::InvalidArgument(
            "snr must be > 0 and replicates >= 1".into(),
        ));
    }

    // noise scale from the same Monte Carlo policy as the named truths
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_MC_SEED);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for _ in 0..NORM_MC_DRAWS {
        let f = truth(rng.gen::<f64>());
        kahan_push(&mut sum, &mut comp, f * f);
    }
    let sigma = (sum / NORM_MC_DRAWS as f64 / snr).sqrt();

    let n_test = 2000;
    let mses: Vec<f64> = n_list
        .par_iter()
        .enumerate()
        .map(|(pos, &n)| -> Result<f64> {
            let mut acc = 0.0;
            let mut acc_comp = 0.0;
            for rep in 0..replicates {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1 + (pos * replicates + rep) as u64);
                let noise = Normal::new(0.0, sigma)
                    .map_err(|e| Error::InvalidArgument(format!("bad noise scale: {e}")))?;
                let features = Array2::from_shape_fn((n, 1), |_| rng.gen::<f64>());
                let outcome = Array1::from_shape_fn(n, |i| {
                    truth(features[[i, 0]]) + noise.sample(&mut rng)
                });
                let data = Dataset::new(features, outcome)?;
                let cfg = FitConfig {
                    estimator: Estimator::Ols,
                    d_prime: 1,
                    j: j_rule(n).max(1),
                    ..FitConfig::default()
                };
                let model = fit_sieve(&data, &cfg)?;

                let test = Array2::from_shape_fn((n_test, 1), |_| rng.gen::<f64>());
                let preds = model::predict(&model, test.view())?;
                let mut mse = 0.0;
                let mut mse_comp = 0.0;
                for i in 0..n_test {
                    let r = preds[i] - truth(test[[i, 0]]);
                    kahan_push(&mut mse, &mut mse_comp, r * r);
                }
                kahan_push(&mut acc, &mut acc_comp, mse / n_test as f64);
            }
            Ok(acc / replicates as f64)
        })
        .collect::<Result<Vec<_>>>()?;

    // least-squares slope of log mse on log n
    let logs: Vec<(f64, f64)> = n_list
        .iter()
        .zip(mses.iter())
        .map(|(&n, &m)| ((n as f64).ln(), m.max(1e-300).ln()))
        .collect();
    let k = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Ok(RateResult {
        ns: n_list.to_vec(),
        mses,
        slope: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::big_t;

    struct ConstPredictor(f64);

    impl Predictor for ConstPredictor {
        fn predict_rows(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
            Ok(Array1::from_elem(features.nrows(), self.0))
        }
    }

    struct TruthPredictor(TruthKind, usize);

    impl Predictor for TruthPredictor {
        fn predict_rows(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
            let mut out = Array1::zeros(features.nrows());
            for (i, row) in features.outer_iter().enumerate() {
                out[i] = truth_value(self.0, row.as_slice().unwrap(), self.1)?;
            }
            Ok(out)
        }
    }

    fn base_spec() -> SimulationSpec {
        SimulationSpec {
            truth: TruthKind::Interaction,
            d: 2,
            big_d: 2,
            n_train: 200,
            n_test: 500,
            snr: 2.0,
            seed: 7,
        }
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0.5, 2).unwrap(), 0.5);
        assert_eq!(legendre(1.0, 3).unwrap(), 1.0);
        assert_eq!(legendre(0.0, 3).unwrap(), -0.5);
        assert!(legendre(0.0, 4).is_err());
        assert!(legendre(0.0, 1).is_err());
    }

    #[test]
    fn truth_poly_fixtures() {
        let mid = [0.5; 4];
        assert!((truth_poly(&mid, 4).unwrap() - (-1.5)).abs() < 1e-15);
        let ones = [1.0; 2];
        assert!((truth_poly(&ones, 2).unwrap() - 2.0).abs() < 1e-15);
        assert!(truth_poly(&[0.5], 1).is_err());
        assert!(truth_poly(&[0.5], 2).is_err());
    }

    #[test]
    fn truth_interaction_fixtures() {
        let mid = [0.5; 3];
        assert_eq!(truth_interaction(&mid, 3).unwrap(), 0.0);
        let ones = [1.0; 2];
        assert!((truth_interaction(&ones, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interaction_has_zero_main_effects() {
        // E[f | x^k = v] = 0 for each coordinate; Monte Carlo at v = 0.7
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..2 {
            let mut sum = 0.0;
            let mut comp = 0.0;
            for _ in 0..100_000 {
                let mut x = [rng.gen::<f64>(), rng.gen::<f64>()];
                x[k] = 0.7;
                kahan_push(&mut sum, &mut comp, truth_interaction(&x, 2).unwrap());
            }
            let mean = sum / 1e5;
            assert!(mean.abs() <= 0.02, "coordinate {k}: conditional mean {mean}");
        }
    }

    #[test]
    fn truth_cos_counts_tuples_at_origin() {
        for big_d in 1..=3 {
            let x = vec![0.0; big_d];
            let want = big_t(big_d as u32, 8).unwrap() as f64;
            assert_eq!(truth_cos(&x, big_d).unwrap(), want, "D={big_d}");
        }
        // D=1 closed form at 0 is 8 terms of 1
        assert_eq!(truth_cos(&[0.0], 1).unwrap(), 8.0);
    }

    #[test]
    fn truths_ignore_inactive_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for kind in [TruthKind::Poly, TruthKind::Cos, TruthKind::Interaction] {
            let big_d = 2;
            let mut x: Vec<f64> = (0..5).map(|_| rng.gen()).collect();
            let before = truth_value(kind, &x, big_d).unwrap();
            for inactive in big_d..5 {
                x[inactive] = rng.gen();
            }
            let after = truth_value(kind, &x, big_d).unwrap();
            assert_eq!(before.to_bits(), after.to_bits(), "{kind}");
        }
    }

    #[test]
    fn datasets_are_deterministic() {
        let spec = base_spec();
        let (train_a, test_a) = generate_dataset(&spec).unwrap();
        let (train_b, test_b) = generate_dataset(&spec).unwrap();
        assert_eq!(train_a.features(), train_b.features());
        assert_eq!(train_a.outcome(), train_b.outcome());
        assert_eq!(test_a.outcome(), test_b.outcome());

        // different seed, different draw
        let other = SimulationSpec {
            seed: 8,
            ..spec
        };
        let (train_c, _) = generate_dataset(&other).unwrap();
        assert_ne!(train_a.outcome(), train_c.outcome());
    }

    #[test]
    fn outcome_variance_matches_the_snr_decomposition() {
        // zero-mean truth: Var(Y) = ||f||^2 (1 + 1/snr)
        let spec = SimulationSpec {
            n_train: 100_000,
            n_test: 1,
            ..base_spec()
        };
        let norm_sq = truth_norm_sq(TruthKind::Interaction, 2).unwrap();
        let (train, _) = generate_dataset(&spec).unwrap();
        let mean = train.outcome().mean().unwrap();
        let var = train
            .outcome()
            .iter()
            .map(|y| (y - mean) * (y - mean))
            .sum::<f64>()
            / spec.n_train as f64;
        let want = norm_sq * 1.5;
        assert!(
            (var - want).abs() / want < 0.05,
            "var {var} vs {want}"
        );
    }

    #[test]
    fn enormous_snr_means_negligible_noise() {
        let spec = SimulationSpec {
            snr: 1e9,
            n_train: 2000,
            ..base_spec()
        };
        let (train, _) = generate_dataset(&spec).unwrap();
        let norm_sq = truth_norm_sq(spec.truth, spec.big_d).unwrap();
        let noise_var = train
            .features()
            .outer_iter()
            .zip(train.outcome().iter())
            .map(|(x, y)| {
                let f = truth_value(spec.truth, x.as_slice().unwrap(), spec.big_d).unwrap();
                (y - f) * (y - f)
            })
            .sum::<f64>()
            / spec.n_train as f64;
        assert!(noise_var <= 1e-8 * norm_sq * 10.0, "noise var {noise_var}");
    }

    #[test]
    fn spec_validation_rejects_bad_fields() {
        let good = base_spec();
        assert!(good.validate().is_ok());
        assert!(SimulationSpec { big_d: 3, ..good.clone() }.validate().is_err());
        assert!(SimulationSpec { big_d: 1, ..good.clone() }.validate().is_err());
        assert!(SimulationSpec { snr: 0.0, ..good.clone() }.validate().is_err());
        assert!(SimulationSpec { n_train: 1, ..good.clone() }.validate().is_err());
        let cos_1d = SimulationSpec {
            truth: TruthKind::Cos,
            d: 1,
            big_d: 1,
            ..good
        };
        assert!(cos_1d.validate().is_ok());
    }

    #[test]
    fn evaluate_covers_the_edge_cases() {
        let spec = base_spec();
        let (_, test) = generate_dataset(&spec).unwrap();

        let perfect = TruthPredictor(spec.truth, spec.big_d);
        // perfect up to noise; with the truth itself as outcome it is exact
        let noiseless = Dataset::new(
            test.features().to_owned(),
            perfect.predict_rows(test.features()).unwrap(),
        )
        .unwrap();
        let m = evaluate(&perfect, &noiseless).unwrap();
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.r2, Some(1.0));

        // predicting the mean gives r2 = 0
        let mean = noiseless.outcome().mean().unwrap();
        let m = evaluate(&ConstPredictor(mean), &noiseless).unwrap();
        assert!(m.r2.unwrap().abs() < 1e-10);

        // constant outcome: r2 undefined, mse still real
        let constant = Dataset::new(
            test.features().to_owned(),
            Array1::from_elem(test.n(), 3.0),
        )
        .unwrap();
        let m = evaluate(&ConstPredictor(2.0), &constant).unwrap();
        assert_eq!(m.r2, None);
        assert!((m.mse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn method_strings_round_trip() {
        for method in [
            Method::SieveOls,
            Method::SieveLasso,
            Method::SieveAdditive,
            Method::Krr,
            Method::KrrOracle,
        ] {
            assert_eq!(method.to_string().parse::<Method>().unwrap(), method);
        }
        assert!("sieve".parse::<Method>().is_err());
    }

    #[test]
    fn run_methods_is_deterministic_and_sane() {
        let spec = SimulationSpec {
            truth: TruthKind::Poly,
            d: 3,
            big_d: 2,
            n_train: 300,
            n_test: 400,
            snr: 30.0,
            seed: 99,
        };
        let cfg = RunConfig {
            methods: vec![
                Method::SieveOls,
                Method::SieveLasso,
                Method::SieveAdditive,
                Method::Krr,
                Method::KrrOracle,
            ],
            replicates: 2,
            ..RunConfig::default()
        };
        let a = run_methods(&spec, &cfg).unwrap();
        let b = run_methods(&spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert_eq!(a[0].seed, 99);
        assert_eq!(a[5].seed, 100);

        // the full interaction-aware fit explains most of an easy truth
        let lasso_r2: Vec<f64> = a
            .iter()
            .filter(|r| r.method == Method::SieveLasso)
            .map(|r| r.r2.unwrap())
            .collect();
        let mean = lasso_r2.iter().sum::<f64>() / lasso_r2.len() as f64;
        assert!(mean > 0.3, "sieve-lasso mean r2 {mean}");
    }

    #[test]
    fn cross_validated_run_works_end_to_end() {
        let spec = SimulationSpec {
            truth: TruthKind::Poly,
            d: 2,
            big_d: 2,
            n_train: 150,
            n_test: 200,
            snr: 10.0,
            seed: 5,
        };
        let cfg = RunConfig {
            methods: vec![Method::SieveLasso, Method::Krr],
            replicates: 1,
            cv_folds: 3,
            lambda_grid: 6,
            ..RunConfig::default()
        };
        let records = run_methods(&spec, &cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.mse.is_finite()));
    }

    #[test]
    fn rate_experiment_decays_on_a_rough_truth() {
        let truth = |x: f64| (x - 0.5).abs();
        let result = rate_experiment(
            &truth,
            &[100, 200, 400, 800, 3200],
            3.0,
            3,
            1,
            &|n| cube_root_rule(n),
        )
        .unwrap();
        assert_eq!(result.mses.len(), 5);
        assert!(result.mses.iter().all(|m| m.is_finite() && *m > 0.0));
        assert!(result.slope < -0.3, "slope {}", result.slope);

        // a second run is bit-identical
        let again = rate_experiment(
            &truth,
            &[100, 200, 400, 800, 3200],
            3.0,
            3,
            1,
            &|n| cube_root_rule(n),
        )
        .unwrap();
        assert_eq!(result.mses, again.mses);
    }

    #[test]
    fn rate_experiment_validates_inputs() {
        let truth = |x: f64| x;
        let rule = |n: usize| cube_root_rule(n);
        assert!(rate_experiment(&truth, &[100, 200, 400], 3.0, 1, 0, &rule).is_err());
        assert!(rate_experiment(&truth, &[100, 200, 400, 800], 3.0, 1, 0, &rule).is_err());
        assert!(rate_experiment(&truth, &[100, 200, 400, 3200], 0.0, 1, 0, &rule).is_err());
    }
}
