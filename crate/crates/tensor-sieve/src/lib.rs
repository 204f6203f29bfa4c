//! Penalized sieve regression on tensor product bases.
//!
//! Fits a multivariate regression function as a truncated expansion
//! `f(x) = sum_j beta_j psi_j(x)`, where each `psi_j` is a product of
//! univariate basis functions over `[0, 1]^d`. The product terms are ordered
//! by the magnitude of their frequency tuple and capped at `d_prime`
//! interacting coordinates, so the expansion stays tractable in moderate to
//! high dimension. Coefficients come from least squares or an l1-penalized
//! coordinate descent solver.
//!
//! Also included: a first-order Sobolev kernel ridge baseline, a simulation
//! harness with known regression truths, and model persistence as versioned
//! JSON. The `examples/` directory walks through each capability; a thin
//! `tensor-sieve` binary exposes `fit`, `predict`, `simulate`, `index`, and
//! `bench` subcommands.
//!
//! ```
//! use tensor_sieve::{fit_sieve, predict, Dataset, FitConfig};
//! use ndarray::{Array1, Array2};
//!
//! // y = cos(pi x) sampled on a grid, fit with a 5-term cosine expansion
//! let n = 50;
//! let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
//! let features = Array2::from_shape_vec((n, 1), xs.clone()).unwrap();
//! let outcome = Array1::from_iter(xs.iter().map(|x| (std::f64::consts::PI * x).cos()));
//! let data = Dataset::new(features, outcome).unwrap();
//!
//! let cfg = FitConfig {
//!     estimator: tensor_sieve::Estimator::Ols,
//!     d_prime: 1,
//!     j: 5,
//!     ..FitConfig::default()
//! };
//! let model = fit_sieve(&data, &cfg).unwrap();
//! let fitted = predict(&model, data.features()).unwrap();
//! assert!((fitted[0] - 1.0).abs() < 1e-10);
//! ```

#![deny(unsafe_code)]

pub mod basis;
pub mod cli;
pub mod design;
pub mod error;
pub mod index;
pub mod kernel;
pub mod model;
pub mod simulate;
pub mod solver;

pub use basis::{eval_basis, eval_basis_row, BasisKind};
pub use design::{build_design, eval_product_basis, DesignMatrix};
pub use error::{Error, Result};
pub use index::{
    big_t, factorizations, generate_index_matrix, generate_index_matrix_with_budget,
    index_matrix_for_count, tau, IndexMatrix, MEMORY_BUDGET_ENTRIES,
};
pub use kernel::{krr_fit, mercer_eigenvalue, product_kernel, w1_kernel, KrrModel};
pub use model::{
    cross_validate, default_hyperparams, fit_sieve, load_model, predict, save_model, CvConfig,
    CvRecord, Dataset, Estimator, FitConfig, ModelMeta, SieveModel,
};
pub use simulate::{
    cube_root_rule, evaluate, generate_dataset, legendre, rate_experiment, run_methods,
    truth_cos, truth_interaction, truth_norm_sq, truth_poly, truth_value, Method, Metrics,
    Predictor, RateResult, RunConfig, RunRecord, SimulationSpec, TruthKind,
};
pub use solver::{lambda_max, lasso_fit, lasso_path, ols_fit, LassoConfig, SolveResult};
