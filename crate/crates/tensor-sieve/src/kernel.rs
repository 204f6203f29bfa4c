//! First-order Sobolev kernel on [0,1] and its tensor product extension,
//! with a kernel ridge regression baseline.
//!
//! The univariate kernel is
//!
//! ```text
//! k(s, t) = cosh(min(s,t)) * cosh(1 - max(s,t)) / sinh(1)
//! ```
//!
//! whose Mercer expansion in the cosine basis has eigenvalues `lambda_1 = 1`
//! and `lambda_j = 1 / (1 + ((j-1) pi)^2)` for `j >= 2`. The multivariate
//! kernel is the product over coordinates, optionally restricted to a known
//! subset of active dimensions (oracle mode for benchmarking).

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Dataset;

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// The W1 reproducing kernel on the unit interval. Symmetric in (s, t).
pub fn w1_kernel(s: f64, t: f64) -> Result<f64> {
    check_unit_interval("s", s)?;
    check_unit_interval("t", t)?;
    let lo = s.min(t);
    let hi = s.max(t);
    Ok(lo.cosh() * (1.0 - hi).cosh() / 1f64.sinh())
}

fn validate_active_dims(active: &[usize], d: usize) -> Result<()> {
    if active.is_empty() {
        return Err(Error::InvalidArgument(
            "active_dims must name at least one dimension".into(),
        ));
    }
    for pair in active.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument(
                "active_dims must be strictly increasing".into(),
            ));
        }
    }
    if *active.last().unwrap() >= d {
        return Err(Error::InvalidArgument(format!(
            "active dimension {} out of range for d={d}",
            active.last().unwrap()
        )));
    }
    Ok(())
}

/// Product of [`w1_kernel`] over `active_dims` (all dimensions when `None`).
pub fn product_kernel(x: &[f64], z: &[f64], active_dims: Option<&[usize]>) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            what: "point dimensions",
            expected: x.len(),
            got: z.len(),
        });
    }
    let mut value = 1.0;
    match active_dims {
        None => {
            for (a, b) in x.iter().zip(z.iter()) {
                value *= w1_kernel(*a, *b)?;
            }
        }
        Some(active) => {
            validate_active_dims(active, x.len())?;
            for &k in active {
                value *= w1_kernel(x[k], z[k])?;
            }
        }
    }
    Ok(value)
}

/// Kernel ridge regression model: dual coefficients over the training points.
#[derive(Debug, Clone)]
pub struct KrrModel {
    features: Array2<f64>,
    alpha: Array1<f64>,
    ridge: f64,
    active_dims: Option<Vec<usize>>,
}

impl KrrModel {
    pub fn alpha(&self) -> &Array1<f64> {
        &self.alpha
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn active_dims(&self) -> Option<&[usize]> {
        self.active_dims.as_deref()
    }

    pub fn n_train(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// `sum_i alpha_i k(x, X_i)` per row of `features`.
    pub fn predict(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        if features.ncols() != self.d() {
            return Err(Error::DimensionMismatch {
                what: "feature dimensions",
                expected: self.d(),
                got: features.ncols(),
            });
        }
        let active = self.active_dims.as_deref();
        let rows: Vec<f64> = features
            .axis_iter(Axis(0))
            .into_par_iter()
            .map(|x| -> Result<f64> {
                let x = x.as_standard_layout();
                let xs = x.as_slice().expect("standard layout");
                let mut acc = 0.0;
                for (i, xi) in self.features.axis_iter(Axis(0)).enumerate() {
                    acc += self.alpha[i]
                        * product_kernel(xs, xi.as_slice().expect("owned row-major"), active)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Array1::from_vec(rows))
    }
}

/// Gram matrix `K_ij = k(X_i, X_j)`, assembled in parallel over the upper
/// triangle and mirrored.
fn gram_matrix(features: &Array2<f64>, active: Option<&[usize]>) -> Result<DMatrix<f64>> {
    let n = features.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let xi = features.row(i);
            let xi = xi.as_slice().expect("owned row-major");
            (i..n)
                .map(|j| {
                    let xj = features.row(j);
                    product_kernel(xi, xj.as_slice().expect("owned row-major"), active)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut k = DMatrix::zeros(n, n);
    for (i, upper) in rows.iter().enumerate() {
        for (offset, &v) in upper.iter().enumerate() {
            let j = i + offset;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Solves `(K + n * ridge * I) alpha = y` by Cholesky. One jitter retry
/// (+1e-10 on the diagonal) is attempted before reporting failure; nothing
/// is regularized silently beyond that.
pub fn krr_fit(data: &Dataset, ridge: f64, active_dims: Option<Vec<usize>>) -> Result<KrrModel> {
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge must be finite and > 0, got {ridge}"
        )));
    }
    if let Some(active) = &active_dims {
        validate_active_dims(active, data.d())?;
    }
    let features = data.features().as_standard_layout().to_owned();
    let n = data.n();
    let mut k = gram_matrix(&features, active_dims.as_deref())?;
    let shift = n as f64 * ridge;
    for i in 0..n {
        k[(i, i)] += shift;
    }
    let y = DVector::from_fn(n, |i, _| data.outcome()[i]);

    let alpha = match Cholesky::new(k.clone()) {
        Some(chol) => chol.solve(&y),
        None => {
            for i in 0..n {
                k[(i, i)] += 1e-10;
            }
            match Cholesky::new(k) {
                Some(chol) => chol.solve(&y),
                None => return Err(Error::GramFactorization),
            }
        }
    };

    Ok(KrrModel {
        features,
        alpha: Array1::from_iter(alpha.iter().cloned()),
        ridge,
        active_dims,
    })
}

/// Mercer eigenvalue of the univariate kernel in the cosine basis.
/// `j` is 1-based: `lambda_1 = 1`, `lambda_j = 1/(1 + ((j-1) pi)^2)`.
pub fn mercer_eigenvalue(j: usize) -> f64 {
    if j == 1 {
        1.0
    } else {
        let freq = (j - 1) as f64 * std::f64::consts::PI;
        1.0 / (1.0 + freq * freq)
    }
}
