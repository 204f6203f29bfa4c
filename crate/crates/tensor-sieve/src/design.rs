//! Dense design matrix for a tensor product basis.
//!
//! `Psi[i, j] = psi_j(x_i)` where `psi_j` is the product of univariate basis
//! functions named by row `j` of an [`IndexMatrix`]. Storage is column-major:
//! the solvers walk columns, and a contiguous column keeps that walk cheap.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis, ShapeBuilder, Zip};

use crate::basis::{eval_basis, eval_basis_row, BasisKind};
use crate::error::{Error, Result};
use crate::index::IndexMatrix;

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    values: Array2<f64>,
    kind: BasisKind,
    index: Arc<IndexMatrix>,
}

impl DesignMatrix {
    /// Number of samples.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of basis functions.
    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn index(&self) -> &Arc<IndexMatrix> {
        &self.index
    }
}

/// `psi_row(x) = prod_k phi_{row[k]}(x[k])`. Entries equal to 1 contribute a
/// factor 1 without being evaluated; every coordinate is still domain-checked.
pub fn eval_product_basis(kind: BasisKind, row: &[u32], x: &[f64]) -> Result<f64> {
    if row.len() != x.len() {
        return Err(Error::DimensionMismatch {
            what: "product basis tuple",
            expected: row.len(),
            got: x.len(),
        });
    }
    for (k, &xk) in x.iter().enumerate() {
        if !(xk >= 0.0 && xk <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {k} must lie in [0, 1], got {xk}"
            )));
        }
    }
    let mut acc = 1.0;
    for (&f, &xk) in row.iter().zip(x) {
        if f < 1 {
            return Err(Error::InvalidArgument(
                "frequency entries must be >= 1".into(),
            ));
        }
        if f > 1 {
            acc *= eval_basis(kind, f as usize, xk)?;
        }
    }
    Ok(acc)
}

/// Builds the `n x J` design matrix. Features must already lie in `[0, 1]`;
/// violations are reported with the offending row and dimension. Rows fill in
/// parallel, each caching its univariate evaluations per dimension, so the
/// result is bit-identical regardless of thread count.
pub fn build_design(
    features: ArrayView2<f64>,
    kind: BasisKind,
    index: Arc<IndexMatrix>,
) -> Result<DesignMatrix> {
    let n = features.nrows();
    let d = features.ncols();
    if d != index.d() {
        return Err(Error::DimensionMismatch {
            what: "feature dimensions",
            expected: index.d(),
            got: d,
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("design needs at least one row".into()));
    }
    for (i, row) in features.outer_iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if !(v >= 0.0 && v <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "feature row {i}, dimension {k}: value {v} outside [0, 1]"
                )));
            }
        }
    }

    let width = index.len();
    let max_freq: Vec<usize> = (0..d).map(|k| index.max_frequency(k) as usize).collect();

    let mut values = Array2::<f64>::zeros((n, width).f());
    Zip::from(values.axis_iter_mut(Axis(0)))
        .and(features.axis_iter(Axis(0)))
        .par_for_each(|mut out, x| {
            let tables: Vec<Vec<f64>> = (0..d)
                .map(|k| eval_basis_row(kind, max_freq[k], x[k]).expect("domain was validated"))
                .collect();
            for (col, tuple) in index.rows().enumerate() {
                let mut acc = 1.0;
                for (k, &f) in tuple.iter().enumerate() {
                    if f > 1 {
                        acc *= tables[k][f as usize - 1];
                    }
                }
                out[col] = acc;
            }
        });

    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix".into()));
    }
    Ok(DesignMatrix {
        values,
        kind,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::index_matrix_for_count;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    #[test]
    fn product_basis_fixtures() {
        let v = eval_product_basis(BasisKind::Cosine, &[1, 1], &[0.2, 0.9]).unwrap();
        assert_eq!(v, 1.0);
        let v = eval_product_basis(BasisKind::Cosine, &[2, 2], &[0.0, 0.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // mismatched lengths and out-of-domain coordinates are rejected,
        // including coordinates under an entry of 1
        assert!(eval_product_basis(BasisKind::Cosine, &[1, 2], &[0.5]).is_err());
        assert!(eval_product_basis(BasisKind::Cosine, &[1, 2], &[7.0, 0.5]).is_err());
        assert!(eval_product_basis(BasisKind::Cosine, &[0, 2], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn design_row_at_origin() {
        let index = Arc::new(index_matrix_for_count(2, 2, 8).unwrap());
        let features = Array2::from_shape_vec((1, 2), vec![0.0, 0.0]).unwrap();
        let design = build_design(features.view(), BasisKind::Cosine, index).unwrap();
        let expected = [1.0, SQRT_2, SQRT_2, SQRT_2, SQRT_2, SQRT_2, SQRT_2, 2.0];
        for (col, want) in expected.iter().enumerate() {
            let got = design.values()[[0, col]];
            assert!((got - want).abs() < 1e-12, "col {col}: {got} vs {want}");
        }
    }

    #[test]
    fn matches_product_basis_evaluation() {
        let index = Arc::new(index_matrix_for_count(3, 2, 15).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let features =
            Array2::from_shape_fn((6, 3), |_| rng.gen::<f64>());
        let design = build_design(features.view(), BasisKind::Legendre, index.clone()).unwrap();
        for i in 0..6 {
            let x: Vec<f64> = features.row(i).to_vec();
            for (col, tuple) in index.rows().enumerate() {
                let direct = eval_product_basis(BasisKind::Legendre, tuple, &x).unwrap();
                assert_eq!(design.values()[[i, col]].to_bits(), direct.to_bits());
            }
        }
    }

    #[test]
    fn first_column_is_exactly_one() {
        let index = Arc::new(index_matrix_for_count(2, 2, 12).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let features = Array2::from_shape_fn((40, 2), |_| rng.gen::<f64>());
        let design = build_design(features.view(), BasisKind::Cosine, index).unwrap();
        for i in 0..40 {
            assert_eq!(design.values()[[i, 0]].to_bits(), 1.0_f64.to_bits());
        }
    }

    #[test]
    fn domain_violation_names_row_and_dimension() {
        let index = Arc::new(index_matrix_for_count(2, 2, 4).unwrap());
        let features = Array2::from_shape_vec((2, 2), vec![0.5, 0.5, 0.5, 1.2]).unwrap();
        let err = build_design(features.view(), BasisKind::Cosine, index).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("dimension 1"), "{msg}");
    }

    #[test]
    fn gram_approaches_identity_for_cosine() {
        let index = Arc::new(index_matrix_for_count(2, 2, 10).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let features = Array2::from_shape_fn((n, 2), |_| rng.gen::<f64>());
        let design = build_design(features.view(), BasisKind::Cosine, index).unwrap();
        let psi = design.values();
        let gram = psi.t().dot(&psi) / n as f64;
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[[i, j]] - want).abs() <= 0.05,
                    "gram[{i},{j}] = {}",
                    gram[[i, j]]
                );
            }
        }
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let index = Arc::new(index_matrix_for_count(3, 2, 20).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let features = Array2::from_shape_fn((64, 3), |_| rng.gen::<f64>());
        let a = build_design(features.view(), BasisKind::Cosine, index.clone()).unwrap();
        let b = build_design(features.view(), BasisKind::Cosine, index).unwrap();
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let index = Arc::new(index_matrix_for_count(3, 2, 5).unwrap());
        let features = Array2::from_shape_vec((1, 2), vec![0.1, 0.2]).unwrap();
        assert!(build_design(features.view(), BasisKind::Cosine, index).is_err());
    }
}
