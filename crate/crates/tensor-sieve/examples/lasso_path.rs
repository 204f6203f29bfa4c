//! Trace the regularization path: sparsity and fit quality as the penalty
//! relaxes from lambda_max toward zero.
//!
//! Run with: cargo run --example lasso_path

use ndarray::Array2;
use std::sync::Arc;
use tensor_sieve::{
    build_design, generate_dataset, index_matrix_for_count, lambda_max, lasso_path, BasisKind,
    LassoConfig, SimulationSpec, TruthKind,
};

fn main() {
    let spec = SimulationSpec {
        truth: TruthKind::Interaction,
        d: 2,
        big_d: 2,
        n_train: 500,
        n_test: 1,
        snr: 10.0,
        seed: 7,
    };
    let (train, _) = generate_dataset(&spec).unwrap();

    // features are already in [0,1]; build the design directly
    let index = Arc::new(index_matrix_for_count(2, 2, 60).unwrap());
    let design = build_design(train.features(), BasisKind::Cosine, index).unwrap();

    let top = lambda_max(design.values(), train.outcome());
    let lambdas: Vec<f64> = (0..12)
        .map(|i| top * 10f64.powf(-2.0 * i as f64 / 11.0))
        .collect();
    let fits = lasso_path(
        design.values(),
        train.outcome(),
        &lambdas,
        &LassoConfig::default(),
    )
    .unwrap();

    println!("lambda_max = {top:.5}");
    println!("{:>10} {:>8} {:>12} {:>8}", "lambda", "nonzero", "train mse", "sweeps");
    let n = train.n() as f64;
    for (lambda, fit) in lambdas.iter().zip(&fits) {
        let fitted = design.values().dot(&fit.beta);
        let mse = fitted
            .iter()
            .zip(train.outcome().iter())
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / n;
        let nonzero = fit.beta.iter().filter(|b| **b != 0.0).count();
        println!(
            "{lambda:>10.5} {nonzero:>8} {mse:>12.6} {:>8}",
            fit.sweeps_used
        );
    }

    let x2: Array2<f64> = Array2::zeros((1, 2));
    let row = build_design(
        x2.view(),
        BasisKind::Cosine,
        Arc::new(index_matrix_for_count(2, 2, 60).unwrap()),
    )
    .unwrap();
    let at_origin = row.values().dot(&fits.last().unwrap().beta)[0];
    println!("\nfitted value at the origin (smallest penalty): {at_origin:.4}");
}
