//! Select the basis count and penalty by 5-fold cross-validation.
//!
//! Run with: cargo run --example cross_validation

use tensor_sieve::{
    cross_validate, evaluate, fit_sieve, generate_dataset, CvConfig, FitConfig, SimulationSpec,
    TruthKind,
};

fn main() {
    let spec = SimulationSpec {
        truth: TruthKind::Poly,
        d: 2,
        big_d: 2,
        n_train: 400,
        n_test: 1000,
        snr: 5.0,
        seed: 11,
    };
    let (train, test) = generate_dataset(&spec).unwrap();

    let cfg = FitConfig {
        cv: Some(CvConfig {
            folds: 5,
            lambda_grid: 12,
            j_grid: vec![20, 40, 80],
            seed: 1,
        }),
        ..FitConfig::default()
    };

    let (best, table) = cross_validate(&train, &cfg).unwrap();
    println!("evaluated {} (grid point, fold) pairs", table.len());
    println!(
        "selected J = {}, lambda = {:.5}",
        best.j, best.lambda
    );

    // mean validation error per J at the winning lambda's position
    for &j in &[20usize, 40, 80] {
        let lambdas: Vec<f64> = {
            let mut seen: Vec<f64> = table
                .iter()
                .filter(|r| r.j == j)
                .map(|r| r.lambda)
                .collect();
            seen.dedup();
            seen
        };
        let best_for_j = lambdas
            .iter()
            .map(|&l| {
                let mses: Vec<f64> = table
                    .iter()
                    .filter(|r| r.j == j && r.lambda == l)
                    .map(|r| r.mse)
                    .collect();
                mses.iter().sum::<f64>() / mses.len() as f64
            })
            .fold(f64::INFINITY, f64::min);
        println!("  J = {j:>2}: best mean validation mse = {best_for_j:.5}");
    }

    let model = fit_sieve(&train, &cfg).unwrap();
    let metrics = evaluate(&model, &test).unwrap();
    println!(
        "refit on all rows: test mse = {:.5}, r2 = {:.4}",
        metrics.mse,
        metrics.r2.unwrap()
    );
}
