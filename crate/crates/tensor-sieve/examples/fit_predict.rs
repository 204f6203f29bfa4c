//! Fit a penalized sieve model on noisy synthetic data, persist it, and
//! verify the reload predicts identically.
//!
//! Run with: cargo run --example fit_predict

use tensor_sieve::{
    evaluate, fit_sieve, generate_dataset, load_model, predict, save_model, Estimator, FitConfig,
    SimulationSpec, TruthKind,
};

fn main() {
    let spec = SimulationSpec {
        truth: TruthKind::Poly,
        d: 3,
        big_d: 2,
        n_train: 600,
        n_test: 1000,
        snr: 20.0,
        seed: 42,
    };
    let (train, test) = generate_dataset(&spec).unwrap();

    let cfg = FitConfig {
        estimator: Estimator::Lasso,
        d_prime: 2,
        ..FitConfig::default()
    };
    let model = fit_sieve(&train, &cfg).unwrap();
    println!(
        "fitted {} terms with lambda = {:.5} (converged: {})",
        model.j(),
        model.meta().lambda,
        model.meta().converged
    );
    let active = model.beta().iter().filter(|b| **b != 0.0).count();
    println!("nonzero coefficients: {active} of {}", model.j());

    let metrics = evaluate(&model, &test).unwrap();
    println!(
        "test mse = {:.5}, generalization r2 = {:.4}",
        metrics.mse,
        metrics.r2.unwrap()
    );

    let path = std::env::temp_dir().join("sieve_example_model.json");
    save_model(&model, &path).unwrap();
    let reloaded = load_model(&path).unwrap();
    let a = predict(&model, test.features()).unwrap();
    let b = predict(&reloaded, test.features()).unwrap();
    let identical = a
        .iter()
        .zip(b.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    println!("reload predicts bit-identically: {identical}");
    std::fs::remove_file(&path).ok();
}
