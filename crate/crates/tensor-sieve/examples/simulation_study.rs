//! Compare all five estimators on an interaction truth across replicates.
//!
//! Run with: cargo run --release --example simulation_study

use tensor_sieve::{run_methods, Method, RunConfig, SimulationSpec, TruthKind};

fn main() {
    let spec = SimulationSpec {
        truth: TruthKind::Interaction,
        d: 4,
        big_d: 2,
        n_train: 800,
        n_test: 2000,
        snr: 10.0,
        seed: 7,
    };
    let config = RunConfig {
        methods: vec![
            Method::SieveLasso,
            Method::SieveOls,
            Method::SieveAdditive,
            Method::Krr,
            Method::KrrOracle,
        ],
        replicates: 5,
        ..RunConfig::default()
    };

    println!(
        "truth = {}, d = {}, D = {}, n = {}, snr = {}",
        spec.truth, spec.d, spec.big_d, spec.n_train, spec.snr
    );
    let records = run_methods(&spec, &config).unwrap();

    println!("\n{:<16} {:>6} {:>12} {:>8}", "method", "seed", "mse", "r2");
    for rec in &records {
        let r2 = rec.r2.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<16} {:>6} {:>12.6} {:>8}",
            rec.method.to_string(),
            rec.seed,
            rec.mse,
            r2
        );
    }

    // average over replicates, per method
    println!("\n{:<16} {:>12} {:>8}", "method", "mean mse", "mean r2");
    for method in &config.methods {
        let rows: Vec<_> = records.iter().filter(|r| r.method == *method).collect();
        let mean_mse = rows.iter().map(|r| r.mse).sum::<f64>() / rows.len() as f64;
        let mean_r2 = rows.iter().filter_map(|r| r.r2).sum::<f64>() / rows.len() as f64;
        println!("{:<16} {:>12.6} {:>8.4}", method.to_string(), mean_mse, mean_r2);
    }
}
