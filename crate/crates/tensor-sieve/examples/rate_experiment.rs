//! Measure how test error decays with sample size for a Lipschitz truth.
//!
//! The truth |x - 1/2| has one derivative a.e., so the least-squares sieve
//! with J ~ n^(1/3) terms should see mean squared error shrink roughly like
//! n^(-2/3). The fitted log-log slope makes that visible.
//!
//! Run with: cargo run --release --example rate_experiment

use tensor_sieve::{cube_root_rule, rate_experiment};

fn main() {
    let truth = |x: f64| (x - 0.5).abs();
    let n_list = [200, 400, 800, 1600, 3200, 6400, 12800];

    let result = rate_experiment(&truth, &n_list, 3.0, 10, 1234, &cube_root_rule).unwrap();

    println!("{:>7} {:>6} {:>12}", "n", "J", "mse");
    for (i, &n) in result.ns.iter().enumerate() {
        println!("{n:>7} {:>6} {:>12.6e}", cube_root_rule(n), result.mses[i]);
    }
    println!("\nlog-log slope: {:.3}  (theory: about -2/3)", result.slope);
}
