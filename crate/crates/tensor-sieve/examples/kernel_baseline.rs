//! The first-order Sobolev kernel: closed form vs Mercer expansion, and a
//! kernel ridge fit.
//!
//! Run with: cargo run --example kernel_baseline

use ndarray::{Array1, Array2};
use tensor_sieve::{
    eval_basis, krr_fit, mercer_eigenvalue, product_kernel, w1_kernel, BasisKind, Dataset,
};

fn main() {
    println!("k(0, 0) = {:.10}  (coth 1)", w1_kernel(0.0, 0.0).unwrap());
    println!("k(0.3, 0.7) = {:.10}", w1_kernel(0.3, 0.7).unwrap());

    // truncated eigenexpansion in the cosine basis converges to the kernel
    let (s, t) = (0.3, 0.7);
    let exact = w1_kernel(s, t).unwrap();
    for j_max in [10, 100, 1000, 10_000] {
        let mut acc = 0.0;
        for j in 1..=j_max {
            acc += mercer_eigenvalue(j)
                * eval_basis(BasisKind::Cosine, j, s).unwrap()
                * eval_basis(BasisKind::Cosine, j, t).unwrap();
        }
        println!("  {j_max:>6} terms: {acc:.10}  (error {:+.2e})", acc - exact);
    }

    // oracle restriction: only the named coordinates matter
    let x = [0.1, 0.8, 0.4];
    let z = [0.9, 0.2, 0.4];
    println!(
        "\nproduct kernel, all dims:    {:.6}",
        product_kernel(&x, &z, None).unwrap()
    );
    println!(
        "product kernel, dims {{0,2}}: {:.6}",
        product_kernel(&x, &z, Some(&[0, 2])).unwrap()
    );

    // ridge regression on a smooth univariate truth
    let n = 60;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let features = Array2::from_shape_vec((n, 1), xs.clone()).unwrap();
    let outcome = Array1::from_iter(xs.iter().map(|&v| (2.0 * std::f64::consts::PI * v).sin()));
    let data = Dataset::new(features, outcome).unwrap();
    let model = krr_fit(&data, 1e-4, None).unwrap();

    let grid = Array2::from_shape_vec((5, 1), vec![0.1, 0.3, 0.5, 0.7, 0.9]).unwrap();
    let preds = model.predict(grid.view()).unwrap();
    println!("\nKRR fit of sin(2 pi x), ridge 1e-4:");
    for (i, &x) in [0.1, 0.3, 0.5, 0.7, 0.9].iter().enumerate() {
        let truth = (2.0 * std::f64::consts::PI * x).sin();
        println!("  x = {x:.1}: predicted {:+.4}, truth {truth:+.4}", preds[i]);
    }
}
