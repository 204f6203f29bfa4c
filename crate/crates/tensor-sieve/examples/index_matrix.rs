//! Walk the canonical ordering of tensor product terms and the divisor
//! counts that control its growth.
//!
//! Run with: cargo run --example index_matrix

use tensor_sieve::{big_t, generate_index_matrix, index_matrix_for_count, tau};

fn main() {
    // every tuple in 3 dimensions with frequency product at most 8
    let matrix = generate_index_matrix(3, 3, 8).unwrap();
    println!("d=3, product <= 8: {} tuples", matrix.len());
    for (i, row) in matrix.rows().enumerate() {
        println!("  row {:>2}: {:?}  (c = {})", i + 1, row, matrix.c_value(i));
    }

    // a prefix of fixed length, as used when J is set by sample size
    let prefix = index_matrix_for_count(3, 2, 12).unwrap();
    println!("\nfirst 12 tuples with at most 2 interacting coordinates:");
    for row in prefix.rows() {
        println!("  {row:?}");
    }

    // tau_d(n): ordered factorization counts; T_d(x): their partial sums.
    // T_d grows like x ln(x)^(d-1) / (d-1)!, so the J-th tuple has magnitude
    // roughly J / ln(J)^(d-1).
    println!("\ntau_2(n) for n = 1..12:");
    let taus: Vec<u64> = (1..=12).map(|n| tau(2, n).unwrap()).collect();
    println!("  {taus:?}");
    for d in 1..=3u32 {
        let t = big_t(d, 100).unwrap();
        println!("T_{d}(100) = {t}");
    }
}
