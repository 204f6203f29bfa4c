//! Evaluate the univariate bases and check cosine orthonormality by
//! quadrature.
//!
//! Run with: cargo run --example basis_functions

use tensor_sieve::{eval_basis, eval_basis_row, BasisKind};

fn main() {
    let kinds = [BasisKind::Cosine, BasisKind::Sine, BasisKind::Legendre];
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];

    for kind in kinds {
        println!("{kind} basis, first four functions:");
        for &x in &xs {
            let row = eval_basis_row(kind, 4, x).unwrap();
            let formatted: Vec<String> = row.iter().map(|v| format!("{v:+.4}")).collect();
            println!("  x = {x:.2}:  {}", formatted.join("  "));
        }
        println!();
    }

    // midpoint-rule inner products of the cosine basis: identity matrix
    let intervals = 20_000;
    let j_max = 6;
    println!("cosine Gram by quadrature ({intervals} intervals):");
    for a in 1..=j_max {
        let mut line = String::from("  ");
        for b in 1..=j_max {
            let mut acc = 0.0;
            for i in 0..intervals {
                let x = (i as f64 + 0.5) / intervals as f64;
                acc += eval_basis(BasisKind::Cosine, a, x).unwrap()
                    * eval_basis(BasisKind::Cosine, b, x).unwrap();
            }
            line.push_str(&format!("{:+.6} ", acc / intervals as f64));
        }
        println!("{line}");
    }
}
