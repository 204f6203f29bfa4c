//! Univariate basis functions on `[0, 1]`.
//!
//! Three families, all indexed from `j = 1` with the constant function first:
//!
//! * `Cosine`: `phi_1 = 1`, `phi_j(x) = sqrt(2) cos((j-1) pi x)` for `j >= 2`.
//!   Orthonormal in `L2([0,1])` with sup-norm `sqrt(2)`.
//! * `Sine`: `phi_1 = 1`, `phi_j(x) = sin((j + 1/2) pi x)` for `j >= 2`.
//!   Not orthonormal; kept as an alternative smooth family.
//! * `Legendre`: `phi_j(x) = sqrt(2j - 1) P_{j-1}(2x - 1)` where `P_n` is the
//!   Legendre polynomial on `[-1, 1]` from the three-term recurrence.
//!   Orthonormal in `L2([0,1])`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Cosine,
    Sine,
    Legendre,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BasisKind::Cosine => "cosine",
            BasisKind::Sine => "sine",
            BasisKind::Legendre => "legendre",
        };
        f.write_str(name)
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(BasisKind::Cosine),
            "sine" => Ok(BasisKind::Sine),
            "legendre" => Ok(BasisKind::Legendre),
            other => Err(Error::InvalidArgument(format!(
                "unknown basis {other:?}; expected cosine, sine, or legendre"
            ))),
        }
    }
}

fn check_domain(j: usize, x: f64) -> Result<()> {
    if j < 1 {
        return Err(Error::InvalidArgument(
            "basis index j must be >= 1".into(),
        ));
    }
    if !(x >= 0.0 && x <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "basis argument x must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

/// Evaluates `phi_j(x)` for the given family. `j` is 1-based; `x` must lie in
/// `[0, 1]`.
pub fn eval_basis(kind: BasisKind, j: usize, x: f64) -> Result<f64> {
    check_domain(j, x)?;
    if j == 1 {
        return Ok(1.0);
    }
    let value = match kind {
        BasisKind::Cosine => SQRT_2 * ((j - 1) as f64 * PI * x).cos(),
        BasisKind::Sine => ((j as f64 + 0.5) * PI * x).sin(),
        BasisKind::Legendre => legendre_orthonormal(j, x),
    };
    Ok(value)
}

/// Evaluates `phi_1(x) .. phi_{j_max}(x)` in one pass. For `Legendre` this
/// runs the recurrence once instead of once per index.
pub fn eval_basis_row(kind: BasisKind, j_max: usize, x: f64) -> Result<Vec<f64>> {
    check_domain(j_max.max(1), x)?;
    if j_max == 0 {
        return Err(Error::InvalidArgument(
            "basis index j must be >= 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(j_max);
    out.push(1.0);
    match kind {
        BasisKind::Cosine => {
            for j in 2..=j_max {
                out.push(SQRT_2 * ((j - 1) as f64 * PI * x).cos());
            }
        }
        BasisKind::Sine => {
            for j in 2..=j_max {
                out.push(((j as f64 + 0.5) * PI * x).sin());
            }
        }
        BasisKind::Legendre => {
            if j_max >= 2 {
                let u = 2.0 * x - 1.0;
                // p = P_n, p_prev = P_{n-1}; phi_{n+1} = sqrt(2n + 1) P_n.
                let mut p_prev = 1.0;
                let mut p = u;
                out.push(3.0_f64.sqrt() * p);
                for n in 1..j_max - 1 {
                    let next =
                        ((2 * n + 1) as f64 * u * p - n as f64 * p_prev) / (n + 1) as f64;
                    p_prev = p;
                    p = next;
                    out.push(((2 * (n + 1) + 1) as f64).sqrt() * p);
                }
            }
        }
    }
    Ok(out)
}

fn legendre_orthonormal(j: usize, x: f64) -> f64 {
    let u = 2.0 * x - 1.0;
    let degree = j - 1;
    let mut p_prev = 1.0;
    let mut p = u;
    for n in 1..degree {
        let next = ((2 * n + 1) as f64 * u * p - n as f64 * p_prev) / (n + 1) as f64;
        p_prev = p;
        p = next;
    }
    ((2 * degree + 1) as f64).sqrt() * p
}
