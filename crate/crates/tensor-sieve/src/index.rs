//! Ordering of frequency tuples for tensor product bases.
//!
//! A multivariate basis function is indexed by a d-tuple `j = (j^1, .., j^d)`
//! of positive integers with magnitude `c = j^1 * .. * j^d`. Tuples are
//! emitted in blocks of non-decreasing `c`; tuples with more than `d_prime`
//! entries above 1 are excluded entirely, which keeps the count of tuples
//! with magnitude at most `P` near `P log^{d_prime - 1} P` instead of
//! `P log^{d - 1} P`.
//!
//! Within a block of equal `c` the canonical order is: factorizations of `c`
//! into factors `>= 2` enumerated shortest-first and lexicographically within
//! a length, each factorization placed at every increasing combination of
//! `d` positions, combinations in lexicographic order. The remaining slots
//! hold 1.

use itertools::Itertools;

use crate::error::{Error, Result};

/// Cap on total `rows * d` entries an index matrix may occupy.
pub const MEMORY_BUDGET_ENTRIES: u64 = 50_000_000;

/// Ordered list of frequency tuples, stored row-major with stride `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMatrix {
    d: usize,
    d_prime: usize,
    entries: Vec<u32>,
    c: Vec<u64>,
}

impl IndexMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    /// Number of rows (basis functions).
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.d..(i + 1) * self.d]
    }

    /// Magnitude `c` of row `i`, the product of its entries.
    pub fn c_value(&self, i: usize) -> u64 {
        self.c[i]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u32> {
        self.entries.chunks_exact(self.d)
    }

    /// Largest frequency appearing in dimension `dim`.
    pub fn max_frequency(&self, dim: usize) -> u32 {
        assert!(dim < self.d, "dimension {dim} out of range");
        self.rows().map(|r| r[dim]).max().unwrap_or(1)
    }

    /// Rebuilds a matrix from explicit rows, validating shape and entries.
    /// Row order is preserved as given.
    pub(crate) fn from_rows(d: usize, d_prime: usize, rows: &[Vec<u32>]) -> Result<Self> {
        validate_dims(d, d_prime)?;
        if rows.is_empty() {
            return Err(Error::InvalidArgument("index matrix has no rows".into()));
        }
        let mut entries = Vec::with_capacity(rows.len() * d);
        let mut c = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::ModelFormat(format!(
                    "index row {i} has {} columns, expected {d}",
                    row.len()
                )));
            }
            let mut prod: u64 = 1;
            let mut above_one = 0usize;
            for &f in row {
                if f < 1 {
                    return Err(Error::ModelFormat(format!(
                        "index row {i} contains entry {f}; entries must be >= 1"
                    )));
                }
                if f > 1 {
                    above_one += 1;
                }
                prod = prod.checked_mul(f as u64).ok_or(Error::CountOverflow)?;
            }
            if above_one > d_prime {
                return Err(Error::ModelFormat(format!(
                    "index row {i} has {above_one} entries above 1, limit is {d_prime}"
                )));
            }
            entries.extend_from_slice(row);
            c.push(prod);
        }
        Ok(IndexMatrix {
            d,
            d_prime,
            entries,
            c,
        })
    }
}

fn validate_dims(d: usize, d_prime: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if d_prime < 1 || d_prime > d {
        return Err(Error::InvalidArgument(format!(
            "d_prime must lie in 1..=d, got d_prime={d_prime} with d={d}"
        )));
    }
    Ok(())
}

/// Divisors of `n` in ascending order.
fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut f = 1;
    while f * f <= n {
        if n % f == 0 {
            small.push(f);
            if f != n / f {
                large.push(n / f);
            }
        }
        f += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Number of ordered `d`-tuples of positive integers whose product is `n`
/// (the d-dimensional divisor function). Dynamic programming over the
/// identity tau_d = tau_{d-1} * 1 (Dirichlet convolution), restricted to the
/// divisor lattice of `n`.
pub fn tau(d: u32, n: u64) -> Result<u64> {
    if d < 1 {
        return Err(Error::InvalidArgument("tau requires d >= 1".into()));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("tau requires n >= 1".into()));
    }
    let divs = divisors(n);
    let mut level = vec![1u64; divs.len()];
    for _ in 2..=d {
        let mut next = vec![0u64; divs.len()];
        for (i, &m) in divs.iter().enumerate() {
            let mut acc: u64 = 0;
            for (j, &f) in divs.iter().enumerate().take(i + 1) {
                if m % f == 0 {
                    acc = acc.checked_add(level[j]).ok_or(Error::CountOverflow)?;
                }
            }
            next[i] = acc;
        }
        level = next;
    }
    Ok(level[divs.len() - 1])
}

/// `T_d(x)`, the number of ordered `d`-tuples with product at most `x`;
/// equivalently the partial sum of `tau(d, .)` up to `x`. Computed by the
/// same Dirichlet-convolution sieve, with full tables up to `x`.
pub fn big_t(d: u32, x: u64) -> Result<u64> {
    if d < 1 {
        return Err(Error::InvalidArgument("big_t requires d >= 1".into()));
    }
    if x < 1 {
        return Err(Error::InvalidArgument("big_t requires x >= 1".into()));
    }
    if x > MEMORY_BUDGET_ENTRIES {
        return Err(Error::MemoryBudget {
            needed: x,
            budget: MEMORY_BUDGET_ENTRIES,
        });
    }
    let len = x as usize;
    // level[m - 1] = tau_k(m); level 1 is identically one
    let mut level = vec![1u64; len];
    for _ in 2..=d {
        let mut next = vec![0u64; len];
        for f in 1..=len {
            let add = level[f - 1];
            let mut m = f;
            while m <= len {
                next[m - 1] = next[m - 1].checked_add(add).ok_or(Error::CountOverflow)?;
                m += f;
            }
        }
        level = next;
    }
    let mut total: u64 = 0;
    for v in level {
        total = total.checked_add(v).ok_or(Error::CountOverflow)?;
    }
    Ok(total)
}

/// All ordered tuples of integers `>= 2` with product `product` and length
/// `1..=d_prime`: shorter tuples first, lexicographically ascending within a
/// length. `product == 1` yields one empty tuple.
pub fn factorizations(product: u64, d_prime: usize) -> Result<Vec<Vec<u64>>> {
    if product < 1 {
        return Err(Error::InvalidArgument(
            "factorizations requires product >= 1".into(),
        ));
    }
    if d_prime < 1 || d_prime > 63 {
        return Err(Error::InvalidArgument(
            "factorizations requires d_prime in 1..=63".into(),
        ));
    }
    if product == 1 {
        return Ok(vec![Vec::new()]);
    }
    let divs = divisors(product);
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    for len in 1..=d_prime {
        // tuples of `len` factors >= 2 need product >= 2^len
        if (1u64 << len) > product {
            break;
        }
        emit_factorizations(product, len, &divs, &mut prefix, &mut out);
    }
    Ok(out)
}

fn emit_factorizations(
    remaining: u64,
    slots: usize,
    divs: &[u64],
    prefix: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
) {
    if slots == 1 {
        if remaining >= 2 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
        }
        return;
    }
    // smallest product the remaining slots can reach is 2^(slots - 1)
    let bound = remaining >> (slots - 1);
    for &f in divs {
        if f < 2 {
            continue;
        }
        if f > bound {
            break;
        }
        if remaining % f == 0 {
            prefix.push(f);
            emit_factorizations(remaining / f, slots - 1, divs, prefix, out);
            prefix.pop();
        }
    }
}

struct Builder {
    d: usize,
    d_prime: usize,
    budget: u64,
    entries: Vec<u32>,
    c: Vec<u64>,
}

impl Builder {
    fn new(d: usize, d_prime: usize, budget: u64) -> Self {
        Builder {
            d,
            d_prime,
            budget,
            entries: Vec::new(),
            c: Vec::new(),
        }
    }

    fn rows(&self) -> usize {
        self.c.len()
    }

    /// Appends every tuple with magnitude exactly `product`, in canonical
    /// order. `limit` truncates mid-block once that many total rows exist.
    fn push_block(&mut self, product: u64, limit: Option<usize>) -> Result<()> {
        if product > u32::MAX as u64 {
            return Err(Error::InvalidArgument(
                "frequencies beyond u32::MAX are not supported".into(),
            ));
        }
        for factors in factorizations(product, self.d_prime)? {
            if factors.len() > self.d {
                continue;
            }
            for positions in (0..self.d).combinations(factors.len()) {
                if let Some(limit) = limit {
                    if self.rows() >= limit {
                        return Ok(());
                    }
                }
                let needed = (self.entries.len() + self.d) as u64;
                if needed > self.budget {
                    return Err(Error::MemoryBudget {
                        needed,
                        budget: self.budget,
                    });
                }
                let start = self.entries.len();
                self.entries.resize(start + self.d, 1);
                for (&pos, &f) in positions.iter().zip(&factors) {
                    self.entries[start + pos] = f as u32;
                }
                self.c.push(product);
            }
        }
        Ok(())
    }

    fn finish(self) -> IndexMatrix {
        IndexMatrix {
            d: self.d,
            d_prime: self.d_prime,
            entries: self.entries,
            c: self.c,
        }
    }
}

/// Every frequency tuple with magnitude at most `prod_max`, in canonical
/// order, under the default memory budget.
pub fn generate_index_matrix(d: usize, d_prime: usize, prod_max: u64) -> Result<IndexMatrix> {
    generate_index_matrix_with_budget(d, d_prime, prod_max, MEMORY_BUDGET_ENTRIES)
}

/// As [`generate_index_matrix`] with an explicit entry budget.
pub fn generate_index_matrix_with_budget(
    d: usize,
    d_prime: usize,
    prod_max: u64,
    budget: u64,
) -> Result<IndexMatrix> {
    validate_dims(d, d_prime)?;
    if prod_max < 1 {
        return Err(Error::InvalidArgument("prod_max must be >= 1".into()));
    }
    let mut builder = Builder::new(d, d_prime, budget);
    for product in 1..=prod_max {
        builder.push_block(product, None)?;
    }
    Ok(builder.finish())
}

/// The first `count` tuples of the canonical order: blocks of increasing
/// magnitude are appended until `count` rows exist, truncating inside the
/// final block. The result is a prefix of any longer generation.
pub fn index_matrix_for_count(d: usize, d_prime: usize, count: usize) -> Result<IndexMatrix> {
    validate_dims(d, d_prime)?;
    if count < 1 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let needed = (count as u64).saturating_mul(d as u64);
    if needed > MEMORY_BUDGET_ENTRIES {
        return Err(Error::MemoryBudget {
            needed,
            budget: MEMORY_BUDGET_ENTRIES,
        });
    }
    let mut builder = Builder::new(d, d_prime, MEMORY_BUDGET_ENTRIES);
    let mut product: u64 = 0;
    while builder.rows() < count {
        product += 1;
        builder.push_block(product, Some(count))?;
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Direct enumeration of ordered tuples, no shared code with `tau`.
    fn tau_brute(d: u32, n: u64) -> u64 {
        if d == 1 {
            return 1;
        }
        (1..=n)
            .filter(|f| n % f == 0)
            .map(|f| tau_brute(d - 1, n / f))
            .sum()
    }

    #[test]
    fn tau_frozen_values() {
        assert_eq!(tau(2, 4).unwrap(), 3);
        assert_eq!(tau(2, 6).unwrap(), 4);
        assert_eq!(tau(3, 4).unwrap(), 6);
        assert_eq!(tau(1, 5040).unwrap(), 1);
        assert_eq!(tau(4, 1).unwrap(), 1);
    }

    #[test]
    fn tau_matches_enumeration_on_small_inputs() {
        for d in 1..=3 {
            for n in 1..=60 {
                assert_eq!(tau(d, n).unwrap(), tau_brute(d, n), "d={d} n={n}");
            }
        }
    }

    #[test]
    fn tau_rejects_bad_arguments() {
        assert!(tau(0, 4).is_err());
        assert!(tau(2, 0).is_err());
    }

    #[test]
    fn big_t_frozen_values() {
        assert_eq!(big_t(2, 10).unwrap(), 27);
        assert_eq!(big_t(2, 8).unwrap(), 20);
        assert_eq!(big_t(1, 7).unwrap(), 7);
        assert_eq!(big_t(3, 1).unwrap(), 1);
    }

    #[test]
    fn big_t_satisfies_the_downward_recurrence() {
        // T_d(x) = sum_{n <= x} T_{d-1}(floor(x / n))
        for d in 2..=3u32 {
            for x in 1..=60u64 {
                let direct = big_t(d, x).unwrap();
                let via: u64 = (1..=x).map(|n| big_t(d - 1, x / n).unwrap()).sum();
                assert_eq!(direct, via, "d={d} x={x}");
            }
        }
    }

    #[test]
    fn factorizations_fixtures() {
        let f = |p, dp| factorizations(p, dp).unwrap();
        assert_eq!(f(4, 2), vec![vec![4], vec![2, 2]]);
        assert_eq!(f(6, 2), vec![vec![6], vec![2, 3], vec![3, 2]]);
        assert_eq!(f(6, 1), vec![vec![6]]);
        assert_eq!(f(1, 3), vec![Vec::<u64>::new()]);
        assert_eq!(
            f(8, 3),
            vec![vec![8], vec![2, 4], vec![4, 2], vec![2, 2, 2]]
        );
        assert_eq!(
            f(12, 3),
            vec![
                vec![12],
                vec![2, 6],
                vec![3, 4],
                vec![4, 3],
                vec![6, 2],
                vec![2, 2, 3],
                vec![2, 3, 2],
                vec![3, 2, 2],
            ]
        );
    }

    #[test]
    fn factorization_count_matches_tau_with_ones_stripped() {
        // Padding a tuple of m factors >= 2 with d' - m ones, over all
        // position choices of the ones, is counted by tau with d' slots;
        // conversely stripping ones collapses C(d', m) padded copies.
        for product in 2..=40u64 {
            for d_prime in 1..=4usize {
                let stripped = factorizations(product, d_prime).unwrap();
                let padded: u64 = stripped
                    .iter()
                    .map(|t| binomial(d_prime as u64, t.len() as u64))
                    .sum();
                assert_eq!(padded, tau(d_prime as u32, product).unwrap());
            }
        }
    }

    fn binomial(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        let mut acc = 1u64;
        for i in 0..k {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn generate_small_fixtures() {
        let m = generate_index_matrix(2, 1, 5).unwrap();
        let expected: Vec<Vec<u32>> = vec![
            vec![1, 1],
            vec![2, 1],
            vec![1, 2],
            vec![3, 1],
            vec![1, 3],
            vec![4, 1],
            vec![1, 4],
            vec![5, 1],
            vec![1, 5],
        ];
        assert_eq!(m.rows().map(|r| r.to_vec()).collect::<Vec<_>>(), expected);

        let m = generate_index_matrix(3, 3, 2).unwrap();
        let expected: Vec<Vec<u32>> =
            vec![vec![1, 1, 1], vec![2, 1, 1], vec![1, 2, 1], vec![1, 1, 2]];
        assert_eq!(m.rows().map(|r| r.to_vec()).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn canonical_order_within_equal_magnitude() {
        let m = generate_index_matrix(3, 3, 8).unwrap();
        let rows: Vec<Vec<u32>> = m.rows().map(|r| r.to_vec()).collect();
        // magnitude 4: whole factor first, then the split, positions lex
        assert_eq!(rows[7..13].to_vec(), vec![
            vec![4, 1, 1],
            vec![1, 4, 1],
            vec![1, 1, 4],
            vec![2, 2, 1],
            vec![2, 1, 2],
            vec![1, 2, 2],
        ]);
        // magnitude 6: [6], then [2,3] before [3,2]
        assert_eq!(rows[16..25].to_vec(), vec![
            vec![6, 1, 1],
            vec![1, 6, 1],
            vec![1, 1, 6],
            vec![2, 3, 1],
            vec![2, 1, 3],
            vec![1, 2, 3],
            vec![3, 2, 1],
            vec![3, 1, 2],
            vec![1, 3, 2],
        ]);
        assert_eq!(m.len(), 38);
    }

    #[test]
    fn for_count_truncates_and_prefixes() {
        let m = index_matrix_for_count(2, 2, 7).unwrap();
        assert_eq!(m.len(), 7);
        assert_eq!(m.row(6), &[1, 4]);
        // the split block of magnitude 4 comes right after the whole factors
        let m8 = index_matrix_for_count(2, 2, 8).unwrap();
        assert_eq!(m8.row(7), &[2, 2]);
        // row 21 of the sparse d = 3 ordering
        let m21 = index_matrix_for_count(3, 2, 21).unwrap();
        assert_eq!(m21.row(20), &[2, 1, 3]);
        // rows 14..16 are the permutation block of magnitude 5
        let m30 = index_matrix_for_count(3, 3, 30).unwrap();
        assert_eq!(m30.row(13), &[5, 1, 1]);
        assert_eq!(m30.row(14), &[1, 5, 1]);
        assert_eq!(m30.row(15), &[1, 1, 5]);
        // prefix of any longer generation
        let long = generate_index_matrix(3, 2, 30).unwrap();
        let short = index_matrix_for_count(3, 2, 25).unwrap();
        for i in 0..25 {
            assert_eq!(short.row(i), long.row(i));
            assert_eq!(short.c_value(i), long.c_value(i));
        }
    }

    #[test]
    fn invariants_on_a_small_grid() {
        for d in 1..=4usize {
            for d_prime in 1..=d {
                for prod_max in 1..=10u64 {
                    let m = generate_index_matrix(d, d_prime, prod_max).unwrap();
                    assert_eq!(m.row(0), vec![1u32; d].as_slice());
                    let mut seen = HashSet::new();
                    let mut last_c = 0u64;
                    for i in 0..m.len() {
                        let row = m.row(i);
                        let c: u64 = row.iter().map(|&f| f as u64).product();
                        assert_eq!(c, m.c_value(i));
                        assert!(c <= prod_max);
                        assert!(m.c_value(i) >= last_c, "c not non-decreasing");
                        last_c = m.c_value(i);
                        assert!(row.iter().filter(|&&f| f > 1).count() <= d_prime);
                        assert!(seen.insert(row.to_vec()), "duplicate row {row:?}");
                    }
                    // completeness: every admissible tuple appears
                    let mut expected = 0usize;
                    let mut stack = vec![vec![]];
                    for _ in 0..d {
                        let mut next = Vec::new();
                        for t in &stack {
                            let prod: u64 = t.iter().map(|&f| f as u64).product();
                            for f in 1..=prod_max {
                                if prod * f <= prod_max {
                                    let mut t2: Vec<u32> = t.clone();
                                    t2.push(f as u32);
                                    next.push(t2);
                                }
                            }
                        }
                        stack = next;
                    }
                    for t in stack {
                        if t.iter().filter(|&&f| f > 1).count() <= d_prime {
                            expected += 1;
                            assert!(seen.contains(&t), "missing tuple {t:?}");
                        }
                    }
                    assert_eq!(expected, m.len());
                }
            }
        }
    }

    #[test]
    fn budget_and_argument_errors() {
        assert!(matches!(
            generate_index_matrix_with_budget(3, 2, 50, 10),
            Err(Error::MemoryBudget { .. })
        ));
        assert!(generate_index_matrix(3, 4, 5).is_err());
        assert!(generate_index_matrix(0, 1, 5).is_err());
        assert!(generate_index_matrix(3, 0, 5).is_err());
        assert!(generate_index_matrix(3, 2, 0).is_err());
        assert!(index_matrix_for_count(2, 2, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_index_matrix(4, 2, 12).unwrap();
        let b = generate_index_matrix(4, 2, 12).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn magnitude_grows_like_rank_over_log() {
        // c_j * ln(max(j, 2)) / j stays within a constant band; the full-range
        // version lives in the acceptance suite.
        let m = index_matrix_for_count(2, 2, 2000).unwrap();
        for j in 100..=2000usize {
            let c = m.c_value(j - 1) as f64;
            let ratio = c * (j as f64).max(2.0).ln() / j as f64;
            assert!(
                (0.1..=10.0).contains(&ratio),
                "j={j} c={c} ratio={ratio}"
            );
        }
    }

    #[test]
    fn from_rows_validates() {
        let ok = IndexMatrix::from_rows(2, 2, &[vec![1, 1], vec![2, 1]]).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.c_value(1), 2);
        assert!(IndexMatrix::from_rows(2, 2, &[vec![1, 1, 1]]).is_err());
        assert!(IndexMatrix::from_rows(2, 2, &[vec![0, 1]]).is_err());
        assert!(IndexMatrix::from_rows(3, 1, &[vec![2, 2, 1]]).is_err());
        assert!(IndexMatrix::from_rows(2, 2, &[]).is_err());
    }
}
