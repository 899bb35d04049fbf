//! Dual nets and their minimum weights.
//!
//! The dual net `P⊥` of the first `2^m` addresses at precision `n` is the
//! kernel of `K ↦ C₁ᵀk₁ ⊕ C₂ᵀk₂`, a linear map `F₂^{n×2} → F₂^m`. The kernel
//! basis comes from Gaussian elimination over F₂; minimum weights come from
//! enumerating its span in Gray-code order.

use crate::bitcore::{BitVector, IndexMatrix};
use crate::digital::GeneratorPair;
use crate::error::{Error, Result};
use crate::par;

/// Largest kernel dimension [`min_weights`] will enumerate.
pub const MAX_ENUM_DIM: usize = 30;

/// NRT weight of a vector: 1-based index of the last nonzero entry, 0 for
/// the zero vector.
pub fn mu1(k: &BitVector) -> usize {
    k.last_one().map_or(0, |i| i + 1)
}

fn bit_len(mask: u64) -> usize {
    64 - mask.leading_zeros() as usize
}

/// `μ₁(k₁) + μ₁(k₂)`.
pub fn mu1_matrix(k: &IndexMatrix) -> usize {
    let (a, b) = k.column_masks();
    bit_len(a) + bit_len(b)
}

/// `v(K) = max(μ₁(k₁), μ₁(k₂))`, which is also the deepest nonzero row.
pub fn v_weight(k: &IndexMatrix) -> usize {
    let (a, b) = k.column_masks();
    let v = bit_len(a).max(bit_len(b));
    debug_assert_eq!(v, k.deepest_nonzero_row());
    v
}

/// A basis of the dual net of `{X(h) : h < 2^m}` at precision `n`.
#[derive(Clone, Debug)]
pub struct DualNet {
    basis: Vec<IndexMatrix>,
    n: usize,
    m: usize,
    rank: usize,
}

impl DualNet {
    pub fn basis(&self) -> &[IndexMatrix] {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Rank of the constraint map.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `|P⊥| = 2^dim`.
    pub fn size(&self) -> u128 {
        1u128 << self.dim()
    }

    /// All elements of the span, zero included. Only sensible for small
    /// dimensions.
    pub fn elements(&self) -> Vec<IndexMatrix> {
        assert!(self.dim() <= 24, "span too large to materialize");
        let mut out = Vec::with_capacity(1 << self.dim());
        let mut cur = 0u128;
        out.push(IndexMatrix::from_code(0, self.n));
        for g in 1u64..(1 << self.dim()) {
            cur ^= self.basis[g.trailing_zeros() as usize].code();
            out.push(IndexMatrix::from_code(cur, self.n));
        }
        out
    }
}

/// Rows of the constraint matrix: row `l` encodes column `l` of `C₁` and
/// `C₂` (truncated to `n` rows) in the packed index layout, so that
/// `K ∈ P⊥` iff every row has even overlap with `K`.
fn constraint_rows(gen: &GeneratorPair, n: usize, m: usize) -> Vec<u128> {
    (0..m)
        .map(|l| {
            let (a, b) = gen.column_masks(l);
            IndexMatrix::from_columns(a, b, n).code()
        })
        .collect()
}

/// Whether `K` satisfies `C₁ᵀk₁ ⊕ C₂ᵀk₂ = 0` for the first `m` columns.
pub fn in_dual(gen: &GeneratorPair, k: &IndexMatrix, m: usize) -> bool {
    constraint_rows(gen, k.rows(), m)
        .iter()
        .all(|row| (row & k.code()).count_ones().is_multiple_of(2))
}

/// Kernel basis of the linear forms `rows` on `vars` variables.
fn kernel_basis(rows: &[u128], vars: usize) -> (Vec<u128>, usize) {
    let mut pivots: Vec<(usize, u128)> = Vec::new();
    for &r in rows {
        let mut r = r;
        for &(col, prow) in &pivots {
            if (r >> col) & 1 == 1 {
                r ^= prow;
            }
        }
        if r == 0 {
            continue;
        }
        let col = r.trailing_zeros() as usize;
        for (_, prow) in pivots.iter_mut() {
            if (*prow >> col) & 1 == 1 {
                *prow ^= r;
            }
        }
        pivots.push((col, r));
    }
    let pivot_mask = pivots.iter().fold(0u128, |acc, &(c, _)| acc | (1u128 << c));
    let basis = (0..vars)
        .filter(|&f| (pivot_mask >> f) & 1 == 0)
        .map(|f| {
            pivots
                .iter()
                .filter(|&&(_, prow)| (prow >> f) & 1 == 1)
                .fold(1u128 << f, |acc, &(c, _)| acc | (1u128 << c))
        })
        .collect();
    (basis, pivots.len())
}

/// Dual net of the first `2^m` addresses at precision `n ≥ m`.
pub fn dual_net(gen: &GeneratorPair, n: usize, m: usize) -> Result<DualNet> {
    if n < m {
        return Err(Error::invalid(format!("precision n = {n} is below m = {m}")));
    }
    if n > IndexMatrix::MAX_ROWS {
        return Err(Error::invalid("precision above 64 rows"));
    }
    if m > gen.digit_capacity() {
        return Err(Error::invalid(format!(
            "m = {m} exceeds the {} generator columns",
            gen.digit_capacity()
        )));
    }
    let (basis, rank) = kernel_basis(&constraint_rows(gen, n, m), 2 * n);
    Ok(DualNet {
        basis: basis.into_iter().map(|c| IndexMatrix::from_code(c, n)).collect(),
        n,
        m,
        rank,
    })
}

/// Minimum weights of `P⊥ ∖ {0}` and the resulting t-value.
///
/// `None` weights stand for +∞ (the dual is `{0}`), in which case `t = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightReport {
    pub n: usize,
    pub m: usize,
    pub dim: usize,
    pub mu1_min: Option<usize>,
    pub v_min: Option<usize>,
    /// Smallest t with `μ₁(P⊥) ≥ m − t + 1`, clamped to `[0, m]`.
    pub t: usize,
    /// `spectrum[w]` counts nonzero dual elements with `v = w`.
    pub spectrum: Vec<u64>,
}

impl WeightReport {
    /// `dim(P⊥ ∩ L(w))` where `L(w) = {K : v(K) ≤ w}`.
    pub fn dim_within(&self, w: usize) -> usize {
        let count: u64 = 1 + self.spectrum.iter().take(w + 1).skip(1).sum::<u64>();
        debug_assert!(count.is_power_of_two());
        count.trailing_zeros() as usize
    }
}

#[derive(Clone)]
struct Tally {
    mu1_min: usize,
    v_min: usize,
    spectrum: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            mu1_min: usize::MAX,
            v_min: usize::MAX,
            spectrum: vec![0; n + 1],
        }
    }

    fn record(&mut self, code: u128, n: usize) {
        let k = IndexMatrix::from_code(code, n);
        self.mu1_min = self.mu1_min.min(mu1_matrix(&k));
        let v = v_weight(&k);
        self.v_min = self.v_min.min(v);
        self.spectrum[v] += 1;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.mu1_min = self.mu1_min.min(other.mu1_min);
        self.v_min = self.v_min.min(other.v_min);
        for (a, b) in self.spectrum.iter_mut().zip(other.spectrum) {
            *a += b;
        }
        self
    }
}

/// Enumerates the span of the dual basis and reports minimum weights.
pub fn min_weights(dual: &DualNet) -> Result<WeightReport> {
    let dim = dual.dim();
    if dim > MAX_ENUM_DIM {
        return Err(Error::Capacity {
            dim,
            max: MAX_ENUM_DIM,
        });
    }
    let n = dual.n;
    let basis: Vec<u128> = dual.basis.iter().map(IndexMatrix::code).collect();
    let high = dim.min(8);
    let low = dim - high;
    let tally = par::reduce_blocks(
        1usize << high,
        |block| {
            let mut t = Tally::new(n);
            let mut cur = (0..high)
                .filter(|j| (block >> j) & 1 == 1)
                .fold(0u128, |acc, j| acc ^ basis[low + j]);
            if cur != 0 {
                t.record(cur, n);
            }
            for g in 1u64..(1u64 << low) {
                cur ^= basis[g.trailing_zeros() as usize];
                t.record(cur, n);
            }
            t
        },
        Tally::merge,
    )
    .expect("at least one block");
    let finite = |x: usize| (x != usize::MAX).then_some(x);
    let mu1_min = finite(tally.mu1_min);
    let v_min = finite(tally.v_min);
    let m = dual.m;
    let t = mu1_min.map_or(0, |mu| (m + 1).saturating_sub(mu).min(m));
    Ok(WeightReport {
        n,
        m,
        dim,
        mu1_min,
        v_min,
        t,
        spectrum: tally.spectrum,
    })
}

/// `min_weights(dual_net(gen, n, m))`.
pub fn weight_report(gen: &GeneratorPair, n: usize, m: usize) -> Result<WeightReport> {
    min_weights(&dual_net(gen, n, m)?)
}

/// `v(P⊥) ≥ (m − t + 1) / 2`, compared exactly in integers.
pub fn check_tvalue_bound(report: &WeightReport, m: usize) -> bool {
    match report.v_min {
        None => true,
        Some(v) => 2 * v + report.t > m,
    }
}

/// Largest per-prefix t over `m_range` (precision `n = m`). A lower bound
/// on the sequence t-value, not the t-value itself.
pub fn max_prefix_t(gen: &GeneratorPair, m_range: impl IntoIterator<Item = usize>) -> Result<usize> {
    m_range
        .into_iter()
        .map(|m| weight_report(gen, m, m).map(|r| r.t))
        .try_fold(0, |acc, t| t.map(|t| acc.max(t)))
}
