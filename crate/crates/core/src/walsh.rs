//! Discretized functions and their dyadic Walsh analysis.
//!
//! A table over `F₂^{n×2}` is stored densely, indexed by the packed code of
//! [`IndexMatrix`]. In that layout `wal_K(X) = (−1)^popcount(K & X)`, so the
//! full spectrum is a single fast Walsh–Hadamard transform.

use crate::bitcore::{IndexMatrix, Pair};
use crate::error::{Error, Result};
use crate::par;
use crate::partition::{in_positive_set, sigma, subregion_closed_form, CenteredFrame, Triangle};
use crate::quality::v_weight;

/// Largest level a dense table may have (`4^13` doubles is about 537 MB).
pub const MAX_LEVEL: usize = 13;

/// Absolute slack allowed on top of a decay bound.
pub const BOUND_SLACK: f64 = 1e-12;

/// `Fₙ`: one value per level-`n` cell, plus the domain and an optional
/// `C²` norm bound for decay checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedTable {
    n: usize,
    values: Vec<f64>,
    triangle: Triangle,
    f_norm: Option<f64>,
}

impl DiscretizedTable {
    pub fn from_values(n: usize, values: Vec<f64>, triangle: Triangle) -> Result<Self> {
        if n > MAX_LEVEL {
            return Err(Error::invalid(format!("level {n} above {MAX_LEVEL}")));
        }
        if values.len() != 1 << (2 * n) {
            return Err(Error::DimensionMismatch {
                expected: 1 << (2 * n),
                actual: values.len(),
            });
        }
        Ok(DiscretizedTable {
            n,
            values,
            triangle,
            f_norm: None,
        })
    }

    /// Attaches a `C²` norm bound.
    pub fn with_norm(mut self, norm: f64) -> Result<Self> {
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid(format!("norm bound must be positive, got {norm}")));
        }
        self.f_norm = Some(norm);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn triangle(&self) -> &Triangle {
        &self.triangle
    }

    pub fn f_norm(&self) -> Option<f64> {
        self.f_norm
    }

    pub fn get(&self, x: &IndexMatrix) -> Result<f64> {
        self.check_rows(x)?;
        Ok(self.values[x.code() as usize])
    }

    /// `4⁻ⁿ Σ_X F(X)`.
    pub fn mean(&self) -> f64 {
        par::pairwise_sum(&self.values) / self.values.len() as f64
    }

    fn check_rows(&self, k: &IndexMatrix) -> Result<()> {
        if k.rows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: k.rows(),
            });
        }
        Ok(())
    }
}

/// Builds `Fₙ` from a cell-average oracle, one call per level-`n` cell.
pub fn discretize<A>(cell_average: A, t: &Triangle, n: usize) -> Result<DiscretizedTable>
where
    A: Fn(&Triangle) -> Result<f64> + Sync + Send,
{
    if n > MAX_LEVEL {
        return Err(Error::invalid(format!("level {n} above {MAX_LEVEL}")));
    }
    let frame = CenteredFrame::new(t);
    let values = par::map_range(1 << (2 * n), |code| {
        let x = IndexMatrix::from_code(code as u128, n);
        cell_average(&subregion_closed_form(&x, n, &frame)?)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    DiscretizedTable::from_values(n, values, *t)
}

fn wal(k: u128, x: u128) -> f64 {
    if (k & x).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `wal_K(X) = (−1)^{Σ κᵢⱼ ξᵢⱼ}`.
pub fn walsh_eval(k: &IndexMatrix, x: &IndexMatrix) -> Result<i8> {
    if k.rows() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: k.rows(),
            actual: x.rows(),
        });
    }
    Ok(wal(k.code(), x.code()) as i8)
}

/// `wal_κ(σ)` for a single row.
pub fn pair_wal(kappa: Pair, s: Pair) -> f64 {
    if kappa.dot(s) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `F̂(K)` by direct summation over all `4ⁿ` addresses.
pub fn walsh_coefficient(table: &DiscretizedTable, k: &IndexMatrix) -> Result<f64> {
    table.check_rows(k)?;
    let kc = k.code();
    let v = &table.values;
    Ok(par::sum_range(v.len(), |x| v[x] * wal(kc, x as u128)) / v.len() as f64)
}

/// All coefficients at once: entry `K.code()` holds `F̂(K)`.
pub fn walsh_spectrum(table: &DiscretizedTable) -> Vec<f64> {
    let mut a = table.values.clone();
    fwht(&mut a);
    let scale = 1.0 / a.len() as f64;
    a.iter_mut().for_each(|c| *c *= scale);
    a
}

/// Unnormalized in-place Walsh–Hadamard transform; `a.len()` is a power of
/// two.
pub fn fwht(a: &mut [f64]) {
    debug_assert!(a.len().is_power_of_two());
    let mut h = 1;
    while h < a.len() {
        par::for_each_chunk_mut(a, 2 * h, |block| {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        });
        h *= 2;
    }
}

/// The unique `w` with `X ∈ R_w(K)`: the largest `i < v(K)` whose row lies
/// in `P(κᵢ)`, or 0 if there is none.
pub fn rw_class(x: &IndexMatrix, k: &IndexMatrix) -> Result<usize> {
    if k.rows() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: k.rows(),
            actual: x.rows(),
        });
    }
    let v = v_weight(k);
    if v == 0 {
        return Err(Error::invalid("R_w classes need K ≠ 0"));
    }
    Ok(class_unchecked(x.code(), k, v))
}

fn class_unchecked(x: u128, k: &IndexMatrix, v: usize) -> usize {
    (1..v)
        .rev()
        .find(|&i| in_positive_set(k.row(i), Pair::from_code(((x >> (2 * (i - 1))) & 3) as u8)))
        .unwrap_or(0)
}

fn check_w(k: &IndexMatrix, w: usize) -> Result<usize> {
    let v = v_weight(k);
    if v == 0 {
        return Err(Error::invalid("R_w classes need K ≠ 0"));
    }
    if w >= v {
        return Err(Error::OutOfRange {
            index: w,
            lo: 0,
            hi: v - 1,
        });
    }
    Ok(v)
}

/// Whether `X ∈ R_w(K)`, checked row by row against the product definition.
pub fn rw_membership(x: &IndexMatrix, k: &IndexMatrix, w: usize) -> Result<bool> {
    if k.rows() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: k.rows(),
            actual: x.rows(),
        });
    }
    let v = check_w(k, w)?;
    let positive = |i: usize| in_positive_set(k.row(i), x.row(i));
    let head = w == 0 || positive(w);
    Ok(head && (w + 1..v).all(|i| !positive(i)))
}

/// `R_wF̂(K)`.
pub fn rw_coefficient(table: &DiscretizedTable, k: &IndexMatrix, w: usize) -> Result<f64> {
    table.check_rows(k)?;
    let v = check_w(k, w)?;
    let kc = k.code();
    let vals = &table.values;
    let s = par::sum_range(vals.len(), |x| {
        if class_unchecked(x as u128, k, v) == w {
            vals[x] * wal(kc, x as u128)
        } else {
            0.0
        }
    });
    Ok(s / vals.len() as f64)
}

/// `R_wF̂(K)` for `w = 0, …, v(K) − 1` in one pass.
pub fn rw_coefficients(table: &DiscretizedTable, k: &IndexMatrix) -> Result<Vec<f64>> {
    table.check_rows(k)?;
    let v = check_w(k, 0)?;
    let kc = k.code();
    let vals = &table.values;
    let len = vals.len();
    let mut sums = vec![0.0; v];
    for (x, &f) in vals.iter().enumerate() {
        sums[class_unchecked(x as u128, k, v)] += f * wal(kc, x as u128);
    }
    Ok(sums.into_iter().map(|s| s / len as f64).collect())
}

/// `d^{(i)}_K F(X) = F(X ⊕ᵢ σ(κᵢ)) + wal_{κᵢ}(σ(κᵢ)) F(X)`.
pub fn dyadic_difference(table: &DiscretizedTable, k: &IndexMatrix, i: usize) -> Result<DiscretizedTable> {
    table.check_rows(k)?;
    if i == 0 || i > table.n {
        return Err(Error::OutOfRange {
            index: i,
            lo: 1,
            hi: table.n,
        });
    }
    let kappa = k.row(i);
    let s = sigma(kappa);
    let factor = pair_wal(kappa, s);
    let shift = (s.code() as usize) << (2 * (i - 1));
    let vals = &table.values;
    let values = par::map_range(vals.len(), |x| vals[x ^ shift] + factor * vals[x]);
    DiscretizedTable::from_values(table.n, values, table.triangle)
}

/// Every `K ∈ F₂^{n×2} ∖ {0}` in code order.
pub fn all_nonzero_indices(n: usize) -> impl Iterator<Item = IndexMatrix> {
    (1u128..1u128 << (2 * n)).map(move |c| IndexMatrix::from_code(c, n))
}

/// One coefficient checked against the total decay bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub k: IndexMatrix,
    pub v: usize,
    pub coeff: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Largest `|R_wF̂(K)| / bound_w` over `w`, when parts were checked.
    pub part_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub d: f64,
    pub norm: f64,
    pub rows: Vec<DecayRow>,
    pub max_ratio: f64,
    pub max_part_ratio: Option<f64>,
    pub violations: usize,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// The three constants of the decay lemma for diameter `d`:
/// `(2√2 d, 4d², max of the two)`.
pub fn decay_constants(d: f64) -> (f64, f64, f64) {
    let r0 = 2.0 * std::f64::consts::SQRT_2 * d;
    let rw = 4.0 * d * d;
    (r0, rw, r0.max(rw))
}

/// Checks `|F̂ₙ(K)| ≤ D‖f‖v/4^v` for every `K` in `ks`, and, when
/// `check_parts` is set, the per-class bounds on `R_wF̂ₙ(K)`.
pub fn verify_decay_bound(table: &DiscretizedTable, ks: &[IndexMatrix], check_parts: bool) -> Result<DecayReport> {
    let norm = table
        .f_norm
        .ok_or_else(|| Error::invalid("decay checks need a C² norm bound"))?;
    for k in ks {
        table.check_rows(k)?;
        if k.is_zero() {
            return Err(Error::invalid("decay checks exclude K = 0"));
        }
    }
    let d = table.triangle.diameter();
    let (c0, cw, cd) = decay_constants(d);
    let spectrum = walsh_spectrum(table);
    let rows = par::map_slice(ks, |k| -> Result<(DecayRow, usize)> {
        let v = v_weight(k);
        let scale = norm / 4f64.powi(v as i32);
        let coeff = spectrum[k.code() as usize];
        let bound = cd * scale * v as f64;
        let mut bad = usize::from(coeff.abs() > bound + BOUND_SLACK);
        let part_ratio = if check_parts {
            let parts = rw_coefficients(table, k)?;
            let mut worst = 0.0f64;
            for (w, p) in parts.iter().enumerate() {
                let b = if w == 0 { c0 } else { cw } * scale;
                bad += usize::from(p.abs() > b + BOUND_SLACK);
                worst = worst.max(p.abs() / b);
            }
            Some(worst)
        } else {
            None
        };
        let row = DecayRow {
            k: *k,
            v,
            coeff,
            bound,
            ratio: coeff.abs() / bound,
            part_ratio,
        };
        Ok((row, bad))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let violations = rows.iter().map(|r| r.1).sum();
    let rows: Vec<DecayRow> = rows.into_iter().map(|r| r.0).collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_part_ratio = if check_parts {
        Some(rows.iter().filter_map(|r| r.part_ratio).fold(0.0, f64::max))
    } else {
        None
    };
    Ok(DecayReport {
        d,
        norm,
        rows,
        max_ratio,
        max_part_ratio,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::{basu_owen_pair, net_addresses, pascal_pair, NetSpec};
    use crate::quality::{dual_net, in_dual};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, n: usize) -> DiscretizedTable {
        let values = (0..1 << (2 * n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DiscretizedTable::from_values(n, values, Triangle::unit()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    fn x_table() -> DiscretizedTable {
        discretize(|c| Ok(c.centroid().x), &Triangle::unit(), 1).unwrap()
    }

    #[test]
    fn walsh_eval_examples() {
        let k = IndexMatrix::from_rows(&[Pair::new(1, 0)]);
        let x = IndexMatrix::from_rows(&[Pair::new(1, 1)]);
        assert_eq!(walsh_eval(&k, &x).unwrap(), -1);
        for x in IndexMatrix::all(3) {
            assert_eq!(walsh_eval(&IndexMatrix::zero(3), &x).unwrap(), 1);
        }
        assert!(walsh_eval(&k, &IndexMatrix::zero(2)).is_err());
    }

    #[test]
    fn walsh_is_multiplicative() {
        for k in IndexMatrix::all(2) {
            for x in IndexMatrix::all(2) {
                for y in IndexMatrix::all(2) {
                    let lhs = walsh_eval(&k, &x.xor(&y).unwrap()).unwrap();
                    let rhs = walsh_eval(&k, &x).unwrap() * walsh_eval(&k, &y).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn x_coordinate_table_level_one() {
        let t = x_table();
        let want = [1.0 / 3.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for (code, w) in want.iter().enumerate() {
            assert!((t.values()[code] - w).abs() < 1e-15, "code {code}");
        }
        let k0 = IndexMatrix::zero(1);
        assert!((walsh_coefficient(&t, &k0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let k = IndexMatrix::from_rows(&[Pair::new(1, 0)]);
        assert!((walsh_coefficient(&t, &k).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn x_coordinate_decay_example() {
        let t = x_table().with_norm(1.0).unwrap();
        let k = IndexMatrix::from_rows(&[Pair::new(1, 0)]);
        let r = verify_decay_bound(&t, &[k], true).unwrap();
        let (_, _, dd) = decay_constants(std::f64::consts::SQRT_2);
        assert!((dd - 8.0).abs() < 1e-12);
        assert!((r.rows[0].bound - 2.0).abs() < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn constant_table() {
        let t = discretize(|_| Ok(2.5), &Triangle::unit(), 3).unwrap();
        let spec = walsh_spectrum(&t);
        assert_eq!(spec[0], 2.5);
        assert!(spec[1..].iter().all(|&c| c == 0.0));
        let k = IndexMatrix::from_rows(&[Pair::new(0, 0), Pair::new(1, 1), Pair::new(0, 1)]);
        for c in rw_coefficients(&t, &k).unwrap() {
            assert!(c.abs() < 1e-15);
        }
        let t = t.with_norm(1.0).unwrap();
        let ks: Vec<_> = all_nonzero_indices(3).collect();
        assert!(verify_decay_bound(&t, &ks, true).unwrap().passed());
    }

    #[test]
    fn decay_needs_norm_and_nonzero_k() {
        let t = discretize(|_| Ok(1.0), &Triangle::unit(), 2).unwrap();
        let k = IndexMatrix::from_rows(&[Pair::new(1, 0), Pair::ZERO]);
        assert!(verify_decay_bound(&t, &[k], false).is_err());
        let t = t.with_norm(1.0).unwrap();
        assert!(verify_decay_bound(&t, &[IndexMatrix::zero(2)], false).is_err());
    }

    #[test]
    fn spectrum_matches_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 0..=4 {
            let t = random_table(&mut rng, n);
            let spec = walsh_spectrum(&t);
            for k in IndexMatrix::all(n) {
                assert!(close(spec[k.code() as usize], walsh_coefficient(&t, &k).unwrap(), 1e-14));
            }
        }
    }

    #[test]
    fn walsh_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 0..=4 {
            let t = random_table(&mut rng, n);
            let spec = walsh_spectrum(&t);
            for x in IndexMatrix::all(n) {
                let f: f64 = IndexMatrix::all(n)
                    .map(|k| spec[k.code() as usize] * walsh_eval(&k, &x).unwrap() as f64)
                    .sum();
                assert!((f - t.get(&x).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn character_sums_detect_the_dual() {
        for g in [basu_owen_pair(), pascal_pair()] {
            for n in 1..=6 {
                for m in 0..=n {
                    let net = net_addresses(&NetSpec::new(g.clone(), m, n).unwrap()).unwrap();
                    for k in IndexMatrix::all(n) {
                        let s: i64 = net.iter().map(|x| walsh_eval(&k, x).unwrap() as i64).sum();
                        let want = if in_dual(&g, &k, m) { net.len() as i64 } else { 0 };
                        assert_eq!(s, want);
                    }
                }
            }
        }
    }

    #[test]
    fn qmc_error_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in [basu_owen_pair(), pascal_pair()] {
            for (m, n) in [(2, 3), (3, 4), (4, 4)] {
                let t = random_table(&mut rng, n);
                let spec = walsh_spectrum(&t);
                let net = net_addresses(&NetSpec::new(g.clone(), m, n).unwrap()).unwrap();
                let dual = dual_net(&g, n, m).unwrap().elements();
                for _ in 0..5 {
                    let s = IndexMatrix::from_code(rng.gen_range(0..1u128 << (2 * n)), n);
                    let lhs = net.iter().map(|x| t.get(&x.xor(&s).unwrap()).unwrap()).sum::<f64>()
                        / net.len() as f64
                        - t.mean();
                    let rhs: f64 = dual
                        .iter()
                        .skip(1)
                        .map(|k| spec[k.code() as usize] * walsh_eval(k, &s).unwrap() as f64)
                        .sum();
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rw_classes_partition_with_expected_sizes() {
        for n in 1..=4 {
            for k in all_nonzero_indices(n) {
                let v = v_weight(&k);
                let mut sizes = vec![0usize; v];
                for x in IndexMatrix::all(n) {
                    let members: Vec<usize> = (0..v).filter(|&w| rw_membership(&x, &k, w).unwrap()).collect();
                    assert_eq!(members, vec![rw_class(&x, &k).unwrap()]);
                    sizes[members[0]] += 1;
                }
                let total = 1usize << (2 * n);
                assert_eq!(sizes[0], total >> (v - 1));
                for (w, &s) in sizes.iter().enumerate().skip(1) {
                    assert_eq!(s, total >> (v - w));
                }
            }
        }
    }

    #[test]
    fn rw_parts_sum_to_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_table(&mut rng, 4);
        for k in all_nonzero_indices(4) {
            let parts = rw_coefficients(&t, &k).unwrap();
            let total: f64 = parts.iter().sum();
            assert!(close(total, walsh_coefficient(&t, &k).unwrap(), 1e-14));
            for (w, p) in parts.iter().enumerate() {
                assert!(close(*p, rw_coefficient(&t, &k, w).unwrap(), 1e-14));
            }
            if v_weight(&k) == 1 {
                assert_eq!(parts.len(), 1);
            }
        }
        let k = IndexMatrix::from_rows(&[Pair::new(1, 0), Pair::ZERO, Pair::ZERO, Pair::ZERO]);
        assert!(rw_coefficient(&t, &k, 1).is_err());
        assert!(rw_coefficient(&t, &IndexMatrix::zero(4), 0).is_err());
    }

    #[test]
    fn dyadic_difference_of_constants() {
        let t = discretize(|_| Ok(3.0), &Triangle::unit(), 3).unwrap();
        for kappa in Pair::ALL {
            let k = IndexMatrix::from_rows(&[Pair::new(1, 1), kappa, Pair::ZERO]);
            let d = dyadic_difference(&t, &k, 2).unwrap();
            let want = if kappa.is_zero() { 6.0 } else { 0.0 };
            assert!(d.values().iter().all(|&v| v == want));
        }
        assert!(dyadic_difference(&t, &IndexMatrix::zero(3), 0).is_err());
        assert!(dyadic_difference(&t, &IndexMatrix::zero(3), 4).is_err());
    }

    #[test]
    fn sigma_is_never_orthogonal_to_nonzero_rows() {
        for kappa in Pair::ALL {
            let want = if kappa.is_zero() { 1.0 } else { -1.0 };
            assert_eq!(pair_wal(kappa, sigma(kappa)), want);
        }
    }

    #[test]
    fn dyadic_hat_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=4 {
            let t = random_table(&mut rng, n);
            for k in all_nonzero_indices(n) {
                let v = v_weight(&k);
                let parts = rw_coefficients(&t, &k).unwrap();
                let dv = dyadic_difference(&t, &k, v).unwrap();
                let dv_parts = rw_coefficients(&dv, &k).unwrap();
                for w in 0..v {
                    assert!(close(parts[w], -0.5 * dv_parts[w], 1e-14));
                    if w == 0 {
                        continue;
                    }
                    let s = pair_wal(k.row(w), sigma(k.row(w)));
                    let dw = dyadic_difference(&t, &k, w).unwrap();
                    assert!(close(parts[w], 0.5 * s * rw_coefficient(&dw, &k, w).unwrap(), 1e-14));
                    let dwv = dyadic_difference(&dv, &k, w).unwrap();
                    assert!(close(parts[w], -0.25 * s * rw_coefficient(&dwv, &k, w).unwrap(), 1e-14));
                }
            }
        }
    }

    #[test]
    fn table_validation() {
        assert!(DiscretizedTable::from_values(2, vec![0.0; 15], Triangle::unit()).is_err());
        let t = DiscretizedTable::from_values(0, vec![1.5], Triangle::unit()).unwrap();
        assert_eq!(t.mean(), 1.5);
        assert!(t.clone().with_norm(0.0).is_err());
        assert!(t.get(&IndexMatrix::zero(1)).is_err());
    }
}
