//! Linear algebra over F₂.
//!
//! Everything here is least-significant-first: digit `a` of an integer is
//! entry `a` of its [`BitVector`], and row `i` of an [`IndexMatrix`] is the
//! `i`-th binary digit of both coordinates.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An element of F₂², stored as `first | second << 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pair(u8);

impl Pair {
    pub const ZERO: Pair = Pair(0);
    pub const ALL: [Pair; 4] = [Pair(0), Pair(1), Pair(2), Pair(3)];

    /// Builds `(first, second)`; both must be 0 or 1.
    pub fn new(first: u8, second: u8) -> Pair {
        assert!(first <= 1 && second <= 1, "pair entries must be 0 or 1");
        Pair(first | (second << 1))
    }

    /// Builds a pair from its 2-bit code `first | second << 1`.
    pub fn from_code(code: u8) -> Pair {
        assert!(code < 4, "pair code must be below 4");
        Pair(code)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn first(self) -> u8 {
        self.0 & 1
    }

    pub fn second(self) -> u8 {
        self.0 >> 1
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn xor(self, other: Pair) -> Pair {
        Pair(self.0 ^ other.0)
    }

    /// Parity of the F₂ inner product, the exponent of `wal_self(other)`.
    pub fn dot(self, other: Pair) -> u8 {
        ((self.0 & other.0).count_ones() & 1) as u8
    }
}

impl fmt::Debug for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first(), self.second())
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first(), self.second())
    }
}

/// A finite vector over F₂, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// Builds a vector from 0/1 entries.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(i, true),
                _ => return Err(Error::invalid(format!("entry {i} is {b}, not 0 or 1"))),
            }
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Entries as 0/1 values.
    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Zero-based index of the last nonzero entry.
    pub fn last_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, &w)| 64 * k + 63 - w.leading_zeros() as usize)
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(BitVector {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        })
    }

    /// Parity of the inner product with a vector of the same length.
    fn dot(&self, other: &BitVector) -> bool {
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector(")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

/// Binary digits of `h`, least significant first, zero-padded to `min_len`.
pub fn dyadic_expansion(h: u64, min_len: usize) -> BitVector {
    let digits = (64 - h.leading_zeros()) as usize;
    let mut v = BitVector::zeros(digits.max(min_len));
    for a in 0..digits {
        if (h >> a) & 1 == 1 {
            v.set(a, true);
        }
    }
    v
}

/// A rows × cols matrix over F₂.
#[derive(Clone)]
pub struct BitMatrix {
    rows: Vec<BitVector>,
    cols: usize,
    upper: bool,
}

// Equality looks at entries only; the upper-triangular flag is a cached
// validation result.
impl PartialEq for BitMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.cols == other.cols && self.rows == other.rows
    }
}

impl Eq for BitMatrix {}

impl std::hash::Hash for BitMatrix {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows: vec![BitVector::zeros(cols); rows],
            cols,
            upper: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m.upper = true;
        m
    }

    /// Builds a matrix from rows of 0/1 entries; all rows must share a length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| {
                if r.len() != cols {
                    return Err(Error::DimensionMismatch {
                        expected: cols,
                        actual: r.len(),
                    });
                }
                BitVector::from_bits(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitMatrix {
            rows,
            cols,
            upper: false,
        })
    }

    /// Marks the matrix upper triangular after checking that every entry
    /// below the diagonal is zero.
    pub fn into_upper_triangular(mut self) -> Result<Self> {
        if let Some((k, l)) = self.first_below_diagonal() {
            return Err(Error::invalid(format!(
                "entry ({}, {}) below the diagonal is nonzero",
                k + 1,
                l + 1
            )));
        }
        self.upper = true;
        Ok(self)
    }

    fn first_below_diagonal(&self) -> Option<(usize, usize)> {
        (0..self.nrows())
            .flat_map(|k| (0..k.min(self.cols)).map(move |l| (k, l)))
            .find(|&(k, l)| self.get(k, l))
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.first_below_diagonal().is_none()
    }

    /// Whether the upper-triangular flag was set and validated.
    pub fn upper_flag(&self) -> bool {
        self.upper
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, l: usize) -> bool {
        self.rows[k].get(l)
    }

    pub fn set(&mut self, k: usize, l: usize, value: bool) {
        self.rows[k].set(l, value);
        if value && k > l {
            self.upper = false;
        }
    }

    pub fn row(&self, k: usize) -> &BitVector {
        &self.rows[k]
    }

    /// Column `l` as a row mask (bit `k` = entry `(k, l)`); needs ≤ 64 rows.
    pub fn column_mask(&self, l: usize) -> u64 {
        assert!(self.nrows() <= 64, "column masks need at most 64 rows");
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.get(l))
            .fold(0u64, |acc, (k, _)| acc | (1 << k))
    }

    /// Sets the upper-triangular flag when the entries allow it.
    pub(crate) fn upper_if_triangular(mut self) -> Self {
        self.upper = self.is_upper_triangular();
        self
    }

    /// Left upper `rows × cols` block, zero-extended where the source is
    /// smaller.
    pub fn block(&self, rows: usize, cols: usize) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows, cols);
        for k in 0..rows.min(self.nrows()) {
            for l in 0..cols.min(self.cols) {
                if self.get(k, l) {
                    out.set(k, l, true);
                }
            }
        }
        out.upper = out.is_upper_triangular() && self.upper;
        out
    }
}

/// Matrix-vector product over F₂.
pub fn matvec(c: &BitMatrix, v: &BitVector) -> Result<BitVector> {
    if v.len() != c.ncols() {
        return Err(Error::DimensionMismatch {
            expected: c.ncols(),
            actual: v.len(),
        });
    }
    let mut out = BitVector::zeros(c.nrows());
    for (k, row) in c.rows.iter().enumerate() {
        if row.dot(v) {
            out.set(k, true);
        }
    }
    Ok(out)
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.nrows(), self.cols)?;
        write!(f, "{self}")
    }
}

/// One row per line, each a string of `0`/`1`.
impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, row) in self.rows.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            for l in 0..self.cols {
                write!(f, "{}", row.get(l) as u8)?;
            }
        }
        Ok(())
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(|line| line.trim_end_matches('\r'))
            .filter(|line| !line.is_empty())
            .map(parse_bit_row)
            .collect::<Result<Vec<_>>>()?;
        BitMatrix::from_rows(&rows)
    }
}

fn parse_bit_row(line: &str) -> Result<Vec<u8>> {
    line.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Parse(format!("unexpected character {other:?} in row {line:?}"))),
        })
        .collect()
}

/// An element of F₂^{n×2}: a subtriangle address or a Walsh frequency.
///
/// Rows are packed row-major into a `u128`: row `i` (1-based) occupies bits
/// `2(i-1)` (first column) and `2(i-1)+1` (second column). This is also the
/// dense table index used by [`crate::walsh`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexMatrix {
    code: u128,
    rows: u8,
}

impl IndexMatrix {
    pub const MAX_ROWS: usize = 64;

    pub fn zero(rows: usize) -> Self {
        assert!(rows <= Self::MAX_ROWS, "at most 64 rows");
        IndexMatrix {
            code: 0,
            rows: rows as u8,
        }
    }

    /// Builds a matrix from its packed code; bits above `2 * rows` must be 0.
    pub fn from_code(code: u128, rows: usize) -> Self {
        assert!(rows <= Self::MAX_ROWS, "at most 64 rows");
        assert!(
            rows == Self::MAX_ROWS || code >> (2 * rows) == 0,
            "code has bits beyond row {rows}"
        );
        IndexMatrix {
            code,
            rows: rows as u8,
        }
    }

    pub fn from_rows(rows: &[Pair]) -> Self {
        let mut x = IndexMatrix::zero(rows.len());
        for (i, &p) in rows.iter().enumerate() {
            x.code |= (p.code() as u128) << (2 * i);
        }
        x
    }

    /// Builds a matrix from two column masks (bit `i-1` = row `i`).
    pub fn from_columns(first: u64, second: u64, rows: usize) -> Self {
        let keep = if rows >= 64 { u64::MAX } else { (1u64 << rows) - 1 };
        IndexMatrix::from_code(interleave(first & keep, second & keep), rows)
    }

    pub fn rows(&self) -> usize {
        self.rows as usize
    }

    pub fn code(&self) -> u128 {
        self.code
    }

    /// Row `i`, 1-based.
    pub fn row(&self, i: usize) -> Pair {
        assert!(i >= 1 && i <= self.rows(), "row {i} out of range 1..={}", self.rows);
        Pair(((self.code >> (2 * (i - 1))) & 3) as u8)
    }

    pub fn row_pairs(&self) -> Vec<Pair> {
        (1..=self.rows()).map(|i| self.row(i)).collect()
    }

    /// The two columns as masks (bit `i-1` = row `i`).
    pub fn column_masks(&self) -> (u64, u64) {
        deinterleave(self.code)
    }

    /// The two columns as bit vectors of length `rows`.
    pub fn columns(&self) -> (BitVector, BitVector) {
        let (a, b) = self.column_masks();
        let n = self.rows();
        let to_vec = |mask: u64| {
            let mut v = BitVector::zeros(n);
            for i in 0..n {
                if (mask >> i) & 1 == 1 {
                    v.set(i, true);
                }
            }
            v
        };
        (to_vec(a), to_vec(b))
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    /// 1-based index of the deepest nonzero row, 0 for the zero matrix.
    pub fn deepest_nonzero_row(&self) -> usize {
        if self.code == 0 {
            0
        } else {
            (127 - self.code.leading_zeros() as usize) / 2 + 1
        }
    }

    /// Row-wise XOR with a matrix of the same size.
    pub fn xor(&self, other: &IndexMatrix) -> Result<IndexMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                actual: other.rows(),
            });
        }
        Ok(IndexMatrix {
            code: self.code ^ other.code,
            rows: self.rows,
        })
    }

    /// Keeps the first `rows` rows, or pads with zero rows.
    pub fn resized(&self, rows: usize) -> IndexMatrix {
        assert!(rows <= Self::MAX_ROWS, "at most 64 rows");
        let code = if rows >= 64 {
            self.code
        } else {
            self.code & ((1u128 << (2 * rows)) - 1)
        };
        IndexMatrix {
            code,
            rows: rows as u8,
        }
    }

    /// Iterates over all 4^rows matrices in code order.
    pub fn all(rows: usize) -> impl Iterator<Item = IndexMatrix> {
        assert!(rows <= 30, "enumerating 4^{rows} matrices is not supported");
        (0..(1u64 << (2 * rows))).map(move |c| IndexMatrix::from_code(c as u128, rows))
    }
}

/// Replaces row `i` (1-based) with `row_i ⊕ kappa`.
pub fn xor_row(x: &IndexMatrix, i: usize, kappa: Pair) -> Result<IndexMatrix> {
    if i == 0 || i > x.rows() {
        return Err(Error::OutOfRange {
            index: i,
            lo: 1,
            hi: x.rows(),
        });
    }
    Ok(IndexMatrix {
        code: x.code ^ ((kappa.code() as u128) << (2 * (i - 1))),
        rows: x.rows,
    })
}

impl fmt::Debug for IndexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexMatrix[")?;
        for (k, p) in self.row_pairs().iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// One two-character row per line.
impl fmt::Display for IndexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.row_pairs().iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for IndexMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let pairs = s
            .lines()
            .map(|line| line.trim_end_matches('\r'))
            .filter(|line| !line.is_empty())
            .map(|line| {
                let bits = parse_bit_row(line)?;
                match bits.as_slice() {
                    [a, b] => Ok(Pair::new(*a, *b)),
                    _ => Err(Error::Parse(format!("row {line:?} is not two characters"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if pairs.len() > IndexMatrix::MAX_ROWS {
            return Err(Error::Parse(format!("{} rows exceeds 64", pairs.len())));
        }
        Ok(IndexMatrix::from_rows(&pairs))
    }
}

/// Spreads the bits of `a` to even positions and `b` to odd positions.
fn interleave(a: u64, b: u64) -> u128 {
    spread(a) | (spread(b) << 1)
}

fn deinterleave(code: u128) -> (u64, u64) {
    (compact(code), compact(code >> 1))
}

fn spread(x: u64) -> u128 {
    let mut x = x as u128;
    x = (x | (x << 32)) & 0x0000_0000_FFFF_FFFF_0000_0000_FFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF_0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF_00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F_0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333_3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555_5555_5555_5555_5555;
    x
}

fn compact(x: u128) -> u64 {
    let mut x = x & 0x5555_5555_5555_5555_5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333_3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F_0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF_00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF_0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF_0000_0000_FFFF_FFFF;
    x = (x | (x >> 32)) & 0x0000_0000_0000_0000_FFFF_FFFF_FFFF_FFFF;
    x as u64
}
