//! Digital sequences over F₂ and the triangle point stream they induce.
//!
//! A generator pair `(C₁, C₂)` maps the binary digits of `h` to the two
//! columns of an address `X(h)`; the emitted point is the center
//! `φ^(ν(h))(X(h))` of the subtriangle addressed by the nonzero rows.
//! Generators are stored column-wise as row masks, so an address costs one
//! XOR per set digit of `h`.

use std::fmt;

use crate::bitcore::{BitMatrix, IndexMatrix};
use crate::error::{Error, Result};
use crate::par;
use crate::partition::{CenteredFrame, Point, Triangle};

/// Digits available to the built-in generators (`h` is a `u64`).
const MAX_DIGITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    BasuOwen,
    Pascal,
    User,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::BasuOwen => "basu-owen",
            GeneratorKind::Pascal => "pascal",
            GeneratorKind::User => "user",
        })
    }
}

/// Generating matrices `(C₁, C₂)`, kept as per-digit column masks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorPair {
    kind: GeneratorKind,
    c1: Vec<u64>,
    c2: Vec<u64>,
}

impl GeneratorPair {
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Number of digits of `h` the pair can consume.
    pub fn digit_capacity(&self) -> usize {
        self.c1.len()
    }

    /// User-supplied matrices; both must be upper triangular, share a shape,
    /// and have at most 64 rows.
    pub fn user(c1: BitMatrix, c2: BitMatrix) -> Result<Self> {
        if (c1.nrows(), c1.ncols()) != (c2.nrows(), c2.ncols()) {
            return Err(Error::invalid(format!(
                "generator shapes differ: {}x{} vs {}x{}",
                c1.nrows(),
                c1.ncols(),
                c2.nrows(),
                c2.ncols()
            )));
        }
        if c1.nrows() > MAX_DIGITS {
            return Err(Error::invalid("generators may have at most 64 rows"));
        }
        let c1 = c1.into_upper_triangular()?;
        let c2 = c2.into_upper_triangular()?;
        let cols = c1.ncols().min(MAX_DIGITS);
        Ok(GeneratorPair {
            kind: GeneratorKind::User,
            c1: (0..cols).map(|l| c1.column_mask(l)).collect(),
            c2: (0..cols).map(|l| c2.column_mask(l)).collect(),
        })
    }

    /// Parses two matrices in the row-string encoding separated by a blank
    /// line.
    pub fn parse_user(text: &str) -> Result<Self> {
        let normalized = text.replace("\r\n", "\n");
        let blocks: Vec<&str> = normalized
            .split("\n\n")
            .map(str::trim)
            .filter(|b| !b.is_empty())
            .collect();
        match blocks.as_slice() {
            [a, b] => GeneratorPair::user(a.parse()?, b.parse()?),
            _ => Err(Error::Parse(format!(
                "expected two matrices separated by a blank line, found {}",
                blocks.len()
            ))),
        }
    }

    /// Left upper `rows × cols` blocks `(C₁^{rows×cols}, C₂^{rows×cols})`.
    pub fn matrices(&self, rows: usize, cols: usize) -> (BitMatrix, BitMatrix) {
        let build = |masks: &[u64]| {
            let mut m = BitMatrix::zeros(rows, cols);
            for (l, &mask) in masks.iter().enumerate().take(cols) {
                for k in 0..rows.min(64) {
                    if (mask >> k) & 1 == 1 {
                        m.set(k, l, true);
                    }
                }
            }
            m.upper_if_triangular()
        };
        (build(&self.c1), build(&self.c2))
    }

    /// Row masks of column `l` (0-based digit index) of both matrices.
    pub fn column_masks(&self, l: usize) -> (u64, u64) {
        (
            self.c1.get(l).copied().unwrap_or(0),
            self.c2.get(l).copied().unwrap_or(0),
        )
    }

    /// Untruncated columns of `X(h)` as row masks.
    fn address_masks(&self, h: u64) -> Result<(u64, u64)> {
        let digits = (64 - h.leading_zeros()) as usize;
        if digits > self.c1.len() {
            return Err(Error::invalid(format!(
                "index {h} needs {digits} digits but the generators have {} columns",
                self.c1.len()
            )));
        }
        let (mut a, mut b) = (0u64, 0u64);
        let mut rest = h;
        while rest != 0 {
            let l = rest.trailing_zeros() as usize;
            a ^= self.c1[l];
            b ^= self.c2[l];
            rest &= rest - 1;
        }
        Ok((a, b))
    }

    /// Deepest row any digit of `h` can reach; a precision of this many rows
    /// always holds `X(h)`.
    pub fn row_support(&self, h: u64) -> Result<usize> {
        let digits = (64 - h.leading_zeros()) as usize;
        if digits > self.c1.len() {
            return Err(Error::invalid(format!(
                "index {h} needs {digits} digits but the generators have {} columns",
                self.c1.len()
            )));
        }
        let reach = (0..digits).fold(0u64, |acc, l| acc | self.c1[l] | self.c2[l]);
        Ok(64 - reach.leading_zeros() as usize)
    }
}

/// `C₁` routes even digits and `C₂` odd digits: `C₁η = (η₀, η₂, …)`,
/// `C₂η = (η₁, η₃, …)`.
pub fn basu_owen_pair() -> GeneratorPair {
    let c1 = (0..MAX_DIGITS)
        .map(|a| if a % 2 == 0 { 1u64 << (a / 2) } else { 0 })
        .collect();
    let c2 = (0..MAX_DIGITS)
        .map(|a| if a % 2 == 1 { 1u64 << (a / 2) } else { 0 })
        .collect();
    GeneratorPair {
        kind: GeneratorKind::BasuOwen,
        c1,
        c2,
    }
}

/// `C₁ = I`, `C₂` = the upper-triangular Pascal matrix mod 2,
/// entry `(k, l) = binom(l-1, k-1) mod 2`.
pub fn pascal_pair() -> GeneratorPair {
    let c1 = (0..MAX_DIGITS).map(|a| 1u64 << a).collect();
    // Lucas: binom(a, k) is odd iff k's bits are a subset of a's.
    let c2 = (0..MAX_DIGITS)
        .map(|a| (0..=a).filter(|&k| k & a == k).fold(0u64, |acc, k| acc | (1 << k)))
        .collect();
    GeneratorPair {
        kind: GeneratorKind::Pascal,
        c1,
        c2,
    }
}

/// `X(h)` truncated to `n` rows, and `ν(h)`, the deepest nonzero row of the
/// untruncated address.
pub fn sequence_element(gen: &GeneratorPair, h: u64, n: usize) -> Result<(IndexMatrix, usize)> {
    if n > IndexMatrix::MAX_ROWS {
        return Err(Error::invalid("precision above 64 rows"));
    }
    let (a, b) = gen.address_masks(h)?;
    let nu = 64 - (a | b).leading_zeros() as usize;
    if nu > n {
        return Err(Error::Precision {
            h,
            needed: nu,
            available: n,
        });
    }
    Ok((IndexMatrix::from_columns(a, b, n), nu))
}

/// The first `2^m` addresses at precision `n ≥ m`.
#[derive(Clone, Debug)]
pub struct NetSpec {
    gen: GeneratorPair,
    m: usize,
    n: usize,
}

impl NetSpec {
    /// Largest `m` accepted for explicit enumeration.
    pub const MAX_M: usize = 30;

    pub fn new(gen: GeneratorPair, m: usize, n: usize) -> Result<Self> {
        if n < m {
            return Err(Error::invalid(format!("precision n = {n} is below m = {m}")));
        }
        if m > Self::MAX_M || n > IndexMatrix::MAX_ROWS {
            return Err(Error::invalid(format!("net size m = {m}, n = {n} out of range")));
        }
        if m > gen.digit_capacity() {
            return Err(Error::invalid(format!(
                "m = {m} exceeds the {} generator columns",
                gen.digit_capacity()
            )));
        }
        Ok(NetSpec { gen, m, n })
    }

    pub fn generators(&self) -> &GeneratorPair {
        &self.gen
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `X(0), …, X(2^m − 1)` in `h` order.
pub fn net_addresses(spec: &NetSpec) -> Result<Vec<IndexMatrix>> {
    // The left n × m block: rows below n are dropped.
    let n = spec.n;
    par::map_range(1usize << spec.m, |h| {
        let (a, b) = spec.gen.address_masks(h as u64)?;
        Ok(IndexMatrix::from_columns(a, b, n))
    })
    .into_iter()
    .collect()
}

/// One element of the triangle sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequencePoint {
    pub h: u64,
    pub nu: usize,
    pub point: Point,
}

/// The first `count` elements of the triangle sequence, in original
/// coordinates.
pub fn sequence_points(gen: &GeneratorPair, t: &Triangle, count: usize) -> Result<Vec<SequencePoint>> {
    if count == 0 {
        return Err(Error::invalid("point count must be at least 1"));
    }
    let frame = CenteredFrame::new(t);
    par::map_range(count, |h| {
        let h = h as u64;
        let (x, nu) = sequence_element(gen, h, IndexMatrix::MAX_ROWS)?;
        let point = frame.center_of(&x, nu)?;
        Ok(SequencePoint { h, nu, point })
    })
    .into_iter()
    .collect()
}

/// `φ^(ν(h))(X(h))` for `h = 0, …, count − 1`.
pub fn triangle_points(gen: &GeneratorPair, t: &Triangle, count: usize) -> Result<Vec<Point>> {
    Ok(sequence_points(gen, t, count)?.into_iter().map(|s| s.point).collect())
}
