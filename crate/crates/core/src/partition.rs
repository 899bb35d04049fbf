//! Triangle geometry and the recursive 4-way partition.
//!
//! A triangle `△(A, B, C)` splits into its medial triangle (address `(0,0)`)
//! and the three corner triangles at `A` (`(1,0)`), `B` (`(0,1)`) and `C`
//! (`(1,1)`). Iterating the split with the rows of an [`IndexMatrix`]
//! addresses the subregion `T⁽ⁿ⁾(X)`. Vertex order matters: each child keeps
//! the order given by [`Triangle::subtriangle`], which is what makes the
//! closed form in [`subregion_closed_form`] agree with the recursion.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use crate::bitcore::{IndexMatrix, Pair};
use crate::error::{Error, Result};

/// Barycentric coordinates at or above `-INSIDE_TOL` count as inside.
pub const INSIDE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point::new(self * p.x, self * p.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// An ordered, non-degenerate triangle `△(A, B, C)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    v: [Point; 3],
}

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Result<Self> {
        let t = Triangle { v: [a, b, c] };
        let coords = [a.x, a.y, b.x, b.y, c.x, c.y];
        if coords.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("triangle coordinates must be finite"));
        }
        if t.signed_area() == 0.0 {
            return Err(Error::invalid("triangle vertices are collinear"));
        }
        Ok(t)
    }

    /// Skips validation; only for images of valid triangles under
    /// similarities.
    pub(crate) fn from_vertices(a: Point, b: Point, c: Point) -> Self {
        Triangle { v: [a, b, c] }
    }

    /// `△((0,0), (1,0), (0,1))`.
    pub fn unit() -> Self {
        Triangle::from_vertices(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0))
    }

    pub fn vertices(&self) -> [Point; 3] {
        self.v
    }

    pub fn a(&self) -> Point {
        self.v[0]
    }

    pub fn b(&self) -> Point {
        self.v[1]
    }

    pub fn c(&self) -> Point {
        self.v[2]
    }

    pub fn centroid(&self) -> Point {
        let [a, b, c] = self.v;
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    fn signed_area(&self) -> f64 {
        let [a, b, c] = self.v;
        0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Longest edge length.
    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.v;
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    /// Barycentric coordinates of `p` with respect to `(A, B, C)`.
    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [a, b, c] = self.v;
        let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let wb = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
        let wc = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
        [1.0 - wb - wc, wb, wc]
    }

    /// Inside test with barycentric slack `tol`.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.barycentric(p).iter().all(|&w| w >= -tol)
    }

    /// The point with barycentric weights `w` (need not sum to one exactly).
    pub fn point_at(&self, w: [f64; 3]) -> Point {
        let [a, b, c] = self.v;
        Point::new(
            w[0] * a.x + w[1] * b.x + w[2] * c.x,
            w[0] * a.y + w[1] * b.y + w[2] * c.y,
        )
    }

    /// The child triangle addressed by `xi`, with vertex order preserved.
    pub fn subtriangle(&self, xi: Pair) -> Triangle {
        let [a, b, c] = self.v;
        let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
        match (xi.first(), xi.second()) {
            (0, 0) => Triangle::from_vertices(bc, ca, ab),
            (1, 0) => Triangle::from_vertices(a, ab, ca),
            (0, 1) => Triangle::from_vertices(ab, b, bc),
            _ => Triangle::from_vertices(ca, bc, c),
        }
    }

    /// Largest vertex displacement under the best matching of the two vertex
    /// sets, for comparisons that ignore order.
    pub fn vertex_set_distance(&self, other: &Triangle) -> f64 {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        PERMS
            .iter()
            .map(|p| {
                (0..3)
                    .map(|k| self.v[k].dist(other.v[p[k]]))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest vertex displacement with vertices matched in order.
    pub fn ordered_distance(&self, other: &Triangle) -> f64 {
        (0..3).map(|k| self.v[k].dist(other.v[k])).fold(0.0, f64::max)
    }
}

impl Default for Triangle {
    fn default() -> Self {
        Triangle::unit()
    }
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.v;
        write!(f, "{},{},{},{},{},{}", a.x, a.y, b.x, b.y, c.x, c.y)
    }
}

/// Parses `Ax,Ay,Bx,By,Cx,Cy`.
impl FromStr for Triangle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nums = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad coordinate {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match nums.as_slice() {
            &[ax, ay, bx, by, cx, cy] => {
                Triangle::new(Point::new(ax, ay), Point::new(bx, by), Point::new(cx, cy))
            }
            _ => Err(Error::Parse(format!("expected 6 numbers, got {}", nums.len()))),
        }
    }
}

/// A triangle shifted so that its centroid sits at the origin.
///
/// `e(1,0)`, `e(0,1)`, `e(1,1)` are the vertices `A`, `B`, `C` minus the
/// centroid; `e(0,0)` is the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenteredFrame {
    e: [Point; 4],
    origin_shift: Point,
    triangle: Triangle,
}

impl CenteredFrame {
    pub fn new(t: &Triangle) -> Self {
        let g = t.centroid();
        CenteredFrame {
            e: [Point::ORIGIN, t.a() - g, t.b() - g, t.c() - g],
            origin_shift: g,
            triangle: *t,
        }
    }

    /// The vertex vector `e(σ)`.
    pub fn e(&self, sigma: Pair) -> Point {
        self.e[sigma.code() as usize]
    }

    pub fn origin_shift(&self) -> Point {
        self.origin_shift
    }

    pub fn triangle(&self) -> &Triangle {
        &self.triangle
    }

    pub fn to_original(&self, p: Point) -> Point {
        p + self.origin_shift
    }

    pub fn to_centered(&self, p: Point) -> Point {
        p - self.origin_shift
    }

    /// `φ⁽ⁱ⁾(X)` in original coordinates.
    pub fn center_of(&self, x: &IndexMatrix, i: usize) -> Result<Point> {
        Ok(self.to_original(phi(x, i, self)?))
    }
}

/// Sign `ηᵢ(X)`: +1 for `i = 1`, otherwise `(-1)` to the number of zero rows
/// among rows `1..i`.
pub fn eta(x: &IndexMatrix, i: usize) -> Result<i8> {
    if i == 0 || i > x.rows() + 1 {
        return Err(Error::OutOfRange {
            index: i,
            lo: 1,
            hi: x.rows() + 1,
        });
    }
    Ok(eta_unchecked(x, i))
}

fn eta_unchecked(x: &IndexMatrix, i: usize) -> i8 {
    const EVEN: u128 = 0x5555_5555_5555_5555_5555_5555_5555_5555;
    let c = x.code();
    let zero_rows = !(c | (c >> 1)) & EVEN;
    let below = if i >= 65 {
        zero_rows
    } else {
        zero_rows & ((1u128 << (2 * (i - 1))) - 1)
    };
    if below.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Center `φ⁽ⁱ⁾(X) = Σⱼ ηⱼ(X) 2⁻ʲ e(ξⱼ)` in centered coordinates.
pub fn phi(x: &IndexMatrix, i: usize, frame: &CenteredFrame) -> Result<Point> {
    if i > x.rows() {
        return Err(Error::OutOfRange {
            index: i,
            lo: 0,
            hi: x.rows(),
        });
    }
    let mut p = Point::ORIGIN;
    let mut sign = 1.0;
    let mut scale = 1.0;
    for j in 1..=i {
        scale *= 0.5;
        let row = x.row(j);
        p += (sign * scale) * frame.e(row);
        if row.is_zero() {
            sign = -sign;
        }
    }
    Ok(p)
}

/// `T⁽ⁱ⁾(X)` by `i`-fold application of [`Triangle::subtriangle`].
pub fn subregion(x: &IndexMatrix, i: usize, t: &Triangle) -> Result<Triangle> {
    if i > x.rows() {
        return Err(Error::OutOfRange {
            index: i,
            lo: 0,
            hi: x.rows(),
        });
    }
    Ok((1..=i).fold(*t, |acc, j| acc.subtriangle(x.row(j))))
}

/// `T⁽ⁱ⁾(X) = φ⁽ⁱ⁾(X) + ηᵢ₊₁(X) 2⁻ⁱ T`, vertices ordered as
/// `(φ_X(1,0), φ_X(0,1), φ_X(1,1))`, in original coordinates.
pub fn subregion_closed_form(x: &IndexMatrix, i: usize, frame: &CenteredFrame) -> Result<Triangle> {
    let center = phi(x, i, frame)?;
    let s = eta_unchecked(x, i + 1) as f64 * 0.5f64.powi(i as i32);
    let vertex = |sigma: Pair| frame.to_original(center + s * frame.e(sigma));
    Ok(Triangle::from_vertices(
        vertex(Pair::new(1, 0)),
        vertex(Pair::new(0, 1)),
        vertex(Pair::new(1, 1)),
    ))
}

/// `τ(κ, κ')`: `e(κ⊕κ') − e(κ')` when `κ' ∉ {0, κ}`, else
/// `e(κ⊕κ') + e(κ')`.
pub fn tau(kappa: Pair, kappa_p: Pair, frame: &CenteredFrame) -> Point {
    let moved = frame.e(kappa.xor(kappa_p));
    if kappa_p.is_zero() || kappa_p == kappa {
        moved + frame.e(kappa_p)
    } else {
        moved - frame.e(kappa_p)
    }
}

/// The `(σ(κ), p₁(κ), p₂(κ))` table row.
pub fn sigma_p1_p2(kappa: Pair) -> (Pair, Pair, Pair) {
    let p = Pair::new;
    match (kappa.first(), kappa.second()) {
        (0, 0) => (p(1, 1), p(0, 0), p(1, 1)),
        (0, 1) => (p(0, 1), p(1, 1), p(1, 0)),
        (1, 0) => (p(1, 0), p(1, 1), p(0, 1)),
        _ => (p(0, 1), p(1, 0), p(1, 1)),
    }
}

/// `σ(κ)` alone.
pub fn sigma(kappa: Pair) -> Pair {
    sigma_p1_p2(kappa).0
}

/// Whether `xi ∈ P(κ) = {p₁(κ), p₂(κ)}`.
pub fn in_positive_set(kappa: Pair, xi: Pair) -> bool {
    let (_, p1, p2) = sigma_p1_p2(kappa);
    xi == p1 || xi == p2
}

/// Point-level shift `y ⊕ᵢ κ` restricted to `T⁽ⁿ⁾(X)`, `n = X.rows()`.
///
/// `y` and the result are in original coordinates. For `κ ≠ 0` the image
/// lies in `T⁽ⁿ⁾(X ⊕ᵢ κ)`; `κ = 0` is evaluated by the same two-branch
/// formula.
pub fn point_xor_row(y: Point, x: &IndexMatrix, i: usize, kappa: Pair, frame: &CenteredFrame) -> Result<Point> {
    let n = x.rows();
    if i == 0 || i > n {
        return Err(Error::OutOfRange { index: i, lo: 1, hi: n });
    }
    let cell = subregion_closed_form(x, n, frame)?;
    if !cell.contains(y, INSIDE_TOL) {
        return Err(Error::Domain { x: y.x, y: y.y });
    }
    Ok(shift_unchecked(y, x, i, kappa, frame))
}

/// [`point_xor_row`] without the membership check.
pub(crate) fn shift_unchecked(y: Point, x: &IndexMatrix, i: usize, kappa: Pair, frame: &CenteredFrame) -> Point {
    let xi = x.row(i);
    let step = (eta_unchecked(x, i) as f64 * 0.5f64.powi(i as i32)) * tau(kappa, xi, frame);
    let yc = frame.to_centered(y);
    let out = if xi.is_zero() || xi == kappa {
        let parent = phi(x, i - 1, frame).expect("i - 1 < rows");
        2.0 * parent - yc + step
    } else {
        yc + step
    };
    frame.to_original(out)
}
