//! QMC integration over a triangle, reference integrals, built-in test
//! functions and convergence studies.

use std::f64::consts::{E, PI};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::bitcore::Pair;
use crate::digital::{sequence_points, GeneratorPair};
use crate::error::{Error, Result};
use crate::par;
use crate::partition::{Point, Triangle, INSIDE_TOL};

/// Deepest subdivision level the reference integrator will try.
pub const ORACLE_MAX_DEPTH: usize = 14;

/// Relative tolerance used for cell averages and reference integrals.
pub const ORACLE_TOL: f64 = 1e-12;

/// Largest `m` a convergence study accepts.
pub const MAX_STUDY_M: usize = 28;

/// One term `coef · x^p · y^q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub p: u32,
    pub q: u32,
}

/// A bivariate polynomial. Text form: `coef,p,q` terms joined by `;`, so
/// `1,2,0;0.5,1,1` is `x² + xy/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("polynomial needs at least one term"));
        }
        if terms.iter().any(|t| !t.coef.is_finite()) {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        Ok(Polynomial { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * p.x.powi(t.p as i32) * p.y.powi(t.q as i32))
            .sum()
    }

    /// Normalized integral over `t`, exact up to rounding.
    pub fn integral(&self, t: &Triangle) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coef * monomial_integral(t, term.p, term.q))
            .sum()
    }

    /// Bound on `max_{|δ| ≤ 2} sup_T |∂^δ f|` from `|x| ≤ X`, `|y| ≤ Y` over
    /// the vertices.
    pub fn c2_bound(&self, t: &Triangle) -> f64 {
        let vs = t.vertices();
        let bx = vs.iter().map(|v| v.x.abs()).fold(0.0, f64::max);
        let by = vs.iter().map(|v| v.y.abs()).fold(0.0, f64::max);
        let falling = |k: u32, d: u32| -> Option<f64> { (d <= k).then(|| (k - d + 1..=k).map(f64::from).product()) };
        let mut best = 0.0f64;
        for (d1, d2) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let s: f64 = self
                .terms
                .iter()
                .filter_map(|term| {
                    let (a, b) = (falling(term.p, d1)?, falling(term.q, d2)?);
                    Some(term.coef.abs() * a * b * bx.powi((term.p - d1) as i32) * by.powi((term.q - d2) as i32))
                })
                .sum();
            best = best.max(s);
        }
        best
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{},{},{}", t.coef, t.p, t.q)?;
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let terms = s
            .split(';')
            .map(|chunk| {
                let parts: Vec<&str> = chunk.split(',').map(str::trim).collect();
                let [c, p, q] = parts[..] else {
                    return Err(Error::Parse(format!("term {chunk:?} is not coef,p,q")));
                };
                let bad = |e: &dyn fmt::Display| Error::Parse(format!("term {chunk:?}: {e}"));
                Ok(Term {
                    coef: c.parse().map_err(|e| bad(&e))?,
                    p: p.parse().map_err(|e| bad(&e))?,
                    q: q.parse().map_err(|e| bad(&e))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Polynomial::new(terms)
    }
}

/// Built-in integrands.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `1`
    Constant,
    /// `x + 2y`
    Affine,
    /// `x² + xy + y²`
    Quadratic,
    /// `exp(x + y)`
    ExpSum,
    /// `cos(π(x − y))`
    CosDiff,
    Polynomial(Polynomial),
}

impl TestFunction {
    pub const BUILTIN: [&'static str; 5] = ["constant", "affine", "quadratic", "exp-sum", "cos-diff"];

    pub fn builtins() -> Vec<TestFunction> {
        vec![
            TestFunction::Constant,
            TestFunction::Affine,
            TestFunction::Quadratic,
            TestFunction::ExpSum,
            TestFunction::CosDiff,
        ]
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant => "constant".into(),
            TestFunction::Affine => "affine".into(),
            TestFunction::Quadratic => "quadratic".into(),
            TestFunction::ExpSum => "exp-sum".into(),
            TestFunction::CosDiff => "cos-diff".into(),
            TestFunction::Polynomial(p) => format!("poly:{p}"),
        }
    }

    /// The polynomial form, when there is one.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        let t = |coef, p, q| Term { coef, p, q };
        match self {
            TestFunction::Constant => Some(Polynomial { terms: vec![t(1.0, 0, 0)] }),
            TestFunction::Affine => Some(Polynomial {
                terms: vec![t(1.0, 1, 0), t(2.0, 0, 1)],
            }),
            TestFunction::Quadratic => Some(Polynomial {
                terms: vec![t(1.0, 2, 0), t(1.0, 1, 1), t(1.0, 0, 2)],
            }),
            TestFunction::Polynomial(p) => Some(p.clone()),
            TestFunction::ExpSum | TestFunction::CosDiff => None,
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::Affine => p.x + 2.0 * p.y,
            TestFunction::Quadratic => p.x * p.x + p.x * p.y + p.y * p.y,
            TestFunction::ExpSum => (p.x + p.y).exp(),
            TestFunction::CosDiff => (PI * (p.x - p.y)).cos(),
            TestFunction::Polynomial(poly) => poly.eval(p),
        }
    }

    /// Bound on `‖f‖_{C²(T)}`. On the unit triangle the built-ins use their
    /// documented constants; elsewhere the bound is computed from the
    /// vertices.
    pub fn c2_norm_bound(&self, t: &Triangle) -> f64 {
        let unit = *t == Triangle::unit();
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::Affine if unit => 3.0,
            TestFunction::Quadratic if unit => 4.0,
            TestFunction::ExpSum if unit => 2.0 * E,
            TestFunction::ExpSum => t.vertices().iter().map(|v| (v.x + v.y).exp()).fold(0.0, f64::max),
            TestFunction::CosDiff => PI * PI,
            other => other.as_polynomial().expect("polynomial").c2_bound(t),
        }
    }

    /// Normalized integral over `t`: exact for polynomials, otherwise from
    /// [`oracle_integrate`] at [`ORACLE_TOL`].
    pub fn reference_integral(&self, t: &Triangle) -> Result<f64> {
        match self.as_polynomial() {
            Some(p) => Ok(p.integral(t)),
            None => oracle_integrate(|p| self.eval(p), t, ORACLE_TOL),
        }
    }

    /// Cell average, as used to build discretized tables.
    pub fn cell_average(&self, cell: &Triangle) -> Result<f64> {
        self.reference_integral(cell)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(TestFunction::Constant),
            "affine" => Ok(TestFunction::Affine),
            "quadratic" => Ok(TestFunction::Quadratic),
            "exp-sum" => Ok(TestFunction::ExpSum),
            "cos-diff" => Ok(TestFunction::CosDiff),
            _ => match s.strip_prefix("poly:") {
                Some(spec) => Ok(TestFunction::Polynomial(spec.parse()?)),
                None => Err(Error::Parse(format!(
                    "unknown function {s:?}; expected one of {} or poly:SPEC",
                    Self::BUILTIN.join(", ")
                ))),
            },
        }
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Coefficients of `(a + b·u + c·v)^p` as `(coef, power of u, power of v)`.
fn trinomial(a: f64, b: f64, c: f64, p: u32) -> Vec<(f64, u32, u32)> {
    let mut out = Vec::new();
    for j in 0..=p {
        for k in 0..=p - j {
            let i = p - j - k;
            let multi = factorial(p) / (factorial(i) * factorial(j) * factorial(k));
            out.push((multi * a.powi(i as i32) * b.powi(j as i32) * c.powi(k as i32), j, k));
        }
    }
    out
}

/// `(1/|T|) ∫_T x^p y^q`.
pub fn monomial_integral(t: &Triangle, p: u32, q: u32) -> f64 {
    let [a, b, c] = t.vertices();
    let xs = trinomial(a.x, b.x - a.x, c.x - a.x, p);
    let ys = trinomial(a.y, b.y - a.y, c.y - a.y, q);
    let mut s = 0.0;
    for &(cx, ju, kv) in &xs {
        for &(cy, ju2, kv2) in &ys {
            let (i, j) = (ju + ju2, kv + kv2);
            s += cx * cy * factorial(i) * factorial(j) / factorial(i + j + 2);
        }
    }
    // The reference simplex has area 1/2.
    2.0 * s
}

/// Sum of `f` and `|f|` over the centroids of the `4^depth` cells below `t`.
fn level_sums<F>(f: &F, t: &Triangle, depth: usize) -> (f64, f64)
where
    F: Fn(Point) -> f64,
{
    if depth == 0 {
        let v = f(t.centroid());
        return (v, v.abs());
    }
    let mut s = (0.0, 0.0);
    for c in Pair::ALL {
        let (a, b) = level_sums(f, &t.subtriangle(c), depth - 1);
        s.0 += a;
        s.1 += b;
    }
    s
}

/// Means of `f` and `|f|` over the level-`depth` centroids.
fn level_means<F>(f: &F, t: &Triangle, depth: usize) -> (f64, f64)
where
    F: Fn(Point) -> f64 + Sync + Send,
{
    let top = depth.min(4);
    let mut cells = vec![*t];
    for _ in 0..top {
        cells = cells
            .iter()
            .flat_map(|c| Pair::ALL.map(|p| c.subtriangle(p)))
            .collect();
    }
    let parts = par::map_slice(&cells, |c| level_sums(f, c, depth - top));
    let s: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let a: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let count = 4f64.powi(depth as i32);
    (par::pairwise_sum(&s) / count, par::pairwise_sum(&a) / count)
}

/// Normalized integral of `f` over `t` by the centroid rule on uniform
/// 4-way subdivisions, extrapolated in powers of `4^{-depth}`.
///
/// Stops once two successive extrapolated values agree to `tol` relative to
/// the larger of the estimate and the mean of `|f|`.
pub fn oracle_integrate<F>(f: F, t: &Triangle, tol: f64) -> Result<f64>
where
    F: Fn(Point) -> f64 + Sync + Send,
{
    oracle_integrate_to_depth(f, t, tol, ORACLE_MAX_DEPTH)
}

/// [`oracle_integrate`] with an explicit depth cap.
pub fn oracle_integrate_to_depth<F>(f: F, t: &Triangle, tol: f64, max_depth: usize) -> Result<f64>
where
    F: Fn(Point) -> f64 + Sync + Send,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let mut prev = vec![level_means(&f, t, 0).0];
    for depth in 1..=max_depth {
        let (s, abs_mean) = level_means(&f, t, depth);
        let mut row = vec![s];
        for j in 1..=depth {
            let factor = 4f64.powi(j as i32) - 1.0;
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / factor);
        }
        let (est, last) = (row[depth], prev[depth - 1]);
        if !est.is_finite() {
            return Err(Error::invalid("integrand is not finite on the triangle"));
        }
        if (est - last).abs() <= tol * est.abs().max(abs_mean) {
            return Ok(est);
        }
        prev = row;
    }
    Err(Error::ToleranceNotMet {
        best: prev[max_depth],
        tol,
    })
}

/// `(1/N) Σ f(xₙ)` over points that must lie in `t`.
pub fn qmc_integrate<F>(f: F, points: &[Point], t: &Triangle) -> Result<f64>
where
    F: Fn(Point) -> f64 + Sync + Send,
{
    if points.is_empty() {
        return Err(Error::invalid("QMC rule needs at least one point"));
    }
    if let Some(p) = points.iter().find(|p| !t.contains(**p, INSIDE_TOL)) {
        return Err(Error::Domain { x: p.x, y: p.y });
    }
    let values = par::map_slice(points, |p| f(*p));
    Ok(par::pairwise_sum(&values) / points.len() as f64)
}

/// One point count of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    /// `⌊log₂ N⌋`.
    pub m: usize,
    pub n_points: u64,
    pub qmc: f64,
    pub exact: f64,
    pub abs_error: f64,
}

impl ConvergenceRow {
    pub fn is_power_of_two(&self) -> bool {
        self.n_points.is_power_of_two()
    }

    /// `m²/2^m` for `N = 2^m`, otherwise `(log₂N)³/N`.
    pub fn reference_rate(&self) -> f64 {
        let n = self.n_points as f64;
        if self.is_power_of_two() {
            let m = self.m as f64;
            m * m / n
        } else {
            n.log2().powi(3) / n
        }
    }

    /// `abs_error / reference_rate`.
    pub fn scaled_error(&self) -> f64 {
        self.abs_error / self.reference_rate()
    }
}

/// The non-power-of-two counts used for level `m`: `3·2^{m−1} − 1` and
/// `2^m + 2^{m−2} + 1`.
pub fn non_power_counts(m: usize) -> Vec<u64> {
    if m < 2 {
        return Vec::new();
    }
    let mut v = vec![3 * (1u64 << (m - 1)) - 1, (1u64 << m) + (1u64 << (m - 2)) + 1];
    v.retain(|n| !n.is_power_of_two());
    v.dedup();
    v
}

/// Errors of the first `N` sequence points for `N = 2^m`, `m ∈ m_range`,
/// and optionally the non-power counts of [`non_power_counts`]. All rows
/// share one generated prefix.
pub fn convergence_study(
    f: &TestFunction,
    gen: &GeneratorPair,
    t: &Triangle,
    m_range: RangeInclusive<usize>,
    include_non_powers: bool,
) -> Result<Vec<ConvergenceRow>> {
    if m_range.is_empty() {
        return Err(Error::invalid("empty m range"));
    }
    if *m_range.end() > MAX_STUDY_M {
        return Err(Error::invalid(format!("m above {MAX_STUDY_M}")));
    }
    let mut counts: Vec<u64> = Vec::new();
    for m in m_range {
        counts.push(1 << m);
        if include_non_powers {
            counts.extend(non_power_counts(m));
        }
    }
    counts.sort_unstable();
    counts.dedup();
    let n_max = *counts.last().expect("nonempty");
    let points: Vec<Point> = sequence_points(gen, t, n_max as usize)?
        .into_iter()
        .map(|s| s.point)
        .collect();
    if let Some(p) = points.iter().find(|p| !t.contains(**p, INSIDE_TOL)) {
        return Err(Error::Domain { x: p.x, y: p.y });
    }
    let values = par::map_slice(&points, |p| f.eval(*p));
    let exact = f.reference_integral(t)?;
    Ok(counts
        .into_iter()
        .map(|n| {
            let qmc = par::pairwise_sum(&values[..n as usize]) / n as f64;
            ConvergenceRow {
                m: 63 - n.leading_zeros() as usize,
                n_points: n,
                qmc,
                exact,
                abs_error: (qmc - exact).abs(),
            }
        })
        .collect())
}

/// Fitted order `α` in `error ≈ c·N^{−α}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateFit {
    Rate(f64),
    /// Fewer than three rows with a nonzero error.
    Undefined,
}

/// Least-squares slope of `log₂ error` against `log₂ N`, negated. Rows with
/// zero error are skipped.
pub fn fit_rate(rows: &[ConvergenceRow]) -> RateFit {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > 0.0)
        .map(|r| ((r.n_points as f64).log2(), r.abs_error.log2()))
        .collect();
    if pts.len() < 3 {
        return RateFit::Undefined;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return RateFit::Undefined;
    }
    RateFit::Rate(-sxy / sxx)
}

/// `max / median` of the values; the median of an even count is the mean
/// of the two middle values.
pub fn max_over_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
    Some(v[k - 1] / median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::{basu_owen_pair, pascal_pair, triangle_points};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> TestFunction {
        "poly:1,2,0".parse().unwrap()
    }

    fn row(n: u64, err: f64) -> ConvergenceRow {
        ConvergenceRow {
            m: 63 - n.leading_zeros() as usize,
            n_points: n,
            qmc: err,
            exact: 0.0,
            abs_error: err,
        }
    }

    #[test]
    fn monomial_examples() {
        let t = Triangle::unit();
        assert_eq!(monomial_integral(&t, 0, 0), 1.0);
        assert!((monomial_integral(&t, 1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((monomial_integral(&t, 1, 1) - 1.0 / 12.0).abs() < 1e-15);
        assert!((monomial_integral(&t, 2, 0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn monomials_match_subdivision() {
        let t = Triangle::new(Point::new(-0.3, 0.2), Point::new(1.4, -0.1), Point::new(0.5, 1.1)).unwrap();
        for p in 0..=3 {
            for q in 0..=3 {
                let exact = monomial_integral(&t, p, q);
                let approx = oracle_integrate(|z| z.x.powi(p as i32) * z.y.powi(q as i32), &t, 1e-13).unwrap();
                assert!((exact - approx).abs() <= 1e-12 * exact.abs().max(1.0), "p={p} q={q}");
            }
        }
    }

    #[test]
    fn monomial_is_normalized_on_any_triangle() {
        let t = Triangle::new(Point::new(2.0, 1.0), Point::new(-1.0, 3.0), Point::new(0.0, -4.0)).unwrap();
        assert!((monomial_integral(&t, 0, 0) - 1.0).abs() < 1e-15);
        let c = t.centroid();
        assert!((monomial_integral(&t, 1, 0) - c.x).abs() < 1e-14);
        assert!((monomial_integral(&t, 0, 1) - c.y).abs() < 1e-14);
    }

    /// Mean of `exp(x + y)` over the unit triangle. `s = x + y` has density
    /// `2s` on `[0, 1]`, so the mean is `2 ∫ s eˢ ds = 2 [(s − 1) eˢ]₀¹`.
    fn exp_sum_mean() -> f64 {
        let antiderivative = |s: f64| (s - 1.0) * s.exp();
        2.0 * (antiderivative(1.0) - antiderivative(0.0))
    }

    #[test]
    fn oracle_on_exp_sum() {
        let want = exp_sum_mean();
        assert_eq!(want, 2.0);
        let got = oracle_integrate(|p| (p.x + p.y).exp(), &Triangle::unit(), 1e-12).unwrap();
        assert!((got - want).abs() < 1e-10);
        assert!((TestFunction::ExpSum.reference_integral(&Triangle::unit()).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn oracle_on_cos_diff() {
        // u = x − y has density 1 − |u| on [−1, 1]; ∫ (1 − |u|) cos(πu) du = 4/π².
        let got = oracle_integrate(|p| TestFunction::CosDiff.eval(p), &Triangle::unit(), 1e-12).unwrap();
        assert!((got - 4.0 / (PI * PI)).abs() < 1e-10);
    }

    #[test]
    fn oracle_on_constants_and_errors() {
        assert_eq!(oracle_integrate(|_| 4.25, &Triangle::unit(), 1e-12).unwrap(), 4.25);
        assert!(oracle_integrate(|_| 1.0, &Triangle::unit(), 0.0).is_err());
        // Not C²: extrapolation cannot reach this tolerance.
        let r = oracle_integrate_to_depth(|p| (p.x - 0.3).abs().sqrt(), &Triangle::unit(), 1e-15, 7);
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })), "{r:?}");
    }

    #[test]
    fn qmc_constant_is_exact() {
        let pts = triangle_points(&basu_owen_pair(), &Triangle::unit(), 37).unwrap();
        assert_eq!(qmc_integrate(|_| 1.0, &pts, &Triangle::unit()).unwrap(), 1.0);
    }

    #[test]
    fn qmc_input_errors() {
        assert!(qmc_integrate(|_| 1.0, &[], &Triangle::unit()).is_err());
        let r = qmc_integrate(|_| 1.0, &[Point::new(0.9, 0.9)], &Triangle::unit());
        assert_eq!(r, Err(Error::Domain { x: 0.9, y: 0.9 }));
    }

    #[test]
    fn hand_value_for_x_squared() {
        let t = Triangle::unit();
        let pts = triangle_points(&basu_owen_pair(), &t, 4).unwrap();
        let f = square();
        let q = qmc_integrate(|p| f.eval(p), &pts, &t).unwrap();
        let exact = f.reference_integral(&t).unwrap();
        assert!((q - 11.0 / 72.0).abs() < 1e-15);
        assert!((exact - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn affine_is_exact_at_powers_of_four() {
        let t = Triangle::unit();
        let rows = convergence_study(&TestFunction::Affine, &basu_owen_pair(), &t, 1..=12, false).unwrap();
        for r in rows.iter().filter(|r| r.m % 2 == 0) {
            assert!(r.abs_error < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn constant_study_has_no_error() {
        let rows = convergence_study(&TestFunction::Constant, &pascal_pair(), &Triangle::unit(), 1..=8, true).unwrap();
        assert!(rows.iter().all(|r| r.abs_error == 0.0));
        assert_eq!(fit_rate(&rows), RateFit::Undefined);
    }

    #[test]
    fn study_rows_reuse_the_prefix() {
        let t = Triangle::unit();
        let g = basu_owen_pair();
        let long = convergence_study(&TestFunction::CosDiff, &g, &t, 2..=9, false).unwrap();
        let short = convergence_study(&TestFunction::CosDiff, &g, &t, 2..=8, false).unwrap();
        assert_eq!(&long[..short.len()], &short[..]);
        let pts = triangle_points(&g, &t, 256).unwrap();
        let direct = qmc_integrate(|p| TestFunction::CosDiff.eval(p), &pts, &t).unwrap();
        assert_eq!(direct, short.last().unwrap().qmc);
    }

    #[test]
    fn non_power_counts_cover_the_doubling_chain() {
        let all: Vec<u64> = (2..=7).flat_map(non_power_counts).collect();
        for n in [5, 11, 23, 47, 95] {
            assert!(all.contains(&n));
        }
        assert!(all.iter().all(|n| !n.is_power_of_two()));
        assert!(non_power_counts(1).is_empty());
    }

    #[test]
    fn fit_rate_exact_data() {
        let rows: Vec<_> = (4..=14).map(|m| row(1 << m, 1.0 / (1u64 << m) as f64)).collect();
        let RateFit::Rate(a) = fit_rate(&rows) else { panic!() };
        assert!((a - 1.0).abs() < 1e-12);
        let rows: Vec<_> = (4..=14).map(|m| row(1 << m, ((1u64 << m) as f64).powf(-0.5))).collect();
        let RateFit::Rate(a) = fit_rate(&rows) else { panic!() };
        assert!((a - 0.5).abs() < 1e-12);
    }

    /// Closed-form slope over `m = 8..16`, from the normal equations written
    /// out with integer sums.
    fn log_factor_slope() -> f64 {
        let ms: Vec<i64> = (8..=16).collect();
        let k = ms.len() as f64;
        let sx: i64 = ms.iter().sum();
        let sxx: i64 = ms.iter().map(|m| m * m).sum();
        let y = |m: i64| 2.0 * (m as f64).log2() - m as f64;
        let sy: f64 = ms.iter().map(|&m| y(m)).sum();
        let sxy: f64 = ms.iter().map(|&m| m as f64 * y(m)).sum();
        -(k * sxy - sx as f64 * sy) / (k * sxx as f64 - (sx * sx) as f64)
    }

    #[test]
    fn fit_rate_with_log_factor() {
        let oracle = log_factor_slope();
        assert!((oracle - 0.752574715455).abs() < 1e-9);
        let rows: Vec<_> = (8..=16)
            .map(|m| row(1 << m, (m * m) as f64 / (1u64 << m) as f64))
            .collect();
        let RateFit::Rate(a) = fit_rate(&rows) else { panic!() };
        assert!((a - oracle).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_skips_zero_rows() {
        let mut rows: Vec<_> = (1..=3).map(|m| row(1 << m, 0.0)).collect();
        rows.push(row(16, 0.1));
        assert_eq!(fit_rate(&rows), RateFit::Undefined);
    }

    #[test]
    fn max_over_median_examples() {
        assert_eq!(max_over_median(&[1.0, 3.0, 2.0]), Some(1.5));
        assert_eq!(max_over_median(&[1.0, 2.0, 3.0, 4.0]), Some(4.0 / 2.5));
        assert_eq!(max_over_median(&[]), None);
    }

    #[test]
    fn builtin_norm_constants() {
        let t = Triangle::unit();
        let got: Vec<f64> = TestFunction::builtins().iter().map(|f| f.c2_norm_bound(&t)).collect();
        assert_eq!(got, vec![1.0, 3.0, 4.0, 2.0 * E, PI * PI]);
        // The documented constants dominate the bounds computed from the
        // vertices.
        for f in [TestFunction::Affine, TestFunction::Quadratic] {
            assert!(f.as_polynomial().unwrap().c2_bound(&t) <= f.c2_norm_bound(&t));
        }
    }

    #[test]
    fn polynomial_norm_bound_is_sound() {
        let p: Polynomial = "1,3,0;-2,1,2;0.5,0,1".parse().unwrap();
        let t = Triangle::new(Point::new(-1.0, 0.5), Point::new(0.7, -0.8), Point::new(0.2, 1.2)).unwrap();
        let bound = p.c2_bound(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let z = t.point_at([1.0 - a - b, a, b]);
            let (x, y) = (z.x, z.y);
            let derivs = [
                p.eval(z),
                3.0 * x * x - 2.0 * y * y,
                -4.0 * x * y + 0.5,
                6.0 * x,
                -4.0 * y,
                -4.0 * x,
            ];
            assert!(derivs.iter().all(|d| d.abs() <= bound));
        }
    }

    #[test]
    fn function_names_round_trip() {
        for f in TestFunction::builtins() {
            assert_eq!(f.name().parse::<TestFunction>().unwrap(), f);
        }
        let f: TestFunction = "poly:1,2,0;0.5,1,1".parse().unwrap();
        assert_eq!(f.name(), "poly:1,2,0;0.5,1,1");
        assert!("poly:1,2".parse::<TestFunction>().is_err());
        assert!("sin".parse::<TestFunction>().is_err());
    }

    #[test]
    fn second_difference_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Triangle::unit();
        let fs = [
            TestFunction::Quadratic,
            "poly:1,3,0;-1,1,2;2,2,1".parse::<TestFunction>().unwrap(),
        ];
        for f in &fs {
            let norm = f.c2_norm_bound(&t);
            let mut checked = 0;
            while checked < 2000 {
                let y = t.point_at([rng.gen(), rng.gen(), rng.gen()].map(|w: f64| w / 3.0));
                let z1 = Point::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                let z2 = Point::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                let quad = [y, y + z1, y + z2, y + z1 + z2];
                if !quad.iter().all(|p| t.contains(*p, 0.0)) {
                    continue;
                }
                let d = f.eval(quad[3]) - f.eval(quad[1]) - f.eval(quad[2]) + f.eval(quad[0]);
                assert!(d.abs() <= 2.0 * norm * z1.norm() * z2.norm() + 1e-14);
                checked += 1;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn qmc_error_is_affine_equivariant(
            a in (-2.0f64..2.0, -2.0f64..2.0),
            l in (0.5f64..2.0, -1.0f64..1.0, -1.0f64..1.0, 0.5f64..2.0),
            m in 2usize..9,
        ) {
            let det = l.0 * l.3 - l.1 * l.2;
            prop_assume!(det.abs() > 0.2);
            let map = |p: Point| Point::new(l.0 * p.x + l.1 * p.y + a.0, l.2 * p.x + l.3 * p.y + a.1);
            let [va, vb, vc] = Triangle::unit().vertices();
            let image = Triangle::new(map(va), map(vb), map(vc)).unwrap();
            let g = basu_owen_pair();
            let n = 1usize << m;
            let f = |p: Point| (p.x + p.y).exp();
            let f_back = |q: Point| {
                let (x, y) = (q.x - a.0, q.y - a.1);
                f(Point::new((l.3 * x - l.1 * y) / det, (-l.2 * x + l.0 * y) / det))
            };
            let unit_pts = triangle_points(&g, &Triangle::unit(), n).unwrap();
            let image_pts = triangle_points(&g, &image, n).unwrap();
            let e1 = qmc_integrate(f, &unit_pts, &Triangle::unit()).unwrap() - 2.0;
            let e2 = qmc_integrate(f_back, &image_pts, &image).unwrap() - 2.0;
            prop_assert!((e1 - e2).abs() < 1e-12, "{e1} vs {e2}");
        }
    }
}
