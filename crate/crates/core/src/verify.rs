//! The acceptance checks, runnable from tests and from the command line.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitcore::{xor_row, IndexMatrix, Pair};
use crate::digital::{basu_owen_pair, net_addresses, pascal_pair, GeneratorPair, NetSpec};
use crate::error::Result;
use crate::harness::{convergence_study, fit_rate, max_over_median, qmc_integrate, RateFit, TestFunction};
use crate::partition::{eta, phi, subregion, tau, CenteredFrame, Triangle};
use crate::quality::{check_tvalue_bound, in_dual, v_weight, weight_report};
use crate::walsh::{
    all_nonzero_indices, discretize, dyadic_difference, pair_wal, rw_coefficients, rw_membership,
    verify_decay_bound, walsh_eval, walsh_spectrum, DiscretizedTable,
};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Identifier, short name and runtime limit of each acceptance criterion.
pub const CRITERIA: [(usize, &str, Option<u64>); 11] = [
    (1, "shift-lemma geometry", Some(5)),
    (2, "basu-owen v-values", Some(10)),
    (3, "v_min versus t bound", None),
    (4, "pascal t = 0", None),
    (5, "walsh machinery", Some(30)),
    (6, "coefficient decay", Some(120)),
    (7, "discretization quality", None),
    (8, "exactness at 4^k", None),
    (9, "hand value x^2", None),
    (10, "convergence rate", Some(60)),
    (11, "non-power-of-two counts", None),
];

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<24} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Runs criterion `id` (1 to 11). Library errors count as failures.
pub fn run_criterion(id: usize, seed: u64) -> CheckOutcome {
    let (_, name, limit) = CRITERIA
        .iter()
        .copied()
        .find(|c| c.0 == id)
        .unwrap_or((id, "unknown", None));
    let start = Instant::now();
    let result = match id {
        1 => shift_geometry(seed),
        2 => basu_owen_values(),
        3 => tvalue_bound(),
        4 => pascal_zero_t(),
        5 => walsh_machinery(seed),
        6 => decay(),
        7 => discretization(seed),
        8 => exactness(),
        9 => hand_value(),
        10 => convergence_rate(),
        11 => non_powers(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(secs) = limit {
        if elapsed > Duration::from_secs(secs) {
            passed = false;
            detail.push_str(&format!("; runtime above {secs}s"));
        }
    }
    CheckOutcome {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0, seed)).collect()
}

type Check = Result<(bool, String)>;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> IndexMatrix {
    IndexMatrix::from_code(rng.gen_range(0..1u128 << (2 * n)), n)
}

fn shift_geometry(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Triangle::unit();
    let frame = CenteredFrame::new(&t);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=10);
        let x = random_matrix(&mut rng, n);
        let i = rng.gen_range(1..=n);
        let kappa = Pair::from_code(rng.gen_range(1..4));
        let xi = x.row(i);
        let moved = subregion(&xor_row(&x, i, kappa)?, n, &t)?;
        let base = subregion(&x, n, &t)?;
        let step = (eta(&x, i)? as f64 * 0.5f64.powi(i as i32)) * tau(kappa, xi, &frame);
        let image = if xi.is_zero() || xi == kappa {
            let anchor = 2.0 * phi(&x, i - 1, &frame)? + step;
            base.vertices().map(|v| frame.to_original(anchor - frame.to_centered(v)))
        } else {
            base.vertices().map(|v| v + step)
        };
        let image = Triangle::new(image[0], image[1], image[2])?;
        worst = worst.max(moved.vertex_set_distance(&image));
    }
    Ok((worst <= 1e-12, format!("max vertex-set discrepancy {worst:.2e} over 1000 cases")))
}

fn basu_owen_values() -> Check {
    let g = basu_owen_pair();
    let mut bad = Vec::new();
    for m in 1..=12usize {
        let want = if m % 2 == 1 { m.div_ceil(2) } else { m / 2 + 1 };
        let got = weight_report(&g, m, m)?.v_min;
        if got != Some(want) {
            bad.push(format!("m={m}: {got:?} != {want}"));
        }
    }
    Ok(summary(bad, "v_min matches for m = 1..12"))
}

fn tvalue_bound() -> Check {
    let mut bad = Vec::new();
    let mut ts = Vec::new();
    for g in [basu_owen_pair(), pascal_pair()] {
        for m in 1..=12 {
            let r = weight_report(&g, m, m)?;
            if !check_tvalue_bound(&r, m) {
                bad.push(format!("{} m={m}: v_min {:?}, t {}", g.kind(), r.v_min, r.t));
            }
            if m == 12 {
                ts.push(format!("{} t(12)={}", g.kind(), r.t));
            }
        }
    }
    Ok(summary(bad, &format!("2 v_min >= m - t + 1 for both pairs, m = 1..12 ({})", ts.join(", "))))
}

fn pascal_zero_t() -> Check {
    let g = pascal_pair();
    let mut bad = Vec::new();
    for m in 1..=10 {
        let r = weight_report(&g, m, m)?;
        if r.mu1_min != Some(m + 1) || r.t != 0 {
            bad.push(format!("m={m}: mu1_min {:?}, t {}", r.mu1_min, r.t));
        }
    }
    Ok(summary(bad, "mu1_min = m + 1 for m = 1..10"))
}

fn summary(bad: Vec<String>, ok: &str) -> (bool, String) {
    if bad.is_empty() {
        (true, ok.to_string())
    } else {
        (false, bad.join("; "))
    }
}

/// `|a − b| ≤ tol · scale`.
fn within(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale
}

fn walsh_machinery(seed: u64) -> Check {
    const TOL: f64 = 1e-14;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = [basu_owen_pair(), pascal_pair()];
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: &str, n: usize, table: usize| {
        if failures.len() < 5 {
            failures.push(format!("{what} (table {table}, n={n})"));
        }
    };
    for j in 0..100 {
        let n = 1 + j % 5;
        let values: Vec<f64> = (0..1 << (2 * n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let table = DiscretizedTable::from_values(n, values, Triangle::unit())?;
        let scale = table.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));

        let g: &GeneratorPair = &gens[j % 2];
        let m = rng.gen_range(0..=n);
        let net = net_addresses(&NetSpec::new(g.clone(), m, n)?)?;
        for k in IndexMatrix::all(n) {
            let s: i64 = net.iter().map(|x| walsh_eval(&k, x).map(i64::from)).sum::<Result<i64>>()?;
            let want = if in_dual(g, &k, m) { net.len() as i64 } else { 0 };
            if s != want {
                fail("character sum", n, j);
                break;
            }
        }

        let spec = walsh_spectrum(&table);
        let mut back = spec.clone();
        crate::walsh::fwht(&mut back);
        if back.iter().zip(table.values()).any(|(a, b)| !within(*a, *b, TOL, scale)) {
            fail("reconstruction", n, j);
        }

        for k in all_nonzero_indices(n) {
            let v = v_weight(&k);
            let mut sizes = vec![0usize; v];
            for x in IndexMatrix::all(n) {
                let member: Vec<usize> = (0..v).filter(|&w| rw_membership(&x, &k, w).unwrap_or(false)).collect();
                if member.len() != 1 {
                    fail("R_w disjoint cover", n, j);
                    break;
                }
                sizes[member[0]] += 1;
            }
            let total = 1usize << (2 * n);
            let expect = |w: usize| if w == 0 { total >> (v - 1) } else { total >> (v - w) };
            if (0..v).any(|w| sizes[w] != expect(w)) {
                fail("R_w cardinality", n, j);
            }

            let parts = rw_coefficients(&table, &k)?;
            if !within(parts.iter().sum(), spec[k.code() as usize], TOL, scale) {
                fail("R_w parts sum", n, j);
            }
            let dv = dyadic_difference(&table, &k, v)?;
            let dv_parts = rw_coefficients(&dv, &k)?;
            for w in 0..v {
                if !within(parts[w], -0.5 * dv_parts[w], TOL, scale) {
                    fail("dyadic-hat item 1", n, j);
                }
                if w == 0 {
                    continue;
                }
                let s = pair_wal(k.row(w), crate::partition::sigma(k.row(w)));
                let dw_parts = rw_coefficients(&dyadic_difference(&table, &k, w)?, &k)?;
                if !within(parts[w], 0.5 * s * dw_parts[w], TOL, scale) {
                    fail("dyadic-hat item 2", n, j);
                }
                let dwv_parts = rw_coefficients(&dyadic_difference(&dv, &k, w)?, &k)?;
                if !within(parts[w], -0.25 * s * dwv_parts[w], TOL, scale) {
                    fail("dyadic-hat item 3", n, j);
                }
            }
        }
    }
    Ok(summary(failures, "100 random tables, n = 1..5, all identities within 1e-14"))
}

fn exp_table(n: usize) -> Result<DiscretizedTable> {
    let f = TestFunction::ExpSum;
    let t = Triangle::unit();
    discretize(|c| f.cell_average(c), &t, n)?.with_norm(f.c2_norm_bound(&t))
}

fn decay() -> Check {
    let mut parts = Vec::new();
    let mut violations = 0;
    for n in 1..=6 {
        let table = exp_table(n)?;
        let ks: Vec<IndexMatrix> = all_nonzero_indices(n).collect();
        let r = verify_decay_bound(&table, &ks, true)?;
        violations += r.violations;
        parts.push(format!("n={n}: max ratio {:.3e}", r.max_ratio));
    }
    Ok((violations == 0, format!("{violations} violations; {}", parts.join(", "))))
}

fn discretization(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Triangle::unit();
    let d = t.diameter();
    let mut bad = Vec::new();
    let mut worst_ratio = 0.0f64;
    for f in TestFunction::builtins() {
        let exact = f.reference_integral(&t)?;
        let norm = f.c2_norm_bound(&t);
        let tables = (0..=6)
            .map(|n| discretize(|c| f.cell_average(c), &t, n))
            .collect::<Result<Vec<_>>>()?;
        for table in &tables {
            if !within(table.mean(), exact, 1e-9, 1.0) {
                bad.push(format!("{f} n={}: mean {} vs {exact}", table.n(), table.mean()));
            }
        }
        for _ in 0..10_000 {
            let n = rng.gen_range(1..=6);
            let x = random_matrix(&mut rng, n);
            let cell = subregion(&x, n, &t)?;
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let y = cell.point_at([1.0 - a - b, a, b]);
            let gap = (f.eval(y) - tables[n].get(&x)?).abs();
            let bound = SQRT_2 * d * norm / 2f64.powi(n as i32);
            worst_ratio = worst_ratio.max(gap / bound);
            if gap > bound + 1e-12 {
                bad.push(format!("{f} n={n}: |f(y) - F(X)| = {gap:.3e} > {bound:.3e}"));
                break;
            }
        }
    }
    Ok(summary(
        bad,
        &format!("mean within 1e-9 for n = 0..6; pointwise gap at most {worst_ratio:.3} of the bound"),
    ))
}

fn exactness() -> Check {
    let t = Triangle::unit();
    let g = basu_owen_pair();
    let mut worst = 0.0f64;
    for f in [TestFunction::Constant, TestFunction::Affine] {
        let rows = convergence_study(&f, &g, &t, 2..=12, false)?;
        for r in rows.iter().filter(|r| r.m % 2 == 0) {
            worst = worst.max(r.abs_error);
        }
    }
    Ok((worst <= 1e-13, format!("max error {worst:.2e} at N = 4^k, k = 1..6")))
}

fn hand_value() -> Check {
    let t = Triangle::unit();
    let f: TestFunction = "poly:1,2,0".parse()?;
    let pts = crate::digital::triangle_points(&basu_owen_pair(), &t, 4)?;
    let q = qmc_integrate(|p| f.eval(p), &pts, &t)?;
    let exact = f.reference_integral(&t)?;
    let ok = (q - 11.0 / 72.0).abs() <= 1e-15 && (exact - 1.0 / 6.0).abs() <= 1e-15;
    Ok((ok, format!("qmc {q:.17}, exact {exact:.17}")))
}

fn smooth_studies(non_powers: bool) -> Result<Vec<(String, Vec<crate::harness::ConvergenceRow>)>> {
    let t = Triangle::unit();
    let mut out = Vec::new();
    for f in [TestFunction::ExpSum, TestFunction::CosDiff] {
        for g in [basu_owen_pair(), pascal_pair()] {
            let rows = convergence_study(&f, &g, &t, 6..=16, non_powers)?;
            out.push((format!("{f}/{}", g.kind()), rows));
        }
    }
    Ok(out)
}

fn convergence_rate() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, rows) in smooth_studies(false)? {
        let alpha = match fit_rate(&rows) {
            RateFit::Rate(a) => a,
            RateFit::Undefined => f64::NAN,
        };
        let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_error()).collect();
        let spread = max_over_median(&scaled).unwrap_or(f64::INFINITY);
        let good = (0.85..=1.15).contains(&alpha) && spread <= 10.0;
        ok &= good;
        parts.push(format!("{label}: alpha {alpha:.3}, max/median {spread:.2}"));
    }
    Ok((ok, parts.join("; ")))
}

fn non_powers() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, rows) in smooth_studies(true)? {
        let odd: Vec<_> = rows.iter().filter(|r| !r.is_power_of_two()).collect();
        let scaled: Vec<f64> = odd.iter().map(|r| r.scaled_error()).collect();
        let spread = max_over_median(&scaled).unwrap_or(f64::INFINITY);
        let argmax = odd
            .iter()
            .max_by(|a, b| a.scaled_error().total_cmp(&b.scaled_error()))
            .map_or(0, |r| r.n_points);
        ok &= spread <= 10.0;
        parts.push(format!(
            "{label}: {} counts, max/median {spread:.2} (max at N={argmax})",
            scaled.len()
        ));
    }
    Ok((ok, parts.join("; ")))
}
