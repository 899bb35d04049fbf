mod config;

use std::fs::File;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use triqmc::digital::sequence_points;
use triqmc::harness::{convergence_study, fit_rate, RateFit, TestFunction};
use triqmc::quality::{check_tvalue_bound, weight_report};
use triqmc::verify::{run_criterion, CRITERIA, DEFAULT_SEED};
use triqmc::walsh::{all_nonzero_indices, discretize, verify_decay_bound, MAX_LEVEL};
use triqmc::{basu_owen_pair, pascal_pair, GeneratorPair, IndexMatrix, Triangle};

/// Default cap on the discretization level for `walsh-decay`.
const DEFAULT_MAX_LEVEL: usize = 10;

#[derive(Parser, Debug)]
#[command(name = "triqmc", version, about = "Quasi-Monte Carlo point sequences on a triangle")]
struct Cli {
    /// Triangle as Ax,Ay,Bx,By,Cx,Cy.
    #[arg(long, global = true, default_value = "0,0,1,0,0,1")]
    triangle: Triangle,
    /// Generator pair: basu-owen, pascal or file:PATH.
    #[arg(long, global = true, default_value = "basu-owen")]
    gen: String,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// CSV output path; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// File of key = value lines supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// First N points of the sequence: h, x, y, nu.
    Points {
        #[arg(long)]
        n_points: usize,
    },
    /// Dual-net weights and t-values: m, n, mu1_min, v_min, t, bound_holds.
    Quality {
        #[arg(long, default_value = "1..12", value_parser = parse_range)]
        m_range: RangeInclusive<usize>,
        /// Precision n (defaults to m; raised to m when smaller).
        #[arg(long)]
        precision: Option<usize>,
    },
    /// Walsh coefficients of a discretized function against the decay bound.
    WalshDecay {
        /// A built-in name or poly:SPEC (terms coef,p,q joined by ';').
        #[arg(long)]
        function: TestFunction,
        /// Discretization level.
        #[arg(long)]
        n: usize,
        /// C² norm bound; defaults to the function's documented bound.
        #[arg(long)]
        norm: Option<f64>,
        /// Also check the per-class bounds on R_w coefficients.
        #[arg(long)]
        parts: bool,
        /// Allow levels above 10 (up to 13).
        #[arg(long)]
        allow_large: bool,
    },
    /// QMC errors for N = 2^m: m, N, qmc, exact, abs_error, bound_m2_over_2m.
    Converge {
        #[arg(long, default_value = "exp-sum")]
        function: TestFunction,
        #[arg(long, default_value = "6..16", value_parser = parse_range)]
        m_range: RangeInclusive<usize>,
        /// Add non-power-of-two point counts.
        #[arg(long)]
        non_powers: bool,
    },
    /// Runs the acceptance checks and prints one line per check.
    Verify {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
}

/// `a..b` or `a..=b`, both inclusive.
fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let lo: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok(lo..=hi)
}

fn load_generators(spec: &str) -> Result<GeneratorPair> {
    match spec {
        "basu-owen" => Ok(basu_owen_pair()),
        "pascal" => Ok(pascal_pair()),
        _ => {
            let Some(path) = spec.strip_prefix("file:") else {
                bail!("unknown generator {spec:?}; expected basu-owen, pascal or file:PATH");
            };
            let text = std::fs::read_to_string(path).with_context(|| format!("reading generator file {path}"))?;
            Ok(GeneratorPair::parse_user(&text)?)
        }
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_csv<R: Serialize>(out: &Option<PathBuf>, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_writer(output(out)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    let Some(j) = jobs else { return Ok(()) };
    if j == 0 {
        bail!("--jobs must be at least 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(j)
        .build_global()
        .context("configuring the worker pool")?;
    #[cfg(not(feature = "parallel"))]
    if j > 1 {
        eprintln!("built without the parallel feature; running on one thread");
    }
    Ok(())
}

#[derive(Serialize)]
struct PointRow {
    h: u64,
    x: f64,
    y: f64,
    nu: usize,
}

#[derive(Serialize)]
struct QualityRow {
    m: usize,
    n: usize,
    mu1_min: String,
    v_min: String,
    t: usize,
    bound_holds: bool,
}

#[derive(Serialize)]
struct DecayCsvRow {
    #[serde(rename = "K_encoding")]
    k_encoding: String,
    #[serde(rename = "v_of_K")]
    v_of_k: usize,
    coeff: f64,
    bound: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct ConvergeCsvRow {
    m: usize,
    #[serde(rename = "N")]
    n: u64,
    qmc: f64,
    exact: f64,
    abs_error: f64,
    bound_m2_over_2m: f64,
}

#[derive(Serialize)]
struct VerifyCsvRow {
    id: usize,
    name: &'static str,
    passed: bool,
    seconds: f64,
    detail: String,
}

fn weight_text(w: Option<usize>) -> String {
    w.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

/// Rows joined by `/`, first row first, e.g. `10/00/01`.
fn k_encoding(k: &IndexMatrix) -> String {
    k.row_pairs().iter().map(ToString::to_string).collect::<Vec<_>>().join("/")
}

fn run(cli: Cli) -> Result<bool> {
    configure_jobs(cli.jobs)?;
    let t = cli.triangle;
    match cli.cmd {
        Cmd::Points { n_points } => {
            let gen = load_generators(&cli.gen)?;
            let pts = sequence_points(&gen, &t, n_points)?;
            write_csv(
                &cli.out,
                pts.iter().map(|s| PointRow {
                    h: s.h,
                    x: s.point.x,
                    y: s.point.y,
                    nu: s.nu,
                }),
            )?;
            Ok(true)
        }
        Cmd::Quality { m_range, precision } => {
            let gen = load_generators(&cli.gen)?;
            let mut rows = Vec::new();
            for m in m_range {
                let n = precision.unwrap_or(m).max(m);
                let r = weight_report(&gen, n, m)?;
                rows.push(QualityRow {
                    m,
                    n,
                    mu1_min: weight_text(r.mu1_min),
                    v_min: weight_text(r.v_min),
                    t: r.t,
                    bound_holds: check_tvalue_bound(&r, m),
                });
            }
            let ok = rows.iter().all(|r| r.bound_holds);
            write_csv(&cli.out, rows)?;
            Ok(ok)
        }
        Cmd::WalshDecay {
            function,
            n,
            norm,
            parts,
            allow_large,
        } => {
            let cap = if allow_large { MAX_LEVEL } else { DEFAULT_MAX_LEVEL };
            if n > cap {
                bail!("level {n} above {cap}; pass --allow-large for levels up to {MAX_LEVEL}");
            }
            let norm = norm.unwrap_or_else(|| function.c2_norm_bound(&t));
            let table = discretize(|c| function.cell_average(c), &t, n)?.with_norm(norm)?;
            let ks: Vec<IndexMatrix> = all_nonzero_indices(n).collect();
            let report = verify_decay_bound(&table, &ks, parts)?;
            eprintln!(
                "{function}, n = {n}, d(T) = {:.6}, norm = {norm:.6}: {} coefficients, max ratio {:.4e}{}, {} violations",
                report.d,
                report.rows.len(),
                report.max_ratio,
                report
                    .max_part_ratio
                    .map_or(String::new(), |r| format!(", max R_w ratio {r:.4e}")),
                report.violations
            );
            write_csv(
                &cli.out,
                report.rows.iter().map(|r| DecayCsvRow {
                    k_encoding: k_encoding(&r.k),
                    v_of_k: r.v,
                    coeff: r.coeff,
                    bound: r.bound,
                    ratio: r.ratio,
                }),
            )?;
            Ok(report.passed())
        }
        Cmd::Converge {
            function,
            m_range,
            non_powers,
        } => {
            let gen = load_generators(&cli.gen)?;
            let rows = convergence_study(&function, &gen, &t, m_range, non_powers)?;
            let powers: Vec<_> = rows.iter().filter(|r| r.is_power_of_two()).copied().collect();
            match fit_rate(&powers) {
                RateFit::Rate(a) => eprintln!("{function} with {}: fitted rate {a:.4}", gen.kind()),
                RateFit::Undefined => eprintln!("{function} with {}: rate undefined (errors vanish)", gen.kind()),
            }
            write_csv(
                &cli.out,
                rows.iter().map(|r| ConvergeCsvRow {
                    m: r.m,
                    n: r.n_points,
                    qmc: r.qmc,
                    exact: r.exact,
                    abs_error: r.abs_error,
                    bound_m2_over_2m: r.reference_rate(),
                }),
            )?;
            Ok(true)
        }
        Cmd::Verify { criteria } => {
            let ids: Vec<usize> = if criteria.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                criteria
            };
            if let Some(bad) = ids.iter().find(|i| !CRITERIA.iter().any(|c| c.0 == **i)) {
                bail!("no criterion {bad}; criteria are 1..{}", CRITERIA.len());
            }
            let mut rows = Vec::new();
            for id in ids {
                let o = run_criterion(id, cli.seed);
                if cli.out.is_some() {
                    eprintln!("{o}");
                } else {
                    println!("{o}");
                }
                rows.push(o);
            }
            let ok = rows.iter().all(|o| o.passed);
            if cli.out.is_some() {
                write_csv(
                    &cli.out,
                    rows.into_iter().map(|o| VerifyCsvRow {
                        id: o.id,
                        name: o.name,
                        passed: o.passed,
                        seconds: o.elapsed.as_secs_f64(),
                        detail: o.detail,
                    }),
                )?;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let args = match config::merge(&Cli::command(), std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
