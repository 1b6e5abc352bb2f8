//! `ecm` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, DegreeSequence, SequenceHeader};
use crate::estimators::{
    bound_report, erased_identity_rhs, no_edge_upper_bound, tauberian_term, IdentityConvention,
};
use crate::experiment::{
    self, fit_exponent, group_by_gamma, level_summaries, run_sweep, write_plot_data, FitResult, SweepPlan,
    DEFAULT_GAMMA_GRID, DEFAULT_N_GRID,
};
use crate::graph::{empirical_degree_distance, erase, pair_stubs, ErasureStats};
use crate::oracle::{self, enumerate_exact, format_rational, Rational};
use crate::stats::ols;

#[derive(Debug, Parser)]
#[command(name = "ecm", version, about = "Erased configuration model simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one degree sequence, pair it, erase it, and write all artifacts.
    Generate(GenerateArgs),
    /// Run a replicated (gamma, n) sweep and fit scaling exponents.
    Sweep(SweepArgs),
    /// Fit scaling exponents from an existing record CSV.
    Fit(FitArgs),
    /// Exact enumeration over all matchings of a tiny degree sequence.
    Oracle(OracleArgs),
    /// Closed-form bound report for a degree sequence.
    Bounds(BoundsArgs),
    /// Evaluate the Tauberian functional of D1*D2 over a range of t.
    Tauberian(TauberianArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub kmin: u64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Path prefix; `.degrees.txt`, `.multigraph.txt`, `.simple.txt` and
    /// `.stats.json` are appended.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON file keyed by sweep-plan field names; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated gamma grid.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Comma-separated, strictly increasing n grid.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub kmin: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record CSV; fits and plot data are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Record CSV produced by `sweep`.
    pub records: PathBuf,
    /// Fits JSON destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Comma-separated degrees such as `2,2`, or a degree-sequence file.
    pub degrees: String,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Degree-sequence file; otherwise one is sampled from the flags below.
    #[arg(long, conflicts_with_all = ["gamma", "n"])]
    pub degrees: Option<PathBuf>,
    #[arg(long, requires = "n")]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub kmin: u64,
    #[arg(long, requires = "gamma")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill `identity_value` from exact enumeration (needs L_n <= 14).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TauberianArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub kmin: u64,
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub t: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Tauberian(a) => cmd_tauberian(&a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize + ?Sized>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GenerateStats {
    n: usize,
    #[serde(rename = "L_n")]
    l_n: u64,
    #[serde(flatten)]
    erasure: ErasureStats,
    degree_tail_distance: f64,
}

pub fn cmd_generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let dist = DegreeDistribution::new(a.gamma, a.kmin)?;
    if a.n == 0 {
        bail!("--n must be >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let seq = DegreeSequence::sample(a.n, &dist, &mut rng)?;
    let multi = pair_stubs(&seq, &mut rng)?;
    let (simple, stats) = erase(&multi);

    let header = SequenceHeader {
        n: a.n,
        gamma: a.gamma,
        k_min: a.kmin,
        seed: a.seed,
    };
    seq.write_text(create(&with_suffix(&a.out, ".degrees.txt"))?, Some(&header))?;
    multi.write_edge_list(create(&with_suffix(&a.out, ".multigraph.txt"))?)?;
    simple.write_edge_list(create(&with_suffix(&a.out, ".simple.txt"))?)?;
    let report = GenerateStats {
        n: a.n,
        l_n: seq.sum_degrees(),
        erasure: stats,
        degree_tail_distance: empirical_degree_distance(&simple, &dist),
    };
    write_json(Some(&with_suffix(&a.out, ".stats.json")), &report)
}

/// Sweep-plan fields as they may appear in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub gamma_grid: Option<Vec<f64>>,
    pub n_grid: Option<Vec<u64>>,
    pub replications: Option<u64>,
    pub k_min: Option<u64>,
    pub master_seed: Option<u64>,
    pub output_path: Option<PathBuf>,
}

/// Merges config file and flags (flags win) into a validated plan.
pub fn resolve_plan(a: &SweepArgs) -> anyhow::Result<SweepPlan> {
    let file: PlanFile = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("bad config {}", p.display()))?
        }
        None => PlanFile::default(),
    };
    let plan = SweepPlan {
        gamma_grid: a.gamma.clone().or(file.gamma_grid).unwrap_or_else(|| DEFAULT_GAMMA_GRID.to_vec()),
        n_grid: a.n.clone().or(file.n_grid).unwrap_or_else(|| DEFAULT_N_GRID.to_vec()),
        replications: a.reps.or(file.replications).unwrap_or(50),
        k_min: a.kmin.or(file.k_min).unwrap_or(1),
        master_seed: a.seed.or(file.master_seed).unwrap_or(0),
        output_path: a
            .out
            .clone()
            .or(file.output_path)
            .unwrap_or_else(|| PathBuf::from("sweep.csv")),
    };
    plan.validate()?;
    Ok(plan)
}

fn fits_for(records: &[experiment::TrialRecord]) -> Vec<FitResult> {
    let mut fits = Vec::new();
    for (gamma, group) in group_by_gamma(records) {
        match fit_exponent(&group) {
            Ok(f) => fits.push(f),
            Err(e) => log::warn!("gamma={gamma}: no fit: {e}"),
        }
    }
    fits
}

pub fn cmd_sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let plan = resolve_plan(a)?;
    if a.threads == Some(0) {
        bail!("--threads must be >= 1");
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let records = pool.install(|| run_sweep(&plan))?;

    let fits = fits_for(&records);
    write_json(Some(&plan.fits_path()), &fits)?;
    let levels = level_summaries(&records);
    for &gamma in &plan.gamma_grid {
        let mut w = create(&plan.plot_path(gamma))?;
        write_plot_data(&mut w, gamma, &levels)?;
    }
    for f in &fits {
        println!(
            "gamma={} slope={:.4} +/- {:.4} theoretical={:.4} points={}",
            f.gamma, f.fitted_slope, f.slope_stderr, f.theoretical_slope, f.points_used
        );
    }
    Ok(())
}

pub fn cmd_fit(a: &FitArgs) -> anyhow::Result<()> {
    let records = experiment::read_records(&a.records)
        .with_context(|| format!("cannot read records from {}", a.records.display()))?;
    let fits = fits_for(&records);
    write_json(a.out.as_deref(), &fits)
}

fn parse_degrees(arg: &str) -> anyhow::Result<DegreeSequence> {
    let path = Path::new(arg);
    if path.is_file() {
        let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        return Ok(DegreeSequence::read_text(BufReader::new(f))?.0);
    }
    let degrees = arg
        .split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad degree {t:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(DegreeSequence::from_degrees(degrees)?)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs the bound checks for an exact result; one line per check.
pub fn oracle_checks(seq: &DegreeSequence, exact: &oracle::ExactResult) -> anyhow::Result<Vec<(bool, String)>> {
    let l = seq.sum_degrees();
    // sum D_i^2 / L_n as an exact rational
    let ratio = Rational::new(seq.sum_squares() as u64, l);
    let loops_ok = exact.expected_self_loops <= ratio;
    let excess_cap = ratio * ratio * 2;
    let excess_ok = exact.expected_excess <= excess_cap;

    let d = seq.degrees();
    let mut checked = 0;
    let mut violations = Vec::new();
    for i in 0..d.len() {
        for j in 0..d.len() {
            if i == j {
                continue;
            }
            let Ok(bound) = no_edge_upper_bound(d[i], d[j], l) else {
                continue;
            };
            checked += 1;
            let p = oracle::to_f64(&exact.no_edge_prob[&(i.min(j), i.max(j))]);
            if p > bound + 1e-12 {
                violations.push(format!("({},{}) p={p} bound={bound}", i + 1, j + 1));
            }
        }
    }
    let identity = erased_identity_rhs(seq, &exact.no_edge_probs(), IdentityConvention::ErasedEdges)?;
    let frac = oracle::to_f64(&exact.expected_erased_fraction);
    Ok(vec![
        (
            loops_ok,
            format!(
                "self-loops: E[S_n] = {} <= sum D^2 / L_n = {}",
                format_rational(&exact.expected_self_loops),
                format_rational(&ratio)
            ),
        ),
        (
            excess_ok,
            format!(
                "multi-edges: E[M_n] = {} <= 2 (sum D^2 / L_n)^2 = {}",
                format_rational(&exact.expected_excess),
                format_rational(&excess_cap)
            ),
        ),
        (
            violations.is_empty(),
            if violations.is_empty() {
                format!("no-edge bound: {checked} ordered pairs satisfy the precondition, 0 violations")
            } else {
                format!("no-edge bound: violations {}", violations.join(" "))
            },
        ),
        (
            (identity - frac).abs() <= 1e-12,
            format!("identity (erased_edges convention) = {identity} vs expected erased fraction {frac}"),
        ),
    ])
}

pub fn cmd_oracle(a: &OracleArgs) -> anyhow::Result<()> {
    let seq = parse_degrees(&a.degrees)?;
    let exact = enumerate_exact(&seq)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    serde_json::to_writer_pretty(&mut w, &exact)?;
    writeln!(w)?;
    for (ok, line) in oracle_checks(&seq, &exact)? {
        writeln!(w, "{} {line}", verdict(ok))?;
    }
    Ok(())
}

pub fn cmd_bounds(a: &BoundsArgs) -> anyhow::Result<()> {
    let seq = match (&a.degrees, a.gamma, a.n) {
        (Some(p), _, _) => parse_degrees(p.to_str().context("non UTF-8 path")?)?,
        (None, Some(gamma), Some(n)) => {
            let dist = DegreeDistribution::new(gamma, a.kmin)?;
            if n == 0 {
                bail!("--n must be >= 1");
            }
            DegreeSequence::sample(n, &dist, &mut ChaCha8Rng::seed_from_u64(a.seed))?
        }
        _ => bail!("give either --degrees FILE or --gamma with --n"),
    };
    let exact = if a.exact {
        Some(enumerate_exact(&seq)?.no_edge_probs())
    } else {
        None
    };
    let report = bound_report(&seq, exact.as_ref().map(|p| (p, IdentityConvention::ErasedEdges)))?;
    write_json(a.out.as_deref(), &report)
}

#[derive(Debug, Serialize)]
struct TauberianPoint {
    t: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct TauberianReport {
    gamma: f64,
    k_min: u64,
    points: Vec<TauberianPoint>,
    /// log-log slope over all points, `null` with fewer than two.
    slope: Option<f64>,
}

pub fn cmd_tauberian(a: &TauberianArgs) -> anyhow::Result<()> {
    let dist = DegreeDistribution::new(a.gamma, a.kmin)?;
    let points = a
        .t
        .iter()
        .map(|&t| Ok(TauberianPoint { t, value: tauberian_term(&dist, t)? }))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| p.t.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let report = TauberianReport {
        gamma: a.gamma,
        k_min: a.kmin,
        slope: ols(&x, &y).map(|f| f.slope),
        points,
    };
    write_json(a.out.as_deref(), &report)
}
