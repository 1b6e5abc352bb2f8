//! Replicated ECM trials over `(gamma, n)` grids and scaling-exponent fits.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, DegreeSequence};
use crate::error::{Error, Result};
use crate::estimators::{bound_lemma1, pairwise_exp_term, theoretical_exponent};
use crate::graph::{erase, pair_stubs};
use crate::stats::{mean_stderr, ols};

pub const DEFAULT_GAMMA_GRID: [f64; 9] = [1.1, 1.2, 1.35, 1.5, 1.7, 1.9, 2.0, 2.5, 3.0];
pub const DEFAULT_N_GRID: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];

/// Minimum replications per `n` level accepted by [`fit_exponent`].
pub const MIN_FIT_REPLICATIONS: usize = 10;
/// Minimum usable `n` levels for a fit.
pub const MIN_FIT_LEVELS: usize = 3;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed; a pure function of its arguments.
pub fn derive_seed(master_seed: u64, gamma: f64, n: u64, replication_index: u64) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ gamma.to_bits());
    h = splitmix64(h ^ n);
    splitmix64(h ^ replication_index)
}

/// One sample -> pair -> erase run. Column order is the CSV header order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub gamma: f64,
    pub n: u64,
    pub replication_index: u64,
    pub seed: u64,
    #[serde(rename = "L_n")]
    pub l_n: u64,
    pub sum_squares: u128,
    pub self_loops: u64,
    pub excess_multiplicity: u64,
    pub total_erased: u64,
    pub erased_fraction: f64,
    pub lemma1_bound: f64,
    pub pairwise_exp_term: f64,
    pub wall_time_ms: u64,
}

pub const CSV_HEADER: &str = "gamma,n,replication_index,seed,L_n,sum_squares,self_loops,\
excess_multiplicity,total_erased,erased_fraction,lemma1_bound,pairwise_exp_term,wall_time_ms";

impl TrialRecord {
    fn key(&self) -> TrialKey {
        TrialKey::new(self.gamma, self.n, self.replication_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TrialKey {
    gamma_bits: u64,
    n: u64,
    rep: u64,
}

impl TrialKey {
    fn new(gamma: f64, n: u64, rep: u64) -> Self {
        Self {
            gamma_bits: gamma.to_bits(),
            n,
            rep,
        }
    }
}

fn record_order(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
    a.gamma
        .total_cmp(&b.gamma)
        .then(a.n.cmp(&b.n))
        .then(a.replication_index.cmp(&b.replication_index))
}

pub fn run_trial(gamma: f64, n: u64, k_min: u64, seed: u64) -> Result<TrialRecord> {
    run_trial_indexed(gamma, n, k_min, seed, 0)
}

fn run_trial_indexed(gamma: f64, n: u64, k_min: u64, seed: u64, replication_index: u64) -> Result<TrialRecord> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("trial needs n >= 2, got {n}")));
    }
    let start = Instant::now();
    let dist = DegreeDistribution::new(gamma, k_min)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = DegreeSequence::sample(n as usize, &dist, &mut rng)?;
    let multigraph = pair_stubs(&seq, &mut rng)?;
    let (_, stats) = erase(&multigraph);
    Ok(TrialRecord {
        gamma,
        n,
        replication_index,
        seed,
        l_n: seq.sum_degrees(),
        sum_squares: seq.sum_squares(),
        self_loops: stats.self_loop_count,
        excess_multiplicity: stats.excess_multiplicity,
        total_erased: stats.total_erased,
        erased_fraction: stats.erased_fraction,
        lemma1_bound: bound_lemma1(&seq),
        pairwise_exp_term: pairwise_exp_term(&seq),
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

/// Grid of trials. Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub gamma_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub replications: u64,
    pub k_min: u64,
    pub master_seed: u64,
    pub output_path: PathBuf,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlan(m));
        if self.gamma_grid.is_empty() {
            return bad("gamma_grid is empty".into());
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| !(g.is_finite() && **g > 1.0)) {
            return bad(format!("gamma {g} is not > 1"));
        }
        let mut sorted = self.gamma_grid.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("gamma_grid has duplicates".into());
        }
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid[0] < 2 {
            return bad(format!("n = {} is below 2", self.n_grid[0]));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be strictly increasing".into());
        }
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.k_min == 0 {
            return bad("k_min must be >= 1".into());
        }
        Ok(())
    }

    pub fn trial_count(&self) -> usize {
        self.gamma_grid.len() * self.n_grid.len() * self.replications as usize
    }

    fn trials(&self) -> Vec<(f64, u64, u64)> {
        let mut out = Vec::with_capacity(self.trial_count());
        for &g in &self.gamma_grid {
            for &n in &self.n_grid {
                for rep in 0..self.replications {
                    out.push((g, n, rep));
                }
            }
        }
        out
    }

    pub fn fits_path(&self) -> PathBuf {
        self.output_path.with_extension("fits.json")
    }

    pub fn plot_path(&self, gamma: f64) -> PathBuf {
        self.output_path.with_extension(format!("plot.gamma-{gamma}.txt"))
    }
}

/// Reads a record CSV strictly.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Reads what can be salvaged from a possibly interrupted record file.
fn read_records_lenient(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut out = Vec::new();
    for (idx, rec) in rdr.deserialize::<TrialRecord>().enumerate() {
        match rec {
            Ok(r) => out.push(r),
            Err(e) => warn!("{}: skipping unreadable record {}: {e}", path.display(), idx + 1),
        }
    }
    Ok(out)
}

fn record_writer<W: Write>(w: W) -> Result<csv::Writer<W>> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER.split(','))?;
    Ok(wtr)
}

pub fn write_records<W: Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let mut wtr = record_writer(w)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_records_atomic(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    write_records(BufWriter::new(file), records)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Runs every trial of `plan`, streaming records to `plan.output_path`.
///
/// Records already present in the output file (from an interrupted run of
/// the same plan) are kept and not recomputed. On success the file is
/// rewritten sorted by `(gamma, n, replication_index)` and the same sorted
/// list is returned. Parallelism follows the ambient rayon pool.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<TrialRecord>> {
    plan.validate()?;
    let path = &plan.output_path;

    let mut wanted: HashMap<TrialKey, u64> = HashMap::new();
    for (g, n, rep) in plan.trials() {
        wanted.insert(TrialKey::new(g, n, rep), derive_seed(plan.master_seed, g, n, rep));
    }

    let mut done: BTreeMap<(u64, u64, u64), TrialRecord> = BTreeMap::new();
    if path.exists() {
        for r in read_records_lenient(path)? {
            let key = r.key();
            match wanted.get(&key) {
                Some(&seed) if seed == r.seed => {
                    done.insert((key.gamma_bits, key.n, key.rep), r);
                }
                Some(_) => {
                    return Err(Error::InvalidPlan(format!(
                        "{} holds a record for gamma={} n={} rep={} with a different seed",
                        path.display(),
                        r.gamma,
                        r.n,
                        r.replication_index
                    )))
                }
                None => {
                    return Err(Error::InvalidPlan(format!(
                        "{} holds a record (gamma={} n={}) outside this plan",
                        path.display(),
                        r.gamma,
                        r.n
                    )))
                }
            }
        }
    }
    let mut existing: Vec<TrialRecord> = done.into_values().collect();
    existing.sort_by(record_order);

    // Open (and rewrite the salvaged prefix) before any trial runs, so an
    // unwritable path fails early.
    let file = OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut wtr = record_writer(BufWriter::new(file))?;
    for r in &existing {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    let writer = Mutex::new(wtr);

    let have: std::collections::HashSet<TrialKey> = existing.iter().map(TrialRecord::key).collect();
    let pending: Vec<(f64, u64, u64)> = plan
        .trials()
        .into_iter()
        .filter(|&(g, n, rep)| !have.contains(&TrialKey::new(g, n, rep)))
        .collect();

    let fresh: Vec<TrialRecord> = pending
        .par_iter()
        .map(|&(g, n, rep)| {
            let seed = wanted[&TrialKey::new(g, n, rep)];
            let rec = run_trial_indexed(g, n, plan.k_min, seed, rep)?;
            let mut w = writer.lock().expect("record writer poisoned");
            w.serialize(&rec)?;
            w.flush()?;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    drop(writer);

    let mut all = existing;
    all.extend(fresh);
    all.sort_by(record_order);
    write_records_atomic(path, &all)?;
    Ok(all)
}

/// Empirical log-log slope of the mean erased fraction for one `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma: f64,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub theoretical_slope: f64,
    /// `log10` intercept.
    pub intercept: f64,
    pub points_used: usize,
}

/// Aggregates over the replications of one `(gamma, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub gamma: f64,
    pub n: u64,
    pub replications: usize,
    pub mean_erased_fraction: f64,
    pub stderr_erased_fraction: f64,
    pub mean_total_erased: f64,
    pub stderr_total_erased: f64,
    pub mean_lemma1_bound: f64,
}

/// Per-`(gamma, n)` aggregates, sorted.
pub fn level_summaries(records: &[TrialRecord]) -> Vec<LevelSummary> {
    let mut cells: BTreeMap<(u64, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        // order-preserving key for positive floats
        cells.entry((r.gamma.to_bits(), r.n)).or_default().push(r);
    }
    let mut out: Vec<LevelSummary> = cells
        .into_values()
        .map(|rs| {
            let frac: Vec<f64> = rs.iter().map(|r| r.erased_fraction).collect();
            let tot: Vec<f64> = rs.iter().map(|r| r.total_erased as f64).collect();
            let (mf, sf) = mean_stderr(&frac);
            let (mt, st) = mean_stderr(&tot);
            let mb = rs.iter().map(|r| r.lemma1_bound).sum::<f64>() / rs.len() as f64;
            LevelSummary {
                gamma: rs[0].gamma,
                n: rs[0].n,
                replications: rs.len(),
                mean_erased_fraction: mf,
                stderr_erased_fraction: sf,
                mean_total_erased: mt,
                stderr_total_erased: st,
                mean_lemma1_bound: mb,
            }
        })
        .collect();
    out.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.n.cmp(&b.n)));
    out
}

/// Records split by `gamma`, ascending.
pub fn group_by_gamma(records: &[TrialRecord]) -> Vec<(f64, Vec<TrialRecord>)> {
    let mut groups: BTreeMap<u64, Vec<TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.gamma.to_bits()).or_default().push(r.clone());
    }
    let mut out: Vec<(f64, Vec<TrialRecord>)> = groups.into_values().map(|v| (v[0].gamma, v)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// OLS of `log10(mean erased_fraction)` on `log10(n)` for a single `gamma`.
pub fn fit_exponent(records: &[TrialRecord]) -> Result<FitResult> {
    let Some(first) = records.first() else {
        return Err(Error::TooFewLevels {
            needed: MIN_FIT_LEVELS,
            got: 0,
        });
    };
    let gamma = first.gamma;
    if let Some(other) = records.iter().find(|r| r.gamma.to_bits() != gamma.to_bits()) {
        return Err(Error::MixedGamma(gamma, other.gamma));
    }
    let levels = level_summaries(records);
    if levels.len() < MIN_FIT_LEVELS {
        return Err(Error::TooFewLevels {
            needed: MIN_FIT_LEVELS,
            got: levels.len(),
        });
    }
    if let Some(l) = levels.iter().find(|l| l.replications < MIN_FIT_REPLICATIONS) {
        return Err(Error::TooFewReplications {
            n: l.n,
            got: l.replications,
            needed: MIN_FIT_REPLICATIONS,
        });
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for l in &levels {
        if l.mean_erased_fraction > 0.0 {
            x.push((l.n as f64).log10());
            y.push(l.mean_erased_fraction.log10());
        } else {
            warn!("gamma={gamma}: dropping n={} from the fit, mean erased fraction is 0", l.n);
        }
    }
    if x.len() < MIN_FIT_LEVELS {
        return Err(Error::TooFewLevels {
            needed: MIN_FIT_LEVELS,
            got: x.len(),
        });
    }
    let line = ols(&x, &y).ok_or(Error::TooFewLevels {
        needed: MIN_FIT_LEVELS,
        got: x.len(),
    })?;
    Ok(FitResult {
        gamma,
        fitted_slope: line.slope,
        slope_stderr: line.slope_stderr,
        theoretical_slope: theoretical_exponent(gamma)?,
        intercept: line.intercept,
        points_used: x.len(),
    })
}

/// Two-column `log10(n) log10(mean_fraction)` block, a blank line, then the
/// reference line with the theoretical slope through the data centroid.
pub fn write_plot_data<W: Write>(mut w: W, gamma: f64, levels: &[LevelSummary]) -> Result<()> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.gamma.to_bits() == gamma.to_bits() && l.mean_erased_fraction > 0.0)
        .map(|l| ((l.n as f64).log10(), l.mean_erased_fraction.log10()))
        .collect();
    let rho = theoretical_exponent(gamma)?;
    writeln!(w, "# gamma={gamma} measured: log10(n) log10(mean_erased_fraction)")?;
    for (x, y) in &pts {
        writeln!(w, "{x} {y}")?;
    }
    writeln!(w)?;
    writeln!(w)?;
    writeln!(w, "# gamma={gamma} reference: slope {rho}")?;
    if !pts.is_empty() {
        let m = pts.len() as f64;
        let cx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let cy = pts.iter().map(|p| p.1).sum::<f64>() / m;
        for (x, _) in &pts {
            writeln!(w, "{x} {}", cy + rho * (x - cx))?;
        }
    }
    w.flush()?;
    Ok(())
}
