mod common;

use std::fs;

use erased_cm::estimators::{bound_lemma1, clt_scaling_diagnostic, tauberian_term, CltSample};
use erased_cm::experiment::{self, derive_seed, level_summaries, run_sweep, run_trial, SweepPlan, CSV_HEADER};
use erased_cm::graph::{erase, pair_stubs, tail_distance};
use erased_cm::{DegreeDistribution, DegreeSequence, TrialRecord};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sampled_tail_matches_law() {
    // DKW: sup deviation exceeds sqrt(ln(2/a) / 2n) with probability < a
    let n = 400_000;
    let band = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
    for (gamma, k_min) in [(1.1, 1), (1.5, 1), (2.5, 3), (4.0, 10)] {
        let dist = DegreeDistribution::new(gamma, k_min).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k_min);
        let draws: Vec<u64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let gap = tail_distance(&draws, &dist);
        assert!(gap < band, "gamma={gamma} k_min={k_min}: {gap} >= {band}");
        assert!(draws.iter().all(|&d| d >= k_min));
    }
}

#[test]
fn tauberian_positive_and_decreasing() {
    for (gamma, k_min) in [(1.2, 1), (1.5, 1), (1.8, 3)] {
        let dist = DegreeDistribution::new(gamma, k_min).unwrap();
        let mut last = f64::INFINITY;
        for t in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
            let v = tauberian_term(&dist, t).unwrap();
            assert!(v > 0.0 && v < last, "gamma={gamma} t={t}: {v} after {last}");
            last = v;
        }
    }
}

#[test]
fn tauberian_rejects_out_of_range() {
    assert!(tauberian_term(&DegreeDistribution::new(2.5, 1).unwrap(), 10.0).is_err());
    let d = DegreeDistribution::new(1.5, 1).unwrap();
    assert!(tauberian_term(&d, 0.0).is_err());
    assert!(tauberian_term(&d, 1e7).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tauberian_strictly_decreasing(gamma in 1.05f64..1.95, lo in 0.0f64..3.5, step in 0.05f64..1.0) {
        let dist = DegreeDistribution::new(gamma, 1).unwrap();
        let a = tauberian_term(&dist, 10f64.powf(lo)).unwrap();
        let b = tauberian_term(&dist, 10f64.powf(lo + step)).unwrap();
        prop_assert!(a > b && b > 0.0);
    }

    #[test]
    fn conditional_mean_respects_lemma1(gamma in 1.2f64..3.0, seed in 0u64..1000) {
        let dist = DegreeDistribution::new(gamma, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = DegreeSequence::sample(200, &dist, &mut rng).unwrap();
        let reps = 300;
        let mean: f64 = (0..reps)
            .map(|_| erase(&pair_stubs(&s, &mut rng).unwrap()).1.erased_fraction)
            .sum::<f64>() / reps as f64;
        prop_assert!(mean <= bound_lemma1(&s) * 1.05);
    }
}

#[test]
fn light_tail_total_erased_stays_small() {
    let reps = 100;
    let mean: f64 = (0..reps)
        .map(|r| run_trial(3.0, 100_000, 1, 1000 + r).unwrap().total_erased as f64)
        .sum::<f64>()
        / reps as f64;
    assert!(mean < 50.0, "{mean}");
}

fn plan(dir: &std::path::Path, seed: u64) -> SweepPlan {
    SweepPlan {
        gamma_grid: vec![1.5, 2.5],
        n_grid: vec![100, 300, 1000],
        replications: 12,
        k_min: 1,
        master_seed: seed,
        output_path: dir.join("records.csv"),
    }
}

fn strip_time(records: &[TrialRecord]) -> Vec<TrialRecord> {
    records
        .iter()
        .cloned()
        .map(|mut r| {
            r.wall_time_ms = 0;
            r
        })
        .collect()
}

#[test]
fn sweep_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let p = plan(dir.path(), 42);
    let full = run_sweep(&p).unwrap();
    assert_eq!(full.len(), p.trial_count());
    let reread = experiment::read_records(&p.output_path).unwrap();
    assert_eq!(strip_time(&reread), strip_time(&full));

    // interrupted run: header, a few records and a torn line
    let text = fs::read_to_string(&p.output_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let kept: Vec<&str> = lines.take(7).collect();
    let torn = &text.lines().nth(8).unwrap()[..10];
    fs::write(&p.output_path, format!("{CSV_HEADER}\n{}\n{torn}", kept.join("\n"))).unwrap();
    let resumed = run_sweep(&p).unwrap();
    assert_eq!(strip_time(&resumed), strip_time(&full));

    let other = tempfile::tempdir().unwrap();
    let again = run_sweep(&plan(other.path(), 42)).unwrap();
    assert_eq!(strip_time(&again), strip_time(&full));
}

#[test]
fn sweep_refuses_foreign_records() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&plan(dir.path(), 1)).unwrap();
    assert!(run_sweep(&plan(dir.path(), 2)).is_err());
    let mut narrower = plan(dir.path(), 1);
    narrower.gamma_grid = vec![1.5];
    assert!(run_sweep(&narrower).is_err());
}

#[test]
fn same_seed_same_trial() {
    let a = run_trial(1.7, 5_000, 2, 99).unwrap();
    let b = run_trial(1.7, 5_000, 2, 99).unwrap();
    assert_eq!(strip_time(&[a]), strip_time(&[b]));
}

#[test]
fn sweep_levels_decrease_and_respect_bound() {
    let dir = tempfile::tempdir().unwrap();
    let plan = SweepPlan {
        gamma_grid: vec![1.5, 2.5],
        n_grid: vec![1_000, 4_000, 16_000],
        replications: 40,
        k_min: 1,
        master_seed: 77,
        output_path: dir.path().join("levels.csv"),
    };
    let levels = level_summaries(&run_sweep(&plan).unwrap());
    for w in levels.windows(2).filter(|w| w[0].gamma == w[1].gamma) {
        let tol = w[0].stderr_erased_fraction.hypot(w[1].stderr_erased_fraction);
        assert!(
            w[1].mean_erased_fraction <= w[0].mean_erased_fraction + tol,
            "gamma={} n={}..{}",
            w[0].gamma,
            w[0].n,
            w[1].n
        );
    }
    for l in &levels {
        assert!(l.mean_erased_fraction <= l.mean_lemma1_bound * 1.05, "gamma={} n={}", l.gamma, l.n);
    }
}

#[test]
fn degree_sum_deviation_scaling() {
    let gamma = 1.25;
    let dist = DegreeDistribution::new(gamma, 1).unwrap();
    let mut samples = Vec::new();
    for n in [1_000u64, 10_000, 30_000, 100_000] {
        for rep in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(5, gamma, n, rep));
            samples.push(CltSample::from(&DegreeSequence::sample(n as usize, &dist, &mut rng).unwrap()));
        }
    }
    let diag = clt_scaling_diagnostic(&samples, dist.mean()).unwrap();
    let slope = diag.deviation_fit.unwrap().slope;
    assert!((slope - 0.8).abs() <= 0.1, "{slope}");
}
