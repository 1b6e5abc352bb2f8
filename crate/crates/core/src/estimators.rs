//! Closed-form bounds and analytic expressions for the erased-edge count.
//!
//! Everything here is a pure function of a degree sequence or a degree
//! law; nothing samples.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::degree::{DegreeDistribution, DegreeSequence};
use crate::error::{Error, Result};
use crate::stats::{self, LineFit};

/// `exp(-x)` is exactly `0.0` in `f64` beyond this argument.
const EXP_UNDERFLOW: f64 = 746.0;

/// Products `x` above this use `x - 1` for `x - 1 + exp(-x)`; the dropped
/// `exp(-x)` is below `2e-22`.
const LINEAR_REGIME: f64 = 50.0;

/// Largest `t` accepted by [`tauberian_term`].
pub const TAUBERIAN_MAX_T: f64 = 1e6;

/// Probability table size for [`tauberian_term`]; larger arguments are
/// evaluated on the fly.
const PMF_TABLE_MAX: u64 = 1 << 23;

/// Upper bound on the expected erased fraction given the degrees:
/// `sum D_i^2 / L_n^2 + 2 (sum D_i^2)^2 / L_n^3`.
pub fn bound_lemma1(seq: &DegreeSequence) -> f64 {
    let l = seq.sum_degrees() as f64;
    let s2 = seq.sum_squares() as f64;
    s2 / (l * l) + 2.0 * s2 * s2 / (l * l * l)
}

/// `sum D_i^2 / L_n^2`.
pub fn second_moment_ratio(seq: &DegreeSequence) -> f64 {
    let l = seq.sum_degrees() as f64;
    seq.sum_squares() as f64 / (l * l)
}

/// `sum_{i,j} exp(-D_i D_j / scale)` over all ordered pairs, including
/// `i = j`.
///
/// Evaluated on the degree histogram, so the cost is quadratic in the
/// number of distinct degrees rather than in `n`.
pub fn pairwise_exp_sum(seq: &DegreeSequence, scale: f64) -> Result<f64> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::InvalidScale(scale));
    }
    let hist = seq.histogram();
    let mut total = 0.0;
    for (ia, &(a, ca)) in hist.iter().enumerate() {
        let af = a as f64;
        let ca = ca as f64;
        total += ca * ca * (-(af * af) / scale).exp();
        let mut off = 0.0;
        for &(b, cb) in &hist[ia + 1..] {
            let x = af * b as f64 / scale;
            if x > EXP_UNDERFLOW {
                break;
            }
            off += cb as f64 * (-x).exp();
        }
        total += 2.0 * ca * off;
    }
    Ok(total)
}

/// `x - 1 + exp(-x)` without cancellation near zero.
pub fn laplace_excess(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        // x^2/2 - x^3/6 + x^4/24 - x^5/120 + x^6/720
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0 + x2 * x2 / 720.0)
    } else {
        x + (-x).exp_m1()
    }
}

/// `1 - n^2/L_n + (1/L_n) sum_{i,j} exp(-D_i D_j / L_n)`, the exponential
/// upper bound on the erased fraction (up to a lower-order correction).
///
/// Evaluated as `(1/L_n) sum_{i,j} (x_ij - 1 + exp(-x_ij))` with
/// `x_ij = D_i D_j / L_n`, which is the same number because
/// `sum x_ij = L_n`, but is a sum of non-negative terms.
pub fn pairwise_exp_term(seq: &DegreeSequence) -> f64 {
    let l = seq.sum_degrees() as f64;
    let hist = seq.histogram();
    // suffix sums of counts and of count * value
    let mut suffix_count = vec![0.0; hist.len() + 1];
    let mut suffix_mass = vec![0.0; hist.len() + 1];
    for (k, &(v, c)) in hist.iter().enumerate().rev() {
        suffix_count[k] = suffix_count[k + 1] + c as f64;
        suffix_mass[k] = suffix_mass[k + 1] + c as f64 * v as f64;
    }
    let mut total = 0.0;
    for &(a, ca) in &hist {
        let af = a as f64;
        let mut row = 0.0;
        let mut k = 0;
        while k < hist.len() {
            let (b, cb) = hist[k];
            let x = af * b as f64 / l;
            if x > LINEAR_REGIME {
                row += af / l * suffix_mass[k] - suffix_count[k];
                break;
            }
            row += cb as f64 * laplace_excess(x);
            k += 1;
        }
        total += ca as f64 * row;
    }
    total / l
}

/// How the pair sum in the erased-edge identity treats the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IdentityConvention {
    /// Sum over all ordered pairs `(i, j)` including `i = j`, with `E_ii`
    /// counted in stubs (two per self-loop) and `p_ii = P(no loop at i)`.
    /// Evaluates `(1/L_n) sum_{i,j} E[E_ij - 1{E_ij > 0}]`, which keeps one
    /// loop per node and counts each off-diagonal excess twice.
    OrderedPairs,
    /// Self-loops always erased, distinct pairs counted once. Evaluates the
    /// expected erased fraction `E[S_n + M_n] / L_n` exactly:
    /// `1/2 - n(n-1)/(2 L_n) + (1/L_n) sum_{i<j} p_ij`.
    #[default]
    ErasedEdges,
}

/// No-edge probabilities `P_n(E_ij = 0)` keyed by unordered pair `i <= j`
/// (0-based).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoEdgeProbs {
    probs: BTreeMap<(usize, usize), f64>,
}

impl NoEdgeProbs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize, p: f64) {
        self.probs.insert((i.min(j), i.max(j)), p);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.probs.get(&(i.min(j), i.max(j))).copied()
    }

    fn checked(&self, i: usize, j: usize) -> Result<f64> {
        let p = self.get(i, j).ok_or(Error::MissingProbability { i, j })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { i, j, p });
        }
        Ok(p)
    }
}

impl FromIterator<((usize, usize), f64)> for NoEdgeProbs {
    fn from_iter<I: IntoIterator<Item = ((usize, usize), f64)>>(iter: I) -> Self {
        let mut out = Self::new();
        for ((i, j), p) in iter {
            out.insert(i, j, p);
        }
        out
    }
}

/// Right-hand side of the erased-edge identity
/// `1 - n^2/L_n + (1/L_n) sum_{i,j} P_n(E_ij = 0)` under the given
/// convention. Under [`IdentityConvention::ErasedEdges`] the diagonal is
/// not consulted.
pub fn erased_identity_rhs(
    seq: &DegreeSequence,
    probs: &NoEdgeProbs,
    convention: IdentityConvention,
) -> Result<f64> {
    let n = seq.len();
    let nf = n as f64;
    let l = seq.sum_degrees() as f64;
    let mut off_diag = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            off_diag += probs.checked(i, j)?;
        }
    }
    match convention {
        IdentityConvention::OrderedPairs => {
            let mut diag = 0.0;
            for i in 0..n {
                diag += probs.checked(i, i)?;
            }
            Ok(1.0 - nf * nf / l + (diag + 2.0 * off_diag) / l)
        }
        IdentityConvention::ErasedEdges => Ok(0.5 - nf * (nf - 1.0) / (2.0 * l) + off_diag / l),
    }
}

/// Upper bound on `P_n(E_ij = 0)`:
/// `prod_{k<d_i} (1 - d_j/(L_n - 2 d_i - 1)) + d_i^2 d_j / (L_n - 2 d_i)^2`,
/// clamped below at 0.
pub fn no_edge_upper_bound(d_i: u64, d_j: u64, l_n: u64) -> Result<f64> {
    if l_n <= 2 * d_i + 1 {
        return Err(Error::NoEdgeBoundUndefined { d_i, l_n });
    }
    let di = d_i as f64;
    let dj = d_j as f64;
    let base = 1.0 - dj / (l_n - 2 * d_i - 1) as f64;
    let product = base.powf(di);
    let gap = (l_n - 2 * d_i) as f64;
    Ok((product + di * di * dj / (gap * gap)).max(0.0))
}

/// `E[X]/t - 1 + E[exp(-X/t)]` for `X = D_1 D_2`, two independent draws of
/// `dist`. Requires `1 < gamma < 2` and `0 < t <=` [`TAUBERIAN_MAX_T`].
///
/// Evaluated as `sum_{a,b} p(a) p(b) g(ab/t)` with `g(x) = x - 1 + e^{-x}`.
/// Pairs with `ab <= 50 t` are summed term by term; beyond that `g(x)` is
/// replaced by `x - 1` and the remaining sums collapse to partial means and
/// tail probabilities of the degree law. The replacement drops less than
/// `e^{-50}` of each tail's probability mass.
pub fn tauberian_term(dist: &DegreeDistribution, t: f64) -> Result<f64> {
    let gamma = dist.gamma();
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(Error::TauberianGamma(gamma));
    }
    if !(t > 0.0 && t <= TAUBERIAN_MAX_T) {
        return Err(Error::TauberianHorizon {
            t,
            max: TAUBERIAN_MAX_T,
        });
    }
    let k_min = dist.k_min();
    let tails = dist.tail_sums();
    let mu = tails.mean();
    let cut = LINEAR_REGIME * t;
    // a > outer_max has a * k_min > cut, so its whole row is linear
    let outer_max = (cut / k_min as f64).floor() as u64;

    let table_end = outer_max.clamp(k_min, PMF_TABLE_MAX);
    let table: Vec<f64> = (k_min..=table_end).map(|k| dist.pmf(k)).collect();
    let pmf = |k: u64| -> f64 {
        if k <= table_end {
            table[(k - k_min) as usize]
        } else {
            dist.pmf(k)
        }
    };

    let mut total = Neumaier::default();
    for a in k_min..=outer_max {
        let af = a as f64;
        let inner_max = (cut / af).floor() as u64;
        let mut row = Neumaier::default();
        for b in k_min..=inner_max {
            row.add(pmf(b) * laplace_excess(af * b as f64 / t));
        }
        row.add(af / t * tails.partial_mean_above(inner_max) - dist.tail_prob(inner_max + 1));
        total.add(pmf(a) * row.sum());
    }
    if outer_max >= k_min {
        total.add(mu / t * tails.partial_mean_above(outer_max) - dist.tail_prob(outer_max + 1));
    } else {
        total.add(mu * mu / t - 1.0);
    }
    Ok(total.sum())
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Upper-bound exponent `rho(gamma)` for the erased fraction:
/// `1/gamma - 1` on `(1, 3/2]`, `4/gamma - 3` on `(3/2, 2]`, `-1` above 2.
pub fn theoretical_exponent(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 1.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    Ok(if gamma <= 1.5 {
        1.0 / gamma - 1.0
    } else if gamma <= 2.0 {
        4.0 / gamma - 3.0
    } else {
        -1.0
    })
}

/// The flat bound record for one degree sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub lemma1_bound: f64,
    pub pairwise_exp_sum: f64,
    /// Only available when exact no-edge probabilities were supplied.
    pub identity_value: Option<f64>,
    pub second_moment_ratio: f64,
    pub n: usize,
    #[serde(rename = "L_n")]
    pub l_n: u64,
}

pub fn bound_report(
    seq: &DegreeSequence,
    exact: Option<(&NoEdgeProbs, IdentityConvention)>,
) -> Result<BoundReport> {
    let identity_value = match exact {
        Some((probs, conv)) => Some(erased_identity_rhs(seq, probs, conv)?),
        None => None,
    };
    Ok(BoundReport {
        lemma1_bound: bound_lemma1(seq),
        pairwise_exp_sum: pairwise_exp_sum(seq, seq.sum_degrees() as f64)?,
        identity_value,
        second_moment_ratio: second_moment_ratio(seq),
        n: seq.len(),
        l_n: seq.sum_degrees(),
    })
}

/// One degree-sequence draw summarized for the stable-law diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltSample {
    pub n: u64,
    pub sum_degrees: f64,
    pub sum_squares: f64,
}

impl From<&DegreeSequence> for CltSample {
    fn from(seq: &DegreeSequence) -> Self {
        Self {
            n: seq.len() as u64,
            sum_degrees: seq.sum_degrees() as f64,
            sum_squares: seq.sum_squares() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltDiagnostic {
    pub quantile: f64,
    /// `(n, q-quantile of |L_n - mu n|)`
    pub deviation_quantiles: Vec<(u64, f64)>,
    /// `(n, q-quantile of sum D_i^2)`
    pub sum_squares_quantiles: Vec<(u64, f64)>,
    /// `None` when some quantile is zero and the log is undefined.
    pub deviation_fit: Option<LineFit>,
    pub sum_squares_fit: Option<LineFit>,
}

pub const CLT_QUANTILE: f64 = 0.9;
const CLT_MIN_LEVELS: usize = 4;

/// Log-log slopes of the upper quantiles of `|L_n - mu n|` and
/// `sum D_i^2` against `n`.
pub fn clt_scaling_diagnostic(samples: &[CltSample], mu: f64) -> Result<CltDiagnostic> {
    let mut by_n: BTreeMap<u64, Vec<&CltSample>> = BTreeMap::new();
    for s in samples {
        by_n.entry(s.n).or_default().push(s);
    }
    if by_n.len() < CLT_MIN_LEVELS {
        return Err(Error::TooFewLevels {
            needed: CLT_MIN_LEVELS,
            got: by_n.len(),
        });
    }
    let q = CLT_QUANTILE;
    let mut deviation_quantiles = Vec::new();
    let mut sum_squares_quantiles = Vec::new();
    for (&n, group) in &by_n {
        let dev: Vec<f64> = group.iter().map(|s| (s.sum_degrees - mu * n as f64).abs()).collect();
        let sq: Vec<f64> = group.iter().map(|s| s.sum_squares).collect();
        deviation_quantiles.push((n, stats::quantile(&dev, q).unwrap_or(0.0)));
        sum_squares_quantiles.push((n, stats::quantile(&sq, q).unwrap_or(0.0)));
    }
    let fit = |pts: &[(u64, f64)]| -> Option<LineFit> {
        if pts.iter().any(|&(_, v)| v.is_nan() || v <= 0.0) {
            return None;
        }
        let x: Vec<f64> = pts.iter().map(|&(n, _)| (n as f64).ln()).collect();
        let y: Vec<f64> = pts.iter().map(|&(_, v)| v.ln()).collect();
        stats::ols(&x, &y)
    };
    Ok(CltDiagnostic {
        quantile: q,
        deviation_fit: fit(&deviation_quantiles),
        sum_squares_fit: fit(&sum_squares_quantiles),
        deviation_quantiles,
        sum_squares_quantiles,
    })
}
