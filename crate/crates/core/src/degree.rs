//! Discrete Pareto degree law and even-sum degree sequences.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest degree the sampler will emit. Inverse-transform values beyond
/// this are rejected and the uniform is redrawn.
pub const MAX_DEGREE: u64 = 1 << 53;

/// Index from which tail sums switch from explicit summation to the
/// Euler-Maclaurin remainder.
const EM_SPLIT: u64 = 10_000;

/// Regularly varying degree law with `P(X >= k) = (k_min / k)^gamma` for
/// integers `k >= k_min`.
///
/// This is the constant slowly-varying choice `L(k) = k_min^gamma`, realized
/// by `floor(k_min * U^(-1/gamma))` for `U` uniform on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeDistribution {
    gamma: f64,
    k_min: u64,
}

impl DegreeDistribution {
    pub fn new(gamma: f64, k_min: u64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 1.0 {
            return Err(Error::InvalidGamma(gamma));
        }
        if k_min == 0 {
            return Err(Error::InvalidMinDegree(k_min));
        }
        Ok(Self { gamma, k_min })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_min(&self) -> u64 {
        self.k_min
    }

    /// `P(X >= k)`.
    pub fn tail_prob(&self, k: u64) -> f64 {
        if k <= self.k_min {
            1.0
        } else {
            (self.k_min as f64 / k as f64).powf(self.gamma)
        }
    }

    /// `P(X = k)`, evaluated as `T(k) * (1 - (k / (k+1))^gamma)` so that the
    /// difference does not cancel for large `k`.
    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.k_min {
            return 0.0;
        }
        let kf = k as f64;
        let ratio = -(-self.gamma * (1.0 / kf).ln_1p()).exp_m1();
        self.tail_prob(k) * ratio
    }

    /// `sum_{j >= k} P(X >= j)`.
    pub fn tail_sum_from(&self, k: u64) -> f64 {
        let k = k.max(1);
        if k < self.k_min {
            return (self.k_min - k) as f64 + self.tail_sum_from(self.k_min);
        }
        let split = k.max(EM_SPLIT);
        // smallest terms first
        let mut head = 0.0;
        for j in (k..split).rev() {
            head += self.tail_prob(j);
        }
        head + self.euler_maclaurin_tail(split)
    }

    /// `sum_{j >= k} c j^(-gamma)` with `c = k_min^gamma`, for `k >= k_min`.
    fn euler_maclaurin_tail(&self, k: u64) -> f64 {
        let g = self.gamma;
        let x = k as f64;
        let f = self.tail_prob(k);
        let integral = f * x / (g - 1.0);
        let d1 = g * f / x;
        let d3 = g * (g + 1.0) * (g + 2.0) * f / (x * x * x);
        let d5 = g * (g + 1.0) * (g + 2.0) * (g + 3.0) * (g + 4.0) * f / x.powi(5);
        integral + 0.5 * f + d1 / 12.0 - d3 / 720.0 + d5 / 30240.0
    }

    /// `E[X] = sum_{k >= 1} P(X >= k)`.
    pub fn mean(&self) -> f64 {
        self.tail_sum_from(1)
    }

    /// `E[X; X > k]`, the partial mean above `k`.
    pub fn partial_mean_above(&self, k: u64) -> f64 {
        k as f64 * self.tail_prob(k + 1) + self.tail_sum_from(k + 1)
    }

    /// Precomputed tail sums for repeated `O(1)` queries.
    pub fn tail_sums(&self) -> TailSums {
        let start = self.k_min;
        let len = EM_SPLIT.saturating_sub(start) as usize;
        let mut suffix = vec![0.0; len + 1];
        suffix[len] = self.euler_maclaurin_tail(EM_SPLIT.max(self.k_min));
        for idx in (0..len).rev() {
            suffix[idx] = suffix[idx + 1] + self.tail_prob(start + idx as u64);
        }
        TailSums {
            dist: *self,
            start,
            suffix,
        }
    }

    /// Inverse transform `floor(k_min * u^(-1/gamma))`; `None` when the value
    /// exceeds [`MAX_DEGREE`] or `u` is outside `(0, 1]`.
    pub fn degree_from_uniform(&self, u: f64) -> Option<u64> {
        if !(u > 0.0 && u <= 1.0) {
            return None;
        }
        let x = self.k_min as f64 * u.powf(-1.0 / self.gamma);
        if x.is_finite() && x < MAX_DEGREE as f64 {
            Some((x.floor() as u64).max(self.k_min))
        } else {
            None
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        loop {
            // random::<f64>() is in [0, 1); flip to (0, 1]
            let u = 1.0 - rng.random::<f64>();
            if let Some(d) = self.degree_from_uniform(u) {
                return d;
            }
        }
    }
}

/// Cached `sum_{j >= k} P(X >= j)` for `k` up to the Euler-Maclaurin split.
#[derive(Debug, Clone)]
pub struct TailSums {
    dist: DegreeDistribution,
    start: u64,
    /// `suffix[i] = sum_{j >= start + i} P(X >= j)`
    suffix: Vec<f64>,
}

impl TailSums {
    /// `sum_{j >= k} P(X >= j)`.
    pub fn from(&self, k: u64) -> f64 {
        let k = k.max(1);
        if k < self.start {
            return (self.start - k) as f64 + self.suffix[0];
        }
        let idx = (k - self.start) as usize;
        match self.suffix.get(idx) {
            Some(&v) => v,
            None => self.dist.euler_maclaurin_tail(k),
        }
    }

    /// `E[X; X > k]`.
    pub fn partial_mean_above(&self, k: u64) -> f64 {
        k as f64 * self.dist.tail_prob(k + 1) + self.from(k + 1)
    }

    pub fn mean(&self) -> f64 {
        self.from(1)
    }
}

/// Degrees `D_1..D_n` with an even total. Sums are cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u64>,
    sum_degrees: u64,
    sum_squares: u128,
    evenized: bool,
}

impl DegreeSequence {
    /// Wraps an explicit degree list. The total must already be even.
    pub fn from_degrees(degrees: Vec<u64>) -> Result<Self> {
        let seq = Self::build(degrees, false)?;
        if seq.sum_degrees % 2 == 1 {
            return Err(Error::OddStubCount(seq.sum_degrees));
        }
        Ok(seq)
    }

    /// Takes raw i.i.d. draws and adds one stub to the last node if the
    /// total is odd.
    pub fn from_draws(mut draws: Vec<u64>) -> Result<Self> {
        let odd = draws.iter().fold(0u64, |acc, &d| acc ^ (d & 1)) == 1;
        if odd {
            if let Some(last) = draws.last_mut() {
                *last += 1;
            }
        }
        Self::build(draws, odd)
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, dist: &DegreeDistribution, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let draws = (0..n).map(|_| dist.sample(rng)).collect();
        Self::from_draws(draws)
    }

    fn build(degrees: Vec<u64>, evenized: bool) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(node) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::ZeroDegree { node });
        }
        let sum_degrees = degrees.iter().sum();
        let sum_squares = degrees.iter().map(|&d| u128::from(d) * u128::from(d)).sum();
        Ok(Self {
            degrees,
            sum_degrees,
            sum_squares,
            evenized,
        })
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// `L_n`, the number of stubs.
    pub fn sum_degrees(&self) -> u64 {
        self.sum_degrees
    }

    pub fn sum_squares(&self) -> u128 {
        self.sum_squares
    }

    pub fn is_evenized(&self) -> bool {
        self.evenized
    }

    pub fn max_degree(&self) -> u64 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Distinct degree values with their multiplicities, ascending.
    pub fn histogram(&self) -> Vec<(u64, u64)> {
        let mut sorted = self.degrees.clone();
        sorted.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for d in sorted {
            match out.last_mut() {
                Some((v, c)) if *v == d => *c += 1,
                _ => out.push((d, 1)),
            }
        }
        out
    }

    /// One decimal degree per line, optionally preceded by a `# ...` header.
    pub fn write_text<W: Write>(&self, mut w: W, header: Option<&SequenceHeader>) -> std::io::Result<()> {
        if let Some(h) = header {
            writeln!(w, "{h}")?;
        }
        for d in &self.degrees {
            writeln!(w, "{d}")?;
        }
        w.flush()
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<(Self, Option<SequenceHeader>)> {
        let mut header = None;
        let mut degrees = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if idx == 0 {
                    header = Some(SequenceHeader::parse(rest).map_err(|msg| Error::Parse { line: 1, msg })?);
                }
                continue;
            }
            let d = trimmed.parse::<u64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad degree {trimmed:?}: {e}"),
            })?;
            degrees.push(d);
        }
        Ok((Self::from_degrees(degrees)?, header))
    }
}

/// Provenance line of a degree-sequence file:
/// `# n=<n> gamma=<gamma> k_min=<k> seed=<seed>`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceHeader {
    pub n: usize,
    pub gamma: f64,
    pub k_min: u64,
    pub seed: u64,
}

impl SequenceHeader {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        let mut n = None;
        let mut gamma = None;
        let mut k_min = None;
        let mut seed = None;
        for tok in s.split_whitespace() {
            let (key, value) = tok.split_once('=').ok_or_else(|| format!("malformed header token {tok:?}"))?;
            let bad = |e: &dyn fmt::Display| format!("bad value for {key}: {e}");
            match key {
                "n" => n = Some(value.parse().map_err(|e| bad(&e))?),
                "gamma" => gamma = Some(value.parse().map_err(|e| bad(&e))?),
                "k_min" => k_min = Some(value.parse().map_err(|e| bad(&e))?),
                "seed" => seed = Some(value.parse().map_err(|e| bad(&e))?),
                _ => return Err(format!("unknown header key {key:?}")),
            }
        }
        match (n, gamma, k_min, seed) {
            (Some(n), Some(gamma), Some(k_min), Some(seed)) => Ok(Self { n, gamma, k_min, seed }),
            _ => Err("header must carry n, gamma, k_min and seed".into()),
        }
    }
}

impl fmt::Display for SequenceHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# n={} gamma={} k_min={} seed={}",
            self.n, self.gamma, self.k_min, self.seed
        )
    }
}
