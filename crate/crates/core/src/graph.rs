//! Configuration-model stub pairing and the erasure step.
//!
//! Node indices are 0-based in memory and 1-based in every text format.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, DegreeSequence};
use crate::error::{Error, Result};

/// Permutes `slots` so that `(slots[2k], slots[2k + 1])` is a uniformly
/// random perfect matching of the original entries.
///
/// Sequential scheme: the first unmatched slot is paired with a uniformly
/// chosen slot among the remaining unmatched ones.
pub fn shuffle_into_pairs<T, R: Rng + ?Sized>(slots: &mut [T], rng: &mut R) {
    let len = slots.len();
    let mut p = 0;
    while p + 1 < len {
        let r = rng.random_range(p + 1..len);
        slots.swap(p + 1, r);
        p += 2;
    }
}

/// Node id of every stub, node `i` repeated `D_i` times.
pub fn stub_owners(seq: &DegreeSequence) -> Vec<u32> {
    let mut stubs = Vec::with_capacity(seq.sum_degrees() as usize);
    for (i, &d) in seq.degrees().iter().enumerate() {
        stubs.extend(std::iter::repeat_n(i as u32, d as usize));
    }
    stubs
}

/// Uniform perfect matching on stubs `0..stubs`, as `(a, b)` with `a < b`,
/// sorted. Consumes the random stream exactly like [`pair_stubs`] on a
/// sequence with the same stub count.
pub fn sample_matching<R: Rng + ?Sized>(stubs: usize, rng: &mut R) -> Vec<(u32, u32)> {
    let mut slots: Vec<u32> = (0..stubs as u32).collect();
    shuffle_into_pairs(&mut slots, rng);
    let mut pairs: Vec<(u32, u32)> = slots
        .chunks_exact(2)
        .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Configuration-model pairing of all stubs of `seq`.
pub fn pair_stubs<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<Multigraph> {
    if seq.sum_degrees() % 2 == 1 {
        return Err(Error::OddStubCount(seq.sum_degrees()));
    }
    let mut stubs = stub_owners(seq);
    shuffle_into_pairs(&mut stubs, rng);
    Ok(Multigraph::from_endpoints(
        seq.len(),
        stubs.chunks_exact(2).map(|c| (c[0], c[1])),
    ))
}

fn run_lengths<T: PartialEq + Copy>(sorted: &[T]) -> Vec<(T, u64)> {
    let mut out: Vec<(T, u64)> = Vec::new();
    for &x in sorted {
        match out.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// Outcome of stub pairing. Multiplicities are stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    n: usize,
    /// `(i, j, E_ij)` with `i < j`, sorted, `E_ij > 0`.
    edges: Vec<(u32, u32, u64)>,
    /// `(i, loops at i)`, sorted, count > 0.
    self_loops: Vec<(u32, u64)>,
}

impl Multigraph {
    /// Builds from a list of edge endpoints; `(i, i)` is a self-loop.
    pub fn from_endpoints<I: IntoIterator<Item = (u32, u32)>>(n: usize, endpoints: I) -> Self {
        let mut keys = Vec::new();
        let mut loops = Vec::new();
        for (a, b) in endpoints {
            debug_assert!((a as usize) < n && (b as usize) < n);
            if a == b {
                loops.push(a);
            } else {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                keys.push((u64::from(lo) << 32) | u64::from(hi));
            }
        }
        keys.sort_unstable();
        loops.sort_unstable();
        let edges = run_lengths(&keys)
            .into_iter()
            .map(|(k, c)| ((k >> 32) as u32, k as u32, c))
            .collect();
        Self {
            n,
            edges,
            self_loops: run_lengths(&loops),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn multiplicity(&self, i: u32, j: u32) -> u64 {
        if i == j {
            return self.self_loops_at(i);
        }
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|&(a, b, _)| (a, b).cmp(&key))
            .map(|pos| self.edges[pos].2)
            .unwrap_or(0)
    }

    pub fn self_loops_at(&self, i: u32) -> u64 {
        self.self_loops
            .binary_search_by(|&(a, _)| a.cmp(&i))
            .map(|pos| self.self_loops[pos].1)
            .unwrap_or(0)
    }

    /// Non-loop pairs `(i, j, E_ij)`, `i < j`.
    pub fn pair_multiplicities(&self) -> &[(u32, u32, u64)] {
        &self.edges
    }

    pub fn self_loops(&self) -> &[(u32, u64)] {
        &self.self_loops
    }

    pub fn edge_count(&self) -> u64 {
        self.edges.iter().map(|e| e.2).sum::<u64>() + self.self_loops.iter().map(|l| l.1).sum::<u64>()
    }

    /// Twice the edge count, i.e. `L_n`.
    pub fn stub_count(&self) -> u64 {
        2 * self.edge_count()
    }

    /// Degrees with each self-loop counted twice.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for &(i, j, m) in &self.edges {
            deg[i as usize] += m;
            deg[j as usize] += m;
        }
        for &(i, c) in &self.self_loops {
            deg[i as usize] += 2 * c;
        }
        deg
    }

    pub fn is_simple(&self) -> bool {
        self.self_loops.is_empty() && self.edges.iter().all(|e| e.2 == 1)
    }

    /// Lines `i j multiplicity`, 1-based; self-loops as `i i count`. Rows are
    /// ordered by `(i, j)`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut loops = self.self_loops.iter().peekable();
        for &(i, j, m) in &self.edges {
            while let Some(&&(l, c)) = loops.peek() {
                if l > i {
                    break;
                }
                writeln!(w, "{} {} {}", l + 1, l + 1, c)?;
                loops.next();
            }
            writeln!(w, "{} {} {}", i + 1, j + 1, m)?;
        }
        for &(l, c) in loops {
            writeln!(w, "{} {} {}", l + 1, l + 1, c)?;
        }
        w.flush()
    }

    /// Parses an edge list; `n` is the node count (isolated nodes do not
    /// appear in the file).
    pub fn read_edge_list<R: BufRead>(r: R, n: usize) -> Result<Self> {
        let mut endpoints = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: idx + 1, msg };
            let fields: Vec<u64> = t
                .split_whitespace()
                .map(|f| f.parse::<u64>().map_err(|e| bad(format!("{f:?}: {e}"))))
                .collect::<Result<_>>()?;
            let [i, j, m] = fields[..] else {
                return Err(bad(format!("expected `i j multiplicity`, got {t:?}")));
            };
            if i == 0 || j == 0 || i as usize > n || j as usize > n {
                return Err(bad(format!("node index out of range 1..={n}")));
            }
            for _ in 0..m {
                endpoints.push((i as u32 - 1, j as u32 - 1));
            }
        }
        Ok(Self::from_endpoints(n, endpoints))
    }
}

/// The graph kept by the erasure step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl SimpleGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Sorted pairs `(i, j)`, `i < j`.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for &(i, j) in &self.edges {
            deg[i as usize] += 1;
            deg[j as usize] += 1;
        }
        deg
    }

    /// Same format as [`Multigraph::write_edge_list`], every multiplicity 1.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for &(i, j) in &self.edges {
            writeln!(w, "{} {} 1", i + 1, j + 1)?;
        }
        w.flush()
    }
}

/// Erasure accounting.
///
/// A self-loop consumes two stubs and counts as one erased edge; a pair with
/// `E_ij > 0` contributes `E_ij - 1` to the excess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureStats {
    pub self_loop_count: u64,
    pub excess_multiplicity: u64,
    pub total_erased: u64,
    pub erased_fraction: f64,
}

/// Drops self-loops and collapses multi-edges.
pub fn erase(g: &Multigraph) -> (SimpleGraph, ErasureStats) {
    let edges: Vec<(u32, u32)> = g.edges.iter().map(|&(i, j, _)| (i, j)).collect();
    let self_loop_count: u64 = g.self_loops.iter().map(|l| l.1).sum();
    let excess_multiplicity: u64 = g.edges.iter().map(|e| e.2 - 1).sum();
    let total_erased = self_loop_count + excess_multiplicity;
    let stubs = g.stub_count();
    let erased_fraction = if stubs == 0 {
        0.0
    } else {
        total_erased as f64 / stubs as f64
    };
    (
        SimpleGraph { n: g.n, edges },
        ErasureStats {
            self_loop_count,
            excess_multiplicity,
            total_erased,
            erased_fraction,
        },
    )
}

/// `sup_k |#{i : deg_i >= k} / n - P(X >= k)|`.
pub fn tail_distance(degrees: &[u64], dist: &DegreeDistribution) -> f64 {
    if degrees.is_empty() {
        return 0.0;
    }
    let n = degrees.len() as f64;
    let max = degrees.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 2];
    for &d in degrees {
        counts[d as usize] += 1;
    }
    // at_least[k] = #{deg >= k}, walked from the top
    let mut at_least = 0u64;
    let mut sup: f64 = 0.0;
    for k in (1..=max + 1).rev() {
        at_least += counts[k];
        let gap = (at_least as f64 / n - dist.tail_prob(k as u64)).abs();
        sup = sup.max(gap);
    }
    sup
}

/// Kolmogorov-Smirnov style distance between the degree tail of `g` and
/// the law `dist`.
pub fn empirical_degree_distance(g: &SimpleGraph, dist: &DegreeDistribution) -> f64 {
    tail_distance(&g.degrees(), dist)
}
