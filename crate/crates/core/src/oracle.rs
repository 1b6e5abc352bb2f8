//! Exact expectations over all `(L_n - 1)!!` perfect matchings of a tiny
//! degree sequence.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::degree::DegreeSequence;
use crate::error::{Error, Result};
use crate::estimators::NoEdgeProbs;
use crate::graph::stub_owners;

/// Largest stub count the enumeration accepts (`13!! = 135135` matchings).
pub const MAX_ORACLE_STUBS: u64 = 14;

pub type Rational = Ratio<u64>;

/// Calls `visit` once per perfect matching of stubs `0..stubs`, in
/// canonical order: the lowest free stub is matched first, partners in
/// increasing order. Pairs are `(a, b)` with `a < b`.
pub fn for_each_matching<F: FnMut(&[(u32, u32)])>(stubs: usize, mut visit: F) {
    if stubs % 2 == 1 {
        return;
    }
    let mut used = vec![false; stubs];
    let mut pairs = Vec::with_capacity(stubs / 2);
    recurse(&mut used, &mut pairs, &mut visit);
}

fn recurse<F: FnMut(&[(u32, u32)])>(used: &mut [bool], pairs: &mut Vec<(u32, u32)>, visit: &mut F) {
    let Some(first) = used.iter().position(|u| !u) else {
        visit(pairs);
        return;
    };
    used[first] = true;
    for partner in first + 1..used.len() {
        if used[partner] {
            continue;
        }
        used[partner] = true;
        pairs.push((first as u32, partner as u32));
        recurse(used, pairs, visit);
        pairs.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// `(m - 1)!!` for even `m`.
pub fn matching_count(stubs: u64) -> u64 {
    (1..stubs).step_by(2).product::<u64>().max(1)
}

/// Exact erasure expectations under the uniform matching law.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub matching_count: u64,
    pub expected_self_loops: Rational,
    pub expected_excess: Rational,
    pub expected_erased_fraction: Rational,
    /// `P(E_ij = 0)` for `i <= j`, 0-based. The diagonal is the probability
    /// of no self-loop at `i`.
    pub no_edge_prob: BTreeMap<(usize, usize), Rational>,
}

impl ExactResult {
    pub fn no_edge_probs(&self) -> NoEdgeProbs {
        self.no_edge_prob
            .iter()
            .map(|(&k, r)| (k, to_f64(r)))
            .collect()
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `"p/q"`, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

struct AsFraction<'a>(&'a Rational);

impl Serialize for AsFraction<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(self.0))
    }
}

struct PairMap<'a>(&'a BTreeMap<(usize, usize), Rational>);

impl Serialize for PairMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (&(i, j), r) in self.0 {
            m.serialize_entry(&format!("{},{}", i + 1, j + 1), &AsFraction(r))?;
        }
        m.end()
    }
}

/// Rationals as `"p/q"` strings; pair keys as 1-based `"i,j"`.
impl Serialize for ExactResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ExactResult", 5)?;
        st.serialize_field("matching_count", &self.matching_count)?;
        st.serialize_field("expected_self_loops", &AsFraction(&self.expected_self_loops))?;
        st.serialize_field("expected_excess", &AsFraction(&self.expected_excess))?;
        st.serialize_field(
            "expected_erased_fraction",
            &AsFraction(&self.expected_erased_fraction),
        )?;
        st.serialize_field("no_edge_prob", &PairMap(&self.no_edge_prob))?;
        st.end()
    }
}

pub fn check_size(seq: &DegreeSequence) -> Result<()> {
    if seq.sum_degrees() > MAX_ORACLE_STUBS {
        return Err(Error::OracleLimit {
            stubs: seq.sum_degrees(),
            limit: MAX_ORACLE_STUBS,
        });
    }
    Ok(())
}

/// Enumerates every matching of `seq` and returns exact expectations.
pub fn enumerate_exact(seq: &DegreeSequence) -> Result<ExactResult> {
    check_size(seq)?;
    let n = seq.len();
    let stubs = seq.sum_degrees() as usize;
    let owner = stub_owners(seq);

    let mut count = 0u64;
    let mut loops_total = 0u64;
    let mut excess_total = 0u64;
    // matchings in which pair (i, j), i <= j, has no edge
    let mut empty = vec![0u64; n * n];
    let mut mult = vec![0u64; n * n];
    for_each_matching(stubs, |pairs| {
        mult.iter_mut().for_each(|m| *m = 0);
        for &(a, b) in pairs {
            let (i, j) = (owner[a as usize] as usize, owner[b as usize] as usize);
            let (i, j) = (i.min(j), i.max(j));
            mult[i * n + j] += 1;
        }
        count += 1;
        for i in 0..n {
            loops_total += mult[i * n + i];
            for j in i..n {
                let m = mult[i * n + j];
                if m == 0 {
                    empty[i * n + j] += 1;
                } else if j > i {
                    excess_total += m - 1;
                }
            }
        }
    });
    debug_assert_eq!(count, matching_count(stubs as u64));

    let mut no_edge_prob = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            no_edge_prob.insert((i, j), Rational::new(empty[i * n + j], count));
        }
    }
    Ok(ExactResult {
        matching_count: count,
        expected_self_loops: Rational::new(loops_total, count),
        expected_excess: Rational::new(excess_total, count),
        expected_erased_fraction: Rational::new(loops_total + excess_total, count * stubs as u64),
        no_edge_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(d: &[u64]) -> DegreeSequence {
        DegreeSequence::from_degrees(d.to_vec()).unwrap()
    }

    fn r(p: u64, q: u64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn double_factorials() {
        assert_eq!(matching_count(2), 1);
        assert_eq!(matching_count(4), 3);
        assert_eq!(matching_count(8), 105);
        assert_eq!(matching_count(14), 135_135);
        let mut c = 0;
        for_each_matching(10, |_| c += 1);
        assert_eq!(c, 945);
    }

    #[test]
    fn enumeration_is_canonical_and_distinct() {
        let mut seen = Vec::new();
        for_each_matching(6, |p| seen.push(p.to_vec()));
        assert_eq!(seen[0], vec![(0, 1), (2, 3), (4, 5)]);
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 15);
        assert_eq!(sorted, seen);
    }

    #[test]
    fn two_two() {
        let e = enumerate_exact(&seq(&[2, 2])).unwrap();
        assert_eq!(e.matching_count, 3);
        assert_eq!(e.expected_self_loops, r(2, 3));
        assert_eq!(e.expected_excess, r(2, 3));
        assert_eq!(e.expected_erased_fraction, r(1, 3));
        assert_eq!(e.no_edge_prob[&(0, 1)], r(1, 3));
        assert_eq!(e.no_edge_prob[&(0, 0)], r(2, 3));
    }

    #[test]
    fn one_one_and_two() {
        let e = enumerate_exact(&seq(&[1, 1])).unwrap();
        assert_eq!(e.matching_count, 1);
        assert_eq!(e.expected_self_loops, r(0, 1));
        assert_eq!(e.expected_excess, r(0, 1));
        assert_eq!(e.expected_erased_fraction, r(0, 1));

        let e = enumerate_exact(&seq(&[2])).unwrap();
        assert_eq!(e.matching_count, 1);
        assert_eq!(e.expected_self_loops, r(1, 1));
        assert_eq!(e.expected_erased_fraction, r(1, 2));
    }

    #[test]
    fn rejects_large_sequences() {
        let err = enumerate_exact(&seq(&[8, 8])).unwrap_err();
        assert!(matches!(err, Error::OracleLimit { stubs: 16, limit: 14 }));
        assert!(enumerate_exact(&seq(&[7, 7])).is_ok());
    }

    #[test]
    fn json_uses_fraction_strings() {
        let e = enumerate_exact(&seq(&[2, 2])).unwrap();
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["expected_erased_fraction"], "1/3");
        assert_eq!(v["matching_count"], 3);
        assert_eq!(v["no_edge_prob"]["1,2"], "1/3");
        assert_eq!(v["no_edge_prob"]["2,2"], "2/3");
        let zero = enumerate_exact(&seq(&[1, 1])).unwrap();
        assert_eq!(serde_json::to_value(&zero).unwrap()["expected_excess"], "0/1");
    }
}
