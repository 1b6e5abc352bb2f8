#![allow(dead_code)]

use erased_cm::graph::stub_owners;
use erased_cm::oracle::for_each_matching;
use erased_cm::DegreeSequence;

pub fn seq(d: &[u64]) -> DegreeSequence {
    DegreeSequence::from_degrees(d.to_vec()).unwrap()
}

fn partitions(rem: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if rem == 0 {
        out.push(cur.clone());
        return;
    }
    for d in (1..=max.min(rem)).rev() {
        cur.push(d);
        partitions(rem - d, d, cur, out);
        cur.pop();
    }
}

/// Every non-increasing positive degree sequence with even stub count
/// `<= max_stubs`, plus a few unsorted orderings.
pub fn catalog(max_stubs: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for l in (2..=max_stubs).step_by(2) {
        partitions(l, l, &mut Vec::new(), &mut out);
    }
    for extra in [vec![1, 3, 2], vec![2, 3, 3], vec![1, 1, 4, 2]] {
        if extra.iter().sum::<u64>() <= max_stubs {
            out.push(extra);
        }
    }
    out
}

/// Symmetric edge-count matrix of one matching; the diagonal holds stub
/// counts, so a self-loop adds 2 to `E_ii`.
pub fn edge_matrix(owner: &[u32], n: usize, pairs: &[(u32, u32)]) -> Vec<u64> {
    let mut e = vec![0u64; n * n];
    for &(a, b) in pairs {
        let (i, j) = (owner[a as usize] as usize, owner[b as usize] as usize);
        if i == j {
            e[i * n + i] += 2;
        } else {
            e[i * n + j] += 1;
            e[j * n + i] += 1;
        }
    }
    e
}

/// Average of `f` over all matchings, computed independently of the oracle
/// module's bookkeeping.
pub fn brute_average(s: &DegreeSequence, mut f: impl FnMut(&[u64]) -> f64) -> f64 {
    let owner = stub_owners(s);
    let n = s.len();
    let mut total = 0.0;
    let mut count = 0u64;
    for_each_matching(owner.len(), |pairs| {
        total += f(&edge_matrix(&owner, n, pairs));
        count += 1;
    });
    total / count as f64
}
