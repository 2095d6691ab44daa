use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::config::Caps;

pub(crate) fn check_regular_params(n: usize, d: usize) -> Result<()> {
    if d == 0 || d >= n.max(1) {
        return Err(Error::InvalidDegree { n, d });
    }
    if d * n % 2 == 1 {
        return Err(Error::ParityViolation { n, d });
    }
    Ok(())
}

/// Every `d`-regular labeled graph on `[n]`, in lexicographic edge-list order.
pub fn enumerate_regular(n: usize, d: usize, config: &Caps) -> Result<Vec<Graph>> {
    check_regular_params(n, d)?;
    config.check_oracle_n(n)?;
    let expected = count_labeled_regular(n, d);
    if expected > BigUint::from(config.oracle_max_support) {
        return Err(Error::CapExceeded { what: "oracle support size", value: usize::MAX, cap: config.oracle_max_support });
    }
    let mut out = Vec::new();
    for_each_regular(n, d, |rows| out.push(Graph::from_rows(rows.to_vec())));
    Ok(out)
}

/// Visits the bit-rows of every `d`-regular graph on `[n]` (n <= 64) in
/// lexicographic edge-list order. Parameters are not validated; invalid ones
/// visit nothing.
pub fn for_each_regular<F: FnMut(&[u64])>(n: usize, d: usize, mut visit: F) {
    let mut state = Backtrack { n, rows: vec![0; n], resid: vec![d; n], root: None };
    state.vertex(0, &mut visit);
}

/// Like [`for_each_regular`], restricted to graphs where vertex 0 is adjacent
/// to exactly `1..=d`. Every other choice of the neighbourhood of vertex 0 is
/// the image of this one under a permutation fixing 0, so any
/// relabeling-invariant tally over all of `G_d(n)` is `C(n-1, d)` times the
/// tally over this slice.
pub fn for_each_regular_rooted<F: FnMut(&[u64])>(n: usize, d: usize, mut visit: F) {
    let root = (1u64 << (d + 1)) - 2;
    let mut state = Backtrack { n, rows: vec![0; n], resid: vec![d; n], root: Some(root) };
    state.vertex(0, &mut visit);
}

struct Backtrack {
    n: usize,
    rows: Vec<u64>,
    resid: Vec<usize>,
    root: Option<u64>,
}

impl Backtrack {
    fn vertex<F: FnMut(&[u64])>(&mut self, i: usize, visit: &mut F) {
        if i == self.n {
            visit(&self.rows);
            return;
        }
        let need = self.resid[i];
        if need == 0 {
            self.vertex(i + 1, visit);
            return;
        }
        let mut cands = 0u64;
        for j in i + 1..self.n {
            if self.resid[j] > 0 {
                cands |= 1 << j;
            }
        }
        if i == 0 {
            if let Some(root) = self.root {
                if root & !cands != 0 || root.count_ones() as usize != need {
                    return;
                }
                cands = root;
            }
        }
        if (cands.count_ones() as usize) < need {
            return;
        }
        self.choose(i, cands, need, visit);
    }

    /// Picks `need` more neighbours of `i` from `cands`, smallest first.
    fn choose<F: FnMut(&[u64])>(&mut self, i: usize, cands: u64, need: usize, visit: &mut F) {
        if need == 0 {
            self.resid[i] = 0;
            if self.feasible_after(i) {
                self.vertex(i + 1, visit);
            }
            return;
        }
        let mut rest = cands;
        while rest.count_ones() as usize >= need {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            self.rows[i] |= 1 << j;
            self.rows[j] |= 1 << i;
            self.resid[j] -= 1;
            let saved = self.resid[i];
            self.choose(i, rest, need - 1, visit);
            self.resid[i] = saved;
            self.resid[j] += 1;
            self.rows[i] &= !(1 << j);
            self.rows[j] &= !(1 << i);
        }
    }

    /// Each later vertex must still find enough later partners.
    fn feasible_after(&self, i: usize) -> bool {
        let live = (i + 1..self.n).filter(|&j| self.resid[j] > 0).count();
        (i + 1..self.n).all(|j| self.resid[j] == 0 || self.resid[j] < live)
    }
}

/// Number of `d`-regular labeled graphs on `[n]`, by recursion over residual
/// degree multisets (no enumeration).
pub fn count_labeled_regular(n: usize, d: usize) -> BigUint {
    count_labeled_degree_sequence(&vec![d; n])
}

/// Number of labeled simple graphs with the given degree sequence.
///
/// The count for labeled vertices depends only on the multiset of degrees, so
/// removing the first vertex and distributing its edges over groups of equal
/// residual degree gives a recursion over sorted multisets.
pub fn count_labeled_degree_sequence(degrees: &[usize]) -> BigUint {
    let mut memo = HashMap::new();
    let mut key: Vec<usize> = degrees.iter().copied().filter(|&g| g > 0).collect();
    key.sort_unstable_by(|a, b| b.cmp(a));
    multiset_count(key, &mut memo)
}

fn multiset_count(degs: Vec<usize>, memo: &mut HashMap<Vec<usize>, BigUint>) -> BigUint {
    if degs.is_empty() {
        return BigUint::one();
    }
    if let Some(v) = memo.get(&degs) {
        return v.clone();
    }
    let r = degs[0];
    let rest = &degs[1..];
    // groups of equal residual degree, descending
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &g in rest {
        match groups.last_mut() {
            Some((val, cnt)) if *val == g => *cnt += 1,
            _ => groups.push((g, 1)),
        }
    }
    let mut total = BigUint::zero();
    let mut take = vec![0usize; groups.len()];
    distribute(&groups, 0, r, &mut take, &mut |take| {
        let mut ways = BigUint::one();
        let mut next = Vec::with_capacity(rest.len());
        for (&(val, cnt), &t) in groups.iter().zip(take.iter()) {
            ways *= binomial(cnt, t);
            next.extend(std::iter::repeat_n(val - 1, t));
            next.extend(std::iter::repeat_n(val, cnt - t));
        }
        next.retain(|&g| g > 0);
        next.sort_unstable_by(|a, b| b.cmp(a));
        total += ways * multiset_count(next, memo);
    });
    memo.insert(degs, total.clone());
    total
}

fn distribute(groups: &[(usize, usize)], idx: usize, left: usize, take: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if idx == groups.len() {
        if left == 0 {
            f(take);
        }
        return;
    }
    for t in 0..=left.min(groups[idx].1) {
        take[idx] = t;
        distribute(groups, idx + 1, left - t, take, f);
    }
    take[idx] = 0;
}

pub(crate) fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_vertices() {
        let cfg = Caps::default();
        let k4 = enumerate_regular(4, 3, &cfg).unwrap();
        assert_eq!(k4, vec![Graph::complete(4)]);
        let pms = enumerate_regular(4, 1, &cfg).unwrap();
        let texts: Vec<String> = pms.iter().map(|g| g.edge_list_string()).collect();
        assert_eq!(texts, vec!["1-2 3-4", "1-3 2-4", "1-4 2-3"]);
    }

    #[test]
    fn errors() {
        let cfg = Caps::default();
        assert_eq!(enumerate_regular(5, 3, &cfg), Err(Error::ParityViolation { n: 5, d: 3 }));
        assert!(matches!(enumerate_regular(14, 1, &cfg), Err(Error::CapExceeded { .. })));
        assert!(matches!(enumerate_regular(4, 4, &cfg), Err(Error::InvalidDegree { .. })));
    }

    #[test]
    fn output_is_sorted_and_regular() {
        let gs = enumerate_regular(7, 2, &Caps::default()).unwrap();
        assert_eq!(gs.len(), 465);
        assert!(gs.iter().all(|g| g.is_regular(2)));
        assert!(gs.windows(2).all(|w| w[0].edges() < w[1].edges()));
    }

    #[test]
    fn multiset_counts_match_known_values() {
        assert_eq!(count_labeled_regular(6, 3), BigUint::from(70u32));
        assert_eq!(count_labeled_regular(8, 3), BigUint::from(19355u32));
        assert_eq!(count_labeled_regular(8, 2), BigUint::from(3507u32));
        assert_eq!(count_labeled_regular(10, 3), BigUint::from(11180820u32));
        assert_eq!(count_labeled_regular(12, 3), BigUint::from(11555272575u64));
    }

    #[test]
    fn rooted_slice_scales_to_full_count() {
        for (n, d) in [(6, 3), (8, 3), (7, 2), (8, 5)] {
            let mut full = 0u64;
            for_each_regular(n, d, |_| full += 1);
            let mut rooted = 0u64;
            for_each_regular_rooted(n, d, |_| rooted += 1);
            let mult: u64 = binomial(n - 1, d).try_into().unwrap();
            assert_eq!(rooted * mult, full, "n={n} d={d}");
        }
    }
}
