//! Canonical forms of unlabeled skeletons.
//!
//! A graph is split into connected components, each component is labeled by
//! the lexicographically least adjacency rows reachable through
//! partition refinement and individualization, and the components are
//! concatenated in order of their canonical rows. Components denser than half
//! are labeled through their complement, which keeps the search tree small for
//! the near-complete graphs that appear as unions of many matchings.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, DENSE_CAP};

/// Canonical encoding of an isomorphism class: the vertex count followed by
/// the upper-triangle adjacency bits of the canonically relabeled graph.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalKey {
    bytes: Vec<u8>,
}

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// The canonical representative encoded by this key.
    pub fn to_graph(&self) -> Graph {
        let n = self.bytes[0] as usize;
        let mut rows = vec![0u64; n];
        let mut idx = 0;
        for u in 0..n {
            for v in u + 1..n {
                if self.bytes[1 + idx / 8] >> (idx % 8) & 1 == 1 {
                    rows[u] |= 1 << v;
                    rows[v] |= 1 << u;
                }
                idx += 1;
            }
        }
        Graph::from_rows(rows)
    }

    fn from_rows(rows: &[u64]) -> Self {
        let n = rows.len();
        let pairs = n * n.saturating_sub(1) / 2;
        let mut bytes = vec![0u8; 1 + pairs.div_ceil(8)];
        bytes[0] = n as u8;
        let mut idx = 0;
        for (u, row) in rows.iter().enumerate() {
            for v in u + 1..n {
                if row >> v & 1 == 1 {
                    bytes[1 + idx / 8] |= 1 << (idx % 8);
                }
                idx += 1;
            }
        }
        CanonicalKey { bytes }
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.to_hex())
    }
}

/// Canonical key of `g`: equal for two graphs iff they are isomorphic.
pub fn canonical_key(g: &Graph) -> Result<CanonicalKey> {
    Ok(canonical_form(g)?.0)
}

/// Canonical key together with the labeling that realizes it:
/// `labeling[v]` is the canonical position of vertex `v`.
pub fn canonical_form(g: &Graph) -> Result<(CanonicalKey, Vec<usize>)> {
    let rows = g.rows().ok_or(Error::CapExceeded { what: "canonical form vertex count", value: g.n(), cap: DENSE_CAP })?;
    let order = canonical_order(rows);
    let mut labeling = vec![0; rows.len()];
    for (pos, &v) in order.iter().enumerate() {
        labeling[v] = pos;
    }
    let relabeled = permute_rows(rows, &labeling);
    Ok((CanonicalKey::from_rows(&relabeled), labeling))
}

/// Canonical representative of the isomorphism class of `g`.
pub fn canonical_graph(g: &Graph) -> Result<Graph> {
    Ok(canonical_key(g)?.to_graph())
}

fn permute_rows(rows: &[u64], labeling: &[usize]) -> Vec<u64> {
    let mut out = vec![0u64; rows.len()];
    for (u, &r) in rows.iter().enumerate() {
        let mut bits = r;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            out[labeling[u]] |= 1 << labeling[v];
        }
    }
    out
}

/// Rows of the subgraph induced by `vertices`, in the given order.
fn induced(rows: &[u64], vertices: &[usize]) -> Vec<u64> {
    let mut out = vec![0u64; vertices.len()];
    for (i, &u) in vertices.iter().enumerate() {
        for (j, &v) in vertices.iter().enumerate() {
            if rows[u] >> v & 1 == 1 {
                out[i] |= 1 << j;
            }
        }
    }
    out
}

fn components(rows: &[u64]) -> Vec<Vec<usize>> {
    let n = rows.len();
    let mut seen = 0u64;
    let mut out = Vec::new();
    for s in 0..n {
        if seen >> s & 1 == 1 {
            continue;
        }
        let mut comp = 1u64 << s;
        let mut frontier = comp;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = rows[v] & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        seen |= comp;
        out.push((0..n).filter(|&v| comp >> v & 1 == 1).collect());
    }
    out
}

/// Local vertices of `rows` listed in canonical order.
fn canonical_order(rows: &[u64]) -> Vec<usize> {
    let n = rows.len();
    if n <= 1 {
        return (0..n).collect();
    }
    let comps = components(rows);
    if comps.len() > 1 {
        let mut labeled: Vec<(Vec<u64>, Vec<usize>)> = comps
            .into_iter()
            .map(|comp| {
                let sub = induced(rows, &comp);
                let order: Vec<usize> = canonical_order(&sub).into_iter().map(|i| comp[i]).collect();
                (induced(rows, &order), order)
            })
            .collect();
        labeled.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        return labeled.into_iter().flat_map(|(_, order)| order).collect();
    }
    let edges: usize = rows.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2;
    if 2 * edges > n * (n - 1) / 2 {
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let comp: Vec<u64> = rows.iter().enumerate().map(|(u, r)| !r & full & !(1 << u)).collect();
        return canonical_order(&comp);
    }
    search_order(rows)
}

/// Ordered partition refined to equitability: cells are split by the vector
/// of neighbour counts into every current cell, sub-cells sorted by that
/// vector. The result depends only on the input partition, not on labels.
fn refine(rows: &[u64], mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    loop {
        let masks: Vec<u64> = cells.iter().map(|c| c.iter().fold(0u64, |m, &v| m | 1 << v)).collect();
        let mut next: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut keyed: Vec<(Vec<u32>, usize)> = cell
                .iter()
                .map(|&v| (masks.iter().map(|m| (rows[v] & m).count_ones()).collect(), v))
                .collect();
            keyed.sort();
            let mut start = 0;
            for i in 1..=keyed.len() {
                if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                    next.push(keyed[start..i].iter().map(|(_, v)| *v).collect());
                    start = i;
                }
            }
        }
        if next.len() == cells.len() {
            return next;
        }
        cells = next;
    }
}

fn search_order(rows: &[u64]) -> Vec<usize> {
    let n = rows.len();
    let mut best: Option<(Vec<u64>, Vec<usize>)> = None;
    let mut by_degree: Vec<(u32, usize)> = (0..n).map(|v| (rows[v].count_ones(), v)).collect();
    by_degree.sort();
    let mut initial: Vec<Vec<usize>> = Vec::new();
    for (i, &(deg, v)) in by_degree.iter().enumerate() {
        if i == 0 || by_degree[i - 1].0 != deg {
            initial.push(Vec::new());
        }
        initial.last_mut().unwrap().push(v);
    }
    descend(rows, initial, &mut best);
    best.expect("search reaches at least one leaf").1
}

fn descend(rows: &[u64], cells: Vec<Vec<usize>>, best: &mut Option<(Vec<u64>, Vec<usize>)>) {
    let cells = refine(rows, cells);
    if cells.len() == rows.len() {
        let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
        let mut labeling = vec![0; rows.len()];
        for (pos, &v) in order.iter().enumerate() {
            labeling[v] = pos;
        }
        let leaf = permute_rows(rows, &labeling);
        let better = match best {
            None => true,
            Some((b, _)) => leaf.cmp(b) == Ordering::Less,
        };
        if better {
            *best = Some((leaf, order));
        }
        return;
    }
    let target = (0..cells.len())
        .filter(|&i| cells[i].len() > 1)
        .min_by_key(|&i| (cells[i].len(), i))
        .expect("non-discrete partition has a non-singleton cell");
    for &v in &cells[target] {
        let mut child = Vec::with_capacity(cells.len() + 1);
        child.extend_from_slice(&cells[..target]);
        child.push(vec![v]);
        child.push(cells[target].iter().copied().filter(|&w| w != v).collect());
        child.extend_from_slice(&cells[target + 1..]);
        descend(rows, child, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::invert_permutation;

    fn from1(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, &edges.iter().map(|&(u, v)| (u - 1, v - 1)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn relabeled_cycle_has_same_key() {
        let a = from1(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        let b = from1(4, &[(1, 3), (3, 2), (2, 4), (4, 1)]);
        assert_eq!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
    }

    #[test]
    fn k4_differs_from_paw() {
        let k4 = Graph::complete(4);
        let paw = from1(4, &[(1, 2), (1, 3), (1, 4), (2, 3)]);
        assert_ne!(canonical_key(&k4).unwrap(), canonical_key(&paw).unwrap());
    }

    #[test]
    fn key_decodes_to_isomorphic_graph() {
        let g = from1(7, &[(1, 5), (5, 3), (3, 7), (2, 4), (4, 6)]);
        let (key, labeling) = canonical_form(&g).unwrap();
        let rep = key.to_graph();
        assert_eq!(g.relabel(&labeling).unwrap(), rep);
        assert_eq!(rep.relabel(&invert_permutation(&labeling)).unwrap(), g);
        assert_eq!(canonical_key(&rep).unwrap(), key);
    }

    #[test]
    fn empty_and_complete_graphs() {
        for n in 0..8 {
            let e = canonical_key(&Graph::empty(n)).unwrap();
            let k = canonical_key(&Graph::complete(n)).unwrap();
            assert_eq!(e.to_graph(), Graph::empty(n));
            assert_eq!(k.to_graph(), Graph::complete(n));
        }
    }

    #[test]
    fn sparse_graphs_are_refused() {
        let g = Graph::empty(65);
        assert!(matches!(canonical_key(&g), Err(Error::CapExceeded { .. })));
    }
}
