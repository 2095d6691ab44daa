//! Labeled simple graphs on `[n]`.
//!
//! Vertices are 0-based internally. The text format (see [`Graph::to_text`])
//! is 1-based.
//!
//! Up to [`DENSE_CAP`] vertices the adjacency is kept as one `u64` bit-row per
//! vertex, which gives O(1) edge tests for the enumeration and counting code.
//! Larger graphs (overlay experiments run at n in the thousands) keep sorted
//! neighbour lists instead. The representation is a function of `n` only, so
//! structural equality is graph equality.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest vertex count stored as bit-rows.
pub const DENSE_CAP: usize = 64;
/// Largest vertex count whose edge set fits an [`EdgeSet`].
pub const EDGE_SET_CAP: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Adjacency {
    Dense(Vec<u64>),
    Sparse(Vec<Vec<u32>>),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Adjacency,
}

/// Iterator over the neighbours of a vertex, in increasing order.
pub enum Neighbors<'a> {
    Bits(u64),
    List(std::slice::Iter<'a, u32>),
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::Bits(bits) => {
                if *bits == 0 {
                    None
                } else {
                    let v = bits.trailing_zeros() as usize;
                    *bits &= *bits - 1;
                    Some(v)
                }
            }
            Neighbors::List(it) => it.next().map(|&v| v as usize),
        }
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let adj = if n <= DENSE_CAP {
            Adjacency::Dense(vec![0; n])
        } else {
            Adjacency::Sparse(vec![Vec::new(); n])
        };
        Graph { n, adj }
    }

    /// Builds a graph from 0-based edges. Loops, out-of-range endpoints and
    /// repeated edges are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            if u == v || u >= n || v >= n || g.has_edge(u, v) {
                return Err(Error::InvalidEdge(u + 1, v + 1, n));
            }
            g.insert_unchecked(u, v);
        }
        g.finish();
        Ok(g)
    }

    /// Builds a dense graph directly from symmetric bit-rows.
    pub fn from_rows(rows: Vec<u64>) -> Self {
        let n = rows.len();
        assert!(n <= DENSE_CAP);
        let g = Graph { n, adj: Adjacency::Dense(rows) };
        g.debug_check();
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges).expect("valid edges")
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("valid cycle")
    }

    fn insert_unchecked(&mut self, u: usize, v: usize) {
        match &mut self.adj {
            Adjacency::Dense(rows) => {
                rows[u] |= 1 << v;
                rows[v] |= 1 << u;
            }
            Adjacency::Sparse(lists) => {
                lists[u].push(v as u32);
                lists[v].push(u as u32);
            }
        }
    }

    fn finish(&mut self) {
        if let Adjacency::Sparse(lists) = &mut self.adj {
            for l in lists.iter_mut() {
                l.sort_unstable();
            }
        }
        self.debug_check();
    }

    /// Symmetry, no loops, no repeated edges.
    fn debug_check(&self) {
        if cfg!(debug_assertions) {
            for u in 0..self.n {
                for v in self.neighbors(u) {
                    debug_assert!(u != v, "self-loop at {u}");
                    debug_assert!(self.has_edge(v, u), "asymmetric edge {u}-{v}");
                }
                if let Adjacency::Sparse(lists) = &self.adj {
                    debug_assert!(lists[u].windows(2).all(|w| w[0] < w[1]), "multi-edge at {u}");
                }
            }
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Bit-rows when the graph is dense (`n <= 64`).
    #[inline]
    pub fn rows(&self) -> Option<&[u64]> {
        match &self.adj {
            Adjacency::Dense(rows) => Some(rows),
            Adjacency::Sparse(_) => None,
        }
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        match &self.adj {
            Adjacency::Dense(rows) => rows[u] >> v & 1 == 1,
            Adjacency::Sparse(lists) => lists[u].binary_search(&(v as u32)).is_ok(),
        }
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        match &self.adj {
            Adjacency::Dense(rows) => rows[v].count_ones() as usize,
            Adjacency::Sparse(lists) => lists[v].len(),
        }
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> Neighbors<'_> {
        match &self.adj {
            Adjacency::Dense(rows) => Neighbors::Bits(rows[v]),
            Adjacency::Sparse(lists) => Neighbors::List(lists[v].iter()),
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    pub fn is_regular(&self, d: usize) -> bool {
        (0..self.n).all(|v| self.degree(v) == d)
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            out.extend(self.neighbors(u).filter(|&v| v > u).map(|v| (u, v)));
        }
        out
    }

    /// Edge union of two edge-disjoint graphs on the same vertex set.
    pub fn union_disjoint(&self, other: &Graph) -> Result<Graph> {
        if self.n != other.n {
            return Err(Error::VertexCountMismatch(self.n, other.n));
        }
        if let (Some(a), Some(b)) = (self.rows(), other.rows()) {
            if let Some(u) = (0..self.n).find(|&u| a[u] & b[u] != 0) {
                let v = (a[u] & b[u]).trailing_zeros() as usize;
                return Err(Error::SharedEdge(u + 1, v + 1));
            }
            return Ok(Graph::from_rows(a.iter().zip(b).map(|(x, y)| x | y).collect()));
        }
        let mut edges = self.edges();
        for (u, v) in other.edges() {
            if self.has_edge(u, v) {
                return Err(Error::SharedEdge(u + 1, v + 1));
            }
            edges.push((u, v));
        }
        Graph::from_edges(self.n, &edges)
    }

    /// True when no edge is shared.
    pub fn is_edge_disjoint(&self, other: &Graph) -> bool {
        match (self.rows(), other.rows()) {
            (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| x & y == 0),
            _ => self.edges().iter().all(|&(u, v)| !other.has_edge(u, v)),
        }
    }

    /// True when every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        match (self.rows(), other.rows()) {
            (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| x & !y == 0),
            _ => self.edges().iter().all(|&(u, v)| other.has_edge(u, v)),
        }
    }

    /// The graph with `sigma(u) sigma(v)` an edge iff `uv` is.
    pub fn relabel(&self, sigma: &[usize]) -> Result<Graph> {
        check_permutation(sigma, self.n)?;
        Ok(self.relabel_unchecked(sigma))
    }

    pub(crate) fn relabel_unchecked(&self, sigma: &[usize]) -> Graph {
        if self.rows().is_some() {
            let mut rows = vec![0u64; self.n];
            for u in 0..self.n {
                for v in self.neighbors(u) {
                    rows[sigma[u]] |= 1 << sigma[v];
                }
            }
            return Graph::from_rows(rows);
        }
        let edges: Vec<_> = self.edges().into_iter().map(|(u, v)| (sigma[u], sigma[v])).collect();
        Graph::from_edges(self.n, &edges).expect("relabeling preserves simplicity")
    }

    /// Complement graph; dense graphs only.
    pub fn complement(&self) -> Graph {
        let rows = self.rows().expect("complement requires n <= 64");
        let full = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        Graph::from_rows(rows.iter().enumerate().map(|(u, r)| !r & full & !(1 << u)).collect())
    }

    /// Packed edge set, for `n <= 16`.
    pub fn edge_set(&self) -> Option<EdgeSet> {
        if self.n > EDGE_SET_CAP {
            return None;
        }
        let mut bits = 0u128;
        for (u, v) in self.edges() {
            bits |= 1u128 << pair_index(self.n, u, v);
        }
        Some(EdgeSet(bits))
    }

    pub fn from_edge_set(n: usize, set: EdgeSet) -> Graph {
        assert!(n <= EDGE_SET_CAP);
        let mut rows = vec![0u64; n];
        for (u, v) in set.edges(n) {
            rows[u] |= 1 << v;
            rows[v] |= 1 << u;
        }
        Graph::from_rows(rows)
    }

    /// Text form: `n m` then `u v` per edge, 1-based, `u < v`, lexicographic.
    pub fn to_text(&self) -> String {
        let edges = self.edges();
        let mut s = format!("{} {}\n", self.n, edges.len());
        for (u, v) in edges {
            s.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        s
    }

    /// Parses the text form. Edges may appear in any order.
    pub fn from_text(text: &str) -> Result<Graph> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let (n, m) = parse_pair(header)?;
        let mut edges = Vec::with_capacity(m);
        for line in lines.by_ref().take(m) {
            let (u, v) = parse_pair(line)?;
            if u == 0 || v == 0 {
                return Err(Error::Parse(format!("vertex labels are 1-based: `{line}`")));
            }
            edges.push((u.min(v) - 1, u.max(v) - 1));
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("expected {m} edges, found {}", edges.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing lines after edge list".into()));
        }
        Graph::from_edges(n, &edges)
    }

    /// Compact `1-2 3-4` listing used in JSON dumps.
    pub fn edge_list_string(&self) -> String {
        self.edges()
            .iter()
            .map(|(u, v)| format!("{}-{}", u + 1, v + 1))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::Parse(format!("expected two integers: `{line}`"))),
    }
}

pub(crate) fn check_permutation(sigma: &[usize], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::NotAPermutation(n));
    }
    let mut seen = vec![false; n];
    for &s in sigma {
        if s >= n || std::mem::replace(&mut seen[s], true) {
            return Err(Error::NotAPermutation(n));
        }
    }
    Ok(())
}

/// Inverse of a permutation given as an image table.
pub fn invert_permutation(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        inv[s] = i;
    }
    inv
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, [{}])", self.n, self.edge_list_string())
    }
}

/// Index of the pair `u < v` in lexicographic pair order on `[n]`.
#[inline]
pub fn pair_index(n: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < n);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

/// Edge set of a graph on at most 16 vertices, one bit per pair in
/// lexicographic pair order.
///
/// `Ord` is the lexicographic order of the sorted edge lists, which is also
/// the order of the text serializations' edge lines.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EdgeSet(pub u128);

impl EdgeSet {
    #[inline]
    pub fn is_disjoint(self, other: EdgeSet) -> bool {
        self.0 & other.0 == 0
    }

    #[inline]
    pub fn union(self, other: EdgeSet) -> EdgeSet {
        EdgeSet(self.0 | other.0)
    }

    #[inline]
    pub fn contains(self, other: EdgeSet) -> bool {
        other.0 & !self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn edges(self, n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.len());
        let mut idx = 0;
        for u in 0..n {
            for v in u + 1..n {
                if self.0 >> idx & 1 == 1 {
                    out.push((u, v));
                }
                idx += 1;
            }
        }
        out
    }
}

impl Ord for EdgeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        // Below the lowest differing pair both lists agree. The list holding
        // that pair is smaller unless the other list has nothing beyond it,
        // in which case the other list is a proper prefix.
        let t = diff.trailing_zeros();
        let above = !((1u128 << t) - 1);
        if self.0 >> t & 1 == 1 {
            if other.0 & above == 0 {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        } else if self.0 & above == 0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for EdgeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EdgeSet({:#x})", self.0)
    }
}

/// Degree sequence `g_1..g_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence(Vec<usize>);

impl DegreeSequence {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.iter().sum::<usize>() % 2 == 1 {
            return Err(Error::ParityViolation { n: degrees.len(), d: degrees.iter().sum() });
        }
        Ok(DegreeSequence(degrees))
    }

    pub fn regular(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(usize, usize)]) -> Graph {
        // 1-based helper
        let e: Vec<_> = edges.iter().map(|&(u, v)| (u - 1, v - 1)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn union_of_two_matchings_is_a_four_cycle() {
        let u = g(4, &[(1, 2), (3, 4)]).union_disjoint(&g(4, &[(1, 3), (2, 4)])).unwrap();
        assert!(u.is_regular(2));
        assert_eq!(u.edge_count(), 4);
    }

    #[test]
    fn union_with_empty_is_identity() {
        let k4 = Graph::complete(4);
        assert_eq!(Graph::empty(4).union_disjoint(&k4).unwrap(), k4);
    }

    #[test]
    fn union_reports_first_shared_edge() {
        let m = g(4, &[(1, 2), (3, 4)]);
        assert_eq!(m.union_disjoint(&m), Err(Error::SharedEdge(1, 2)));
        let big = Graph::from_edges(100, &[(0, 1), (5, 7)]).unwrap();
        assert_eq!(big.union_disjoint(&big), Err(Error::SharedEdge(1, 2)));
    }

    #[test]
    fn relabel_cases() {
        let m = g(4, &[(1, 2), (3, 4)]);
        assert_eq!(m.relabel(&[0, 1, 2, 3]).unwrap(), m);
        // (1 2 3 4) -> (2 3 4 1)
        let r = m.relabel(&[1, 2, 3, 0]).unwrap();
        assert_eq!(r, g(4, &[(2, 3), (1, 4)]));
        assert_eq!(r.relabel(&invert_permutation(&[1, 2, 3, 0])).unwrap(), m);
        assert_eq!(m.relabel(&[0, 0, 1, 2]), Err(Error::NotAPermutation(4)));
        assert_eq!(m.relabel(&[0, 1, 2]), Err(Error::NotAPermutation(4)));
    }

    #[test]
    fn text_round_trip_is_byte_exact() {
        let c = Graph::cycle(5);
        let text = c.to_text();
        assert_eq!(text, "5 5\n1 2\n1 5\n2 3\n3 4\n4 5\n");
        assert_eq!(Graph::from_text(&text).unwrap().to_text(), text);
        assert!(Graph::from_text("3 1\n1 1\n").is_err());
        assert!(Graph::from_text("3 2\n1 2\n").is_err());
        assert!(Graph::from_text("3 1\n0 2\n").is_err());
    }

    #[test]
    fn sparse_and_dense_agree() {
        let edges = [(0, 1), (1, 2), (2, 0)];
        let big = Graph::from_edges(70, &edges).unwrap();
        assert!(big.rows().is_none());
        assert_eq!(big.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(big.degree(2), 2);
        assert!(big.has_edge(2, 1) && !big.has_edge(3, 4));
        let sigma: Vec<usize> = (0..70).rev().collect();
        let r = big.relabel(&sigma).unwrap();
        assert!(r.has_edge(69, 68));
    }

    #[test]
    fn edge_set_order_is_lexicographic_edge_list_order() {
        let n = 6;
        let graphs: Vec<Graph> = (0u32..1 << 9)
            .map(|mask| {
                let all: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).take(9).collect();
                let e: Vec<_> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
                Graph::from_edges(n, &e).unwrap()
            })
            .collect();
        for a in graphs.iter().step_by(7) {
            for b in graphs.iter().step_by(5) {
                let (ea, eb) = (a.edge_set().unwrap(), b.edge_set().unwrap());
                assert_eq!(ea.cmp(&eb), a.edges().cmp(&b.edges()), "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn complement_of_perfect_matching() {
        let m = g(4, &[(1, 2), (3, 4)]);
        assert_eq!(m.complement(), g(4, &[(1, 3), (1, 4), (2, 3), (2, 4)]));
    }
}
