//! Seeded exact samplers: uniform regular graphs (configuration model with
//! rejection), uniform perfect matchings, edge-disjoint compositions, unions
//! of matchings and random overlays of unlabeled skeletons.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::oracle::enumerate::check_regular_params;
use crate::oracle::expr::Atom;

/// A reproducible random stream: `(master_seed, stream_index)` determines the
/// sequence. Streams with different indices are independent ChaCha streams
/// under the same key.
#[derive(Clone, Debug)]
pub struct SeededStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        SeededStream { master_seed, stream_index, rng }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Stream index for trial `trial` of experiment block `block`.
pub fn stream_id(block: u32, trial: u64) -> u64 {
    (block as u64) << 40 | trial
}

/// Runs `trials` independent trials in parallel, trial `i` on stream
/// `stream_id(block, i)`. Results come back in trial order, so the output
/// does not depend on the number of worker threads.
pub fn par_trials<T, F>(master_seed: u64, block: u32, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeededStream) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = SeededStream::new(master_seed, stream_id(block, i));
            f(&mut s)
        })
        .collect()
}

/// Fallible variant of [`par_trials`]; the first error in trial order wins.
pub fn try_par_trials<T, F>(master_seed: u64, block: u32, trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SeededStream) -> Result<T> + Sync,
{
    par_trials(master_seed, block, trials, f).into_iter().collect()
}

/// Uniform `d`-regular graph on `[n]`.
///
/// Configuration model: `dn` half-edges are paired uniformly and the pairing
/// is rejected as soon as it creates a loop or a repeated edge. Every simple
/// graph arises from exactly `(d!)^n` pairings, so accepted outputs are
/// uniform. For `d > (n - 1) / 2` the complement of a uniform
/// `(n - 1 - d)`-regular graph is returned instead, which has the same law
/// and a far better acceptance rate.
pub fn sample_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R, caps: &Caps) -> Result<Graph> {
    check_regular_params(n, d)?;
    if d == n - 1 {
        return Ok(Graph::complete(n));
    }
    if 2 * d > n - 1 && n <= crate::graph::DENSE_CAP {
        return Ok(sample_regular(n, n - 1 - d, rng, caps)?.complement());
    }
    let dd = d as f64;
    let expected = ((dd * dd - 1.0) / 4.0).exp();
    if expected > caps.rejection_budget as f64 {
        return Err(Error::CapExceeded { what: "configuration model degree", value: d, cap: max_feasible_degree(caps) });
    }
    let mut points: Vec<u32> = Vec::with_capacity(n * d);
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
    for _ in 0..caps.rejection_budget {
        points.clear();
        for v in 0..n {
            points.extend(std::iter::repeat_n(v as u32, d));
        }
        adj.iter_mut().for_each(Vec::clear);
        if try_pairing(&mut points, &mut adj, rng) {
            let mut edges = Vec::with_capacity(n * d / 2);
            for (u, nb) in adj.iter().enumerate() {
                edges.extend(nb.iter().filter(|&&v| (v as usize) > u).map(|&v| (u, v as usize)));
            }
            return Graph::from_edges(n, &edges);
        }
    }
    Err(Error::RejectionBudgetExceeded(caps.rejection_budget))
}

fn max_feasible_degree(caps: &Caps) -> usize {
    (4.0 * (caps.rejection_budget as f64).ln() + 1.0).sqrt().floor() as usize
}

/// One uniform pairing of `points`, abandoned at the first loop or repeated
/// edge.
fn try_pairing<R: Rng + ?Sized>(points: &mut [u32], adj: &mut [Vec<u32>], rng: &mut R) -> bool {
    let m = points.len();
    let mut i = 0;
    while i < m {
        let j = rng.random_range(i + 1..m);
        points.swap(i + 1, j);
        let (u, v) = (points[i], points[i + 1]);
        if u == v || adj[u as usize].contains(&v) {
            return false;
        }
        adj[u as usize].push(v);
        adj[v as usize].push(u);
        i += 2;
    }
    true
}

/// Pairs of a uniform perfect matching of `[n]`: repeatedly the first vertex
/// of the unmatched pool is matched to a uniform other pool vertex.
pub fn random_matching_pairs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    let mut pairs = Vec::with_capacity(n / 2);
    let mut i = 0;
    while i < n {
        let j = rng.random_range(i + 1..n);
        pool.swap(i + 1, j);
        let (a, b) = (pool[i], pool[i + 1]);
        pairs.push((a.min(b), a.max(b)));
        i += 2;
    }
    Ok(pairs)
}

/// Uniform perfect matching of `[n]`.
pub fn sample_matching<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph> {
    Graph::from_edges(n, &random_matching_pairs(n, rng)?)
}

/// `d` uniform perfect matchings conditioned pairwise edge-disjoint. The
/// union is distributed as `nu_d`; the matchings are returned in draw order.
pub fn sample_nu<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R, caps: &Caps) -> Result<(Graph, Vec<Graph>)> {
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    if d == 0 || d > n.saturating_sub(1) {
        return Err(Error::InvalidDegree { n, d });
    }
    'attempt: for _ in 0..caps.rejection_budget {
        let mut union = Graph::empty(n);
        let mut parts = Vec::with_capacity(d);
        for _ in 0..d {
            let m = sample_matching(n, rng)?;
            match union.union_disjoint(&m) {
                Ok(u) => union = u,
                Err(_) => continue 'attempt,
            }
            parts.push(m);
        }
        return Ok((union, parts));
    }
    Err(Error::RejectionBudgetExceeded(caps.rejection_budget))
}

/// One draw from a single measure atom.
pub fn sample_atom<R: Rng + ?Sized>(atom: Atom, n: usize, rng: &mut R, caps: &Caps) -> Result<Graph> {
    match atom {
        Atom::Uniform(d) => sample_regular(n, d, rng, caps),
        Atom::Nu(d) => Ok(sample_nu(n, d, rng, caps)?.0),
    }
}

/// Result of [`sample_oplus`].
#[derive(Clone, Debug, PartialEq)]
pub struct OplusSample {
    pub graph: Graph,
    pub components: Vec<Graph>,
    /// Joint draws used, including the accepted one.
    pub attempts: u64,
}

/// Independent draws from each part, all resampled together until they are
/// pairwise edge-disjoint.
pub fn sample_oplus<R: Rng + ?Sized>(parts: &[Atom], n: usize, rng: &mut R, caps: &Caps) -> Result<OplusSample> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("empty composition".into()));
    }
    let total: usize = parts.iter().map(|a| a.degree()).sum();
    if total > n.saturating_sub(1) {
        return Err(Error::EmptySupport);
    }
    for a in parts {
        check_regular_params(n, a.degree())?;
    }
    'attempt: for attempt in 1..=caps.rejection_budget {
        let mut union = Graph::empty(n);
        let mut components = Vec::with_capacity(parts.len());
        for &a in parts {
            let g = sample_atom(a, n, rng, caps)?;
            match union.union_disjoint(&g) {
                Ok(u) => union = u,
                Err(_) => continue 'attempt,
            }
            components.push(g);
        }
        return Ok(OplusSample { graph: union, components, attempts: attempt });
    }
    Err(Error::RejectionBudgetExceeded(caps.rejection_budget))
}

/// Unlabeled regular skeletons on a common vertex count.
#[derive(Clone, Debug)]
pub struct OverlaySpec {
    skeletons: Vec<Graph>,
    degrees: Vec<usize>,
}

impl OverlaySpec {
    pub fn new(skeletons: Vec<Graph>) -> Result<Self> {
        let n = skeletons.first().map(Graph::n).ok_or_else(|| Error::InvalidArgument("no skeletons".into()))?;
        let mut degrees = Vec::with_capacity(skeletons.len());
        for s in &skeletons {
            if s.n() != n {
                return Err(Error::VertexCountMismatch(n, s.n()));
            }
            let d = s.degree(0);
            if !s.is_regular(d) {
                return Err(Error::NotRegular(d));
            }
            degrees.push(d);
        }
        Ok(OverlaySpec { skeletons, degrees })
    }

    pub fn n(&self) -> usize {
        self.skeletons[0].n()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `D = sum_{k < l} d_k d_l`.
    pub fn pair_degree_sum(&self) -> usize {
        let mut s = 0;
        for (k, &a) in self.degrees.iter().enumerate() {
            for &b in &self.degrees[k + 1..] {
                s += a * b;
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverlayOutcome {
    pub disjoint: bool,
    /// Distinct edges present in at least two of the labeled copies.
    pub repeated_edges: usize,
}

/// Labels every skeleton but the first by an independent uniform
/// permutation and counts the edges shared between copies.
pub fn overlay<R: Rng + ?Sized>(spec: &OverlaySpec, rng: &mut R) -> OverlayOutcome {
    let n = spec.n();
    let mut keys: Vec<u64> = Vec::new();
    let mut sigma: Vec<usize> = (0..n).collect();
    for (i, s) in spec.skeletons.iter().enumerate() {
        if i > 0 {
            sigma.shuffle(rng);
        }
        for (u, v) in s.edges() {
            let (a, b) = (sigma[u].min(sigma[v]), sigma[u].max(sigma[v]));
            keys.push((a * n + b) as u64);
        }
    }
    keys.sort_unstable();
    let mut repeated = 0;
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        if j - i >= 2 {
            repeated += 1;
        }
        i = j;
    }
    OverlayOutcome { disjoint: repeated == 0, repeated_edges: repeated }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| SeededStream::new(7, 1).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut s1 = SeededStream::new(7, 1);
        let mut s2 = SeededStream::new(7, 2);
        assert_ne!(s1.next_u64(), s2.next_u64());
    }

    #[test]
    fn forced_outputs() {
        let caps = Caps::default();
        let mut rng = SeededStream::new(1, 0);
        for _ in 0..20 {
            assert_eq!(sample_regular(4, 3, &mut rng, &caps).unwrap(), Graph::complete(4));
            assert_eq!(sample_matching(2, &mut rng).unwrap(), Graph::complete(2));
            let (g, f) = sample_nu(4, 3, &mut rng, &caps).unwrap();
            assert_eq!(g, Graph::complete(4));
            assert_eq!(f.len(), 3);
        }
        assert_eq!(sample_matching(5, &mut rng), Err(Error::OddN(5)));
        assert_eq!(sample_regular(5, 3, &mut rng, &caps), Err(Error::ParityViolation { n: 5, d: 3 }));
    }

    #[test]
    fn outputs_are_regular() {
        let caps = Caps::default();
        let mut rng = SeededStream::new(2, 0);
        for (n, d) in [(10, 3), (12, 4), (9, 6), (200, 5), (100, 1)] {
            let g = sample_regular(n, d, &mut rng, &caps).unwrap();
            assert!(g.is_regular(d), "n={n} d={d}");
        }
    }

    #[test]
    fn degree_cap_is_enforced() {
        let caps = Caps { rejection_budget: 100, ..Caps::default() };
        let mut rng = SeededStream::new(3, 0);
        assert!(matches!(sample_regular(200, 5, &mut rng, &caps), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn oplus_components_are_disjoint() {
        let caps = Caps::default();
        let mut rng = SeededStream::new(4, 0);
        let parts = [Atom::Uniform(3), Atom::Nu(2), Atom::Uniform(1)];
        for _ in 0..50 {
            let s = sample_oplus(&parts, 10, &mut rng, &caps).unwrap();
            assert!(s.graph.is_regular(6));
            let mut acc = Graph::empty(10);
            for c in &s.components {
                acc = acc.union_disjoint(c).unwrap();
            }
            assert_eq!(acc, s.graph);
        }
        assert_eq!(sample_oplus(&[Atom::Uniform(3), Atom::Uniform(1)], 4, &mut rng, &caps).unwrap_err(), Error::EmptySupport);
    }

    #[test]
    fn single_skeleton_overlay() {
        let spec = OverlaySpec::new(vec![Graph::cycle(10)]).unwrap();
        let mut rng = SeededStream::new(5, 0);
        assert_eq!(overlay(&spec, &mut rng), OverlayOutcome { disjoint: true, repeated_edges: 0 });
        assert_eq!(spec.pair_degree_sum(), 0);
        let three = OverlaySpec::new(vec![Graph::cycle(6); 3]).unwrap();
        assert_eq!(three.pair_degree_sum(), 12);
    }

    #[test]
    fn par_trials_independent_of_pool_size() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                par_trials(9, 0, 64, |s| sample_matching(8, s).unwrap().edge_list_string())
            })
        };
        assert_eq!(run(1), run(3));
    }
}
