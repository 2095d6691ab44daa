//! Transport couplings supported on the edges of a bipartite graph, built
//! from a maximum flow, and the uniform-marginal (Strassen) special case.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::coupling::flow::FlowNetwork;
use crate::coupling::CouplingTable;
use crate::error::{Error, Result};
use crate::measure::to_f64;

/// Bipartite graph with parts `S = 0..left` and `T = 0..right`; `adj[s]`
/// lists the neighbours of `s` in `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub left: usize,
    pub right: usize,
    pub adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize, mut adj: Vec<Vec<usize>>) -> Result<Self> {
        if adj.len() != left {
            return Err(Error::InvalidArgument(format!("{} adjacency lists for {left} left vertices", adj.len())));
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            if list.last().is_some_and(|&t| t >= right) {
                return Err(Error::InvalidArgument("neighbour index out of range".into()));
            }
        }
        Ok(BipartiteGraph { left, right, adj })
    }

    pub fn complete(left: usize, right: usize) -> Self {
        BipartiteGraph { left, right, adj: vec![(0..right).collect(); left] }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, s: usize, t: usize) -> bool {
        self.adj[s].binary_search(&t).is_ok()
    }

    pub fn left_degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.right];
        for list in &self.adj {
            for &t in list {
                deg[t] += 1;
            }
        }
        deg
    }

    /// Smallest `delta` such that each side has at least `(1 - delta)` of its
    /// vertices with degree at least `(1 - eps) |E| / |part|`.
    pub fn delta_at(&self, eps: &BigRational) -> BigRational {
        let e = BigInt::from(self.edge_count());
        let side = |degs: &[usize]| -> BigRational {
            if degs.is_empty() {
                return BigRational::zero();
            }
            let size = BigInt::from(degs.len());
            let threshold = (BigRational::one() - eps) * BigRational::from_integer(e.clone()) / BigRational::from_integer(size.clone());
            let low = degs.iter().filter(|&&d| BigRational::from_integer(BigInt::from(d)) < threshold).count();
            BigRational::new(BigInt::from(low), size)
        };
        side(&self.left_degrees()).max(side(&self.right_degrees()))
    }

    /// `2 delta(eps) + eps / (1 - eps)`.
    pub fn bound_at(&self, eps: &BigRational) -> f64 {
        let e = to_f64(eps);
        2.0 * to_f64(&self.delta_at(eps)) + e / (1.0 - e)
    }

    /// Minimizes the bound over the values of `eps` at which `delta` jumps
    /// (plus zero). Returns `(eps, delta, bound)`.
    pub fn best_bound(&self) -> (BigRational, BigRational, f64) {
        let e = self.edge_count();
        let mut candidates = vec![BigRational::zero()];
        if e > 0 {
            for (degs, size) in [(self.left_degrees(), self.left), (self.right_degrees(), self.right)] {
                let mut ds = degs;
                ds.sort_unstable();
                ds.dedup();
                for d in ds {
                    let eps = BigRational::one() - BigRational::new(BigInt::from(d * size), BigInt::from(e));
                    if eps > BigRational::zero() && eps < BigRational::one() {
                        candidates.push(eps);
                    }
                }
            }
        }
        candidates
            .into_iter()
            .map(|eps| {
                let delta = self.delta_at(&eps);
                let b = self.bound_at(&eps);
                (eps, delta, b)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("zero is always a candidate")
    }
}

/// Coupling of the laws `left_w / W` on `S` and `right_w / W` on `T`
/// (`W` the common total) that puts as much mass as possible on edges of
/// `h`. The maximum flow fills the explicit cells; the unrouted mass becomes
/// an independent product block, which lies on non-edges only (an edge
/// between two vertices with spare capacity would be an augmenting path).
pub fn transport_coupling(h: &BipartiteGraph, left_w: &[u128], right_w: &[u128]) -> Result<CouplingTable<usize, usize>> {
    if left_w.len() != h.left || right_w.len() != h.right {
        return Err(Error::InvalidArgument("weight vector length does not match the parts".into()));
    }
    let total: u128 = left_w.iter().sum();
    if total != right_w.iter().sum::<u128>() || total == 0 {
        return Err(Error::InvalidArgument("marginal weights must have equal positive totals".into()));
    }
    let (src, sink) = (h.left + h.right, h.left + h.right + 1);
    let mut net = FlowNetwork::new(h.left + h.right + 2);
    let mut arcs = Vec::with_capacity(h.edge_count());
    for (s, list) in h.adj.iter().enumerate() {
        net.add_arc(src, s, left_w[s]);
        for &t in list {
            arcs.push((s, t, net.add_arc(s, h.left + t, left_w[s].min(right_w[t]))));
        }
    }
    for (t, &w) in right_w.iter().enumerate() {
        net.add_arc(h.left + t, sink, w);
    }
    net.max_flow(src, sink);
    let mut cells = BTreeMap::new();
    let mut out = left_w.to_vec();
    let mut inn = right_w.to_vec();
    for (s, t, id) in arcs {
        let f = net.flow(id);
        if f > 0 {
            cells.insert((s, t), f);
            out[s] -= f;
            inn[t] -= f;
        }
    }
    let index = |w: &[u128]| -> BTreeMap<usize, u128> { w.iter().copied().enumerate().filter(|(_, v)| *v > 0).collect() };
    CouplingTable::new(total, index(left_w), index(right_w), cells, index(&out), index(&inn))
}

#[derive(Clone, Debug, Serialize)]
pub struct StrassenReport {
    #[serde(skip)]
    pub table: CouplingTable<usize, usize>,
    pub left: usize,
    pub right: usize,
    pub edges: usize,
    /// Exact `P(XZ not in E(h))` as a reduced fraction.
    pub violation: String,
    pub violation_f64: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub bound: f64,
}

/// Coupling with `X` uniform on `S`, `Z` uniform on `T` and `XZ` an edge of
/// `h` as often as possible. `(eps, delta)` is the pair minimizing
/// `2 delta + eps / (1 - eps)` among those satisfying the degree hypotheses.
pub fn strassen_coupling(h: &BipartiteGraph) -> Result<StrassenReport> {
    if h.left == 0 || h.right == 0 {
        return Err(Error::EmptySupport);
    }
    let (sl, sr) = (h.left as u128, h.right as u128);
    let table = transport_coupling(h, &vec![sr; h.left], &vec![sl; h.right])?;
    let violation = table.residual_mass();
    let (eps, delta, bound) = h.best_bound();
    let v = to_f64(&violation);
    if v > bound + 1e-12 {
        return Err(Error::InfeasibleFlow);
    }
    Ok(StrassenReport {
        table,
        left: h.left,
        right: h.right,
        edges: h.edge_count(),
        violation: violation.to_string(),
        violation_f64: v,
        epsilon: to_f64(&eps),
        delta: to_f64(&delta),
        bound,
    })
}

/// Random near-biregular bipartite graph: parts of 40 to 80 vertices, edge
/// probability `p_s q_t` with about 8% of the vertices on each side given a
/// low weight. Redrawn until `delta(eps) <= delta` at `eps`, so the bound at
/// that pair is at most `2 delta + eps / (1 - eps)`.
pub fn planted_instance<R: Rng + ?Sized>(rng: &mut R, delta: f64, eps: f64) -> BipartiteGraph {
    let eps_r = BigRational::from_float(eps).expect("finite epsilon");
    loop {
        let left = rng.random_range(40..=80);
        let right = rng.random_range(40..=80);
        let weight = |rng: &mut R| if rng.random::<f64>() < 0.08 { rng.random_range(0.15..0.35) } else { rng.random_range(0.85..0.95) };
        let p: Vec<f64> = (0..left).map(|_| weight(rng)).collect();
        let q: Vec<f64> = (0..right).map(|_| weight(rng)).collect();
        let adj = p.iter().map(|&ps| (0..right).filter(|&t| rng.random::<f64>() < ps * q[t]).collect()).collect();
        let h = BipartiteGraph { left, right, adj };
        if h.edge_count() > 0 && to_f64(&h.delta_at(&eps_r)) <= delta {
            return h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ratio;
    use rand::SeedableRng;

    #[test]
    fn complete_bipartite_has_no_violation() {
        let r = strassen_coupling(&BipartiteGraph::complete(3, 5)).unwrap();
        assert_eq!(r.violation, "0");
        assert_eq!(r.table.left_marginal().mass(&0), ratio(1, 3));
        assert_eq!(r.table.right_marginal().mass(&4), ratio(1, 5));
    }

    #[test]
    fn perfect_matching_is_a_bijection() {
        let h = BipartiteGraph::new(4, 4, vec![vec![2], vec![0], vec![3], vec![1]]).unwrap();
        let r = strassen_coupling(&h).unwrap();
        assert_eq!(r.violation_f64, 0.0);
        assert_eq!((r.delta, r.epsilon), (0.0, 0.0));
        assert_eq!(r.table.mass(&0, &2), ratio(1, 4));
    }

    #[test]
    fn star_violation() {
        // s0 - {t0, t1}, s1 isolated: half of X's mass must leave the edges
        let h = BipartiteGraph::new(2, 2, vec![vec![0, 1], vec![]]).unwrap();
        let r = strassen_coupling(&h).unwrap();
        assert_eq!(r.violation, "1/2");
        assert!(r.bound >= 0.5);
    }

    #[test]
    fn planted_meets_target() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = planted_instance(&mut rng, 0.1, 0.1);
        let r = strassen_coupling(&h).unwrap();
        assert!(r.bound <= 2.0 * 0.1 + 0.1 / 0.9 + 1e-12);
        assert!(r.violation_f64 <= r.bound);
    }
}
