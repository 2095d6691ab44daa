//! Exact counters (perfect matchings, triangles, ordered 1-factorisations)
//! and the closed-form evaluators for degree-sequence enumeration and
//! conditional edge probabilities.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, Graph, EDGE_SET_CAP};

/// Number of perfect matchings of `g`, by dynamic programming over covered
/// vertex sets keyed on the least uncovered vertex.
///
/// Odd `n` gives 0. Vertices are first put in breadth-first order so the
/// covered sets stay close to a prefix, which keeps the state count small on
/// sparse graphs.
pub fn count_perfect_matchings(g: &Graph) -> Result<u64> {
    count_perfect_matchings_with(g, &Caps::default())
}

pub fn count_perfect_matchings_with(g: &Graph, caps: &Caps) -> Result<u64> {
    let n = g.n();
    if n > caps.pm_max_n {
        return Err(Error::CapExceeded { what: "perfect matching vertex count", value: n, cap: caps.pm_max_n });
    }
    if n % 2 == 1 {
        return Ok(0);
    }
    if n == 0 {
        return Ok(1);
    }
    let rows = g.rows().expect("n <= pm cap is dense");
    Ok(pm_count_rows(&bfs_relabel(rows)))
}

fn bfs_relabel(rows: &[u64]) -> Vec<u64> {
    let n = rows.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = 0u64;
    for s in 0..n {
        if seen >> s & 1 == 1 {
            continue;
        }
        seen |= 1 << s;
        let start = order.len();
        order.push(s);
        let mut head = start;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut fresh = rows[v] & !seen;
            seen |= fresh;
            while fresh != 0 {
                order.push(fresh.trailing_zeros() as usize);
                fresh &= fresh - 1;
            }
        }
    }
    let mut label = vec![0; n];
    for (pos, &v) in order.iter().enumerate() {
        label[v] = pos;
    }
    let mut out = vec![0u64; n];
    for u in 0..n {
        let mut bits = rows[u];
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            out[label[u]] |= 1 << label[v];
        }
    }
    out
}

/// Layered DP: layer `v` holds covered sets whose least uncovered vertex is
/// `v`, together with the number of partial matchings reaching them.
pub(crate) fn pm_count_rows(rows: &[u64]) -> u64 {
    let n = rows.len();
    if n % 2 == 1 {
        return 0;
    }
    if n == 0 {
        return 1;
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut layers: Vec<Vec<(u64, u64)>> = vec![Vec::new(); n];
    layers[0].push((0, 1));
    let mut total = 0u64;
    for v in 0..n {
        let mut layer = std::mem::take(&mut layers[v]);
        if layer.is_empty() {
            continue;
        }
        layer.sort_unstable_by_key(|&(m, _)| m);
        let mut i = 0;
        while i < layer.len() {
            let mask = layer[i].0;
            let mut count = 0u64;
            while i < layer.len() && layer[i].0 == mask {
                count += layer[i].1;
                i += 1;
            }
            let covered = mask | 1 << v;
            let mut cands = rows[v] & !covered;
            while cands != 0 {
                let w = cands.trailing_zeros();
                cands &= cands - 1;
                let next = covered | 1 << w;
                if next == full {
                    total += count;
                } else {
                    let lo = (!next).trailing_zeros() as usize;
                    layers[lo].push((next, count));
                }
            }
        }
    }
    total
}

/// Number of triangles.
pub fn count_triangles(g: &Graph) -> u64 {
    if let Some(rows) = g.rows() {
        let mut t = 0u64;
        for (u, &ru) in rows.iter().enumerate() {
            let mut later = ru & bits_above(u);
            while later != 0 {
                let v = later.trailing_zeros() as usize;
                later &= later - 1;
                t += (ru & rows[v] & bits_above(v)).count_ones() as u64;
            }
        }
        return t;
    }
    let mut t = 0u64;
    for u in 0..g.n() {
        let nu: Vec<usize> = g.neighbors(u).filter(|&v| v > u).collect();
        for (i, &v) in nu.iter().enumerate() {
            for &w in &nu[i + 1..] {
                if g.has_edge(v, w) {
                    t += 1;
                }
            }
        }
    }
    t
}

#[inline]
fn bits_above(v: usize) -> u64 {
    if v >= 63 {
        0
    } else {
        !((2u64 << v) - 1)
    }
}

/// Visits every perfect matching of the graph given by `rows`, as a list of
/// pairs `(u, v)` with `u < v`, in lexicographic order.
pub fn for_each_perfect_matching<F: FnMut(&[(usize, usize)])>(rows: &[u64], mut visit: F) {
    let n = rows.len();
    if n % 2 == 1 {
        return;
    }
    let mut pairs = Vec::with_capacity(n / 2);
    pm_walk(rows, 0, &mut pairs, &mut visit);
}

fn pm_walk<F: FnMut(&[(usize, usize)])>(rows: &[u64], covered: u64, pairs: &mut Vec<(usize, usize)>, visit: &mut F) {
    let n = rows.len();
    if covered.count_ones() as usize == n {
        visit(pairs);
        return;
    }
    let v = (!covered).trailing_zeros() as usize;
    let mut cands = rows[v] & !covered & !(1 << v);
    while cands != 0 {
        let w = cands.trailing_zeros() as usize;
        cands &= cands - 1;
        pairs.push((v, w));
        pm_walk(rows, covered | 1 << v | 1 << w, pairs, visit);
        pairs.pop();
    }
}

/// Number of ordered sequences of `d` pairwise edge-disjoint perfect
/// matchings whose union is `g`.
pub fn count_one_factorisations_ordered(g: &Graph, d: usize) -> Result<u128> {
    if !g.is_regular(d) {
        return Err(Error::NotRegular(d));
    }
    let n = g.n();
    if n > EDGE_SET_CAP {
        return Err(Error::CapExceeded { what: "1-factorisation vertex count", value: n, cap: EDGE_SET_CAP });
    }
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    let rows = g.rows().expect("dense");
    Ok(ordered_factorisations(rows.to_vec(), d))
}

fn ordered_factorisations(mut rows: Vec<u64>, d: usize) -> u128 {
    // a 1-regular remainder is itself the last matching
    if d <= 1 {
        return 1;
    }
    let mut matchings: Vec<Vec<(usize, usize)>> = Vec::new();
    for_each_perfect_matching(&rows, |m| matchings.push(m.to_vec()));
    let mut total = 0u128;
    for m in matchings {
        for &(u, v) in &m {
            rows[u] &= !(1 << v);
            rows[v] &= !(1 << u);
        }
        total += ordered_factorisations(rows.clone(), d - 1);
        for &(u, v) in &m {
            rows[u] |= 1 << v;
            rows[v] |= 1 << u;
        }
    }
    total
}

/// The asymptotic enumeration of graphs with a given degree sequence avoiding
/// a fixed graph `X`: the leading term and the exponent corrections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MckayEstimate {
    /// Natural log of `(2e)! / (e! 2^e prod g_i!)`.
    pub log_leading_term: f64,
    pub leading_term: f64,
    pub lambda: f64,
    pub mu: f64,
    pub delta_hat: f64,
    pub e_g: f64,
    /// `delta_hat^2 / e_g`; the relative error is `exp(+-C * scale)`.
    pub error_exponent_scale: f64,
    /// Whether `delta_hat <= epsilon * sum(g)` held for the configured epsilon.
    pub hypothesis_satisfied: bool,
    /// Smallest epsilon for which the hypothesis would hold.
    pub epsilon_required: f64,
}

impl MckayEstimate {
    pub fn log_estimate(&self) -> f64 {
        self.log_leading_term - self.lambda - self.lambda * self.lambda - self.mu
    }

    pub fn estimate(&self) -> f64 {
        self.log_estimate().exp()
    }

    /// The estimate scaled by `exp(-c * scale)` and `exp(c * scale)` for a
    /// caller-supplied constant `c`.
    pub fn interval(&self, c: f64) -> (f64, f64) {
        let w = c * self.error_exponent_scale;
        ((self.log_estimate() - w).exp(), (self.log_estimate() + w).exp())
    }
}

/// Evaluates the estimate and refuses inputs outside the hypothesis
/// `delta_hat <= epsilon * sum(g)`.
pub fn mckay_count(x: &Graph, g: &DegreeSequence, caps: &Caps) -> Result<MckayEstimate> {
    let est = mckay_estimate(x, g, caps)?;
    if !est.hypothesis_satisfied {
        return Err(Error::HypothesisViolated {
            delta_hat: est.delta_hat,
            bound: caps.mckay_epsilon * g.sum() as f64,
        });
    }
    Ok(est)
}

/// Evaluates the estimate regardless of the hypothesis and reports whether it
/// holds.
pub fn mckay_estimate(x: &Graph, g: &DegreeSequence, caps: &Caps) -> Result<MckayEstimate> {
    let gs = g.as_slice();
    if gs.len() != x.n() {
        return Err(Error::VertexCountMismatch(gs.len(), x.n()));
    }
    if !(caps.mckay_epsilon > 0.0 && caps.mckay_epsilon < 2.0 / 3.0) {
        return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 2/3)", caps.mckay_epsilon)));
    }
    let sum = g.sum() as f64;
    let e = sum / 2.0;
    let log_leading = ln_gamma(sum + 1.0)
        - ln_gamma(e + 1.0)
        - e * std::f64::consts::LN_2
        - gs.iter().map(|&gi| ln_gamma(gi as f64 + 1.0)).sum::<f64>();
    let (lambda, mu) = if e == 0.0 {
        (0.0, 0.0)
    } else {
        let lambda = gs.iter().map(|&gi| (gi * gi.saturating_sub(1)) as f64).sum::<f64>() / (4.0 * e);
        let mu = x.edges().iter().map(|&(i, j)| (gs[i] * gs[j]) as f64).sum::<f64>() / (2.0 * e);
        (lambda, mu)
    };
    let gmax = gs.iter().copied().max().unwrap_or(0) as f64;
    let xmax = x.max_degree() as f64;
    let delta_hat = 2.0 + gmax * (1.5 * gmax + xmax + 1.0);
    let epsilon_required = if sum > 0.0 { delta_hat / sum } else { f64::INFINITY };
    Ok(MckayEstimate {
        log_leading_term: log_leading,
        leading_term: log_leading.exp(),
        lambda,
        mu,
        delta_hat,
        e_g: e,
        error_exponent_scale: if e > 0.0 { delta_hat * delta_hat / e } else { f64::INFINITY },
        hypothesis_satisfied: delta_hat <= caps.mckay_epsilon * sum,
        epsilon_required,
    })
}

/// First-order estimate of `P(uv in G | H subset G)` for `G` uniform
/// `d`-regular on `n` vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbEstimate {
    pub value: f64,
    pub phi: f64,
    pub base: f64,
    /// `|E(H)|/n^2 + |E(H)|^2/(dn)^2 + d^2/n^2`; the estimate is exact up to a
    /// factor `1 + O(uncertainty_scale)`.
    pub uncertainty_scale: f64,
}

pub fn conditional_edge_probability(n: usize, d: usize, h: &Graph, u: usize, v: usize, caps: &Caps) -> Result<EdgeProbEstimate> {
    if h.n() != n {
        return Err(Error::VertexCountMismatch(h.n(), n));
    }
    if u >= n || v >= n || u == v {
        return Err(Error::InvalidEdge(u + 1, v + 1, n));
    }
    if h.has_edge(u, v) {
        return Err(Error::EdgeAlreadyPresent(u.min(v) + 1, u.max(v) + 1));
    }
    if let Some(w) = (0..n).find(|&w| h.degree(w) > d) {
        return Err(Error::DegreeExceeded(w + 1));
    }
    let m = h.edge_count();
    let dn = (d * n) as f64;
    if m as f64 > caps.edge_prob_max_edge_fraction * dn {
        return Err(Error::TooManyEdges);
    }
    let du = h.degree(u) as f64;
    let dv = h.degree(v) as f64;
    let dd = d as f64;
    let nbr_sum = |w: usize| h.neighbors(w).map(|x| h.degree(x) as f64).sum::<f64>();
    let phi = du * dv + nbr_sum(u) + nbr_sum(v) - dd - 2.0 * m as f64 - (dd - 1.0) * (du + dv);
    let base = (dd - du) * (dd - dv) / dn;
    let nf = n as f64;
    Ok(EdgeProbEstimate {
        value: base * (1.0 - phi / dn),
        phi,
        base,
        uncertainty_scale: m as f64 / (nf * nf) + (m * m) as f64 / (dn * dn) + dd * dd / (nf * nf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from1(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, &edges.iter().map(|&(u, v)| (u - 1, v - 1)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn complete_graph_matchings() {
        let mut dfact = 1u64;
        for n in (2..=12).step_by(2) {
            dfact *= n as u64 - 1;
            assert_eq!(count_perfect_matchings(&Graph::complete(n)).unwrap(), dfact, "K_{n}");
        }
        assert_eq!(count_perfect_matchings(&Graph::complete(5)).unwrap(), 0);
        assert_eq!(count_perfect_matchings(&Graph::empty(0)).unwrap(), 1);
        assert!(matches!(count_perfect_matchings(&Graph::empty(30)), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn triangles() {
        assert_eq!(count_triangles(&Graph::complete(4)), 4);
        assert_eq!(count_triangles(&Graph::complete(5)), 10);
        assert_eq!(count_triangles(&Graph::cycle(6)), 0);
        assert_eq!(count_triangles(&Graph::complete(64)), 64 * 63 * 62 / 6);
        let big = Graph::from_edges(70, &[(0, 1), (1, 69), (0, 69), (2, 3)]).unwrap();
        assert_eq!(count_triangles(&big), 1);
    }

    #[test]
    fn one_factorisations() {
        assert_eq!(count_one_factorisations_ordered(&Graph::complete(4), 3).unwrap(), 6);
        assert_eq!(count_one_factorisations_ordered(&Graph::cycle(6), 2).unwrap(), 2);
        // two disjoint triangles: 2-regular but no perfect matching
        let tt = from1(6, &[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]);
        assert_eq!(count_one_factorisations_ordered(&tt, 2).unwrap(), 0);
        assert_eq!(count_one_factorisations_ordered(&Graph::cycle(6), 3), Err(Error::NotRegular(3)));
    }

    #[test]
    fn mckay_degenerate_cases() {
        let caps = Caps::default();
        let e = mckay_estimate(&Graph::empty(6), &DegreeSequence::regular(6, 1).unwrap(), &caps).unwrap();
        assert!((e.leading_term - 15.0).abs() < 1e-9);
        assert_eq!((e.lambda, e.mu), (0.0, 0.0));
        let pm = from1(4, &[(1, 2), (3, 4)]);
        let e = mckay_estimate(&pm, &DegreeSequence::regular(4, 1).unwrap(), &caps).unwrap();
        assert!((e.leading_term - 3.0).abs() < 1e-12);
        assert_eq!(e.mu, 0.5);
        assert!((e.estimate() - 3.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!(!e.hypothesis_satisfied);
        assert!(matches!(mckay_count(&pm, &DegreeSequence::regular(4, 1).unwrap(), &caps), Err(Error::HypothesisViolated { .. })));
    }

    #[test]
    fn mckay_regular_lambda() {
        let e = mckay_estimate(&Graph::empty(10), &DegreeSequence::regular(10, 3).unwrap(), &Caps::default()).unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-15);
        assert_eq!(e.e_g, 15.0);
        assert_eq!(e.delta_hat, 2.0 + 3.0 * (4.5 + 1.0));
    }

    #[test]
    fn edge_probability_empty_h() {
        let caps = Caps::default();
        let est = conditional_edge_probability(8, 3, &Graph::empty(8), 0, 1, &caps).unwrap();
        assert_eq!(est.phi, -3.0);
        assert!((est.value - 0.421875).abs() < 1e-15);
        let h = from1(4, &[(1, 2)]);
        assert_eq!(conditional_edge_probability(4, 3, &h, 0, 1, &caps), Err(Error::EdgeAlreadyPresent(1, 2)));
        assert!(matches!(
            conditional_edge_probability(4, 1, &from1(4, &[(1, 2), (1, 3)]), 2, 3, &caps),
            Err(Error::DegreeExceeded(1))
        ));
    }
}
