//! Independent reference implementations used to cross-check the library.
//! Nothing here calls into the algorithms under test; graphs cross the
//! boundary as plain edge lists.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rrg_core::Graph;

pub type Edges = Vec<(usize, usize)>;

pub fn edges_of(g: &Graph) -> Edges {
    g.edges()
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in edges {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

/// Edge-by-edge enumeration of the `d`-regular graphs on `[n]`: every pair
/// `(i, j)` in lexicographic order is either taken or skipped.
pub fn for_each_regular_edgewise(n: usize, d: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    // remaining[k][v]: pairs at index >= k touching v
    let mut remaining = vec![vec![0usize; n]; pairs.len() + 1];
    for k in (0..pairs.len()).rev() {
        remaining[k] = remaining[k + 1].clone();
        remaining[k][pairs[k].0] += 1;
        remaining[k][pairs[k].1] += 1;
    }
    let mut need = vec![d; n];
    let mut chosen = Vec::new();
    fn rec(
        k: usize,
        pairs: &[(usize, usize)],
        remaining: &[Vec<usize>],
        need: &mut [usize],
        chosen: &mut Vec<(usize, usize)>,
        visit: &mut dyn FnMut(&[(usize, usize)]),
    ) {
        if (0..need.len()).any(|v| need[v] > remaining[k][v]) {
            return;
        }
        if k == pairs.len() {
            visit(chosen);
            return;
        }
        let (i, j) = pairs[k];
        if need[i] > 0 && need[j] > 0 {
            need[i] -= 1;
            need[j] -= 1;
            chosen.push((i, j));
            rec(k + 1, pairs, remaining, need, chosen, visit);
            chosen.pop();
            need[i] += 1;
            need[j] += 1;
        }
        rec(k + 1, pairs, remaining, need, chosen, visit);
    }
    rec(0, &pairs, &remaining, &mut need, &mut chosen, &mut visit);
}

pub fn count_regular_edgewise(n: usize, d: usize) -> u64 {
    let mut c = 0;
    for_each_regular_edgewise(n, d, |_| c += 1);
    c
}

/// Perfect matchings by deleting the lowest vertex together with each of
/// its neighbours in turn.
pub fn pm_count_deletion(adj: &[Vec<bool>]) -> u64 {
    fn rec(adj: &[Vec<bool>], alive: &mut Vec<bool>) -> u64 {
        let Some(v) = alive.iter().position(|&a| a) else { return 1 };
        alive[v] = false;
        let mut total = 0;
        for u in 0..adj.len() {
            if alive[u] && adj[v][u] {
                alive[u] = false;
                total += rec(adj, alive);
                alive[u] = true;
            }
        }
        alive[v] = true;
        total
    }
    if adj.len() % 2 == 1 {
        return 0;
    }
    rec(adj, &mut vec![true; adj.len()])
}

/// Every perfect matching of the graph, as sorted edge lists.
pub fn perfect_matchings(adj: &[Vec<bool>]) -> Vec<Edges> {
    fn rec(adj: &[Vec<bool>], alive: &mut Vec<bool>, cur: &mut Edges, out: &mut Vec<Edges>) {
        let Some(v) = alive.iter().position(|&a| a) else {
            out.push(cur.clone());
            return;
        };
        alive[v] = false;
        for u in 0..adj.len() {
            if alive[u] && adj[v][u] {
                alive[u] = false;
                cur.push((v, u));
                rec(adj, alive, cur, out);
                cur.pop();
                alive[u] = true;
            }
        }
        alive[v] = true;
    }
    let mut out = Vec::new();
    if adj.len().is_multiple_of(2) {
        rec(adj, &mut vec![true; adj.len()], &mut Vec::new(), &mut out);
    }
    out
}

fn edge_bits(n: usize, edges: &[(usize, usize)]) -> u128 {
    edges.iter().fold(0u128, |acc, &(u, v)| {
        let (a, b) = (u.min(v), u.max(v));
        acc | 1u128 << (a * n + b - (a + 1) * (a + 2) / 2)
    })
}

/// Ordered sequences of `d` pairwise disjoint perfect matchings whose union
/// is the graph, by search over the graph's matchings.
pub fn ordered_one_factorisations_brute(n: usize, edges: &[(usize, usize)], d: usize) -> u64 {
    let pms: Vec<u128> = perfect_matchings(&adjacency(n, edges)).iter().map(|m| edge_bits(n, m)).collect();
    let full = edge_bits(n, edges);
    fn rec(pms: &[u128], used: u128, left: usize, full: u128) -> u64 {
        if left == 0 {
            return u64::from(used == full);
        }
        pms.iter().filter(|&&m| m & used == 0).map(|&m| rec(pms, used | m, left - 1, full)).sum()
    }
    rec(&pms, 0, d, full)
}

/// Permutations of `[n]` in Heap order.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Upper-triangle adjacency string of the relabeled graph.
fn adjacency_string(adj: &[Vec<bool>], p: &[usize]) -> Vec<bool> {
    let n = adj.len();
    let mut inv = vec![0; n];
    for (i, &v) in p.iter().enumerate() {
        inv[v] = i;
    }
    let mut s = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            s.push(adj[inv[i]][inv[j]]);
        }
    }
    s
}

/// Lexicographically least adjacency string over all relabelings.
pub fn brute_canonical(n: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let adj = adjacency(n, edges);
    let mut best: Option<Vec<bool>> = None;
    for_each_permutation(n, |p| {
        let s = adjacency_string(&adj, p);
        if best.as_ref().is_none_or(|b| s < *b) {
            best = Some(s);
        }
    });
    best.expect("at least one permutation")
}

pub fn brute_isomorphic(n: usize, a: &[(usize, usize)], b: &[(usize, usize)]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (aa, bb) = (adjacency(n, a), adjacency(n, b));
    let mut found = false;
    for_each_permutation(n, |p| {
        if !found && a.iter().all(|&(u, v)| bb[p[u]][p[v]]) {
            found = true;
        }
    });
    found && aa.len() == bb.len()
}

pub fn automorphism_count(n: usize, edges: &[(usize, usize)]) -> u64 {
    let adj = adjacency(n, edges);
    let mut c = 0;
    for_each_permutation(n, |p| {
        if edges.iter().all(|&(u, v)| adj[p[u]][p[v]]) {
            c += 1;
        }
    });
    c
}

/// The residual recursion in plain floating point over index-aligned
/// vectors. Returns every `Z_i` up to the first `k` with product `<= eps`.
pub fn scalar_zeta(mu: &[f64], nu: &[f64], eps: f64) -> Vec<f64> {
    let mut zeta = mu.to_vec();
    let mut z_prev = 1.0;
    let mut product = 1.0;
    let mut zs = Vec::new();
    loop {
        let next: Vec<f64> = zeta.iter().zip(nu).map(|(&a, &b)| (a / z_prev - (a / z_prev).min(b)).max(0.0)).collect();
        let z: f64 = next.iter().sum();
        zs.push(z);
        product *= z;
        if product <= eps + 1e-15 || z == 0.0 || zs.len() > 10_000 {
            return zs;
        }
        zeta = next;
        z_prev = z;
    }
}

/// `1/2 sum |p - q|` over two finitely supported rational laws.
pub fn rational_tv<K: std::hash::Hash + Eq + Clone>(p: &HashMap<K, BigRational>, q: &HashMap<K, BigRational>) -> BigRational {
    let mut acc = BigRational::zero();
    for (k, a) in p {
        acc += (a - q.get(k).cloned().unwrap_or_else(BigRational::zero)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            acc += b.clone();
        }
    }
    acc / BigRational::from_integer(BigInt::from(2))
}

fn normalize(w: HashMap<u128, u64>) -> HashMap<u128, BigRational> {
    let total: u64 = w.values().sum();
    w.into_iter().map(|(k, c)| (k, BigRational::new(BigInt::from(c), BigInt::from(total)))).collect()
}

/// `d_TV(mu_d + mu_1, mu_{d+1})` on `n` vertices: a `(d+1)`-regular graph
/// arises from `Y(G)` pairs (G - M, M), so the composed law weights it by
/// its perfect matching count.
pub fn extension_tv(n: usize, d: usize) -> BigRational {
    let mut weights = HashMap::new();
    let mut uniform = HashMap::new();
    for_each_regular_edgewise(n, d + 1, |e| {
        let key = edge_bits(n, e);
        weights.insert(key, pm_count_deletion(&adjacency(n, e)));
        uniform.insert(key, 1);
    });
    rational_tv(&normalize(weights), &normalize(uniform))
}

/// `d_TV(mu_3 + nu_2, mu_5)` on 8 vertices. `nu_2` charges a 2-regular graph
/// by its ordered pairs of disjoint matchings, so a 5-regular `G` gets weight
/// equal to the number of ordered disjoint matching pairs inside it.
pub fn mu3_nu2_vs_mu5_tv() -> BigRational {
    let n = 8;
    let mut weights = HashMap::new();
    let mut uniform = HashMap::new();
    for_each_regular_edgewise(n, 5, |e| {
        let pms: Vec<u128> = perfect_matchings(&adjacency(n, e)).iter().map(|m| edge_bits(n, m)).collect();
        let mut pairs = 0u64;
        for &a in &pms {
            for &b in &pms {
                if a & b == 0 {
                    pairs += 1;
                }
            }
        }
        let key = edge_bits(n, e);
        weights.insert(key, pairs);
        uniform.insert(key, 1);
    });
    rational_tv(&normalize(weights), &normalize(uniform))
}

/// Upper tail of chi-square by Simpson integration of the density, for
/// small degrees of freedom.
pub fn chi_square_sf_quadrature(x: f64, dof: usize) -> f64 {
    let k = dof as f64 / 2.0;
    let ln_gamma_k = ln_gamma_integer_or_half(dof);
    // integrate the lower part on [0, x] with a substitution t = s^2 that
    // removes the square-root singularity at zero for one degree of freedom
    let scale = (2f64.ln() - k * 2f64.ln() - ln_gamma_k).exp();
    let f = |s: f64| scale * s.powf(2.0 * k - 1.0) * (-s * s / 2.0).exp();
    let steps = 200_000;
    let smax = x.sqrt();
    let h = smax / steps as f64;
    let mut acc = f(0.0) + f(smax);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - acc * h / 3.0
}

fn ln_gamma_integer_or_half(dof: usize) -> f64 {
    // Gamma(dof / 2) from Gamma(1) = 1 and Gamma(1/2) = sqrt(pi)
    let mut v = if dof.is_multiple_of(2) { 0.0 } else { 0.5 * std::f64::consts::PI.ln() };
    let mut a = if dof.is_multiple_of(2) { 1.0 } else { 0.5 };
    while a < dof as f64 / 2.0 {
        v += a.ln();
        a += 1.0;
    }
    v
}

/// Number of `d`-regular graphs on `[n]` containing every edge in each of
/// the `patterns`, one count per pattern.
pub fn tally_containing(n: usize, d: usize, patterns: &[&[(usize, usize)]]) -> Vec<u64> {
    let mut counts = vec![0u64; patterns.len()];
    for_each_regular_edgewise(n, d, |e| {
        for (c, p) in counts.iter_mut().zip(patterns) {
            if p.iter().all(|&(u, v)| e.contains(&(u.min(v), u.max(v)))) {
                *c += 1;
            }
        }
    });
    counts
}
