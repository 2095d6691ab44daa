//! Distance between a uniform `d`-regular graph plus one disjoint perfect
//! matching and a uniform `(d+1)`-regular graph.
//!
//! The law of `G_d + M` charges each `(d+1)`-regular graph in proportion to
//! its number `Y` of perfect matchings, so the distance is
//! `1/2 E|Y / E[Y] - 1|` under the uniform `(d+1)`-regular law. The explicit
//! construction pairs `S = {(G_d, G_{d+1}) : G_d in G_{d+1}}` with
//! `T = G_{d+1}(n)`; the transport coupling of the uniform laws on `S` and
//! `T` misses an edge with probability exactly that distance.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::config::Caps;
use crate::counting::{count_perfect_matchings_with, for_each_perfect_matching};
use crate::coupling::strassen::{strassen_coupling, BipartiteGraph};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::measure::to_f64;
use crate::oracle::{count_labeled_regular, enumerate_regular, exact_distribution, for_each_regular_rooted, MeasureExpr};
use crate::samplers::{sample_regular, try_par_trials};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionMethod {
    /// Bipartite graph built vertex by vertex; distance also computed from the
    /// oracle's composed law.
    Explicit,
    /// Relabeling-invariant tally over graphs with a fixed neighbourhood of
    /// vertex 0.
    RootedHistogram,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub n: usize,
    pub d: usize,
    pub method: ExtensionMethod,
    /// Exact distance as a reduced fraction (absent for Monte Carlo).
    pub tv: Option<String>,
    pub tv_f64: f64,
    /// Standard error of `tv_f64` (Monte Carlo only).
    pub tv_se: Option<f64>,
    /// Edge-miss probability of the max-flow coupling (explicit path only).
    pub strassen_violation: Option<String>,
    pub strassen_bound: f64,
    pub strassen_epsilon: f64,
    pub strassen_delta: f64,
    pub trials: Option<u64>,
}

/// `1/2 sum_y c_y |y N - SY| / (SY N)` over a histogram `y -> c_y`.
fn tv_from_histogram(hist: &BTreeMap<u64, u64>) -> Result<BigRational> {
    let n: BigInt = hist.values().map(|&c| BigInt::from(c)).sum();
    let sy: BigInt = hist.iter().map(|(&y, &c)| BigInt::from(y) * BigInt::from(c)).sum();
    if sy.is_zero() {
        return Err(Error::EmptySupport);
    }
    let mut acc = BigInt::zero();
    for (&y, &c) in hist {
        let diff = BigInt::from(y) * &n - &sy;
        acc += BigInt::from(c) * if diff < BigInt::zero() { -diff } else { diff };
    }
    Ok(BigRational::new(acc, BigInt::from(2) * sy * n))
}

/// Degree-profile bound for the pair graph: every pair has degree one, so
/// only the `T` side (degrees `y` with weights `c_y`) can be low.
fn bound_from_histogram(hist: &BTreeMap<u64, f64>) -> (f64, f64, f64) {
    let total: f64 = hist.values().sum();
    let mean: f64 = hist.iter().map(|(&y, &c)| y as f64 * c).sum::<f64>() / total;
    let mut candidates = vec![0.0];
    candidates.extend(hist.keys().map(|&y| 1.0 - y as f64 / mean).filter(|&e| e > 0.0 && e < 1.0));
    candidates
        .into_iter()
        .map(|eps| {
            // strict "<" with a tolerance so the vertex defining eps is not low
            let low: f64 = hist.iter().filter(|(&y, _)| (y as f64) < (1.0 - eps) * mean * (1.0 - 1e-12)).map(|(_, c)| c).sum();
            let delta = low / total;
            (eps, delta, 2.0 * delta + eps / (1.0 - eps))
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("zero candidate")
}

/// Exact distance at oracle scale. Builds the pair graph explicitly when
/// `G_{d+1}(n)` fits the support cap, otherwise tallies perfect-matching
/// counts over the rooted slice.
pub fn matching_extension_exact(n: usize, d: usize, caps: &Caps) -> Result<ExtensionReport> {
    caps.check_oracle_n(n)?;
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    if d == 0 || d + 1 >= n {
        return Err(Error::InvalidDegree { n, d });
    }
    let fits = count_labeled_regular(n, d + 1) <= caps.oracle_max_support.into();
    if fits {
        explicit(n, d, caps)
    } else {
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        for_each_regular_rooted(n, d + 1, |rows| {
            let y = count_perfect_matchings_with(&Graph::from_rows(rows.to_vec()), caps).expect("within cap");
            *hist.entry(y).or_default() += 1;
        });
        let tv = tv_from_histogram(&hist)?;
        let (eps, delta, bound) = bound_from_histogram(&hist.iter().map(|(&y, &c)| (y, c as f64)).collect());
        Ok(ExtensionReport {
            n,
            d,
            method: ExtensionMethod::RootedHistogram,
            tv_f64: to_f64(&tv),
            tv: Some(tv.to_string()),
            tv_se: None,
            strassen_violation: None,
            strassen_bound: bound,
            strassen_epsilon: eps,
            strassen_delta: delta,
            trials: None,
        })
    }
}

fn explicit(n: usize, d: usize, caps: &Caps) -> Result<ExtensionReport> {
    let targets = enumerate_regular(n, d + 1, caps)?;
    let mut adj: Vec<Vec<usize>> = Vec::new();
    for (t, g) in targets.iter().enumerate() {
        for_each_perfect_matching(g.rows().expect("oracle n is dense"), |_| adj.push(vec![t]));
        if adj.len() > caps.oracle_max_support {
            return Err(Error::CapExceeded { what: "pair graph size", value: adj.len(), cap: caps.oracle_max_support });
        }
    }
    let h = BipartiteGraph::new(adj.len(), targets.len(), adj)?;
    let report = strassen_coupling(&h)?;
    let composed = exact_distribution(&format!("mu{d}+mu1").parse::<MeasureExpr>()?, n, caps)?;
    let tv = composed.exact_tv(&exact_distribution(&MeasureExpr::mu(d + 1), n, caps)?)?;
    Ok(ExtensionReport {
        n,
        d,
        method: ExtensionMethod::Explicit,
        tv_f64: to_f64(&tv),
        tv: Some(tv.to_string()),
        tv_se: None,
        strassen_violation: Some(report.violation.clone()),
        strassen_bound: report.bound,
        strassen_epsilon: report.epsilon,
        strassen_delta: report.delta,
        trials: None,
    })
}

/// Monte Carlo estimate from `trials` uniform `(d+1)`-regular graphs: the
/// distance is estimated by `1/2 mean |Y / mean(Y) - 1|`.
pub fn matching_extension_mc(n: usize, d: usize, trials: u64, seed: u64, caps: &Caps) -> Result<ExtensionReport> {
    if n > caps.pm_max_n {
        return Err(Error::CapExceeded { what: "perfect matching vertex count", value: n, cap: caps.pm_max_n });
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed".into()));
    }
    let ys: Vec<u64> = try_par_trials(seed, 10, trials, |rng| {
        let g = sample_regular(n, d + 1, rng, caps)?;
        count_perfect_matchings_with(&g, caps)
    })?;
    let mean = ys.iter().map(|&y| y as f64).sum::<f64>() / ys.len() as f64;
    if mean == 0.0 {
        return Err(Error::EmptySupport);
    }
    let dev: Vec<f64> = ys.iter().map(|&y| 0.5 * (y as f64 / mean - 1.0).abs()).collect();
    let (tv, se) = crate::stats::mean_and_se(&dev);
    let mut hist: BTreeMap<u64, f64> = BTreeMap::new();
    for &y in &ys {
        *hist.entry(y).or_default() += 1.0;
    }
    let (eps, delta, bound) = bound_from_histogram(&hist);
    Ok(ExtensionReport {
        n,
        d,
        method: ExtensionMethod::MonteCarlo,
        tv: None,
        tv_f64: tv,
        tv_se: Some(se),
        strassen_violation: None,
        strassen_bound: bound,
        strassen_epsilon: eps,
        strassen_delta: delta,
        trials: Some(trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_vertices_forced() {
        let r = matching_extension_exact(4, 2, &Caps::default()).unwrap();
        assert_eq!(r.tv.as_deref(), Some("0"));
        assert_eq!(r.strassen_violation.as_deref(), Some("0"));
        assert_eq!(r.method, ExtensionMethod::Explicit);
    }

    #[test]
    fn histogram_distance() {
        let hist: BTreeMap<u64, u64> = [(1, 1), (3, 1)].into();
        // masses 1/4, 3/4 against 1/2, 1/2
        assert_eq!(tv_from_histogram(&hist).unwrap(), BigRational::new(1.into(), 4.into()));
        let flat: BTreeMap<u64, u64> = [(5, 7)].into();
        assert!(tv_from_histogram(&flat).unwrap().is_zero());
    }
}
