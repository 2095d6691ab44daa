//! Coupled pairs `(G_1, G_2)` with `G_1 ~ mu_{d1}`, `G_2 ~ mu_{d2}` and
//! `G_1` a subgraph of `G_2` as often as the construction allows.
//!
//! Both cases go through a carrier law `C` on `d2`-regular graphs built from
//! a composition, and three links:
//!
//! 1. a source graph (`G_1` itself, or the matching union `G_oplus` that
//!    contains it) is placed inside a carrier draw `G' ~ C` by a max-flow
//!    transport coupling over the inclusion relation;
//! 2. `G'` is maximally coupled with `G_2 ~ mu_{d2}`.
//!
//! Growing case: source `mu_{d1}`, carrier `mu_{d1} + nu_{d2 - d1}`.
//! Constant case: `G_1` and `G_oplus ~ nu_{k d1}` come from the complete
//! coupler, and the carrier is `nu_{d2 - s} + mu_s` for the split point `s`.
//!
//! Inclusion fails only on the transport's unrouted mass or on the
//! disagreement event of the maximal coupling, so
//! `P(G_1 in G_2) >= 1 - miss - d_TV(C, mu_{d2})`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use serde::Serialize;

use crate::canon::{canonical_key, CanonicalKey};
use crate::config::Caps;
use crate::coupling::complete::CompleteCoupler;
use crate::coupling::maximal::maximal_coupling;
use crate::coupling::strassen::{transport_coupling, BipartiteGraph};
use crate::coupling::{common_denominator, Conditional};
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph};
use crate::measure::{to_f64, FiniteMeasure, Sampler};
use crate::oracle::{beta_weight, class_distribution, exact_distribution, Distribution, MeasureExpr};
use crate::samplers::try_par_trials;
use crate::stats::{chi_square_gof, wilson_interval, GofReport, EXPECTED_FLOOR};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum InclusionCase {
    /// `d1` growing: the carrier is `mu_{d1} + nu_{d2 - d1}`.
    Growing,
    /// `d1` constant: `G_1` enters through `k d1` matchings; `split` is the
    /// uniform part of the carrier (default `d2 / 2`).
    Constant { epsilon: f64, split: Option<usize> },
}

/// Largest `|source| * |carrier|` pair scan.
const PAIR_SCAN_CAP: usize = 500_000_000;

/// Build-once state of a pipeline.
pub struct InclusionPipeline {
    n: usize,
    d1: usize,
    d2: usize,
    case: InclusionCase,
    complete: Option<CompleteCoupler>,
    split: Option<usize>,
    carrier_expr: String,
    carrier: Sampler<EdgeSet>,
    source_sampler: Sampler<EdgeSet>,
    /// Source given carrier (growing case).
    embed_given_carrier: Conditional<EdgeSet, EdgeSet>,
    /// Carrier given source (constant case).
    embed_given_source: Conditional<EdgeSet, EdgeSet>,
    align: Conditional<EdgeSet, EdgeSet>,
    carrier_tv: BigRational,
    embed_miss: BigRational,
    identification_tv: Option<BigRational>,
    mu1_classes: Vec<(CanonicalKey, f64)>,
}

/// One coupled pair.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionDraw {
    pub g1: Graph,
    pub carrier: Graph,
    pub g2: Graph,
    /// Constant case: whether the complete coupler hit.
    pub hit: Option<bool>,
}

impl InclusionDraw {
    pub fn included(&self) -> bool {
        self.g1.is_subgraph_of(&self.g2)
    }
}

fn embed(source: &Distribution, carrier: &Distribution) -> Result<crate::coupling::CouplingTable<EdgeSet, EdgeSet>> {
    let left: Vec<EdgeSet> = source.support().collect();
    let right: Vec<EdgeSet> = carrier.support().collect();
    if left.len().saturating_mul(right.len()) > PAIR_SCAN_CAP {
        return Err(Error::CapExceeded { what: "inclusion pair scan", value: left.len().saturating_mul(right.len()), cap: PAIR_SCAN_CAP });
    }
    let adj = left.iter().map(|&a| right.iter().enumerate().filter(|(_, b)| b.contains(a)).map(|(j, _)| j).collect()).collect();
    let h = BipartiteGraph::new(left.len(), right.len(), adj)?;
    let (p, q) = (source.to_measure(), carrier.to_measure());
    let (_, nums) = common_denominator(&[&p, &q])?;
    let lw: Vec<u128> = left.iter().map(|k| nums[0][k]).collect();
    let rw: Vec<u128> = right.iter().map(|k| nums[1][k]).collect();
    let t = transport_coupling(&h, &lw, &rw)?;
    // back from indices to graphs
    let cells = t.cells().map(|(&(i, j), &m)| ((left[i], right[j]), m)).collect();
    let lr = t.left_residual().iter().map(|(&i, &m)| (left[i], m)).collect();
    let rr = t.right_residual().iter().map(|(&j, &m)| (right[j], m)).collect();
    crate::coupling::CouplingTable::new(t.denominator(), nums[0].clone(), nums[1].clone(), cells, lr, rr)
}

impl InclusionPipeline {
    pub fn new(n: usize, d1: usize, d2: usize, case: InclusionCase, caps: &Caps) -> Result<Self> {
        if n % 2 == 1 {
            return Err(Error::OddN(n));
        }
        if d1 == 0 || d1 > d2 || d2 >= n {
            return Err(Error::InvalidArgument(format!("need 1 <= d1 <= d2 < n, got d1={d1}, d2={d2}, n={n}")));
        }
        let target = exact_distribution(&MeasureExpr::mu(d2), n, caps)?;
        let mu1 = exact_distribution(&MeasureExpr::mu(d1), n, caps)?;
        let (complete, split, source, carrier_expr) = match &case {
            InclusionCase::Growing => {
                let expr = if d1 == d2 { format!("mu{d2}") } else { format!("mu{d1}+nu{}", d2 - d1) };
                (None, None, mu1.clone(), expr)
            }
            InclusionCase::Constant { epsilon, split } => {
                let c = CompleteCoupler::new(n, d1, *epsilon, caps)?;
                let kd = c.k() * d1;
                let s = split.unwrap_or(d2 / 2);
                if kd + s > d2 {
                    return Err(Error::InvalidArgument(format!("k d1 = {kd} matchings do not fit beside a uniform part of degree {s} in {d2}")));
                }
                let expr = match (d2 - s, s) {
                    (m, 0) => format!("nu{m}"),
                    (m, s) => format!("nu{m}+mu{s}"),
                };
                let source = exact_distribution(&MeasureExpr::nu(kd), n, caps)?;
                (Some(c), Some(s), source, expr)
            }
        };
        let carrier = exact_distribution(&carrier_expr.parse::<MeasureExpr>()?, n, caps)?;
        let table = embed(&source, &carrier)?;
        let embed_miss = table.residual_mass();
        let align_table = maximal_coupling(&carrier.to_measure(), &target.to_measure())?;
        let carrier_tv = carrier.exact_tv(&target)?;
        let identification_tv = match (&case, d1 < d2) {
            (InclusionCase::Growing, true) => {
                let tail = exact_distribution(&MeasureExpr::nu(d2 - d1), n, caps)?;
                let betas: Vec<(EdgeSet, BigRational)> =
                    mu1.graphs().map(|g| Ok((g.edge_set().expect("oracle n"), beta_weight(&g, &tail)?))).collect::<Result<_>>()?;
                let total: BigRational = betas.iter().map(|(_, b)| b.clone()).sum();
                let tau = FiniteMeasure::new(betas.into_iter().map(|(k, b)| (k, b / &total)))?;
                Some(mu1.to_measure().tv(&tau))
            }
            _ => None,
        };
        let mu1_classes = class_distribution(&mu1)?.entries.into_iter().map(|e| (e.key, to_f64(&e.mass))).collect();
        Ok(InclusionPipeline {
            n,
            d1,
            d2,
            case,
            complete,
            split,
            carrier_expr,
            carrier: carrier.to_measure().sampler(),
            source_sampler: source.to_measure().sampler(),
            embed_given_carrier: table.given_right(),
            embed_given_source: table.given_left(),
            align: align_table.given_left(),
            carrier_tv,
            embed_miss,
            identification_tv,
            mu1_classes,
        })
    }

    /// `1 - miss - d_TV(carrier, mu_{d2})`.
    pub fn guaranteed_inclusion(&self) -> BigRational {
        BigRational::one() - &self.embed_miss - &self.carrier_tv
    }

    pub fn carrier_tv(&self) -> &BigRational {
        &self.carrier_tv
    }

    pub fn embed_miss(&self) -> &BigRational {
        &self.embed_miss
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<InclusionDraw> {
        let n = self.n;
        let (g1, carrier, hit) = match &self.complete {
            None => {
                let c = *self.carrier.sample(rng);
                let g1 = self.embed_given_carrier.sample(&c, rng);
                (Graph::from_edge_set(n, g1), c, None)
            }
            Some(coupler) => {
                let d = coupler.draw(rng)?;
                let c = self.embed_given_source.sample(&d.g_oplus.edge_set().expect("oracle n"), rng);
                (d.g.clone(), c, Some(d.hit.is_some()))
            }
        };
        let g2 = self.align.sample(&carrier, rng);
        Ok(InclusionDraw { g1, carrier: Graph::from_edge_set(n, carrier), g2: Graph::from_edge_set(n, g2), hit })
    }

    /// Draws from the source law directly (for calibration of the marginal
    /// test).
    pub fn draw_source<R: Rng + ?Sized>(&self, rng: &mut R) -> Graph {
        Graph::from_edge_set(self.n, *self.source_sampler.sample(rng))
    }

    /// Class-level chi-square of `G_1` draws against the class law of
    /// `mu_{d1}`. Classes with expected count under the floor are pooled
    /// into one cell.
    pub fn marginal_test(&self, g1s: &[Graph]) -> Result<GofReport> {
        let mut counts: BTreeMap<CanonicalKey, u64> = BTreeMap::new();
        for g in g1s {
            *counts.entry(canonical_key(g)?).or_default() += 1;
        }
        let total = g1s.len() as f64;
        let (mut obs, mut probs) = (Vec::new(), Vec::new());
        let (mut pooled_obs, mut pooled_p) = (0u64, 0.0);
        for (key, p) in &self.mu1_classes {
            let c = counts.remove(key).unwrap_or(0);
            if p * total < EXPECTED_FLOOR {
                pooled_obs += c;
                pooled_p += p;
            } else {
                obs.push(c);
                probs.push(*p);
            }
        }
        if !counts.is_empty() {
            return Err(Error::InvalidArgument("G_1 left the support of mu_d1".into()));
        }
        if pooled_p > 0.0 {
            obs.push(pooled_obs);
            probs.push(pooled_p);
        }
        chi_square_gof(&obs, &probs)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    #[serde(flatten)]
    pub case: InclusionCase,
    pub carrier: String,
    pub split: Option<usize>,
    pub k: Option<usize>,
    pub trials: u64,
    pub seed: u64,
    pub inclusions: u64,
    pub inclusion_rate: f64,
    pub inclusion_se: f64,
    pub wilson_99: (f64, f64),
    /// Exact `d_TV(carrier, mu_{d2})` as a reduced fraction, and as a float.
    pub carrier_tv: String,
    pub carrier_tv_f64: f64,
    /// Unrouted mass of the transport link.
    pub embed_miss: f64,
    pub guaranteed_inclusion: f64,
    /// Growing case: distance between `mu_{d1}` and the first marginal of the
    /// carrier, i.e. the failure mass of identifying `G_1` with the first
    /// component of `G'` instead of transporting it.
    pub identification_tv: Option<f64>,
    pub hits: Option<u64>,
    pub marginal: Option<GofReport>,
}

/// `trials` coupled pairs on block 20.
pub fn run_inclusion(pipeline: &InclusionPipeline, trials: u64, seed: u64) -> Result<(InclusionReport, Vec<InclusionDraw>)> {
    let draws = try_par_trials(seed, 20, trials, |rng| pipeline.draw(rng))?;
    let inclusions = draws.iter().filter(|d| d.included()).count() as u64;
    let p = inclusions as f64 / trials.max(1) as f64;
    let g1s: Vec<Graph> = draws.iter().map(|d| d.g1.clone()).collect();
    let marginal = match pipeline.marginal_test(&g1s) {
        Ok(r) => Some(r),
        Err(Error::SparseCells(_)) => None,
        Err(e) => return Err(e),
    };
    let hits = pipeline.complete.as_ref().map(|_| draws.iter().filter(|d| d.hit == Some(true)).count() as u64);
    let report = InclusionReport {
        n: pipeline.n,
        d1: pipeline.d1,
        d2: pipeline.d2,
        case: pipeline.case.clone(),
        carrier: pipeline.carrier_expr.clone(),
        split: pipeline.split,
        k: pipeline.complete.as_ref().map(CompleteCoupler::k),
        trials,
        seed,
        inclusions,
        inclusion_rate: p,
        inclusion_se: (p * (1.0 - p) / trials.max(1) as f64).sqrt(),
        wilson_99: wilson_interval(inclusions, trials, 2.5758),
        carrier_tv: pipeline.carrier_tv.to_string(),
        carrier_tv_f64: to_f64(&pipeline.carrier_tv),
        embed_miss: to_f64(&pipeline.embed_miss),
        guaranteed_inclusion: to_f64(&pipeline.guaranteed_inclusion()),
        identification_tv: pipeline.identification_tv.as_ref().map(to_f64),
        hits,
        marginal,
    };
    Ok((report, draws))
}

/// Growing-case pipeline with `trials` coupled pairs.
pub fn inclusion_pipeline(n: usize, d1: usize, d2: usize, trials: u64, seed: u64, caps: &Caps) -> Result<InclusionReport> {
    let p = InclusionPipeline::new(n, d1, d2, InclusionCase::Growing, caps)?;
    Ok(run_inclusion(&p, trials, seed)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn four_vertices_forced() {
        let caps = Caps::default();
        let p = InclusionPipeline::new(4, 2, 3, InclusionCase::Growing, &caps).unwrap();
        assert!(p.carrier_tv().is_zero());
        assert!(p.embed_miss().is_zero());
        let (r, _) = run_inclusion(&p, 200, 1).unwrap();
        assert_eq!(r.inclusions, 200);
    }
}
