//! Coupling of a uniform `d`-regular graph `G` with a union `G_oplus` of `kd`
//! disjoint perfect matchings such that `G` is a subgraph of `G_oplus` with
//! probability at least `1 - epsilon`.
//!
//! The class of `G` and the classes of the procedure's blocks come from the
//! zeta sampler; `G` is a uniform member of its class, and on a hit at block
//! `j` the `j`-th representative is set to `G` with the others drawn
//! disjoint from it. The union has the procedure's law, which is then
//! maximally coupled with `nu_{kd}` (the identity whenever the two laws
//! agree, as they do for `k = 1` or `d = 1`).

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::canon::CanonicalKey;
use crate::config::Caps;
use crate::coupling::asp::{exact_eta, uniform_relabel, AspSampler, ClassSource};
use crate::coupling::maximal::maximal_coupling;
use crate::coupling::zeta::{zeta_coupling, ZetaSampler, ZetaSummary};
use crate::coupling::Conditional;
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph};
use crate::oracle::{class_distribution, exact_distribution, MeasureExpr};

#[derive(Clone, Debug, PartialEq)]
pub struct CompleteDraw {
    pub g: Graph,
    /// Union produced by the procedure.
    pub g_asp: Graph,
    /// Its partner under the final alignment; distributed as `nu_{kd}`.
    pub g_oplus: Graph,
    /// 1-based block index at which the zeta sampler hit, if it did.
    pub hit: Option<usize>,
}

impl CompleteDraw {
    pub fn included(&self) -> bool {
        self.g.is_subgraph_of(&self.g_oplus)
    }
}

enum Alignment {
    Identity,
    Maximal(Conditional<EdgeSet, EdgeSet>),
}

pub struct CompleteCoupler {
    n: usize,
    d: usize,
    k: usize,
    zeta: ZetaSampler<CanonicalKey>,
    summary: ZetaSummary,
    asp: AspSampler,
    alignment: Alignment,
}

impl CompleteCoupler {
    /// Exact class laws are required, so `G_d(n)` must be within oracle caps.
    pub fn new(n: usize, d: usize, epsilon: f64, caps: &Caps) -> Result<Self> {
        let mu_bar = class_distribution(&exact_distribution(&MeasureExpr::mu(d), n, caps)?)?;
        let nu_bar = class_distribution(&exact_distribution(&MeasureExpr::nu(d), n, caps)?)?;
        let trace = zeta_coupling(&mu_bar.to_measure(), &nu_bar.to_measure(), epsilon, caps)?;
        let k = trace.k;
        if k * d > n - 1 {
            return Err(Error::InvalidDegree { n, d: k * d });
        }
        let zeta = ZetaSampler::new(&trace, &nu_bar.to_measure())?;
        let asp = AspSampler::with_source(n, d, k, ClassSource::Exact(nu_bar), caps)?;
        let alignment = if k == 1 || d == 1 {
            Alignment::Identity
        } else {
            let eta = exact_eta(n, d, k, caps)?;
            let nu = exact_distribution(&MeasureExpr::nu(k * d), n, caps)?;
            if eta.exact_tv(&nu)?.is_zero() {
                Alignment::Identity
            } else {
                Alignment::Maximal(maximal_coupling(&eta.to_measure(), &nu.to_measure())?.given_left())
            }
        };
        Ok(CompleteCoupler { n, d, k, zeta, summary: trace.summary(), asp, alignment })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn trace(&self) -> &ZetaSummary {
        &self.summary
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CompleteDraw> {
        let z = self.zeta.sample(rng);
        let g = uniform_relabel(&z.x.to_graph(), rng);
        let fixed = z.hit.map(|j| (j - 1, &g));
        let parts = self.asp.representatives(&z.ys, fixed, rng)?;
        let g_asp = parts.iter().try_fold(Graph::empty(self.n), |acc, h| acc.union_disjoint(h))?;
        let g_oplus = match &self.alignment {
            Alignment::Identity => g_asp.clone(),
            Alignment::Maximal(c) => {
                Graph::from_edge_set(self.n, c.sample(&g_asp.edge_set().expect("oracle n"), rng))
            }
        };
        Ok(CompleteDraw { g, g_asp, g_oplus, hit: z.hit })
    }
}

/// One coupled draw `(G, G_oplus, hit)`. Builds the coupler on every call;
/// use [`CompleteCoupler`] for repeated draws.
pub fn complete_couple<R: Rng + ?Sized>(n: usize, d: usize, epsilon: f64, rng: &mut R, caps: &Caps) -> Result<(Graph, Graph, bool)> {
    let draw = CompleteCoupler::new(n, d, epsilon, caps)?.draw(rng)?;
    let hit = draw.hit.is_some();
    Ok((draw.g, draw.g_oplus, hit))
}

#[derive(Clone, Debug, Serialize)]
pub struct CompleteReport {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub k: usize,
    pub zeta: ZetaSummary,
    pub trials: u64,
    pub seed: u64,
    pub inclusions: u64,
    pub hits: u64,
    pub inclusion_rate: f64,
    pub inclusion_se: f64,
}

/// `trials` coupled draws on block 21.
pub fn complete_experiment(n: usize, d: usize, epsilon: f64, trials: u64, seed: u64, caps: &Caps) -> Result<(CompleteReport, Vec<CompleteDraw>)> {
    let coupler = CompleteCoupler::new(n, d, epsilon, caps)?;
    let draws = crate::samplers::try_par_trials(seed, 21, trials, |rng| coupler.draw(rng))?;
    let inclusions = draws.iter().filter(|d| d.included()).count() as u64;
    let hits = draws.iter().filter(|d| d.hit.is_some()).count() as u64;
    let p = inclusions as f64 / trials as f64;
    let report = CompleteReport {
        n,
        d,
        epsilon,
        k: coupler.k,
        zeta: coupler.summary.clone(),
        trials,
        seed,
        inclusions,
        hits,
        inclusion_rate: p,
        inclusion_se: (p * (1.0 - p) / trials as f64).sqrt(),
    };
    Ok((report, draws))
}
