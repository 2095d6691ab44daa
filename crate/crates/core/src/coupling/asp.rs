//! Alternative sampling procedure: `k` isomorphism classes drawn i.i.d. from
//! the class law of `nu_d`, then one representative per class, uniform and
//! conditioned pairwise edge-disjoint.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::canon::{canonical_key, CanonicalKey};
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph};
use crate::measure::{FiniteMeasure, Sampler};
use crate::oracle::{class_distribution, count_labeled_regular, exact_distribution, ClassDistribution, Distribution, MeasureExpr};
use crate::samplers::sample_nu;

/// Where class draws come from.
#[derive(Clone, Debug)]
pub enum ClassSource {
    /// Exact class law of `nu_d` from the oracle.
    Exact(ClassDistribution),
    /// Canonical key of a fresh `nu_d` draw.
    Sampled,
}

impl ClassSource {
    /// Exact when the oracle can enumerate `G_d(n)`, sampled otherwise.
    pub fn for_params(n: usize, d: usize, caps: &Caps) -> Result<Self> {
        let fits = n <= caps.oracle_max_n && count_labeled_regular(n, d) <= caps.oracle_max_support.into();
        if fits {
            Ok(ClassSource::Exact(class_distribution(&exact_distribution(&MeasureExpr::nu(d), n, caps)?)?))
        } else {
            Ok(ClassSource::Sampled)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AspSample {
    pub graph: Graph,
    pub classes: Vec<CanonicalKey>,
    pub parts: Vec<Graph>,
}

pub struct AspSampler {
    n: usize,
    d: usize,
    k: usize,
    source: ClassSource,
    class_sampler: Option<Sampler<CanonicalKey>>,
    caps: Caps,
}

/// Uniform member of the isomorphism class of `g`: a uniform relabeling.
pub fn uniform_relabel<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Graph {
    let mut sigma: Vec<usize> = (0..g.n()).collect();
    sigma.shuffle(rng);
    g.relabel(&sigma).expect("shuffle is a permutation")
}

impl AspSampler {
    pub fn new(n: usize, d: usize, k: usize, caps: &Caps) -> Result<Self> {
        Self::check(n, d, k)?;
        Self::with_source(n, d, k, ClassSource::for_params(n, d, caps)?, caps)
    }

    pub fn with_source(n: usize, d: usize, k: usize, source: ClassSource, caps: &Caps) -> Result<Self> {
        Self::check(n, d, k)?;
        let class_sampler = match &source {
            ClassSource::Exact(c) => {
                Some(FiniteMeasure::new(c.entries.iter().map(|e| (e.key.clone(), e.mass.clone())))?.sampler())
            }
            ClassSource::Sampled => None,
        };
        Ok(AspSampler { n, d, k, source, class_sampler, caps: caps.clone() })
    }

    fn check(n: usize, d: usize, k: usize) -> Result<()> {
        if n % 2 == 1 {
            return Err(Error::OddN(n));
        }
        if d == 0 || k == 0 || k * d > n.saturating_sub(1) {
            return Err(Error::InvalidDegree { n, d: k * d });
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source(&self) -> &ClassSource {
        &self.source
    }

    pub fn draw_class<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CanonicalKey> {
        match &self.class_sampler {
            Some(s) => Ok(s.sample(rng).clone()),
            None => canonical_key(&sample_nu(self.n, self.d, rng, &self.caps)?.0),
        }
    }

    pub fn draw_classes<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<CanonicalKey>> {
        (0..self.k).map(|_| self.draw_class(rng)).collect()
    }

    /// Uniform representatives of `classes`, jointly redrawn until pairwise
    /// edge-disjoint. With `fixed = Some((j, g))` the `j`-th representative
    /// is pinned to `g` and the others are conditioned disjoint from it.
    pub fn representatives<R: Rng + ?Sized>(&self, classes: &[CanonicalKey], fixed: Option<(usize, &Graph)>, rng: &mut R) -> Result<Vec<Graph>> {
        let skeletons: Vec<Graph> = classes.iter().map(CanonicalKey::to_graph).collect();
        'attempt: for _ in 0..self.caps.rejection_budget {
            let mut union = Graph::empty(self.n);
            let mut parts = Vec::with_capacity(classes.len());
            for (j, s) in skeletons.iter().enumerate() {
                let h = match fixed {
                    Some((i, g)) if i == j => g.clone(),
                    _ => uniform_relabel(s, rng),
                };
                match union.union_disjoint(&h) {
                    Ok(u) => union = u,
                    Err(_) => continue 'attempt,
                }
                parts.push(h);
            }
            return Ok(parts);
        }
        Err(Error::RejectionBudgetExceeded(self.caps.rejection_budget))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AspSample> {
        let classes = self.draw_classes(rng)?;
        let parts = self.representatives(&classes, None, rng)?;
        let graph = parts.iter().try_fold(Graph::empty(self.n), |acc, h| acc.union_disjoint(h))?;
        Ok(AspSample { graph, classes, parts })
    }
}

/// One draw of the procedure: the union and the drawn classes.
pub fn asp_sample<R: Rng + ?Sized>(n: usize, d: usize, k: usize, rng: &mut R, caps: &Caps) -> Result<(Graph, Vec<CanonicalKey>)> {
    let s = AspSampler::new(n, d, k, caps)?.sample(rng)?;
    Ok((s.graph, s.classes))
}

/// Largest product of class sizes [`exact_eta`] will expand.
const ETA_TUPLE_CAP: u128 = 100_000_000;

/// Exact law of the procedure: the mixture over class tuples `(A_1..A_k)`
/// with weight `prod bar_nu(A_i)` of the composition of the uniform laws on
/// the classes. Fails with `EmptySupport` if some tuple of classes has no
/// edge-disjoint representatives (the procedure would not terminate).
pub fn exact_eta(n: usize, d: usize, k: usize, caps: &Caps) -> Result<Distribution> {
    AspSampler::check(n, d, k)?;
    let nu = exact_distribution(&MeasureExpr::nu(d), n, caps)?;
    let classes = class_distribution(&nu)?;
    let mut members: BTreeMap<CanonicalKey, Vec<EdgeSet>> = BTreeMap::new();
    for g in nu.support() {
        members.entry(canonical_key(&Graph::from_edge_set(n, g))?).or_default().push(g);
    }
    let m = classes.entries.len();
    let mut acc: BTreeMap<EdgeSet, BigRational> = BTreeMap::new();
    let mut tuple = vec![0usize; k];
    loop {
        let lists: Vec<&Vec<EdgeSet>> = tuple.iter().map(|&i| &members[&classes.entries[i].key]).collect();
        let work: u128 = lists.iter().map(|l| l.len() as u128).product();
        if work > ETA_TUPLE_CAP {
            return Err(Error::CapExceeded { what: "class tuple product", value: usize::try_from(work).unwrap_or(usize::MAX), cap: ETA_TUPLE_CAP as usize });
        }
        let mut counts: HashMap<EdgeSet, u64> = HashMap::new();
        extend(&lists, 0, EdgeSet(0), &mut counts);
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::EmptySupport);
        }
        let weight = tuple.iter().fold(BigRational::from_integer(1.into()), |w, &i| w * &classes.entries[i].mass);
        for (g, c) in counts {
            let add = &weight * BigRational::new(BigInt::from(c), BigInt::from(total));
            *acc.entry(g).or_insert_with(BigRational::zero) += add;
        }
        // next tuple in lexicographic order
        let mut pos = k;
        loop {
            if pos == 0 {
                return Distribution::from_measure(n, &FiniteMeasure::new(acc)?);
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < m {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

fn extend(lists: &[&Vec<EdgeSet>], j: usize, union: EdgeSet, counts: &mut HashMap<EdgeSet, u64>) {
    if j == lists.len() {
        *counts.entry(union).or_default() += 1;
        return;
    }
    for &h in lists[j] {
        if h.is_disjoint(union) {
            extend(lists, j + 1, union.union(h), counts);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn k4_forced() {
        let caps = Caps::default();
        let s = AspSampler::new(4, 1, 3, &caps).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(s.sample(&mut rng).unwrap().graph, Graph::complete(4));
        }
    }

    #[test]
    fn eta_for_matchings_is_nu() {
        let caps = Caps::default();
        let eta = exact_eta(6, 1, 2, &caps).unwrap();
        let nu = exact_distribution(&MeasureExpr::nu(2), 6, &caps).unwrap();
        assert!(eta.exact_tv(&nu).unwrap().is_zero());
    }

    #[test]
    fn rejects_overfull() {
        assert!(matches!(AspSampler::new(6, 3, 2, &Caps::default()), Err(Error::InvalidDegree { .. })));
    }
}
