use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::Value;

use crate::canon::{canonical_key, CanonicalKey};
use crate::config::Caps;
use crate::counting::count_one_factorisations_ordered;
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph, EDGE_SET_CAP};
use crate::measure::FiniteMeasure;
use crate::oracle::enumerate::{check_regular_params, enumerate_regular};
use crate::oracle::expr::{Atom, MeasureExpr};

/// Exact probability measure on labeled graphs over `[n]` (n <= 16), stored
/// as non-negative integer weights and their total. The mass of `G` is
/// `weight(G) / total`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    n: usize,
    weights: BTreeMap<EdgeSet, BigUint>,
    total: BigUint,
}

fn big_ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl Distribution {
    /// Zero weights are dropped; repeated keys accumulate.
    pub fn from_weights(n: usize, entries: impl IntoIterator<Item = (EdgeSet, BigUint)>) -> Result<Self> {
        if n > EDGE_SET_CAP {
            return Err(Error::CapExceeded { what: "distribution vertex count", value: n, cap: EDGE_SET_CAP });
        }
        let mut weights: BTreeMap<EdgeSet, BigUint> = BTreeMap::new();
        for (k, w) in entries {
            if !w.is_zero() {
                *weights.entry(k).or_insert_with(BigUint::zero) += w;
            }
        }
        let total: BigUint = weights.values().sum();
        if total.is_zero() {
            return Err(Error::EmptySupport);
        }
        Ok(Distribution { n, weights, total })
    }

    /// Integer weights over the least common denominator of `m`'s masses.
    pub fn from_measure(n: usize, m: &FiniteMeasure<EdgeSet>) -> Result<Self> {
        let lcm = m.iter().fold(BigInt::one(), |acc, (_, r)| acc.lcm(r.denom()));
        Self::from_weights(
            n,
            m.iter().map(|(k, r)| (*k, (r.numer() * (&lcm / r.denom())).to_biguint().expect("non-negative mass"))),
        )
    }

    pub fn uniform<'a>(n: usize, graphs: impl IntoIterator<Item = &'a Graph>) -> Result<Self> {
        Self::from_weights(n, graphs.into_iter().map(|g| (edge_set(g), BigUint::one())))
    }

    /// Point mass at `g`.
    pub fn point(g: &Graph) -> Result<Self> {
        Self::uniform(g.n(), [g])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> &BigUint {
        &self.total
    }

    pub fn weight(&self, g: EdgeSet) -> BigUint {
        self.weights.get(&g).cloned().unwrap_or_default()
    }

    pub fn mass(&self, g: EdgeSet) -> BigRational {
        big_ratio(self.weight(g), self.total.clone())
    }

    pub fn mass_of(&self, g: &Graph) -> BigRational {
        if g.n() != self.n {
            return BigRational::zero();
        }
        self.mass(edge_set(g))
    }

    /// Support with integer weights, ordered by edge list.
    pub fn iter(&self) -> impl Iterator<Item = (EdgeSet, &BigUint)> {
        self.weights.iter().map(|(k, w)| (*k, w))
    }

    pub fn support(&self) -> impl Iterator<Item = EdgeSet> + '_ {
        self.weights.keys().copied()
    }

    pub fn graphs(&self) -> impl Iterator<Item = Graph> + '_ {
        self.weights.keys().map(|&k| Graph::from_edge_set(self.n, k))
    }

    /// Rational sum of masses (always one).
    pub fn total_mass(&self) -> BigRational {
        self.weights.values().fold(BigRational::zero(), |acc, w| acc + big_ratio(w.clone(), self.total.clone()))
    }

    pub fn to_measure(&self) -> FiniteMeasure<EdgeSet> {
        FiniteMeasure::new(self.weights.iter().map(|(k, w)| (*k, big_ratio(w.clone(), self.total.clone()))))
            .expect("weights normalize to one")
    }

    /// `E[f(G)]`.
    pub fn expectation(&self, mut f: impl FnMut(&Graph) -> BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (k, w) in &self.weights {
            acc += f(&Graph::from_edge_set(self.n, *k)) * BigRational::from_integer(BigInt::from(w.clone()));
        }
        acc / BigRational::from_integer(BigInt::from(self.total.clone()))
    }

    /// Exact total variation distance, by cross-multiplying the integer
    /// weights over the union of supports.
    pub fn exact_tv(&self, other: &Distribution) -> Result<BigRational> {
        if self.n != other.n {
            return Err(Error::VertexCountMismatch(self.n, other.n));
        }
        let mut acc = BigUint::zero();
        let abs_diff = |a: BigUint, b: BigUint| if a >= b { a - b } else { b - a };
        for (k, w) in &self.weights {
            let p = w * &other.total;
            let q = other.weights.get(k).map(|v| v * &self.total).unwrap_or_default();
            acc += abs_diff(p, q);
        }
        for (k, v) in &other.weights {
            if !self.weights.contains_key(k) {
                acc += v * &self.total;
            }
        }
        let den = BigUint::from(2u32) * &self.total * &other.total;
        Ok(big_ratio(acc, den))
    }

    /// Edge-disjoint composition: the law of `G1 u G2` for independent
    /// `G1 ~ self`, `G2 ~ other` conditioned on being edge-disjoint. Also
    /// returns the probability that independent draws are edge-disjoint.
    pub fn oplus(&self, other: &Distribution) -> Result<(Distribution, BigRational)> {
        if self.n != other.n {
            return Err(Error::VertexCountMismatch(self.n, other.n));
        }
        let small = |d: &Distribution| d.weights.values().map(|w| w.to_u64()).collect::<Option<Vec<u64>>>();
        let acc: Vec<(EdgeSet, BigUint)> = match (small(self), small(other)) {
            (Some(wa), Some(wb)) => match oplus_u128(self, &wa, other, &wb) {
                Some(v) => v,
                None => oplus_big(self, other),
            },
            _ => oplus_big(self, other),
        };
        let joint_total: BigUint = acc.iter().map(|(_, w)| w).sum();
        let disjoint = big_ratio(joint_total.clone(), &self.total * &other.total);
        let dist = Distribution::from_weights(self.n, acc)?;
        Ok((dist, disjoint))
    }

    /// JSON array of `{graph, mass_num, mass_den}` in edge-list order, masses
    /// in lowest terms. Integers above `u64::MAX` are written as strings.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry {
            graph: String,
            mass_num: Value,
            mass_den: Value,
        }
        let entries: Vec<Entry> = self
            .weights
            .iter()
            .map(|(k, w)| {
                let g = w.gcd(&self.total);
                Entry {
                    graph: Graph::from_edge_set(self.n, *k).edge_list_string(),
                    mass_num: json_int(&(w / &g)),
                    mass_den: json_int(&(&self.total / &g)),
                }
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("plain data serializes")
    }
}

fn json_int(x: &BigUint) -> Value {
    match x.to_u64() {
        Some(v) => Value::from(v),
        None => Value::from(x.to_string()),
    }
}

fn oplus_u128(a: &Distribution, wa: &[u64], b: &Distribution, wb: &[u64]) -> Option<Vec<(EdgeSet, BigUint)>> {
    let kb: Vec<EdgeSet> = b.weights.keys().copied().collect();
    let mut acc: HashMap<u128, u128> = HashMap::new();
    for (ka, &x) in a.weights.keys().zip(wa) {
        for (kb, &y) in kb.iter().zip(wb) {
            if ka.is_disjoint(*kb) {
                let slot = acc.entry(ka.union(*kb).0).or_insert(0);
                *slot = slot.checked_add(x as u128 * y as u128)?;
            }
        }
    }
    Some(acc.into_iter().map(|(k, w)| (EdgeSet(k), BigUint::from(w))).collect())
}

fn oplus_big(a: &Distribution, b: &Distribution) -> Vec<(EdgeSet, BigUint)> {
    let mut acc: HashMap<EdgeSet, BigUint> = HashMap::new();
    for (ka, x) in &a.weights {
        for (kb, y) in &b.weights {
            if ka.is_disjoint(*kb) {
                *acc.entry(ka.union(*kb)).or_default() += x * y;
            }
        }
    }
    acc.into_iter().collect()
}

pub(crate) fn edge_set(g: &Graph) -> EdgeSet {
    g.edge_set().expect("oracle graphs have at most 16 vertices")
}

/// Exact law of a measure expression on `[n]`.
pub fn exact_distribution(expr: &MeasureExpr, n: usize, caps: &Caps) -> Result<Distribution> {
    exact_distribution_with_normalizer(expr, n, caps).map(|(d, _)| d)
}

/// Exact law together with the probability that independent draws of the
/// parts are pairwise edge-disjoint (one for a single atom).
pub fn exact_distribution_with_normalizer(expr: &MeasureExpr, n: usize, caps: &Caps) -> Result<(Distribution, BigRational)> {
    caps.check_oracle_n(n)?;
    caps.check_degree_sum(expr.degree_sum())?;
    if expr.parts.is_empty() {
        return Err(Error::InvalidArgument("empty measure expression".into()));
    }
    for a in &expr.parts {
        check_regular_params(n, a.degree())?;
        if matches!(a, Atom::Nu(_)) && n % 2 == 1 {
            return Err(Error::OddN(n));
        }
    }
    if expr.degree_sum() > n - 1 {
        return Err(Error::EmptySupport);
    }
    let mut acc = atom_distribution(expr.parts[0], n, caps)?;
    let mut disjoint = BigRational::one();
    for a in &expr.parts[1..] {
        let (next, p) = acc.oplus(&atom_distribution(*a, n, caps)?)?;
        acc = next;
        disjoint *= p;
    }
    Ok((acc, disjoint))
}

pub fn atom_distribution(atom: Atom, n: usize, caps: &Caps) -> Result<Distribution> {
    let graphs = enumerate_regular(n, atom.degree(), caps)?;
    match atom {
        Atom::Uniform(_) => Distribution::uniform(n, &graphs),
        Atom::Nu(d) => {
            let mut entries = Vec::with_capacity(graphs.len());
            for g in &graphs {
                entries.push((edge_set(g), BigUint::from(count_one_factorisations_ordered(g, d)?)));
            }
            Distribution::from_weights(n, entries)
        }
    }
}

/// Total `tau`-mass of graphs edge-disjoint from `g`.
pub fn beta_weight(g: &Graph, tau: &Distribution) -> Result<BigRational> {
    if g.n() != tau.n() {
        return Err(Error::VertexCountMismatch(g.n(), tau.n()));
    }
    let key = edge_set(g);
    let w: BigUint = tau.weights.iter().filter(|(h, _)| h.is_disjoint(key)).map(|(_, w)| w).sum();
    Ok(big_ratio(w, tau.total.clone()))
}

/// One isomorphism class in a [`ClassDistribution`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClassEntry {
    pub key: CanonicalKey,
    /// Labeled graphs of the support carrying this key.
    pub size: u64,
    pub mass: BigRational,
    /// Least labeled member (in edge-list order).
    pub representative: Graph,
}

/// A distribution aggregated over isomorphism classes, ordered by key.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    pub n: usize,
    pub entries: Vec<ClassEntry>,
}

impl ClassDistribution {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CanonicalKey) -> Option<&ClassEntry> {
        self.entries.binary_search_by(|e| e.key.cmp(key)).ok().map(|i| &self.entries[i])
    }

    pub fn to_measure(&self) -> FiniteMeasure<CanonicalKey> {
        FiniteMeasure::new(self.entries.iter().map(|e| (e.key.clone(), e.mass.clone()))).expect("class masses sum to one")
    }

    pub fn tv(&self, other: &ClassDistribution) -> BigRational {
        self.to_measure().tv(&other.to_measure())
    }
}

/// Aggregates masses by canonical key.
pub fn class_distribution(p: &Distribution) -> Result<ClassDistribution> {
    let mut acc: BTreeMap<CanonicalKey, (u64, BigUint, EdgeSet)> = BTreeMap::new();
    for (k, w) in p.iter() {
        let key = canonical_key(&Graph::from_edge_set(p.n, k))?;
        let slot = acc.entry(key).or_insert_with(|| (0, BigUint::zero(), k));
        slot.0 += 1;
        slot.1 += w;
        // iteration is in edge-list order, so the first member seen is least
    }
    Ok(ClassDistribution {
        n: p.n,
        entries: acc
            .into_iter()
            .map(|(key, (size, w, rep))| ClassEntry {
                key,
                size,
                mass: big_ratio(w, p.total.clone()),
                representative: Graph::from_edge_set(p.n, rep),
            })
            .collect(),
    })
}
