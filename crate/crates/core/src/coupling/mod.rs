//! Couplings between finite laws: maximal couplings, max-flow transport
//! couplings over bipartite graphs, the matching-extension construction, the
//! alternative sampling procedure, the zeta recursion and the inclusion
//! pipelines built from them.

pub mod asp;
pub mod complete;
pub mod extension;
pub mod flow;
pub mod inclusion;
pub mod maximal;
pub mod strassen;
pub mod zeta;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::measure::{FiniteMeasure, Sampler};

pub use asp::{asp_sample, exact_eta, AspSampler, AspSample, ClassSource};
pub use complete::{complete_couple, complete_experiment, CompleteCoupler, CompleteDraw, CompleteReport};
pub use extension::{matching_extension_exact, matching_extension_mc, ExtensionReport};
pub use inclusion::{inclusion_pipeline, run_inclusion, InclusionCase, InclusionDraw, InclusionPipeline, InclusionReport};
pub use maximal::maximal_coupling;
pub use strassen::{planted_instance, strassen_coupling, transport_coupling, BipartiteGraph, StrassenReport};
pub use zeta::{zeta_coupling, ZetaDraw, ZetaSampler, ZetaState, ZetaSummary, ZetaTrace};

/// A joint law on `A x B` with exact rational masses over a common
/// denominator. The joint is an explicit table plus an optional product
/// block: `P(a, b) = (cells(a, b) + left_residual(a) * right_residual(b) / R) / denom`
/// where `R` is the common total of both residual vectors.
///
/// Construction checks both marginals exactly in integer arithmetic.
#[derive(Clone, Debug)]
pub struct CouplingTable<A: Ord + Clone, B: Ord + Clone> {
    denom: u128,
    left: BTreeMap<A, u128>,
    right: BTreeMap<B, u128>,
    cells: BTreeMap<(A, B), u128>,
    left_residual: BTreeMap<A, u128>,
    right_residual: BTreeMap<B, u128>,
}

/// Numerators of a family of measures over their least common denominator.
pub fn common_denominator<K: Ord + Clone>(measures: &[&FiniteMeasure<K>]) -> Result<(u128, Vec<BTreeMap<K, u128>>)> {
    let mut lcm = BigInt::from(1);
    for m in measures {
        for (_, r) in m.iter() {
            lcm = lcm.lcm(r.denom());
        }
    }
    let denom = lcm.to_u128().ok_or(Error::CapExceeded { what: "coupling denominator bits", value: lcm.bits() as usize, cap: 128 })?;
    let nums = measures
        .iter()
        .map(|m| {
            m.iter()
                .map(|(k, r)| {
                    let v = (r.numer() * (&lcm / r.denom())).to_u128().expect("numerator bounded by denominator");
                    (k.clone(), v)
                })
                .collect()
        })
        .collect();
    Ok((denom, nums))
}

fn sum_u128<'a>(mut xs: impl Iterator<Item = &'a u128>) -> Result<u128> {
    xs.try_fold(0u128, |acc, &x| acc.checked_add(x)).ok_or(Error::CapExceeded { what: "coupling mass bits", value: 129, cap: 128 })
}

fn rational(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl<A: Ord + Clone, B: Ord + Clone> CouplingTable<A, B> {
    /// `left` and `right` are the marginal numerators over `denom`.
    pub fn new(
        denom: u128,
        left: BTreeMap<A, u128>,
        right: BTreeMap<B, u128>,
        cells: BTreeMap<(A, B), u128>,
        left_residual: BTreeMap<A, u128>,
        right_residual: BTreeMap<B, u128>,
    ) -> Result<Self> {
        let mismatch = |what: &str| Err(Error::InvalidArgument(format!("coupling {what} marginal mismatch")));
        if sum_u128(left.values())? != denom || sum_u128(right.values())? != denom {
            return mismatch("total");
        }
        if sum_u128(left_residual.values())? != sum_u128(right_residual.values())? {
            return mismatch("residual");
        }
        let mut rows: BTreeMap<&A, u128> = left_residual.iter().filter(|(_, &v)| v > 0).map(|(k, &v)| (k, v)).collect();
        let mut cols: BTreeMap<&B, u128> = right_residual.iter().filter(|(_, &v)| v > 0).map(|(k, &v)| (k, v)).collect();
        for ((a, b), &m) in &cells {
            *rows.entry(a).or_default() += m;
            *cols.entry(b).or_default() += m;
        }
        rows.retain(|_, v| *v > 0);
        cols.retain(|_, v| *v > 0);
        let left_ok = rows.len() == left.values().filter(|&&v| v > 0).count() && rows.iter().all(|(k, v)| left.get(*k) == Some(v));
        let right_ok = cols.len() == right.values().filter(|&&v| v > 0).count() && cols.iter().all(|(k, v)| right.get(*k) == Some(v));
        if !left_ok {
            return mismatch("left");
        }
        if !right_ok {
            return mismatch("right");
        }
        let cells = cells.into_iter().filter(|(_, m)| *m > 0).collect();
        let left_residual = left_residual.into_iter().filter(|(_, m)| *m > 0).collect();
        let right_residual = right_residual.into_iter().filter(|(_, m)| *m > 0).collect();
        Ok(CouplingTable { denom, left, right, cells, left_residual, right_residual })
    }

    pub fn denominator(&self) -> u128 {
        self.denom
    }

    pub fn left_marginal(&self) -> FiniteMeasure<A> {
        FiniteMeasure::new(self.left.iter().map(|(k, &v)| (k.clone(), rational(v, self.denom)))).expect("checked marginal")
    }

    pub fn right_marginal(&self) -> FiniteMeasure<B> {
        FiniteMeasure::new(self.right.iter().map(|(k, &v)| (k.clone(), rational(v, self.denom)))).expect("checked marginal")
    }

    /// Explicit cells, excluding the product block.
    pub fn cells(&self) -> impl Iterator<Item = (&(A, B), &u128)> {
        self.cells.iter()
    }

    /// Total mass of the product block.
    pub fn residual_mass(&self) -> BigRational {
        rational(self.left_residual.values().sum(), self.denom)
    }

    pub fn left_residual(&self) -> &BTreeMap<A, u128> {
        &self.left_residual
    }

    pub fn right_residual(&self) -> &BTreeMap<B, u128> {
        &self.right_residual
    }

    /// Exact joint mass of `(a, b)`.
    pub fn mass(&self, a: &A, b: &B) -> BigRational {
        let explicit = self.cells.get(&(a.clone(), b.clone())).copied().unwrap_or(0);
        let mut m = rational(explicit, self.denom);
        let ra = self.left_residual.get(a).copied().unwrap_or(0);
        let rb = self.right_residual.get(b).copied().unwrap_or(0);
        if ra > 0 && rb > 0 {
            let r: u128 = self.left_residual.values().sum();
            m += BigRational::new(BigInt::from(ra) * BigInt::from(rb), BigInt::from(r) * BigInt::from(self.denom));
        }
        m
    }

    /// Exact mass of the pairs satisfying `pred`. Visits every pair of the
    /// product block, so the cost is `|cells| + |supp r_A| * |supp r_B|`.
    pub fn mass_where(&self, mut pred: impl FnMut(&A, &B) -> bool) -> BigRational {
        let explicit: u128 = self.cells.iter().filter(|((a, b), _)| pred(a, b)).map(|(_, m)| m).sum();
        let mut acc = BigInt::zero();
        for (a, &ra) in &self.left_residual {
            for (b, &rb) in &self.right_residual {
                if pred(a, b) {
                    acc += BigInt::from(ra) * BigInt::from(rb);
                }
            }
        }
        let r: u128 = self.left_residual.values().sum();
        let mut m = rational(explicit, self.denom);
        if r > 0 {
            m += BigRational::new(acc, BigInt::from(r) * BigInt::from(self.denom));
        }
        m
    }

    /// Every pair with positive mass. Only sensible for small tables.
    pub fn materialize(&self) -> BTreeMap<(A, B), BigRational> {
        let mut out: BTreeMap<(A, B), BigRational> = BTreeMap::new();
        for (k, &m) in &self.cells {
            out.insert(k.clone(), rational(m, self.denom));
        }
        let r: u128 = self.left_residual.values().sum();
        for (a, &ra) in &self.left_residual {
            for (b, &rb) in &self.right_residual {
                let m = BigRational::new(BigInt::from(ra) * BigInt::from(rb), BigInt::from(r) * BigInt::from(self.denom));
                *out.entry((a.clone(), b.clone())).or_insert_with(BigRational::zero) += m;
            }
        }
        out
    }

    /// Joint sampler: inverse CDF over the explicit cells in key order, then
    /// the product block.
    pub fn sampler(&self) -> TableSampler<A, B> {
        let r: u128 = self.left_residual.values().sum();
        let mut outcomes: Vec<Option<(A, B)>> = self.cells.keys().cloned().map(Some).collect();
        let mut weights: Vec<f64> = self.cells.values().map(|&m| m as f64).collect();
        if r > 0 {
            outcomes.push(None);
            weights.push(r as f64);
        }
        TableSampler {
            top: Sampler::new(outcomes.into_iter().zip(weights)),
            left_residual: Sampler::new(self.left_residual.iter().map(|(k, &v)| (k.clone(), v as f64))),
            right_residual: Sampler::new(self.right_residual.iter().map(|(k, &v)| (k.clone(), v as f64))),
        }
    }

    /// Samplers for `A` given each value of `B`.
    pub fn given_right(&self) -> Conditional<B, A> {
        let r: u128 = self.left_residual.values().sum();
        let mut explicit: BTreeMap<B, Vec<(A, f64)>> = BTreeMap::new();
        for ((a, b), &m) in &self.cells {
            explicit.entry(b.clone()).or_default().push((a.clone(), m as f64));
        }
        Conditional::build(explicit, &self.right_residual, r, &self.left_residual)
    }

    /// Samplers for `B` given each value of `A`.
    pub fn given_left(&self) -> Conditional<A, B> {
        let r: u128 = self.left_residual.values().sum();
        let mut explicit: BTreeMap<A, Vec<(B, f64)>> = BTreeMap::new();
        for ((a, b), &m) in &self.cells {
            explicit.entry(a.clone()).or_default().push((b.clone(), m as f64));
        }
        Conditional::build(explicit, &self.left_residual, r, &self.right_residual)
    }
}

impl<A: Ord + Clone> CouplingTable<A, A> {
    /// Exact `P(X = Y)`.
    pub fn diagonal_mass(&self) -> BigRational {
        self.mass_where(|a, b| a == b)
    }
}

pub struct TableSampler<A, B> {
    top: Sampler<Option<(A, B)>>,
    left_residual: Sampler<A>,
    right_residual: Sampler<B>,
}

impl<A: Clone, B: Clone> TableSampler<A, B> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (A, B) {
        match self.top.sample(rng) {
            Some(pair) => pair.clone(),
            None => (self.left_residual.sample(rng).clone(), self.right_residual.sample(rng).clone()),
        }
    }
}

/// Conditional law of one coordinate given the other: explicit weights plus
/// the product-block share, which is drawn from the residual vector.
pub struct Conditional<G, T> {
    explicit: BTreeMap<G, (Sampler<T>, f64)>,
    residual_weight: BTreeMap<G, f64>,
    residual: Option<Sampler<T>>,
}

impl<G: Ord + Clone, T: Clone> Conditional<G, T> {
    fn build(explicit: BTreeMap<G, Vec<(T, f64)>>, given_residual: &BTreeMap<G, u128>, r: u128, other_residual: &BTreeMap<T, u128>) -> Self {
        let explicit = explicit
            .into_iter()
            .map(|(g, ws)| {
                let total: f64 = ws.iter().map(|w| w.1).sum();
                (g, (Sampler::new(ws), total))
            })
            .collect();
        // the product block given `g` has mass r_g * r_t / R summed over t, i.e. r_g
        let residual_weight = given_residual.iter().map(|(g, &v)| (g.clone(), v as f64)).collect();
        let residual = (r > 0).then(|| Sampler::new(other_residual.iter().map(|(k, &v)| (k.clone(), v as f64))));
        Conditional { explicit, residual_weight, residual }
    }

    /// Draws the other coordinate given `g`. Panics if `g` has zero mass.
    pub fn sample<R: Rng + ?Sized>(&self, g: &G, rng: &mut R) -> T {
        let (sampler, e) = match self.explicit.get(g) {
            Some((s, e)) => (Some(s), *e),
            None => (None, 0.0),
        };
        let rw = self.residual_weight.get(g).copied().unwrap_or(0.0);
        assert!(e + rw > 0.0, "conditioning on a null outcome");
        if rng.random::<f64>() * (e + rw) < e {
            sampler.expect("explicit mass").sample(rng).clone()
        } else {
            self.residual.as_ref().expect("residual mass").sample(rng).clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ratio;

    #[test]
    fn rejects_wrong_marginals() {
        let left: BTreeMap<u8, u128> = [(0, 1), (1, 1)].into();
        let right: BTreeMap<u8, u128> = [(0, 2)].into();
        let cells: BTreeMap<(u8, u8), u128> = [((0, 0), 1), ((1, 0), 1)].into();
        assert!(CouplingTable::new(2, left.clone(), right.clone(), cells, BTreeMap::new(), BTreeMap::new()).is_ok());
        let bad: BTreeMap<(u8, u8), u128> = [((0, 0), 2)].into();
        assert!(CouplingTable::new(2, left, right, bad, BTreeMap::new(), BTreeMap::new()).is_err());
    }

    #[test]
    fn product_block_mass() {
        let left: BTreeMap<u8, u128> = [(0, 2), (1, 2)].into();
        let right: BTreeMap<u8, u128> = [(2, 1), (3, 3)].into();
        let t = CouplingTable::new(4, left.clone(), right.clone(), BTreeMap::new(), left, right).unwrap();
        assert_eq!(t.mass(&0, &3), ratio(3, 8));
        assert_eq!(t.residual_mass(), ratio(1, 1));
        let total: BigRational = t.materialize().values().cloned().sum();
        assert_eq!(total, ratio(1, 1));
    }
}
