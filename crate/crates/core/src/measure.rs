//! Exact finite probability measures over ordered outcome spaces.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// A probability measure with rational masses. Zero masses are not stored.
/// Iteration follows `K`'s order, which is also the inverse-CDF order used by
/// [`Sampler`].
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure<K: Ord> {
    masses: BTreeMap<K, BigRational>,
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl<K: Ord + Clone> FiniteMeasure<K> {
    /// Masses must be non-negative and sum to exactly one.
    pub fn new(entries: impl IntoIterator<Item = (K, BigRational)>) -> Result<Self> {
        let m = Self::sub_probability(entries)?;
        if m.total() != BigRational::one() {
            return Err(Error::InvalidArgument(format!("masses sum to {}, not 1", m.total())));
        }
        Ok(m)
    }

    /// Non-negative masses with arbitrary total (used for residual measures).
    pub fn sub_probability(entries: impl IntoIterator<Item = (K, BigRational)>) -> Result<Self> {
        let mut masses: BTreeMap<K, BigRational> = BTreeMap::new();
        for (k, m) in entries {
            if m.is_negative() {
                return Err(Error::InvalidArgument("negative mass".into()));
            }
            if m.is_zero() {
                continue;
            }
            *masses.entry(k).or_insert_with(BigRational::zero) += m;
        }
        Ok(FiniteMeasure { masses })
    }

    /// Normalizes non-negative integer weights.
    pub fn from_weights(entries: impl IntoIterator<Item = (K, BigInt)>) -> Result<Self> {
        let entries: Vec<(K, BigInt)> = entries.into_iter().collect();
        let total: BigInt = entries.iter().map(|(_, w)| w.clone()).sum();
        if total.is_zero() {
            return Err(Error::EmptySupport);
        }
        Self::new(entries.into_iter().map(|(k, w)| (k, BigRational::new(w, total.clone()))))
    }

    pub fn uniform(support: impl IntoIterator<Item = K>) -> Result<Self> {
        Self::from_weights(support.into_iter().map(|k| (k, BigInt::one())))
    }

    pub fn mass(&self, k: &K) -> BigRational {
        self.masses.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.masses.values().fold(BigRational::zero(), |acc, m| acc + m)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &BigRational)> {
        self.masses.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.masses.keys()
    }

    /// Rescales to total one.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.total();
        if t.is_zero() {
            return Err(Error::EmptySupport);
        }
        Ok(FiniteMeasure { masses: self.masses.iter().map(|(k, m)| (k.clone(), m / &t)).collect() })
    }

    /// Total variation distance `1/2 sum |p(x) - q(x)|` over the union of
    /// supports.
    pub fn tv(&self, other: &Self) -> BigRational {
        let mut acc = BigRational::zero();
        for (k, p) in &self.masses {
            acc += (p - other.mass(k)).abs();
        }
        for (k, q) in &other.masses {
            if !self.masses.contains_key(k) {
                acc += q.clone();
            }
        }
        acc / BigRational::from_integer(BigInt::from(2))
    }

    /// Pointwise `min(p, q)`.
    pub fn overlap(&self, other: &Self) -> Self {
        FiniteMeasure {
            masses: self
                .masses
                .iter()
                .filter_map(|(k, p)| other.masses.get(k).map(|q| (k.clone(), p.min(q).clone())))
                .collect(),
        }
    }

    /// Pointwise `p - min(p, q)`.
    pub fn excess_over(&self, other: &Self) -> Self {
        FiniteMeasure {
            masses: self
                .masses
                .iter()
                .filter_map(|(k, p)| {
                    let r = p - p.min(&other.mass(k));
                    (!r.is_zero()).then(|| (k.clone(), r))
                })
                .collect(),
        }
    }

    pub fn sampler(&self) -> Sampler<K> {
        Sampler::new(self.masses.iter().map(|(k, m)| (k.clone(), to_f64(m))))
    }
}

/// Inverse-CDF sampler over outcomes in a fixed order.
#[derive(Clone, Debug)]
pub struct Sampler<K> {
    outcomes: Vec<K>,
    cumulative: Vec<f64>,
}

impl<K: Clone> Sampler<K> {
    pub fn new(weights: impl IntoIterator<Item = (K, f64)>) -> Self {
        let mut outcomes = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (k, w) in weights {
            if w > 0.0 {
                acc += w;
                outcomes.push(k);
                cumulative.push(acc);
            }
        }
        Sampler { outcomes, cumulative }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("sampler over empty support");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.outcomes.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &K {
        &self.outcomes[self.sample_index(rng)]
    }

    pub fn outcomes(&self) -> &[K] {
        &self.outcomes
    }
}
