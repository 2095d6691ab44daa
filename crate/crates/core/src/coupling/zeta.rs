//! Residual recursion coupling one draw `X ~ bar_mu` with an i.i.d. stream
//! `Y_1, Y_2, ... ~ bar_nu` so that `X` is among the first `k` with
//! probability `1 - Z_1 ... Z_k`.
//!
//! `zeta_0 = bar_mu`, and `zeta_i = p - min(p, bar_nu)` with
//! `p = zeta_{i-1} / Z_{i-1}`, `Z_i` the total of `zeta_i`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::measure::{to_f64, FiniteMeasure, Sampler};

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaState<K: Ord> {
    pub i: usize,
    pub zeta: FiniteMeasure<K>,
    pub z: BigRational,
    /// `Z_1 .. Z_i`.
    pub history: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaTrace<K: Ord> {
    /// Least `k` with `Z_1 ... Z_k <= epsilon`.
    pub k: usize,
    /// `states[i]` holds `zeta_i`; `states[0]` is `bar_mu` itself.
    pub states: Vec<ZetaState<K>>,
    pub product: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZetaSummary {
    pub k: usize,
    pub z: Vec<f64>,
    pub products: Vec<f64>,
    pub product: f64,
}

impl<K: Ord + Clone> ZetaTrace<K> {
    pub fn z_values(&self) -> &[BigRational] {
        &self.states.last().expect("non-empty trace").history
    }

    /// Running products `Z_1`, `Z_1 Z_2`, ...
    pub fn products(&self) -> Vec<BigRational> {
        let mut acc = BigRational::one();
        self.z_values()
            .iter()
            .map(|z| {
                acc = &acc * z;
                acc.clone()
            })
            .collect()
    }

    pub fn summary(&self) -> ZetaSummary {
        ZetaSummary {
            k: self.k,
            z: self.z_values().iter().map(to_f64).collect(),
            products: self.products().iter().map(to_f64).collect(),
            product: to_f64(&self.product),
        }
    }
}

/// Runs the recursion until the product of the `Z_i` reaches `epsilon`.
/// Every step checks `zeta_i >= 0`, `Z_i in [0, 1]` and that the product
/// does not increase. Fails with `NonTermination` after
/// `caps.zeta_max_steps` steps.
pub fn zeta_coupling<K: Ord + Clone>(bar_mu: &FiniteMeasure<K>, bar_nu: &FiniteMeasure<K>, epsilon: f64, caps: &Caps) -> Result<ZetaTrace<K>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if bar_mu.total() != BigRational::one() || bar_nu.total() != BigRational::one() {
        return Err(Error::InvalidArgument("class measures must be probability measures".into()));
    }
    let eps = BigRational::from_float(epsilon).expect("finite");
    let mut states = vec![ZetaState { i: 0, zeta: bar_mu.clone(), z: BigRational::one(), history: Vec::new() }];
    let mut product = BigRational::one();
    loop {
        let prev = states.last().expect("non-empty");
        let i = prev.i + 1;
        if i > caps.zeta_max_steps {
            return Err(Error::NonTermination(caps.zeta_max_steps));
        }
        let p = prev.zeta.normalized()?;
        let zeta = p.excess_over(bar_nu);
        let z = zeta.total();
        assert!(z >= BigRational::zero() && z <= BigRational::one(), "Z_{i} outside [0, 1]");
        assert!(zeta.iter().all(|(_, m)| *m >= BigRational::zero()));
        let next = &product * &z;
        assert!(next <= product, "product of Z increased at step {i}");
        product = next;
        let mut history = prev.history.clone();
        history.push(z.clone());
        let done = product <= eps || z.is_zero();
        states.push(ZetaState { i, zeta, z, history });
        if done {
            return Ok(ZetaTrace { k: i, states, product });
        }
    }
}

/// One coupled draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaDraw<K> {
    pub x: K,
    pub ys: Vec<K>,
    /// Least `i` (1-based) with `Y_i = X`, if any, as produced by the
    /// coupling (later coincidences by chance are not recorded).
    pub hit: Option<usize>,
}

struct Step<K> {
    stay: f64,
    overlap: Sampler<K>,
    nu_excess: Sampler<K>,
}

/// Sequential sampler realizing the recursion: at step `i` the current
/// residual law of `X` is maximally coupled with `bar_nu`. On the overlap
/// `Y_i = X` and the remaining `Y`s are fresh `bar_nu` draws; otherwise `Y_i`
/// comes from `bar_nu`'s excess and `X` moves on with law `zeta_i / Z_i`.
pub struct ZetaSampler<K> {
    steps: Vec<Step<K>>,
    nu: Sampler<K>,
    tail: Option<Sampler<K>>,
}

impl<K: Ord + Clone> ZetaSampler<K> {
    pub fn new(trace: &ZetaTrace<K>, bar_nu: &FiniteMeasure<K>) -> Result<Self> {
        let mut steps = Vec::with_capacity(trace.k);
        for i in 1..=trace.k {
            let p = trace.states[i - 1].zeta.normalized()?;
            let overlap = p.overlap(bar_nu);
            let nu_excess = bar_nu.excess_over(&p);
            steps.push(Step { stay: to_f64(&trace.states[i].z), overlap: overlap.sampler(), nu_excess: nu_excess.sampler() });
        }
        let last = &trace.states[trace.k].zeta;
        let tail = (!last.is_empty()).then(|| last.sampler());
        Ok(ZetaSampler { steps, nu: bar_nu.sampler(), tail })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ZetaDraw<K> {
        let mut ys = Vec::with_capacity(self.steps.len());
        for (i, step) in self.steps.iter().enumerate() {
            if rng.random::<f64>() >= step.stay {
                let x = step.overlap.sample(rng).clone();
                ys.push(x.clone());
                while ys.len() < self.steps.len() {
                    ys.push(self.nu.sample(rng).clone());
                }
                return ZetaDraw { x, ys, hit: Some(i + 1) };
            }
            ys.push(step.nu_excess.sample(rng).clone());
        }
        let x = self.tail.as_ref().expect("a miss requires residual mass").sample(rng).clone();
        ZetaDraw { x, ys, hit: None }
    }
}
