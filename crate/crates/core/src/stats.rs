//! Goodness-of-fit tests, Wilson intervals and histogram total variation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};

/// Smallest expected count a chi-square cell may have.
pub const EXPECTED_FLOOR: f64 = 5.0;

/// p-value floor used by automated acceptance checks.
pub const SIGNIFICANCE_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub trials: u64,
}

impl GofReport {
    pub fn passes(&self) -> bool {
        self.p_value > SIGNIFICANCE_FLOOR
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    dist.sf(statistic).clamp(0.0, 1.0)
}

/// Independent chi-square upper tail: regularized incomplete gamma by series
/// below `a + 1` and a Lentz continued fraction above, with a Lanczos
/// log-gamma. Used to cross-check [`chi_square_sf`].
pub fn chi_square_sf_reference(statistic: f64, dof: usize) -> f64 {
    let a = dof as f64 / 2.0;
    let x = statistic / 2.0;
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma_lanczos(a);
    if x < a + 1.0 {
        let (mut term, mut sum, mut ap) = (1.0 / a, 1.0 / a, a);
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (h * log_prefactor.exp()).clamp(0.0, 1.0)
    }
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_lanczos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, &c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Pearson test of `counts` against the uniform law on the cells.
pub fn chi_square_uniform(counts: &[u64]) -> Result<GofReport> {
    let k = counts.len();
    if k == 0 {
        return Err(Error::SparseCells("no cells".into()));
    }
    chi_square_gof(counts, &vec![1.0 / k as f64; k])
}

/// Pearson test of `counts` against cell probabilities `probs` (which must
/// sum to one). Every expected count must reach [`EXPECTED_FLOOR`].
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<GofReport> {
    if counts.len() != probs.len() {
        return Err(Error::InvalidArgument(format!("{} counts vs {} probabilities", counts.len(), probs.len())));
    }
    if counts.len() < 2 {
        return Err(Error::SparseCells(format!("{} cell(s); need at least 2", counts.len())));
    }
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total as f64;
        if e < EXPECTED_FLOOR {
            return Err(Error::SparseCells(format!("expected count {e:.3} below {EXPECTED_FLOOR}")));
        }
        let diff = c as f64 - e;
        stat += diff * diff / e;
    }
    let dof = counts.len() - 1;
    Ok(GofReport { statistic: stat, dof, p_value: chi_square_sf(stat, dof), trials: total })
}

/// Pearson test of independence for a contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<GofReport> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::SparseCells(format!("table must be at least 2x2 and rectangular, got {r}x{c}")));
    }
    let rows: Vec<f64> = table.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum::<u64>() as f64).collect();
    let total: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / total;
            if e < EXPECTED_FLOOR {
                return Err(Error::SparseCells(format!("expected count {e:.3} below {EXPECTED_FLOOR}")));
            }
            let diff = obs as f64 - e;
            stat += diff * diff / e;
        }
    }
    let dof = (r - 1) * (c - 1);
    Ok(GofReport { statistic: stat, dof, p_value: chi_square_sf(stat, dof), trials: total as u64 })
}

/// Chi-square test of a histogram of non-negative integers (`hist[k]` is
/// the number of observations equal to `k`) against Poisson(`lambda`) with
/// `lambda` fixed. Cells are merged left to right until each expected count
/// reaches the floor; the last cell absorbs the upper tail.
pub fn poisson_fit(hist: &[u64], lambda: f64) -> Result<GofReport> {
    let dist = Poisson::new(lambda).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let total: u64 = hist.iter().sum();
    let nf = total as f64;
    let mut observed: Vec<u64> = Vec::new();
    let mut expected: Vec<f64> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0u64, 0.0);
    let mut k = 0u64;
    loop {
        obs_acc += hist.get(k as usize).copied().unwrap_or(0);
        exp_acc += nf * dist.pmf(k);
        let tail = nf * dist.sf(k);
        if tail < EXPECTED_FLOOR {
            obs_acc += hist.iter().skip(k as usize + 1).sum::<u64>();
            exp_acc += tail;
            if exp_acc < EXPECTED_FLOOR && !expected.is_empty() {
                *observed.last_mut().unwrap() += obs_acc;
                *expected.last_mut().unwrap() += exp_acc;
            } else {
                observed.push(obs_acc);
                expected.push(exp_acc);
            }
            break;
        }
        if exp_acc >= EXPECTED_FLOOR {
            observed.push(obs_acc);
            expected.push(exp_acc);
            obs_acc = 0;
            exp_acc = 0.0;
        }
        k += 1;
    }
    if expected.len() < 2 {
        return Err(Error::SparseCells(format!("only {} cell(s) reach the expected floor", expected.len())));
    }
    let stat: f64 = observed.iter().zip(&expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    let dof = expected.len() - 1;
    Ok(GofReport { statistic: stat, dof, p_value: chi_square_sf(stat, dof), trials: total })
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Total variation between two empirical histograms, with a bound on its
/// expected upward bias: `1/2 sum_x (sqrt(p(x)/N_p) + sqrt(q(x)/N_q))` at the
/// plug-in frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTv {
    pub tv: f64,
    pub bias_bound: f64,
}

pub fn empirical_tv<K: Ord>(p: &BTreeMap<K, u64>, q: &BTreeMap<K, u64>) -> Result<EmpiricalTv> {
    let np: u64 = p.values().sum();
    let nq: u64 = q.values().sum();
    if np == 0 || nq == 0 {
        return Err(Error::EmptySupport);
    }
    let (np, nq) = (np as f64, nq as f64);
    let mut tv = 0.0;
    let mut bias = 0.0;
    for (k, &a) in p {
        let fa = a as f64 / np;
        let fb = q.get(k).map_or(0.0, |&b| b as f64 / nq);
        tv += (fa - fb).abs();
        bias += (fa * (1.0 - fa) / np).sqrt() + (fb * (1.0 - fb) / nq).sqrt();
    }
    for (k, &b) in q {
        if !p.contains_key(k) {
            let fb = b as f64 / nq;
            tv += fb;
            bias += (fb * (1.0 - fb) / nq).sqrt();
        }
    }
    Ok(EmpiricalTv { tv: tv / 2.0, bias_bound: bias / 2.0 })
}

/// Total variation between an empirical histogram and an exact law given as
/// cell probabilities, with the bias bound `1/2 sum sqrt(p(1-p)/N)`.
pub fn empirical_tv_vs_exact<K: Ord>(hist: &BTreeMap<K, u64>, exact: &BTreeMap<K, f64>) -> Result<EmpiricalTv> {
    let total: u64 = hist.values().sum();
    if total == 0 {
        return Err(Error::EmptySupport);
    }
    let nf = total as f64;
    let mut tv = 0.0;
    let mut bias = 0.0;
    for (k, &p) in exact {
        let f = hist.get(k).map_or(0.0, |&c| c as f64 / nf);
        tv += (f - p).abs();
        bias += (p * (1.0 - p) / nf).sqrt();
    }
    for (k, &c) in hist {
        if !exact.contains_key(k) {
            tv += c as f64 / nf;
        }
    }
    Ok(EmpiricalTv { tv: tv / 2.0, bias_bound: bias / 2.0 })
}

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and the
/// uniform law on [0, 1].
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Mean with its standard error from `sqrt(var / n)`.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_counts() {
        let r = chi_square_uniform(&[50; 10]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let mut skew = vec![0u64; 10];
        skew[0] = 100;
        // expected count 10 per cell
        assert!(chi_square_uniform(&skew).unwrap().p_value < 1e-6);
        assert!(matches!(chi_square_uniform(&[1, 2, 3]), Err(Error::SparseCells(_))));
    }

    #[test]
    fn poisson_point_mass_rejected() {
        let r = poisson_fit(&[10_000], 6.0).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn poisson_binning_keeps_floor() {
        let hist = [6065u64, 3033, 758, 126, 16, 2];
        let r = poisson_fit(&hist, 0.5).unwrap();
        assert_eq!(r.dof, 4);
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(60, 100, 1.96);
        assert!(lo < 0.6 && 0.6 < hi);
        assert!((hi - lo - 0.19).abs() < 0.01);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn tv_of_histograms() {
        let a: BTreeMap<u8, u64> = [(0, 5), (1, 5)].into();
        let b: BTreeMap<u8, u64> = [(2, 3)].into();
        assert_eq!(empirical_tv(&a, &a).unwrap().tv, 0.0);
        assert_eq!(empirical_tv(&a, &b).unwrap().tv, 1.0);
    }

    #[test]
    fn reference_tail_agrees() {
        for dof in [1usize, 2, 3, 7, 30, 2834] {
            for q in [0.01, 0.3, 1.0, 2.5, 10.0] {
                let x = q * dof as f64;
                let (a, b) = (chi_square_sf(x, dof), chi_square_sf_reference(x, dof));
                assert!((a - b).abs() < 1e-9, "dof {dof} x {x}: {a} vs {b}");
            }
        }
        // exp(-x/2) for two degrees of freedom
        assert!((chi_square_sf_reference(3.0, 2) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn ks_of_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&xs) - 0.005).abs() < 1e-12);
    }
}
