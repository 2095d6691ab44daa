//! Monte Carlo moments of the triangle count `X` and the perfect matching
//! count `Y` of uniform random regular graphs, the linear projection of `Y`
//! on `X`, and tail and residual-variance experiments.
//!
//! Standard errors are delete-one-block jackknife errors over consecutive
//! trial blocks (1000 trials per block when there are at least 20 blocks,
//! otherwise 20 equal blocks).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::config::Caps;
use crate::counting::{count_perfect_matchings_with, count_triangles};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::oracle::Distribution;
use crate::samplers::{sample_regular, try_par_trials, SeededStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Pm,
    Triangles,
    Joint,
}

/// Block count and size used by the jackknife for `trials` samples.
pub fn block_size(trials: usize) -> usize {
    if trials >= 20_000 {
        1000
    } else {
        (trials / 20).max(1)
    }
}

/// Delete-one-block jackknife. `blocks[b]` holds per-block feature sums,
/// `stat` maps summed features to the estimate. Returns the full-sample
/// estimate and its standard error.
pub fn jackknife(blocks: &[Vec<f64>], stat: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let dim = blocks[0].len();
    let mut total = vec![0.0; dim];
    for b in blocks {
        for (t, x) in total.iter_mut().zip(b) {
            *t += x;
        }
    }
    let full = stat(&total);
    let nb = blocks.len();
    if nb < 2 {
        return (full, f64::NAN);
    }
    let loo: Vec<f64> = blocks
        .iter()
        .map(|b| {
            let rest: Vec<f64> = total.iter().zip(b).map(|(t, x)| t - x).collect();
            stat(&rest)
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / nb as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (nb as f64 - 1.0) / nb as f64;
    (full, var.sqrt())
}

/// Per-block sums of `feat(item)`; feature vectors must share a length.
pub fn block_sums<T>(items: &[T], feat: impl Fn(&T) -> Vec<f64>) -> Vec<Vec<f64>> {
    let bs = block_size(items.len());
    items
        .chunks(bs)
        .map(|chunk| {
            let mut acc: Vec<f64> = Vec::new();
            for it in chunk {
                let f = feat(it);
                if acc.is_empty() {
                    acc = f;
                } else {
                    for (a, x) in acc.iter_mut().zip(f) {
                        *a += x;
                    }
                }
            }
            acc
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub third_central: f64,
    pub fourth_central: f64,
    /// `E[X^k]` for k = 1..=4.
    pub raw_moments: [f64; 4],
    pub trials: u64,
    /// Jackknife errors of mean, variance, third and fourth central moments.
    pub standard_errors: [f64; 4],
    pub raw_standard_errors: [f64; 4],
}

impl MomentEstimates {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        let pivot = xs[..xs.len().min(1000)].iter().sum::<f64>() / xs.len().min(1000) as f64;
        let central = block_sums(xs, |&x| {
            let u = x - pivot;
            vec![1.0, u, u * u, u * u * u, u * u * u * u]
        });
        let raw = block_sums(xs, |&x| vec![1.0, x, x * x, x * x * x, x * x * x * x]);
        let m = |k: usize| {
            move |s: &[f64]| -> f64 {
                let n = s[0];
                let mu = s[1] / n;
                let (p2, p3, p4) = (s[2] / n, s[3] / n, s[4] / n);
                match k {
                    1 => pivot + mu,
                    2 => (p2 - mu * mu) * n / (n - 1.0),
                    3 => p3 - 3.0 * mu * p2 + 2.0 * mu.powi(3),
                    _ => p4 - 4.0 * mu * p3 + 6.0 * mu * mu * p2 - 3.0 * mu.powi(4),
                }
            }
        };
        let mut est = [0.0; 4];
        let mut se = [0.0; 4];
        for k in 1..=4 {
            (est[k - 1], se[k - 1]) = jackknife(&central, m(k));
        }
        let mut raw_est = [0.0; 4];
        let mut raw_se = [0.0; 4];
        for k in 1..=4 {
            (raw_est[k - 1], raw_se[k - 1]) = jackknife(&raw, |s| s[k] / s[0]);
        }
        Ok(MomentEstimates {
            mean: est[0],
            variance: est[1],
            third_central: est[2],
            fourth_central: est[3],
            raw_moments: raw_est,
            trials: xs.len() as u64,
            standard_errors: se,
            raw_standard_errors: raw_se,
        })
    }

    /// Jackknife error of the relative variance `Var / mean^2`.
    pub fn relative_variance(xs: &[f64]) -> (f64, f64) {
        let pivot = xs[..xs.len().min(1000)].iter().sum::<f64>() / xs.len().min(1000) as f64;
        let blocks = block_sums(xs, |&x| {
            let u = x - pivot;
            vec![1.0, u, u * u]
        });
        jackknife(&blocks, |s| {
            let n = s[0];
            let mu = s[1] / n;
            let var = (s[2] / n - mu * mu) * n / (n - 1.0);
            var / (pivot + mu).powi(2)
        })
    }
}

/// Triangle and perfect matching counts of one graph; `Y` is skipped (NaN)
/// when not requested.
pub fn graph_statistics(g: &Graph, stat: Statistic, caps: &Caps) -> Result<(f64, f64)> {
    let x = if stat == Statistic::Pm { f64::NAN } else { count_triangles(g) as f64 };
    let y = if stat == Statistic::Triangles { f64::NAN } else { count_perfect_matchings_with(g, caps)? as f64 };
    Ok((x, y))
}

/// `(X, Y)` for `trials` uniform `d`-regular graphs on `[n]`, trial `i` on
/// stream `(seed, stream_id(block, i))`.
pub fn sample_statistics(n: usize, d: usize, stat: Statistic, trials: u64, seed: u64, block: u32, caps: &Caps) -> Result<Vec<(f64, f64)>> {
    if stat != Statistic::Triangles && n > caps.pm_max_n {
        return Err(Error::CapExceeded { what: "perfect matching vertex count", value: n, cap: caps.pm_max_n });
    }
    try_par_trials(seed, block, trials, |rng: &mut SeededStream| {
        let g = sample_regular(n, d, rng, caps)?;
        graph_statistics(&g, stat, caps)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub trials: u64,
    pub x: Option<MomentEstimates>,
    pub y: Option<MomentEstimates>,
    /// Sample `Cov(X, Y)` and its jackknife error.
    pub covariance: Option<(f64, f64)>,
    /// `Cov(X, Y) / (E[X] E[Y])`, reported next to the `d^-3` scale.
    pub normalized_covariance: Option<f64>,
    pub references: References,
}

/// Large-`n` reference values and the order of their neglected terms at the
/// given `(n, d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct References {
    /// `(d-1)^3 / 6`.
    pub triangle_mean: f64,
    /// `1 / (6 d^3)`.
    pub pm_relative_variance: f64,
    /// `d^-4 + d^3/n + sqrt(d/n) (ln n)^3`, the size of the error terms.
    pub error_scale: f64,
}

impl References {
    pub fn new(n: usize, d: usize) -> Self {
        let (nf, df) = (n as f64, d as f64);
        References {
            triangle_mean: (df - 1.0).powi(3) / 6.0,
            pm_relative_variance: 1.0 / (6.0 * df.powi(3)),
            error_scale: df.powi(-4) + df.powi(3) / nf + (df / nf).sqrt() * nf.ln().powi(3),
        }
    }
}

pub fn estimate_moments(n: usize, d: usize, stat: Statistic, trials: u64, seed: u64, caps: &Caps) -> Result<MomentsReport> {
    let samples = sample_statistics(n, d, stat, trials, seed, 0, caps)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let x = (stat != Statistic::Pm).then(|| MomentEstimates::from_samples(&xs)).transpose()?;
    let y = (stat != Statistic::Triangles).then(|| MomentEstimates::from_samples(&ys)).transpose()?;
    let (covariance, normalized_covariance) = if stat == Statistic::Joint {
        let cov = covariance_jackknife(&samples);
        let (mx, my) = (x.as_ref().unwrap().mean, y.as_ref().unwrap().mean);
        (Some(cov), Some(cov.0 / (mx * my)))
    } else {
        (None, None)
    };
    Ok(MomentsReport { n, d, seed, trials, x, y, covariance, normalized_covariance, references: References::new(n, d) })
}

fn covariance_jackknife(samples: &[(f64, f64)]) -> (f64, f64) {
    let k = samples.len().min(1000);
    let px = samples[..k].iter().map(|s| s.0).sum::<f64>() / k as f64;
    let py = samples[..k].iter().map(|s| s.1).sum::<f64>() / k as f64;
    let blocks = block_sums(samples, |&(x, y)| {
        let (u, v) = (x - px, y - py);
        vec![1.0, u, v, u * v]
    });
    jackknife(&blocks, |s| {
        let n = s[0];
        (s[3] / n - s[1] / n * s[2] / n) * n / (n - 1.0)
    })
}

/// `Y* = a X + b` with `a = Cov(X, Y) / Var(X)`, `b = E[Y] - a E[X]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCoefficients {
    pub a: f64,
    pub b: f64,
}

impl ProjectionCoefficients {
    pub fn apply(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

/// Least-squares projection of `Y` on `X` from joint samples.
pub fn janson_projection(samples: &[(f64, f64)]) -> Result<ProjectionCoefficients> {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return Err(Error::DegenerateX);
    }
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateX);
    }
    let a = sxy / sxx;
    Ok(ProjectionCoefficients { a, b: my - a * mx })
}

/// Exact joint moments of `(X, Y)` under an oracle distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactJoint {
    pub mean_x: BigRational,
    pub mean_y: BigRational,
    pub var_x: BigRational,
    pub var_y: BigRational,
    pub cov: BigRational,
    /// `E[X^k]` for k = 1..=4.
    pub raw_x: [BigRational; 4],
}

impl ExactJoint {
    pub fn from_distribution(p: &Distribution) -> Result<Self> {
        let caps = Caps::default();
        let mut sums: [BigRational; 7] = Default::default();
        for (k, w) in p.iter() {
            let g = Graph::from_edge_set(p.n(), k);
            let x = BigRational::from_integer(BigInt::from(count_triangles(&g)));
            let y = BigRational::from_integer(BigInt::from(count_perfect_matchings_with(&g, &caps)?));
            let w = BigRational::from_integer(BigInt::from(w.clone()));
            let xx = &x * &x;
            sums[0] += &w * &x;
            sums[1] += &w * &y;
            sums[2] += &w * &xx;
            sums[3] += &w * &y * &y;
            sums[4] += &w * &x * &y;
            sums[5] += &w * &xx * &x;
            sums[6] += &w * &xx * &xx;
        }
        let total = BigRational::from_integer(BigInt::from(p.total_weight().clone()));
        let s: Vec<BigRational> = sums.iter().map(|v| v / &total).collect();
        let mean_x = s[0].clone();
        let mean_y = s[1].clone();
        Ok(ExactJoint {
            var_x: &s[2] - &mean_x * &mean_x,
            var_y: &s[3] - &mean_y * &mean_y,
            cov: &s[4] - &mean_x * &mean_y,
            raw_x: [mean_x.clone(), s[2].clone(), s[5].clone(), s[6].clone()],
            mean_x,
            mean_y,
        })
    }

    pub fn a(&self) -> Result<BigRational> {
        if self.var_x.is_zero() {
            return Err(Error::DegenerateX);
        }
        Ok(&self.cov / &self.var_x)
    }

    pub fn b(&self) -> Result<BigRational> {
        Ok(&self.mean_y - self.a()? * &self.mean_x)
    }

    /// `Var[Y - Y*] = Var[Y] - a^2 Var[X]`.
    pub fn residual_variance(&self) -> Result<BigRational> {
        let a = self.a()?;
        let r = &self.var_y - &a * &a * &self.var_x;
        debug_assert!(!r.is_negative());
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorialMomentReport {
    pub n: usize,
    pub d: usize,
    pub k: u32,
    pub trials: u64,
    pub sample_moment: f64,
    pub standard_error: f64,
    /// `E[X]` reference `(d-1)^3/6`.
    pub mean_reference: f64,
    /// `m^k + C(k,2) m^(k-1)` with `m` the reference mean.
    pub prediction: f64,
    /// `(sample - prediction) / m^(k-2)`.
    pub discrepancy_units: f64,
    /// `|sample - prediction| <= 3 se + m^(k-2)`.
    pub within_tolerance: bool,
}

/// Two-term prediction `m^k + C(k,2) m^(k-1)` for `E[X^k]`.
pub fn two_term_prediction(m: f64, k: u32) -> f64 {
    let c = (k * (k - 1) / 2) as f64;
    m.powi(k as i32) + c * m.powi(k as i32 - 1)
}

pub fn factorial_moment_check(n: usize, d: usize, k: u32, trials: u64, seed: u64, caps: &Caps) -> Result<FactorialMomentReport> {
    if !(2..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("k = {k} outside 2..=4")));
    }
    let samples = sample_statistics(n, d, Statistic::Triangles, trials, seed, 1, caps)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let m = MomentEstimates::from_samples(&xs)?;
    Ok(factorial_report(n, d, k, trials, m.raw_moments[k as usize - 1], m.raw_standard_errors[k as usize - 1]))
}

pub fn factorial_report(n: usize, d: usize, k: u32, trials: u64, sample: f64, se: f64) -> FactorialMomentReport {
    let mref = References::new(n, d).triangle_mean;
    let prediction = two_term_prediction(mref, k);
    let unit = mref.powi(k as i32 - 2);
    FactorialMomentReport {
        n,
        d,
        k,
        trials,
        sample_moment: sample,
        standard_error: se,
        mean_reference: mref,
        prediction,
        discrepancy_units: (sample - prediction) / unit,
        within_tolerance: (sample - prediction).abs() <= 3.0 * se + unit,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub d: usize,
    pub exponent: f64,
    pub seed: u64,
    pub pilot_trials: u64,
    pub trials: u64,
    /// Mean of `Y` from the independent pilot pass.
    pub pilot_mean: f64,
    /// Fraction of main-pass trials with `|Y - pilot_mean| >= d^-exponent pilot_mean`.
    pub tail_frequency: f64,
    pub tail_count: u64,
    pub relative_variance: f64,
    pub relative_variance_se: f64,
    /// `1 / (6 d^3)`.
    pub relative_variance_reference: f64,
    pub ratio_to_reference: f64,
    pub references: References,
}

/// Tail frequency of `Y` around a pilot mean, and its relative variance.
pub fn concentration_experiment(
    n: usize,
    d: usize,
    exponent: f64,
    pilot_trials: u64,
    trials: u64,
    seed: u64,
    caps: &Caps,
) -> Result<TailReport> {
    let pilot = sample_statistics(n, d, Statistic::Pm, pilot_trials, seed, 2, caps)?;
    let pilot_mean = pilot.iter().map(|s| s.1).sum::<f64>() / pilot.len().max(1) as f64;
    let main = sample_statistics(n, d, Statistic::Pm, trials, seed, 3, caps)?;
    let ys: Vec<f64> = main.iter().map(|s| s.1).collect();
    let threshold = (d as f64).powf(-exponent) * pilot_mean;
    let tail_count = ys.iter().filter(|&&y| (y - pilot_mean).abs() >= threshold).count() as u64;
    let (rv, rv_se) = MomentEstimates::relative_variance(&ys);
    let references = References::new(n, d);
    Ok(TailReport {
        n,
        d,
        exponent,
        seed,
        pilot_trials,
        trials,
        pilot_mean,
        tail_frequency: tail_count as f64 / trials as f64,
        tail_count,
        relative_variance: rv,
        relative_variance_se: rv_se,
        relative_variance_reference: references.pm_relative_variance,
        ratio_to_reference: rv / references.pm_relative_variance,
        references,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub trials: u64,
    pub projection: ProjectionCoefficients,
    /// `Var[Y] / E[Y]^2`.
    pub total_relative_variance: f64,
    /// `Var[Y - Y*] / E[Y]^2`.
    pub residual_relative_variance: f64,
    /// `Var[Y - Y*] / Var[Y]` with its jackknife error.
    pub residual_ratio: f64,
    pub residual_ratio_se: f64,
    /// Sample `Cov(Y*, Y* - Y)`, zero up to rounding.
    pub orthogonality: f64,
}

pub fn residual_variance_experiment(n: usize, d: usize, trials: u64, seed: u64, caps: &Caps) -> Result<ResidualReport> {
    let samples = sample_statistics(n, d, Statistic::Joint, trials, seed, 4, caps)?;
    residual_report(n, d, trials, seed, &samples)
}

pub fn residual_report(n: usize, d: usize, trials: u64, seed: u64, samples: &[(f64, f64)]) -> Result<ResidualReport> {
    let proj = janson_projection(samples)?;
    let nf = samples.len() as f64;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / nf;
    let var = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let m = samples.iter().map(f).sum::<f64>() / nf;
        samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (nf - 1.0)
    };
    let var_y = var(&|s| s.1);
    let var_r = var(&|s| s.1 - proj.apply(s.0));
    let ystar_mean = samples.iter().map(|s| proj.apply(s.0)).sum::<f64>() / nf;
    let resid_mean = samples.iter().map(|s| proj.apply(s.0) - s.1).sum::<f64>() / nf;
    let orthogonality =
        samples.iter().map(|s| (proj.apply(s.0) - ystar_mean) * (proj.apply(s.0) - s.1 - resid_mean)).sum::<f64>() / (nf - 1.0);
    // the ratio's error re-fits the projection on each leave-one-block-out set
    let k = samples.len().min(1000);
    let px = samples[..k].iter().map(|s| s.0).sum::<f64>() / k as f64;
    let py = samples[..k].iter().map(|s| s.1).sum::<f64>() / k as f64;
    let blocks = block_sums(samples, |&(x, y)| {
        let (u, v) = (x - px, y - py);
        vec![1.0, u, v, u * u, v * v, u * v]
    });
    let (ratio, ratio_se) = jackknife(&blocks, |s| {
        let n = s[0];
        let (mu, mv) = (s[1] / n, s[2] / n);
        let vxx = s[3] / n - mu * mu;
        let vyy = s[4] / n - mv * mv;
        let vxy = s[5] / n - mu * mv;
        if vxx == 0.0 || vyy == 0.0 {
            return 0.0;
        }
        (vyy - vxy * vxy / vxx) / vyy
    });
    Ok(ResidualReport {
        n,
        d,
        seed,
        trials,
        projection: proj,
        total_relative_variance: var_y / (my * my),
        residual_relative_variance: var_r / (my * my),
        residual_ratio: ratio,
        residual_ratio_se: ratio_se,
        orthogonality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_projects_exactly() {
        let samples: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 % 7.0, 2.0 * (i as f64 % 7.0) + 1.0)).collect();
        let p = janson_projection(&samples).unwrap();
        assert!((p.a - 2.0).abs() < 1e-12 && (p.b - 1.0).abs() < 1e-12);
        let r = residual_report(0, 0, 50, 0, &samples).unwrap();
        assert!(r.residual_relative_variance.abs() < 1e-20);
        assert_eq!(janson_projection(&[(1.0, 2.0), (1.0, 3.0)]), Err(Error::DegenerateX));
    }

    #[test]
    fn moments_of_a_constant() {
        let m = MomentEstimates::from_samples(&[3.0; 100]).unwrap();
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.raw_moments[1], 9.0);
    }

    #[test]
    fn jackknife_of_mean_matches_plug_in() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..40_000).map(|_| rng.random_range(0..1000) as f64).collect();
        let m = MomentEstimates::from_samples(&xs).unwrap();
        let plug = (m.variance / xs.len() as f64).sqrt();
        // 40 blocks: the jackknife error itself is good to about 1/sqrt(40)
        assert!((m.standard_errors[0] / plug - 1.0).abs() < 0.5);
    }

    #[test]
    fn k4_is_deterministic() {
        let caps = Caps::default();
        let r = estimate_moments(4, 3, Statistic::Joint, 200, 1, &caps).unwrap();
        let y = r.y.unwrap();
        assert_eq!((y.mean, y.variance), (3.0, 0.0));
        assert_eq!(r.x.unwrap().raw_moments[1], 16.0);
        let t = concentration_experiment(4, 3, 1.1, 50, 100, 1, &caps).unwrap();
        assert_eq!(t.tail_count, 0);
    }
}
