//! The acceptance and calibration suites. Each criterion is a list of named
//! checks with pinned tolerances plus the metrics they were judged on.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution as _, Poisson};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Caps;
use crate::counting::{conditional_edge_probability, count_one_factorisations_ordered, mckay_estimate};
use crate::coupling::{
    exact_eta, maximal_coupling, matching_extension_exact, planted_instance, run_inclusion, strassen_coupling, zeta_coupling, AspSampler,
    InclusionCase, InclusionPipeline, ZetaSampler,
};
use crate::error::Result;
use crate::estimators::{estimate_moments, factorial_report, sample_statistics, MomentEstimates, Statistic};
use crate::graph::{DegreeSequence, EdgeSet, Graph};
use crate::measure::{ratio, to_f64, FiniteMeasure};
use crate::oracle::{
    class_distribution, count_labeled_regular, exact_distribution, exact_edge_probability, for_each_regular, Atom, MeasureExpr,
};
use crate::samplers::{par_trials, sample_matching, sample_regular, try_par_trials, OverlaySpec, SeededStream};
use crate::stats::{
    chi_square_gof, chi_square_independence, chi_square_sf, chi_square_sf_reference, chi_square_uniform, empirical_tv,
    empirical_tv_vs_exact, ks_uniform, poisson_fit,
};

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub caps: Caps,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 20_240_601, caps: Caps::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    /// Wall time; kept out of the serialized report so reports stay
    /// byte-stable.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Outcome {
    fn new(id: u8, name: &'static str) -> Self {
        Outcome { id, name, passed: true, checks: Vec::new(), metrics: BTreeMap::new(), elapsed: Duration::ZERO }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics.insert(key.to_string(), json!(value));
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One summary line: id, name, verdict, failing checks, time.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let failing: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let note = if failing.is_empty() { String::new() } else { format!("  failing: {}", failing.join(", ")) };
        format!("criterion {:>2} {:<18} {verdict}  ({} checks, {:.1}s){note}", self.id, self.name, self.checks.len(), self.elapsed.as_secs_f64())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub outcomes: Vec<Outcome>,
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    run: fn(&SuiteOptions) -> Result<Outcome>,
}

impl Criterion {
    pub fn run(&self, opts: &SuiteOptions) -> Result<Outcome> {
        let start = Instant::now();
        let mut o = (self.run)(opts)?;
        o.elapsed = start.elapsed();
        Ok(o)
    }

    fn matches(&self, key: &str) -> bool {
        self.name == key || self.id.to_string() == key
    }
}

pub const ACCEPTANCE: [Criterion; 12] = [
    Criterion { id: 1, name: "overlay", run: overlay },
    Criterion { id: 2, name: "maximal", run: maximal },
    Criterion { id: 3, name: "strassen", run: strassen },
    Criterion { id: 4, name: "mckay", run: mckay },
    Criterion { id: 5, name: "edge-probability", run: edge_probability },
    Criterion { id: 6, name: "triangles", run: triangles },
    Criterion { id: 7, name: "oracle", run: oracle },
    Criterion { id: 8, name: "extension", run: extension },
    Criterion { id: 9, name: "asp", run: asp },
    Criterion { id: 10, name: "zeta", run: zeta },
    Criterion { id: 11, name: "inclusion", run: inclusion },
    Criterion { id: 12, name: "concentration", run: concentration },
];

pub const CALIBRATION: [Criterion; 4] = [
    Criterion { id: 1, name: "chi-square-uniform", run: calibrate_uniform },
    Criterion { id: 2, name: "poisson-fit", run: calibrate_poisson },
    Criterion { id: 3, name: "empirical-tv", run: calibrate_tv },
    Criterion { id: 4, name: "chi-square-tail", run: calibrate_tail },
];

/// Looks up criteria by name or id; `None` selects all.
pub fn select<'a>(suite: &'a [Criterion], only: Option<&[String]>) -> Result<Vec<&'a Criterion>> {
    match only {
        None => Ok(suite.iter().collect()),
        Some(keys) => keys
            .iter()
            .map(|k| {
                suite.iter().find(|c| c.matches(k)).ok_or_else(|| {
                    let names: Vec<&str> = suite.iter().map(|c| c.name).collect();
                    crate::Error::InvalidArgument(format!("unknown criterion {k:?}; known: {}", names.join(", ")))
                })
            })
            .collect(),
    }
}

/// Runs the selected criteria in order, calling `progress` after each.
pub fn run_suite(
    name: &'static str,
    suite: &[Criterion],
    only: Option<&[String]>,
    opts: &SuiteOptions,
    mut progress: impl FnMut(&Outcome),
) -> Result<SuiteReport> {
    let mut outcomes = Vec::new();
    for c in select(suite, only)? {
        let o = c.run(opts)?;
        progress(&o);
        outcomes.push(o);
    }
    Ok(SuiteReport { suite: name, seed: opts.seed, passed: outcomes.iter().all(|o| o.passed), outcomes })
}

fn block(id: u8, sub: u32) -> u32 {
    1000 + 100 * id as u32 + sub
}

/// Single stream for the sequential parts of a criterion.
fn rng(seed: u64, id: u8, sub: u32) -> SeededStream {
    SeededStream::new(seed, crate::samplers::stream_id(block(id, sub), 0))
}

fn double_factorial(n: usize) -> BigUint {
    (1..n).step_by(2).map(BigUint::from).product::<BigUint>().max(BigUint::one())
}

// 1. Overlay of two perfect-matching skeletons at n = 1000.
fn overlay(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(1, "overlay");
    let n = 1000;
    let trials = 10_000;
    let pm = sample_matching(n, &mut rng(opts.seed, 1, 0))?;
    let spec = OverlaySpec::new(vec![pm.clone(), pm])?;
    let outs = par_trials(opts.seed, block(1, 1), trials, |r| crate::samplers::overlay(&spec, r));
    let disjoint = outs.iter().filter(|x| x.disjoint).count() as f64 / trials as f64;
    let target = (-0.5f64).exp();
    o.metric("disjoint_frequency", disjoint);
    o.metric("target", target);
    o.check("disjoint-frequency", (disjoint - target).abs() <= 0.02, format!("{disjoint:.4} vs e^-1/2 = {target:.4} +- 0.02"));
    let max = outs.iter().map(|x| x.repeated_edges).max().unwrap_or(0);
    let mut hist = vec![0u64; max + 1];
    for x in &outs {
        hist[x.repeated_edges] += 1;
    }
    let fit = poisson_fit(&hist, 0.5)?;
    o.metric("repeated_edge_histogram", &hist);
    o.metric("poisson_fit", &fit);
    o.check("poisson-fit", fit.passes(), format!("chi2 {:.3} on {} dof, p = {:.4}", fit.statistic, fit.dof, fit.p_value));
    Ok(o)
}

fn random_five_point<R: Rng + ?Sized>(r: &mut R) -> Result<FiniteMeasure<u8>> {
    loop {
        let w: Vec<u32> = (0..5).map(|_| r.random_range(0..12)).collect();
        if w.iter().any(|&x| x > 0) {
            return FiniteMeasure::from_weights(w.iter().enumerate().map(|(i, &x)| (i as u8, BigInt::from(x))));
        }
    }
}

// 2. Maximal coupling: diagonal identity and conditional independence.
fn maximal(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(2, "maximal");
    let mut r = rng(opts.seed, 2, 0);
    let mut exact = 0;
    for _ in 0..500 {
        let (p, q) = (random_five_point(&mut r)?, random_five_point(&mut r)?);
        if maximal_coupling(&p, &q)?.diagonal_mass() == BigRational::one() - p.tv(&q) {
            exact += 1;
        }
    }
    o.metric("diagonal_identity_exact", exact);
    o.check("diagonal-identity", exact == 500, format!("{exact}/500 instances with P(X=Y) = 1 - tv exactly"));

    let draws = 1_000_000u64;
    let mut r = rng(opts.seed, 2, 1);
    let mut pvalues = Vec::new();
    let mut instance = 0;
    while pvalues.len() < 10 {
        let (p, q) = (random_five_point(&mut r)?, random_five_point(&mut r)?);
        let t = maximal_coupling(&p, &q)?;
        let (rows, cols) = (t.left_residual().clone(), t.right_residual().clone());
        if rows.len() < 2 || cols.len() < 2 {
            continue;
        }
        // every off-diagonal cell must clear the expected-count floor
        let r_total: u128 = rows.values().sum();
        let min_cell = rows.values().min().unwrap() * cols.values().min().unwrap();
        let expected = draws as f64 * min_cell as f64 / (r_total as f64 * t.denominator() as f64);
        if expected < 20.0 {
            continue;
        }
        let sampler = t.sampler();
        let pairs = par_trials(opts.seed, block(2, 2) + instance, draws, |s| sampler.sample(s));
        instance += 1;
        let ri: BTreeMap<u8, usize> = rows.keys().enumerate().map(|(i, &k)| (k, i)).collect();
        let ci: BTreeMap<u8, usize> = cols.keys().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut table = vec![vec![0u64; ci.len()]; ri.len()];
        for (a, b) in pairs.iter().filter(|(a, b)| a != b) {
            table[ri[a]][ci[b]] += 1;
        }
        pvalues.push(chi_square_independence(&table)?.p_value);
    }
    let min_p = pvalues.iter().copied().fold(1.0, f64::min);
    o.metric("independence_p_values", &pvalues);
    o.check(
        "conditional-independence",
        pvalues.iter().all(|&p| p > crate::stats::SIGNIFICANCE_FLOOR),
        format!("10 instances x 1e6 draws, min p = {min_p:.4} (floor 1e-3, 10 tests)"),
    );
    Ok(o)
}

// 3. Max-flow coupling on planted (0.1, 0.1) instances.
fn strassen(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(3, "strassen");
    let mut r = rng(opts.seed, 3, 0);
    let (mut worst, mut marginals_ok) = (0.0f64, 0usize);
    for _ in 0..200 {
        let h = planted_instance(&mut r, 0.1, 0.1);
        let rep = strassen_coupling(&h)?;
        worst = worst.max(rep.violation_f64);
        let left_uniform = rep.table.left_marginal().iter().all(|(_, m)| *m == ratio(1, h.left as i64)) && rep.table.left_marginal().len() == h.left;
        let right_uniform =
            rep.table.right_marginal().iter().all(|(_, m)| *m == ratio(1, h.right as i64)) && rep.table.right_marginal().len() == h.right;
        // the off-edge mass must be exactly the product block
        let off_edge = rep.table.mass_where(|&s, &t| !h.has_edge(s, t));
        if left_uniform && right_uniform && off_edge.to_string() == rep.violation {
            marginals_ok += 1;
        }
    }
    o.metric("worst_violation", worst);
    o.check("violation-bound", worst <= 0.3112, format!("max violation over 200 instances {worst:.4} <= 0.3112"));
    o.check("exact-marginals", marginals_ok == 200, format!("{marginals_ok}/200 with uniform marginals and exact off-edge mass"));
    Ok(o)
}

// 4. McKay leading term in the degenerate case and the regular trend.
fn mckay(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(4, "mckay");
    let mut worst = 0.0f64;
    for n in (2..=20).step_by(2) {
        let e = mckay_estimate(&Graph::empty(n), &DegreeSequence::regular(n, 1)?, &opts.caps)?;
        let exact = double_factorial(n).to_f64().expect("small").ln();
        worst = worst.max(((e.log_leading_term - exact) / exact.max(1.0)).abs());
    }
    o.metric("worst_relative_log_error", worst);
    o.check("degenerate-exact", worst <= 1e-9, format!("max relative error of log leading term vs (n-1)!! over even n <= 20: {worst:.2e}"));
    let mut logs = Vec::new();
    for n in [8, 10, 12] {
        let e = mckay_estimate(&Graph::empty(n), &DegreeSequence::regular(n, 3)?, &opts.caps)?;
        let exact = count_labeled_regular(n, 3).to_f64().expect("finite").ln();
        logs.push((e.log_estimate() - exact).abs());
    }
    o.metric("abs_log_ratio_n8_10_12", &logs);
    o.check(
        "regular-trend",
        logs.windows(2).all(|w| w[1] <= w[0]),
        format!("|log(estimate/exact)| at n = 8, 10, 12: {:.4}, {:.4}, {:.4}", logs[0], logs[1], logs[2]),
    );
    Ok(o)
}

// 5. First-order conditional edge probability.
fn edge_probability(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(5, "edge-probability");
    let d = 3;
    for n in [8usize, 20, 100] {
        let est = conditional_edge_probability(n, d, &Graph::empty(n), 0, 1, &opts.caps)?;
        let exact = if n <= 10 {
            exact_edge_probability(n, d, &Graph::empty(n), 0, 1, &opts.caps)?
        } else {
            ratio(d as i64, n as i64 - 1)
        };
        let err = (est.value - to_f64(&exact)).abs() / to_f64(&exact);
        o.metric(&format!("empty_h_n{n}"), json!({"estimate": est.value, "exact": exact.to_string(), "relative_error": err}));
        let scaled = err * (n * n) as f64;
        o.check(&format!("empty-h-n{n}"), scaled <= 2.0, format!("n^2 x relative error = {scaled:.4} <= 2"));
    }
    let n = 10;
    let h = Graph::from_edges(n, &[(0, 1)])?;
    for (label, u, v) in [("disjoint", 2, 3), ("adjacent", 1, 3)] {
        let est = conditional_edge_probability(n, d, &h, u, v, &opts.caps)?;
        let exact = exact_edge_probability(n, d, &h, u, v, &opts.caps)?;
        let err = (est.value - to_f64(&exact)).abs();
        o.metric(&format!("one_edge_{label}"), json!({"estimate": est.value, "exact": exact.to_string(), "abs_error": err}));
        o.check(&format!("one-edge-{label}"), err < 0.02, format!("|{:.4} - {exact}| = {err:.4} < 0.02", est.value));
    }
    Ok(o)
}

// 6. Triangle moments at (24, 3).
fn triangles(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(6, "triangles");
    let (n, d, trials) = (24, 3, 100_000);
    let rep = estimate_moments(n, d, Statistic::Triangles, trials, opts.seed, &opts.caps)?;
    let m = rep.x.expect("triangles requested");
    let target = 4.0 / 3.0;
    o.metric("moments", &m);
    let zm = (m.mean - target) / m.standard_errors[0];
    let zv = (m.variance - target) / m.standard_errors[1];
    o.check("mean", zm.abs() <= 3.0, format!("{:.4} +- {:.4} vs 4/3: {zm:.1} sigma", m.mean, m.standard_errors[0]));
    o.check("variance", zv.abs() <= 3.0, format!("{:.4} +- {:.4} vs 4/3: {zv:.1} sigma", m.variance, m.standard_errors[1]));
    let f = factorial_report(n, d, 2, trials, m.raw_moments[1], m.raw_standard_errors[1]);
    o.metric("second_moment", &f);
    o.check(
        "second-moment",
        f.within_tolerance,
        format!("E[X^2] = {:.4} vs prediction {:.4}, tolerance 3 x {:.4} + 1", f.sample_moment, f.prediction, f.standard_error),
    );
    Ok(o)
}

// 7. Oracle self-consistency.
fn oracle(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(7, "oracle");
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for d in 1..=3usize {
        for n in (d + 1)..=10 {
            if d * n % 2 == 1 {
                continue;
            }
            let mut c = 0u64;
            for_each_regular(n, d, |_| c += 1);
            cells += 1;
            if BigUint::from(c) != count_labeled_regular(n, d) {
                mismatches.push((n, d));
            }
        }
    }
    o.metric("count_cells", cells);
    o.check("dual-enumerators", mismatches.is_empty(), format!("{cells} (n, d) cells, mismatches {mismatches:?}"));

    let n = 6;
    let mu1 = exact_distribution(&MeasureExpr::mu(1), n, &opts.caps)?;
    let mu2 = exact_distribution(&MeasureExpr::mu(2), n, &opts.caps)?;
    let left = mu1.oplus(&mu1)?.0.oplus(&mu2)?.0;
    let right = mu1.oplus(&mu1.oplus(&mu2)?.0)?.0;
    let direct = exact_distribution(&MeasureExpr::oplus([Atom::Uniform(1), Atom::Uniform(1), Atom::Uniform(2)]), n, &opts.caps)?;
    let assoc = left.exact_tv(&right)?.is_zero() && left.exact_tv(&direct)?.is_zero();
    o.check("oplus-associative", assoc, format!("(mu1+mu1)+mu2 = mu1+(mu1+mu2) = mu1+mu1+mu2 at n = 6 over {} graphs", left.len()));

    let nu3 = exact_distribution(&MeasureExpr::nu(3), n, &opts.caps)?;
    let counts: Vec<(EdgeSet, u128)> = crate::oracle::enumerate_regular(n, 3, &opts.caps)?
        .iter()
        .map(|g| Ok((g.edge_set().expect("small"), count_one_factorisations_ordered(g, 3)?)))
        .collect::<Result<_>>()?;
    let total: u128 = counts.iter().map(|c| c.1).sum();
    let proportional = counts.len() == nu3.len()
        && counts.iter().all(|&(g, c)| nu3.mass(g) == BigRational::new(BigInt::from(c), BigInt::from(total)));
    o.check("nu3-factorisations", proportional, format!("nu_3(6) mass = ordered 1-factorisations / {total} on all {} graphs", counts.len()));
    Ok(o)
}

// 8. Exact matching-extension distances.
fn extension(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(8, "extension");
    let cases = [(8usize, 2usize), (10, 2), (10, 3)];
    let mut tvs = BTreeMap::new();
    let mut stable = true;
    for (n, d) in cases {
        let a = matching_extension_exact(n, d, &opts.caps)?;
        let b = matching_extension_exact(n, d, &opts.caps)?;
        stable &= serde_json::to_string(&a).expect("serializes") == serde_json::to_string(&b).expect("serializes");
        o.metric(&format!("n{n}_d{d}"), &a);
        tvs.insert((n, d), (a.tv.clone().expect("exact path"), a.tv_f64));
    }
    o.check(
        "computed",
        tvs.values().all(|t| t.1 > 0.0 && t.1 < 1.0),
        format!("tv(mu2+mu1, mu3) at n = 8: {} ({:.5}); n = 10: {} ({:.5})", tvs[&(8, 2)].0, tvs[&(8, 2)].1, tvs[&(10, 2)].0, tvs[&(10, 2)].1),
    );
    o.check("byte-stable", stable, "two runs serialize identically".into());
    o.check(
        "non-increasing-in-d",
        tvs[&(10, 3)].1 <= tvs[&(10, 2)].1,
        format!("n = 10: d = 2 -> {:.5}, d = 3 -> {:.5}", tvs[&(10, 2)].1, tvs[&(10, 3)].1),
    );
    Ok(o)
}

// 9. The alternative sampling procedure against nu.
fn asp(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(9, "asp");
    let mut tv = Vec::new();
    for n in [6usize, 8] {
        let eta = exact_eta(n, 1, 2, &opts.caps)?;
        let nu = exact_distribution(&MeasureExpr::nu(2), n, &opts.caps)?;
        tv.push(eta.exact_tv(&nu)?);
    }
    o.metric("exact_tv_n6_n8", [tv[0].to_string(), tv[1].to_string()]);
    o.check("exact-tv-n8", to_f64(&tv[1]) < 0.05, format!("tv(eta_2,1, nu_2) at n = 8: {}", tv[1]));
    o.check("exact-tv-monotone", tv[1] <= tv[0], format!("n = 6: {}, n = 8: {} (non-increasing)", tv[0], tv[1]));

    let n = 8;
    let eta = exact_eta(n, 1, 2, &opts.caps)?;
    let sampler = AspSampler::new(n, 1, 2, &opts.caps)?;
    let trials = 1_000_000;
    let draws = try_par_trials(opts.seed, block(9, 0), trials, |r| Ok(sampler.sample(r)?.graph.edge_set().expect("small")))?;
    let mut hist: BTreeMap<EdgeSet, u64> = BTreeMap::new();
    for g in draws {
        *hist.entry(g).or_default() += 1;
    }
    let exact: BTreeMap<EdgeSet, f64> = eta.support().map(|g| (g, to_f64(&eta.mass(g)))).collect();
    let etv = empirical_tv_vs_exact(&hist, &exact)?;
    let corrected = etv.tv - etv.bias_bound;
    let (obs, probs): (Vec<u64>, Vec<f64>) = exact.iter().map(|(g, &p)| (hist.get(g).copied().unwrap_or(0), p)).unzip();
    let outside: u64 = hist.iter().filter(|(g, _)| !exact.contains_key(g)).map(|(_, c)| c).sum();
    let gof = chi_square_gof(&obs, &probs)?;
    o.metric("histogram_tv", &etv);
    o.metric("histogram_gof", &gof);
    o.metric("cells", exact.len());
    o.check(
        "histogram-tv",
        corrected < 0.02 && outside == 0,
        format!(
            "plug-in {:.4} minus bias bound {:.4} = {corrected:.4} < 0.02 over {} cells, {outside} draws off support",
            etv.tv,
            etv.bias_bound,
            exact.len()
        ),
    );
    o.check("histogram-gof", gof.passes(), format!("chi2 {:.1} on {} dof, p = {:.4}", gof.statistic, gof.dof, gof.p_value));
    Ok(o)
}

// 10. The residual recursion.
fn zeta(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(10, "zeta");
    let mu = FiniteMeasure::new([(0u8, ratio(9, 10)), (1, ratio(1, 10))])?;
    let nu = FiniteMeasure::new([(0u8, ratio(1, 2)), (1, ratio(1, 2))])?;
    let t = zeta_coupling(&mu, &nu, 0.1, &opts.caps)?;
    let z = t.z_values();
    let hand = z.len() >= 2 && z[0] == ratio(2, 5) && z[1] == ratio(1, 2) && t.k == 3 && t.product == ratio(1, 10);
    o.check("hand-trace", hand, format!("Z = {:?}, k = {}, product {}", z.iter().map(ToString::to_string).collect::<Vec<_>>(), t.k, t.product));

    let n = 8;
    let bar_mu = class_distribution(&exact_distribution(&MeasureExpr::mu(3), n, &opts.caps)?)?.to_measure();
    let bar_nu = class_distribution(&exact_distribution(&MeasureExpr::nu(3), n, &opts.caps)?)?.to_measure();
    let trace = zeta_coupling(&bar_mu, &bar_nu, 0.01, &opts.caps)?;
    let products = trace.products();
    o.metric("trace", trace.summary());
    o.check(
        "strictly-decreasing",
        products.windows(2).all(|w| w[1] < w[0]) && products[0] < BigRational::one(),
        format!("k = {}, products {:?}", trace.k, trace.summary().products.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>()),
    );
    let sampler = ZetaSampler::new(&trace, &bar_nu)?;
    let trials = 100_000;
    let misses = par_trials(opts.seed, block(10, 0), trials, |r| sampler.sample(r).hit.is_none()).into_iter().filter(|&m| m).count();
    let p = to_f64(&trace.product);
    let rate = misses as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    o.metric("miss_rate", rate);
    o.check("miss-rate", (rate - p).abs() <= 3.0 * sigma, format!("{rate:.5} vs product {p:.5}, 3 sigma = {:.5}", 3.0 * sigma));
    Ok(o)
}

// 11. End-to-end inclusion at (8, 3, 5).
fn inclusion(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(11, "inclusion");
    let (n, d1, d2) = (8, 3, 5);
    let pipeline = InclusionPipeline::new(n, d1, d2, InclusionCase::Growing, &opts.caps)?;
    let (rep, _) = run_inclusion(&pipeline, 10_000, opts.seed)?;
    let carrier = exact_distribution(&MeasureExpr::oplus([Atom::Uniform(d1), Atom::Nu(d2 - d1)]), n, &opts.caps)?;
    let tv = carrier.exact_tv(&exact_distribution(&MeasureExpr::mu(d2), n, &opts.caps)?)?;
    let bound = 1.0 - to_f64(&tv) - 3.0 * rep.inclusion_se;
    o.metric("report", &rep);
    o.metric("exact_tv", tv.to_string());
    match &rep.marginal {
        Some(g) => o.check("g1-marginal", g.passes(), format!("class-level chi2 {:.1} on {} dof, p = {:.4}", g.statistic, g.dof, g.p_value)),
        None => o.check("g1-marginal", false, "too few draws for a chi-square test".into()),
    }
    o.check(
        "inclusion-rate",
        rep.inclusion_rate >= bound,
        format!("{:.4} >= 1 - {tv} - 3 x {:.4} = {bound:.4}", rep.inclusion_rate, rep.inclusion_se),
    );
    Ok(o)
}

// 12. Relative variance of the perfect matching count at n = 24.
fn concentration(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(12, "concentration");
    let n = 24;
    let mut rv = Vec::new();
    for (d, trials) in [(3usize, 20_000u64), (4, 20_000), (5, 10_000)] {
        let ys: Vec<f64> = sample_statistics(n, d, Statistic::Pm, trials, opts.seed, block(12, d as u32), &opts.caps)?.into_iter().map(|s| s.1).collect();
        let (v, se) = MomentEstimates::relative_variance(&ys);
        let reference = 1.0 / (6.0 * (d as f64).powi(3));
        o.metric(&format!("d{d}"), json!({"trials": trials, "relative_variance": v, "se": se, "reference": reference, "ratio": v / reference}));
        rv.push((d, v, se, reference));
    }
    let (_, v3, se3, r3) = rv[0];
    o.check("d3-window", (0.25..=4.0).contains(&(v3 / r3)), format!("{v3:.5} +- {se3:.5} is {:.2} x 1/(6 d^3) = {r3:.5}; window [1/4, 4]", v3 / r3));
    o.check(
        "strictly-decreasing",
        rv.windows(2).all(|w| w[1].1 < w[0].1),
        format!("d = 3, 4, 5: {:.5}, {:.5}, {:.5}", rv[0].1, rv[1].1, rv[2].1),
    );
    Ok(o)
}

// Calibration: p-values of the uniform chi-square under the null.
fn calibrate_uniform(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(1, "chi-square-uniform");
    let runs = 10_000;
    let ps = try_par_trials(opts.seed, block(0, 1), runs, |r| {
        let mut counts = [0u64; 10];
        for _ in 0..1000 {
            counts[r.random_range(0..10)] += 1;
        }
        Ok(chi_square_uniform(&counts)?.p_value)
    })?;
    let ks = ks_uniform(&ps);
    o.metric("ks", ks);
    o.check("p-uniform", ks < 0.02, format!("KS distance of {runs} p-values from U(0, 1): {ks:.4} < 0.02"));
    Ok(o)
}

fn calibrate_poisson(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(2, "poisson-fit");
    let runs = 1000;
    let pois = Poisson::new(0.5).expect("positive rate");
    let ps = try_par_trials(opts.seed, block(0, 2), runs, |r| {
        let mut hist = vec![0u64; 16];
        for _ in 0..10_000 {
            let k = pois.sample(r) as usize;
            hist[k.min(15)] += 1;
        }
        Ok(poisson_fit(&hist, 0.5)?.p_value)
    })?;
    let frac = ps.iter().filter(|&&p| p > 1e-3).count() as f64 / runs as f64;
    o.metric("fraction_above_floor", frac);
    o.check("null-passes", frac >= 0.99, format!("{frac:.3} of {runs} runs with p > 1e-3 (need 0.99)"));
    Ok(o)
}

fn calibrate_tv(opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(3, "empirical-tv");
    let trials = 1_000_000;
    let mut hists = Vec::new();
    for sub in 0..2 {
        let gs = try_par_trials(opts.seed, block(0, 3 + sub), trials, |r| Ok(sample_regular(8, 3, r, &opts.caps)?.edge_set().expect("small")))?;
        let mut h: BTreeMap<EdgeSet, u64> = BTreeMap::new();
        for g in gs {
            *h.entry(g).or_default() += 1;
        }
        hists.push(h);
    }
    let e = empirical_tv(&hists[0], &hists[1])?;
    o.metric("empirical_tv", &e);
    o.check("below-bias", e.tv < e.bias_bound, format!("two 1e6-draw mu_3(8) histograms: tv {:.4} < bias bound {:.4}", e.tv, e.bias_bound));
    Ok(o)
}

fn calibrate_tail(_opts: &SuiteOptions) -> Result<Outcome> {
    let mut o = Outcome::new(4, "chi-square-tail");
    let mut worst = 0.0f64;
    for dof in [1usize, 2, 4, 9, 30, 100, 2834] {
        for q in [0.05, 0.5, 0.9, 1.0, 1.1, 1.5, 3.0] {
            let x = q * dof as f64;
            worst = worst.max((chi_square_sf(x, dof) - chi_square_sf_reference(x, dof)).abs());
        }
    }
    o.metric("max_abs_difference", worst);
    o.check("reference-agreement", worst < 1e-9, format!("max |library - series/continued fraction| = {worst:.2e}"));
    Ok(o)
}
