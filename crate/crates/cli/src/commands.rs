use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use rrg_core::counting::{count_one_factorisations_ordered, count_perfect_matchings_with, count_triangles};
use rrg_core::coupling::{
    complete_experiment, exact_eta, matching_extension_exact, matching_extension_mc, maximal_coupling, planted_instance,
    run_inclusion, strassen_coupling, zeta_coupling, AspSampler, InclusionCase, InclusionPipeline, StrassenReport,
};
use rrg_core::estimators::{concentration_experiment, estimate_moments, residual_variance_experiment, Statistic};
use rrg_core::measure::to_f64;
use rrg_core::oracle::{class_distribution, exact_distribution, Atom};
use rrg_core::report::{params, write_csv, ExperimentConfig, ExperimentReport};
use rrg_core::samplers::{par_trials, sample_oplus, try_par_trials};
use rrg_core::suite::{run_suite, SuiteOptions, ACCEPTANCE, CALIBRATION};
use rrg_core::{Caps, Graph, MeasureExpr};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command, Couple, Experiment, Global, Stat, SuiteName};

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let caps = load_caps(g)?;
    match &cli.command {
        Command::Sample { n, d, measure, trials } => sample(g, &caps, *n, *d, measure.as_deref(), *trials),
        Command::Count { input } => {
            let graph = Graph::from_text(&read_input(input)?)?;
            let d = graph.degree(0);
            // counts past u64 are printed as strings
            let ordered_1f = match graph.is_regular(d) && graph.n() > 0 {
                true => {
                    let c = count_one_factorisations_ordered(&graph, d)?;
                    u64::try_from(c).map_or_else(|_| json!(c.to_string()), |v| json!(v))
                }
                false => Value::Null,
            };
            let result = json!({
                "pm": count_perfect_matchings_with(&graph, &caps)?,
                "triangles": count_triangles(&graph),
                "ordered_1f": ordered_1f,
            });
            emit(g, "count", params(&[("input", json!(input.display().to_string()))]), result)
        }
        Command::Tv { n, p, q, classes } => {
            let (pd, qd) = (exact_distribution(&parse_expr(p)?, *n, &caps)?, exact_distribution(&parse_expr(q)?, *n, &caps)?);
            let tv = match classes {
                true => class_distribution(&pd)?.tv(&class_distribution(&qd)?),
                false => pd.exact_tv(&qd)?,
            };
            let result = json!({ "tv": tv.to_string(), "tv_f64": to_f64(&tv), "support_p": pd.len(), "support_q": qd.len() });
            emit(g, "tv", params(&[("n", json!(n)), ("p", json!(p)), ("q", json!(q)), ("classes", json!(classes))]), result)
        }
        Command::Couple(c) => couple(g, &caps, c),
        Command::Experiment(e) => experiment(g, &caps, e),
        Command::Suite { name, only } => suite(g, &caps, *name, only),
    }
}

fn load_caps(g: &Global) -> Result<Caps> {
    let Some(path) = &g.caps else { return Ok(Caps::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    // fields missing from the file keep their defaults
    let mut merged = serde_json::to_value(Caps::default())?;
    let overrides: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Object(map) = overrides else { anyhow::bail!("{}: expected a JSON object", path.display()) };
    for (k, v) in map {
        if merged.get(&k).is_none() {
            anyhow::bail!("{}: unknown cap `{k}`", path.display());
        }
        merged[k] = v;
    }
    Ok(serde_json::from_value(merged)?)
}

fn read_input(path: &Path) -> Result<String> {
    let mut s = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut s)?;
    } else {
        File::open(path).with_context(|| format!("opening {}", path.display()))?.read_to_string(&mut s)?;
    }
    Ok(s)
}

fn parse_expr(s: &str) -> Result<MeasureExpr> {
    Ok(s.parse::<MeasureExpr>()?)
}

fn emit<T: Serialize>(g: &Global, command: &str, p: Value, result: T) -> Result<ExitCode> {
    let report = ExperimentReport::new(ExperimentConfig::new(command, p, g.seed), result);
    match &g.output {
        Some(path) => std::fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(report.to_json().as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn sample(g: &Global, caps: &Caps, n: usize, d: Option<usize>, measure: Option<&str>, trials: u64) -> Result<ExitCode> {
    let expr = match (measure, d) {
        (Some(m), _) => parse_expr(m)?,
        (None, Some(d)) => MeasureExpr::mu(d),
        (None, None) => anyhow::bail!("give --d or --measure"),
    };
    let parts: Vec<Atom> = expr.parts.clone();
    let graphs = try_par_trials(g.seed, 0, trials, |r| Ok(sample_oplus(&parts, n, r, caps)?.graph))?;
    let texts: Vec<String> = graphs.iter().map(Graph::to_text).collect();
    let p = params(&[("n", json!(n)), ("measure", json!(expr.to_string())), ("trials", json!(trials))]);
    if g.output.is_some() {
        return emit(g, "sample", p, json!({ "graphs": texts }));
    }
    let mut out = io::stdout().lock();
    for (i, t) in texts.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        out.write_all(t.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn couple(g: &Global, caps: &Caps, c: &Couple) -> Result<ExitCode> {
    match c {
        Couple::Maximal { n, p, q, trials } => {
            let (pd, qd) = (exact_distribution(&parse_expr(p)?, *n, caps)?, exact_distribution(&parse_expr(q)?, *n, caps)?);
            let table = maximal_coupling(&pd.to_measure(), &qd.to_measure())?;
            let tv = pd.exact_tv(&qd)?;
            let sampler = table.sampler();
            let agree = par_trials(g.seed, 0, *trials, |r| {
                let (a, b) = sampler.sample(r);
                a == b
            })
            .into_iter()
            .filter(|&x| x)
            .count() as u64;
            let result = json!({
                "tv": tv.to_string(),
                "diagonal_mass": table.diagonal_mass().to_string(),
                "diagonal_mass_f64": to_f64(&table.diagonal_mass()),
                "trials": trials,
                "agreement_rate": (*trials > 0).then(|| agree as f64 / *trials as f64),
            });
            emit(g, "couple maximal", params(&[("n", json!(n)), ("p", json!(p)), ("q", json!(q)), ("trials", json!(trials))]), result)
        }
        Couple::Strassen { instances, delta, epsilon } => {
            let reports: Vec<StrassenReport> =
                try_par_trials(g.seed, 0, *instances, |r| strassen_coupling(&planted_instance(r, *delta, *epsilon)))?;
            let worst = reports.iter().map(|r| r.violation_f64).fold(0.0, f64::max);
            let p = params(&[("instances", json!(instances)), ("delta", json!(delta)), ("epsilon", json!(epsilon))]);
            emit(g, "couple strassen", p, json!({ "max_violation": worst, "instances": reports }))
        }
        Couple::Extend { n, d, trials } => {
            let report = match trials {
                Some(t) => matching_extension_mc(*n, *d, *t, g.seed, caps)?,
                None => matching_extension_exact(*n, *d, caps)?,
            };
            emit(g, "couple extend", params(&[("n", json!(n)), ("d", json!(d)), ("trials", json!(trials))]), report)
        }
        Couple::Asp { n, d, k, trials } => {
            let eta = exact_eta(*n, *d, *k, caps)?;
            let nu = exact_distribution(&MeasureExpr::nu(d * k), *n, caps)?;
            let tv = eta.exact_tv(&nu)?;
            let sampler = AspSampler::new(*n, *d, *k, caps)?;
            let draws = try_par_trials(g.seed, 0, *trials, |r| Ok(sampler.sample(r)?.graph.edge_set().expect("oracle-sized")))?;
            let mut hist = std::collections::BTreeMap::new();
            for e in draws {
                *hist.entry(e).or_insert(0u64) += 1;
            }
            let exact: std::collections::BTreeMap<_, f64> = eta.support().map(|e| (e, to_f64(&eta.mass(e)))).collect();
            let empirical = (*trials > 0).then(|| rrg_core::stats::empirical_tv_vs_exact(&hist, &exact)).transpose()?;
            let result = json!({ "tv_eta_nu": tv.to_string(), "tv_eta_nu_f64": to_f64(&tv), "support": eta.len(), "empirical_vs_eta": empirical });
            emit(g, "couple asp", params(&[("n", json!(n)), ("d", json!(d)), ("k", json!(k)), ("trials", json!(trials))]), result)
        }
        Couple::Zeta { n, d, epsilon } => {
            let mu = class_distribution(&exact_distribution(&MeasureExpr::mu(*d), *n, caps)?)?.to_measure();
            let nu = class_distribution(&exact_distribution(&MeasureExpr::nu(*d), *n, caps)?)?.to_measure();
            let trace = zeta_coupling(&mu, &nu, *epsilon, caps)?;
            emit(g, "couple zeta", params(&[("n", json!(n)), ("d", json!(d)), ("epsilon", json!(epsilon))]), trace.summary())
        }
        Couple::Complete { n, d, epsilon, trials } => {
            let (report, _) = complete_experiment(*n, *d, *epsilon, *trials, g.seed, caps)?;
            let p = params(&[("n", json!(n)), ("d", json!(d)), ("epsilon", json!(epsilon)), ("trials", json!(trials))]);
            emit(g, "couple complete", p, report)
        }
        Couple::Inclusion { n, d1, d2, trials, epsilon, split } => {
            let case = match epsilon {
                Some(e) => InclusionCase::Constant { epsilon: *e, split: *split },
                None => InclusionCase::Growing,
            };
            let pipeline = InclusionPipeline::new(*n, *d1, *d2, case, caps)?;
            let (report, _) = run_inclusion(&pipeline, *trials, g.seed)?;
            let p = params(&[
                ("n", json!(n)),
                ("d1", json!(d1)),
                ("d2", json!(d2)),
                ("trials", json!(trials)),
                ("epsilon", json!(epsilon)),
                ("split", json!(split)),
            ]);
            emit(g, "couple inclusion", p, report)
        }
    }
}

#[derive(Serialize)]
struct MomentsRow {
    n: usize,
    d: usize,
    trials: u64,
    x_mean: Option<f64>,
    x_mean_se: Option<f64>,
    x_variance: Option<f64>,
    x_variance_se: Option<f64>,
    y_mean: Option<f64>,
    y_mean_se: Option<f64>,
    y_variance: Option<f64>,
    y_variance_se: Option<f64>,
    covariance: Option<f64>,
}

#[derive(Serialize)]
struct TailsRow {
    n: usize,
    d: usize,
    trials: u64,
    exponent: f64,
    tail_frequency: f64,
    relative_variance: f64,
    relative_variance_se: f64,
    reference: f64,
}

#[derive(Serialize)]
struct ProjectionRow {
    n: usize,
    d: usize,
    trials: u64,
    a: f64,
    b: f64,
    total_relative_variance: f64,
    residual_relative_variance: f64,
    residual_ratio: f64,
    residual_ratio_se: f64,
}

fn cells(ns: &[usize], ds: &[usize]) -> Vec<(usize, usize)> {
    ns.iter().flat_map(|&n| ds.iter().map(move |&d| (n, d))).collect()
}

fn sweep<T: Serialize, R: Serialize>(
    g: &Global,
    command: &str,
    p: Value,
    csv: Option<&Path>,
    results: Vec<T>,
    row: impl Fn(&T) -> R,
) -> Result<ExitCode> {
    if let Some(path) = csv {
        let rows: Vec<R> = results.iter().map(row).collect();
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_csv(f, &rows)?;
    }
    emit(g, command, p, results)
}

fn experiment(g: &Global, caps: &Caps, e: &Experiment) -> Result<ExitCode> {
    match e {
        Experiment::Moments { n, d, stat, trials, csv } => {
            let stat = match stat {
                Stat::Pm => Statistic::Pm,
                Stat::Triangles => Statistic::Triangles,
                Stat::Joint => Statistic::Joint,
            };
            let results = cells(n, d)
                .into_iter()
                .map(|(n, d)| estimate_moments(n, d, stat, *trials, g.seed, caps))
                .collect::<Result<Vec<_>, _>>()?;
            let p = params(&[("n", json!(n)), ("d", json!(d)), ("stat", json!(stat)), ("trials", json!(trials))]);
            sweep(g, "experiment moments", p, csv.as_deref(), results, |r| MomentsRow {
                n: r.n,
                d: r.d,
                trials: r.trials,
                x_mean: r.x.as_ref().map(|m| m.mean),
                x_mean_se: r.x.as_ref().map(|m| m.standard_errors[0]),
                x_variance: r.x.as_ref().map(|m| m.variance),
                x_variance_se: r.x.as_ref().map(|m| m.standard_errors[1]),
                y_mean: r.y.as_ref().map(|m| m.mean),
                y_mean_se: r.y.as_ref().map(|m| m.standard_errors[0]),
                y_variance: r.y.as_ref().map(|m| m.variance),
                y_variance_se: r.y.as_ref().map(|m| m.standard_errors[1]),
                covariance: r.covariance.map(|c| c.0),
            })
        }
        Experiment::Tails { n, d, exponent, pilot, trials, csv } => {
            let results = cells(n, d)
                .into_iter()
                .map(|(n, d)| concentration_experiment(n, d, *exponent, *pilot, *trials, g.seed, caps))
                .collect::<Result<Vec<_>, _>>()?;
            let p = params(&[
                ("n", json!(n)),
                ("d", json!(d)),
                ("exponent", json!(exponent)),
                ("pilot", json!(pilot)),
                ("trials", json!(trials)),
            ]);
            sweep(g, "experiment tails", p, csv.as_deref(), results, |r| TailsRow {
                n: r.n,
                d: r.d,
                trials: r.trials,
                exponent: r.exponent,
                tail_frequency: r.tail_frequency,
                relative_variance: r.relative_variance,
                relative_variance_se: r.relative_variance_se,
                reference: r.relative_variance_reference,
            })
        }
        Experiment::Projection { n, d, trials, csv } => {
            let results = cells(n, d)
                .into_iter()
                .map(|(n, d)| residual_variance_experiment(n, d, *trials, g.seed, caps))
                .collect::<Result<Vec<_>, _>>()?;
            let p = params(&[("n", json!(n)), ("d", json!(d)), ("trials", json!(trials))]);
            sweep(g, "experiment projection", p, csv.as_deref(), results, |r| ProjectionRow {
                n: r.n,
                d: r.d,
                trials: r.trials,
                a: r.projection.a,
                b: r.projection.b,
                total_relative_variance: r.total_relative_variance,
                residual_relative_variance: r.residual_relative_variance,
                residual_ratio: r.residual_ratio,
                residual_ratio_se: r.residual_ratio_se,
            })
        }
    }
}

fn suite(g: &Global, caps: &Caps, name: SuiteName, only: &[String]) -> Result<ExitCode> {
    let (label, criteria) = match name {
        SuiteName::Acceptance => ("acceptance", &ACCEPTANCE[..]),
        SuiteName::Calibration => ("calibration", &CALIBRATION[..]),
    };
    let opts = SuiteOptions { seed: g.seed, caps: caps.clone() };
    let only = (!only.is_empty()).then_some(only);
    let report = run_suite(label, criteria, only, &opts, |o| {
        // progress goes to stderr so stdout stays a single JSON document
        eprintln!("{}", o.line());
        for c in o.checks.iter().filter(|c| !c.passed) {
            eprintln!("    FAIL {}: {}", c.name, c.detail);
        }
    })?;
    let failed: Vec<&str> = report.outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
    }
    emit(g, &format!("suite {label}"), params(&[("only", json!(only))]), &report)?;
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
