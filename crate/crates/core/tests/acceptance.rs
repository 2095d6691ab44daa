//! Acceptance run: one PASS/FAIL line per criterion, then the checks behind
//! it and cross-checks of the computed reference values against the
//! independent implementations in `common`.
//!
//! Two checks fail at the pinned sizes and are reported as such; see the
//! README. Any other failure makes this target exit nonzero.

mod common;

use std::process::ExitCode;
use std::str::FromStr;

use num_rational::BigRational;
use rrg_core::suite::{run_suite, Outcome, SuiteOptions, ACCEPTANCE};
use serde_json::Value;

/// (criterion id, check name) pairs that are known not to pass.
const KNOWN_FAILURES: [(u8, &str); 2] = [(6, "mean"), (12, "d3-window")];

fn rational(v: &Value) -> BigRational {
    BigRational::from_str(v.as_str().expect("rational as string")).expect("parses")
}

fn exact_field(o: &Outcome, key: &str) -> BigRational {
    rational(&o.metrics[key]["exact"])
}

/// Independent reference values for one outcome, as (label, agrees).
fn cross_checks(o: &Outcome) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    match o.id {
        5 => {
            let c8 = common::tally_containing(8, 3, &[&[], &[(0, 1)]]);
            let n8 = BigRational::new(c8[1].into(), c8[0].into());
            out.push((format!("n = 8 empty H: {n8}"), exact_field(o, "empty_h_n8") == n8));
            let c = common::tally_containing(10, 3, &[&[(0, 1)], &[(0, 1), (2, 3)], &[(0, 1), (1, 3)]]);
            let disjoint = BigRational::new(c[1].into(), c[0].into());
            let adjacent = BigRational::new(c[2].into(), c[0].into());
            out.push((format!("n = 10 one edge, disjoint: {disjoint}"), exact_field(o, "one_edge_disjoint") == disjoint));
            out.push((format!("n = 10 one edge, adjacent: {adjacent}"), exact_field(o, "one_edge_adjacent") == adjacent));
        }
        7 => {
            let cells = o.metrics["count_cells"].as_u64().expect("count");
            let mut seen = 0;
            let mut agree = true;
            for d in 1..=3usize {
                for n in (d + 1)..=10 {
                    if d * n % 2 == 1 {
                        continue;
                    }
                    seen += 1;
                    let lib = rrg_core::oracle::count_labeled_regular(n, d);
                    agree &= lib == common::count_regular_edgewise(n, d).into();
                }
            }
            out.push((format!("edge-wise enumerator over {seen} cells"), agree && seen == cells));
        }
        8 => {
            let tv = common::extension_tv(8, 2);
            out.push((format!("n = 8 by perfect matching weights: {tv}"), rational(&o.metrics["n8_d2"]["tv"]) == tv));
        }
        10 => {
            let z = common::scalar_zeta(&[0.9, 0.1], &[0.5, 0.5], 0.1);
            let ok = z.len() == 3 && (z[0] - 0.4).abs() < 1e-12 && (z[1] - 0.5).abs() < 1e-12;
            out.push((format!("floating-point recursion: Z = {z:?}"), ok));
        }
        11 => {
            let tv = common::mu3_nu2_vs_mu5_tv();
            out.push((format!("tv by disjoint matching pairs: {tv}"), rational(&o.metrics["exact_tv"]) == tv));
        }
        _ => {}
    }
    out
}

fn main() -> ExitCode {
    // libtest passes flags such as --nocapture; a listing request gets nothing
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let opts = SuiteOptions::default();
    println!("acceptance suite, seed {}", opts.seed);
    let mut unexpected = Vec::new();
    let report = run_suite("acceptance", &ACCEPTANCE, None, &opts, |o| {
        println!("{}", o.line());
        for c in &o.checks {
            println!("    [{}] {:<20} {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            if !c.passed && !KNOWN_FAILURES.contains(&(o.id, c.name.as_str())) {
                unexpected.push(format!("criterion {} check {}", o.id, c.name));
            }
        }
        for (label, ok) in cross_checks(o) {
            println!("    [{}] {:<20} {label}", if ok { "pass" } else { "FAIL" }, "reference");
            if !ok {
                unexpected.push(format!("criterion {} reference {label}", o.id));
            }
        }
    });
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            println!("suite error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let passed = report.outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria pass", report.outcomes.len());
    if unexpected.is_empty() {
        println!("known failures only: {KNOWN_FAILURES:?}");
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join("; "));
        ExitCode::FAILURE
    }
}
