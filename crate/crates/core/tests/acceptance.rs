//! Runs the eight acceptance criteria at full sample counts and prints one
//! PASS/FAIL line per criterion. Tolerances are the constants in
//! `ukb_core::verify`.
//!
//! Criterion 5 is expected to fail in its "sphere-in-preimage" clause: on a
//! fiber where the corner has rank at least two, the sphere around `Ξ(μ)`
//! also contains rays inside the corner that decompose to another `ρ′`.
//! The test pins that exact failure shape instead of hiding it.
//!
//! Built without the libtest harness so the summary lines are never captured.

use std::time::Instant;

use ukb_core::verify::{instances, run_suite, SuiteConfig};
use ukb_core::ToleranceConfig;

fn main() {
    let tol = ToleranceConfig::default();
    let algebras = instances(&[], &tol).expect("catalog builds");
    let start = Instant::now();
    let report = run_suite(&algebras, &SuiteConfig::full(), &SuiteConfig::quick(), &tol);
    for (k, c) in report.criteria.iter().enumerate() {
        let failed = c.failed_clauses();
        println!(
            "criterion {}: {} ({}; max residual {:.3e}{})",
            k + 1,
            if c.pass { "PASS" } else { "FAIL" },
            c.check,
            c.max_residual,
            if failed.is_empty() { String::new() } else { format!("; failing clauses: {}", failed.join(", ")) }
        );
    }
    println!("suite time: {:.1} s", start.elapsed().as_secs_f64());

    for (k, c) in report.criteria.iter().enumerate() {
        if k + 1 == 5 {
            continue;
        }
        assert!(c.pass, "criterion {} failed: {}", k + 1, serde_json::to_string_pretty(c).unwrap());
    }
    let five = &report.criteria[4];
    assert_eq!(five.failed_clauses(), vec!["sphere-in-preimage"], "{}", serde_json::to_string_pretty(five).unwrap());
    let sphere = five.clauses.iter().find(|c| c.check == "sphere-in-preimage").unwrap();
    for w in &sphere.witnesses {
        assert!(w["corner_rank"].as_u64().unwrap_or(0) >= 2, "unexpected sphere failure: {w}");
    }
}
