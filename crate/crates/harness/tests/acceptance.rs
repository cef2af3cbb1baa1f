//! One line per criterion; exits non-zero if any fails.

use std::process::ExitCode;

use nls_harness::suites::{run_criteria, thread_cap};

fn main() -> ExitCode {
    let checks = run_criteria(&(1..=10).collect::<Vec<_>>(), thread_cap());
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("criterion {}: {verdict}: {} ({}, {:.1}s)", c.criterion, c.detail, c.name, c.seconds);
    }
    let failed: Vec<u8> = checks.iter().filter(|c| !c.passed).map(|c| c.criterion).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", checks.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
