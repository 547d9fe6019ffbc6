//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `cargo test -p critflow-cli --test acceptance -- 2 7` runs a subset.

use std::process::ExitCode;
use std::time::Instant;

use critflow_cli::acceptance::{run_criterion, DEFAULT_SEED};

fn main() -> ExitCode {
    let filter: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids: Vec<u8> = if filter.is_empty() {
        (1..=12).collect()
    } else {
        filter
    };
    let mut failed = 0;
    for id in &ids {
        let start = Instant::now();
        let r = run_criterion(*id, DEFAULT_SEED);
        println!("{}  ({:.1}s)", r.line(), start.elapsed().as_secs_f64());
        if !r.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {} failed",
        ids.len() - failed,
        failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
