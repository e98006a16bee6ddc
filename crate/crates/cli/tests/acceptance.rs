//! Acceptance criteria 1-10, one line each.
//!
//! Runs without the libtest harness so the report streams as it goes; any
//! failed criterion fails the target.

use spinmi_cli::verify::{run_criterion, Produced};
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut produced = Produced::default();
    let mut failed = Vec::new();
    for number in 1..=10 {
        let report = run_criterion(number, &mut produced);
        println!("{report}");
        if !report.passed {
            failed.push(number);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
