use std::process::ExitCode;

use gic_bounds::param_search::SearchOptions;
use gic_bounds::verify::{run_criterion, TolerancePolicy, GROUPS};

const BUDGET_SECONDS: [f64; 12] = [1.0, 1e-3, 1.0, 1.0, 1e-3, 30.0, 1.0, 1e-3, 10.0, 30.0, 60.0, 5.0];

fn main() -> ExitCode {
    let opts = SearchOptions::default();
    let mut failed = 0;
    for criterion in 1..=12u8 {
        let group = GROUPS[criterion as usize - 1];
        let budget = BUDGET_SECONDS[criterion as usize - 1];
        match run_criterion(criterion, TolerancePolicy::Default, &opts) {
            Ok(report) => {
                let status = if report.pass() { "PASS" } else { "FAIL" };
                println!("{status} criterion {criterion:>2} {group:<16} {:>9.4}s (budget {budget}s)", report.seconds);
                for e in report.entries.iter().filter(|e| !e.pass) {
                    println!(
                        "       {}: measured {:.12e}, expected {:.12e} ({:?}, tol {:e})",
                        e.id, e.measured, e.expected, e.relation, e.tolerance
                    );
                }
                if !report.pass() {
                    failed += 1;
                }
            }
            Err(err) => {
                println!("FAIL criterion {criterion:>2} {group:<16} error: {err}");
                failed += 1;
            }
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
