//! Acceptance suite: one PASS/FAIL line per criterion, details for failures.

use cmdeg_core::acceptance::run_suite;

fn main() {
    let reports = run_suite();
    println!();
    println!("acceptance criteria");
    for report in &reports {
        println!("{}", report.summary());
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    for report in &failed {
        println!();
        println!("criterion {} failures:", report.id);
        for check in report.failures().take(8) {
            println!("  {}: expected {}, got {}", check.label, check.expected, check.got);
        }
        let more = report.failures().count().saturating_sub(8);
        if more > 0 {
            println!("  ... and {more} more");
        }
    }
    println!();
    println!("{} of {} criteria passed", reports.len() - failed.len(), reports.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
