//! Runs the built-in property suite and prints each check.
//!
//! `cargo run --release --example property_suite`

use scanmix::harness::{run_property_suite, ExperimentConfig, Scenario};

fn main() -> scanmix::Result<()> {
    let config = ExperimentConfig::defaults(Scenario::PropertySuite);
    let report = run_property_suite(&config, 4)?;
    for check in &report.checks {
        let status = if check.passed { "ok  " } else { "FAIL" };
        println!("{status} {:28} {:.3e} (bound {:.3e})", check.name, check.statistic, check.bound);
    }
    println!("suite passed: {}", report.passed);
    Ok(())
}
