//! Drives a scenario from a JSON config and writes its CSV, the same path the
//! `scanmix` binary takes.
//!
//! `cargo run --release --example experiment_config`

use scanmix::harness::{read_csv, run_scenario, ExperimentConfig};

fn main() -> scanmix::Result<()> {
    let config = ExperimentConfig::from_json(
        r#"{"scenario": "cutoff_profile", "n": [100, 400], "k": [2], "beta": [0.5],
            "replicas": 500, "time_grid": {"points": 6}, "seed": 1}"#,
    )?;
    let out = std::env::temp_dir().join("scanmix_example");
    let run = run_scenario(&config, 2, &out)?;
    for file in &run.files {
        println!("wrote {}", file.display());
    }
    for rec in read_csv(&run.files[0])?.iter().filter(|r| r.kind == "exact_d") {
        println!("n={} t={} d={:.4}", rec.n, rec.t, rec.value);
    }
    Ok(())
}
