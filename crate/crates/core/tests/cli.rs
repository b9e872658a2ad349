use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scanmix(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scanmix"));
    cmd.args(args).env_remove("SCANMIX_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let out = scanmix(&["--help"], &[]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["kernel", "profile", "critical", "restricted", "properties", "couple"] {
        assert!(text.contains(sub), "missing {sub}");
    }
}

#[test]
fn kernel_subcommand_writes_csv_and_kernel_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = scanmix(&["kernel", "--out", out_dir.to_str().unwrap(), "--seed", "3"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("kernel_export.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "scenario,n,k,beta,mode,t,kind,value,std_error,replicas,seed,wall_time_ms");
    assert!(lines.next().unwrap().starts_with("kernel_export,16,2,5.0000000000000000e-1,standard,1,stationarity_tv,"));
    assert!(out_dir.join("kernel_n16_k2_beta0.5_standard.txt").exists());
}

#[test]
fn json_format_uses_csv_field_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"scenario":"critical_scaling","n":[16,32,64],"k":[1,2],"beta":[1.0]}"#);
    let out_dir = dir.path().join("out");
    let out = scanmix(&["critical", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--format", "json"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("critical_scaling.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert!(rows.len() >= 6);
    let keys: Vec<&str> = rows[0].as_object().unwrap().keys().map(|s| s.as_str()).collect();
    for field in scanmix::harness::CSV_HEADER {
        assert!(keys.contains(&field), "missing {field}");
    }
    assert!(rows.iter().any(|r| r["kind"] == "exponent_n"));
}

#[test]
fn property_suite_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let good = scanmix(&["properties", "--out", dir.path().join("a").to_str().unwrap()], &[]);
    assert_eq!(good.status.code(), Some(0));
    let bad = scanmix(&["properties", "--inject-self-spin", "--out", dir.path().join("b").to_str().unwrap()], &[]);
    assert_eq!(bad.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/property_suite_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    for check in report["checks"].as_array().unwrap() {
        assert!(!check["reference"].as_str().unwrap().is_empty());
    }
}

#[test]
fn config_errors_are_reported_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", r#"{"scenario":"cutoff_profile","n":[20],"k":[1],"beta":[0.5],"replica":5}"#);
    let out = scanmix(&["profile", "--config", &unknown, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replica"));

    let other = write_config(dir.path(), "o.json", r#"{"scenario":"kernel_export","n":[20],"k":[1],"beta":[0.5]}"#);
    let out = scanmix(&["profile", "--config", &other, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));

    let bad_grid = write_config(dir.path(), "g.json", r#"{"scenario":"cutoff_profile","n":[20],"k":[30],"beta":[0.5]}"#);
    let out = scanmix(&["profile", "--config", &bad_grid, "--out", dir.path().to_str().unwrap()], &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("k exceeds n"));
}

#[test]
fn workers_env_var_is_the_default_and_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scenario":"cutoff_profile","n":[40,80],"k":[2],"beta":[0.5],"replicas":200,"time_grid":{"points":4}}"#,
    );
    let run = |name: &str, workers: &str| {
        let out_dir = dir.path().join(name);
        let out = scanmix(&["profile", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9"], &[("SCANMIX_WORKERS", workers)]);
        (out, out_dir)
    };
    let (a, a_dir) = run("a", "1");
    let (b, b_dir) = run("b", "3");
    assert!(a.status.success() && b.status.success());
    assert_eq!(fs::read(a_dir.join("cutoff_profile.csv")).unwrap(), fs::read(b_dir.join("cutoff_profile.csv")).unwrap());
    let (zero, _) = run("c", "0");
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn couple_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"scenario":"couple_trace","n":[100],"k":[3],"beta":[0.5],"steps":300,"start":["all_plus","random"],"schedule":"rematched"}"#,
    );
    let out = scanmix(&["couple", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("couple_trace.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,hamming,mag_gap,r_value,rule,stop_events");
    assert_eq!(text.lines().count(), 302);
}
