//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines print directly: `cargo test --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use scanmix::bands::*;
use scanmix::checks::{detailed_balance_residual, drift_check, lumping_residual, stationarity_tv, two_coord_config, variance_ratio};
use scanmix::estimators::{chi_square_p_value, contraction_test, fit_power_law, hitting_times, mag_histogram, mc_tv_lower_bound, mean_hitting_time, two_coord_drift};
use scanmix::harness::{interpolate_crossing, run_scenario, ExperimentConfig, OutputFormat, Scenario, TimeGrid};
use scanmix::kernels::{build_kernel, build_mag_kernel, exact_d_profile, exact_mixing_time, full_config_kernel, full_d_profiles, gibbs_full};
use scanmix::{Mode, ModelParams, RngStream, SpinConfig};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_oracles() -> Outcome {
    let mut lump: f64 = 0.0;
    for n in [4, 6, 8] {
        for k in [1, 2, 3] {
            for beta in [0.0, 0.5, 1.0, 1.5] {
                lump = lump.max(lumping_residual(&ModelParams::standard(n, k, beta).unwrap()).unwrap());
            }
        }
    }
    let mut stat: f64 = 0.0;
    for n in [10, 51, 100, 200] {
        for k in [1, 3, 8] {
            for beta in [0.5, 1.0, 1.5] {
                stat = stat.max(stationarity_tv(&ModelParams::standard(n, k, beta).unwrap()).unwrap());
            }
            for beta in [1.2, 1.5, 2.0] {
                stat = stat.max(stationarity_tv(&ModelParams::restricted(n, k, beta).unwrap()).unwrap());
            }
        }
    }
    let mut db: f64 = 0.0;
    for beta in [0.0, 0.5, 1.0, 1.5, 2.0] {
        db = db.max(detailed_balance_residual(&ModelParams::standard(4, 1, beta).unwrap()).unwrap());
    }
    ensure(
        lump < LUMPING_TOL && stat < STATIONARITY_TOL && db < DETAILED_BALANCE_TOL,
        format!("lumping {lump:.2e}, stationarity {stat:.2e}, detailed balance {db:.2e}"),
    )
}

fn drift_bound() -> Outcome {
    let (mut violations, mut worst) = (0, 0.0f64);
    for n in [50, 100] {
        for k in 1..=5 {
            for beta in [0.5, 1.0, 1.5] {
                let d = drift_check(&ModelParams::standard(n, k, beta).unwrap()).unwrap();
                violations += d.violations;
                worst = worst.max(d.worst_error / d.bound);
            }
        }
    }
    ensure(violations == 0, format!("{violations} violations, worst error/bound {worst:.3}"))
}

fn variance_order() -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for n in [50, 100, 200, 400, 800] {
        for k in 1..=8 {
            for beta in [0.5, 1.0] {
                let v = variance_ratio(&ModelParams::standard(n, k, beta).unwrap()).unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let (a, b) = VARIANCE_BAND;
    ensure(lo >= a && hi <= b, format!("Var n^2/k in [{lo:.4}, {hi:.4}], band [{a}, {b}]"))
}

fn contraction() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for k in [1, 5, 10] {
        let p = ModelParams::standard(500, k, 0.5).unwrap();
        let rep = contraction_test(&p, &[0, 1, 10, 50, 100], 10_000, &RngStream::new(2024, k as u64)).unwrap();
        for r in &rep.rows {
            let slack = (r.mean - r.bound) / r.std_error.max(1e-300);
            if r.t > 0 {
                worst = worst.max(slack);
            }
            if !r.passed {
                failures.push(format!("k={k} {} t={}: {:.5} > {:.5}", r.kind, r.t, r.mean, r.bound));
            }
        }
    }
    ensure(failures.is_empty(), if failures.is_empty() { format!("worst (mean - bound)/SE = {worst:.2}") } else { failures.join("; ") })
}

fn cutoff() -> Outcome {
    let cs: Vec<f64> = (0..=200).map(|i| 0.2 + 0.01 * i as f64).collect();
    let mut widths = Vec::new();
    let mut half = 0.0;
    for n in [400usize, 800, 1600] {
        let p = ModelParams::standard(n, 2, 0.5).unwrap();
        let t_n = scanmix::harness::cutoff_scale(&p);
        let kernel = build_mag_kernel(&p).unwrap();
        let times: Vec<u64> = cs.iter().map(|c| (c * t_n).round() as u64).collect();
        let prof = exact_d_profile(&kernel, n, &times).unwrap();
        let curve: Vec<(f64, f64)> = prof.iter().map(|&(t, d)| (t as f64 / t_n, d)).collect();
        let c75 = interpolate_crossing(&curve, 0.75).ok_or("no 0.75 crossing")?;
        let c25 = interpolate_crossing(&curve, 0.25).ok_or("no 0.25 crossing")?;
        widths.push(c25 - c75);
        half = interpolate_crossing(&curve, 0.5).ok_or("no 0.5 crossing")?;
    }
    let decreasing = widths.windows(2).all(|w| w[1] < w[0]);
    let (a, b) = CUTOFF_CROSSING_BAND;
    ensure(
        decreasing && half >= a && half <= b,
        format!("widths {:.4} {:.4} {:.4}; d=0.5 at c={half:.4} (n=1600)", widths[0], widths[1], widths[2]),
    )
}

fn critical() -> Outcome {
    let tmix = |n: usize, k: usize| {
        let p = ModelParams::standard(n, k, 1.0).unwrap();
        let t_max = (50.0 * (n as f64).powf(1.5) / k as f64) as u64;
        exact_mixing_time(&build_mag_kernel(&p).unwrap(), &[n], 0.25, t_max).unwrap() as f64
    };
    let ns = [128.0, 256.0, 512.0, 1024.0];
    let ts: Vec<f64> = ns.iter().map(|&n| tmix(n as usize, 1)).collect();
    let fit = fit_power_law(&ns, &ts).unwrap();
    let ratio = tmix(512, 2) / ts[2];
    let (lo, hi) = CRITICAL_EXPONENT_BAND;
    let (rlo, rhi) = CRITICAL_K_RATIO_BAND;
    ensure(
        fit.exponent >= lo && fit.exponent <= hi && fit.r_squared > CRITICAL_R2_MIN && ratio >= rlo && ratio <= rhi,
        format!("t_mix {ts:?}; exponent {:.4}, r^2 {:.5}; k-ratio {ratio:.4}", fit.exponent, fit.r_squared),
    )
}

fn restricted() -> Outcome {
    let ns = [128usize, 256, 512, 1024];
    let tmix = |n: usize, k: usize| {
        let p = ModelParams::restricted(n, k, 1.5).unwrap();
        let scale = n as f64 * (n as f64).ln() / k as f64;
        exact_mixing_time(&build_kernel(&p).unwrap(), &[n.div_ceil(2), n], 0.25, (50.0 * scale) as u64).unwrap()
    };
    let t1: Vec<u64> = ns.iter().map(|&n| tmix(n, 1)).collect();
    let t2: Vec<u64> = ns.iter().map(|&n| tmix(n, 2)).collect();
    let ratios: Vec<f64> = ns.iter().zip(&t1).map(|(&n, &t)| t as f64 / (n as f64 * (n as f64).ln())).collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_faster = t1.iter().zip(&t2).all(|(a, b)| b < a);

    let root = RngStream::new(77, 0);
    let means: Vec<f64> = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let p = ModelParams::restricted(n, 1, 1.5).unwrap();
            let cap = (50.0 * n as f64 * (n as f64).ln()) as u64;
            let recs = hitting_times(&p, TAU_BELOW_ALPHA, false, 1000, cap, &root.fork(i as u64)).unwrap();
            mean_hitting_time(&recs, 77).value
        })
        .collect();
    let per_n: Vec<f64> = means.iter().zip(&ns).map(|(m, &n)| m / n as f64).collect();
    let superlinear = per_n.windows(2).all(|w| w[1] > w[0]);
    ensure(
        spread < RESTRICTED_RATIO_FACTOR && k_faster && superlinear,
        format!("t_mix k=1 {t1:?}, k=2 {t2:?}; ratio spread {spread:.3}; tau_*/n {per_n:.1?}"),
    )
}

fn monte_carlo_fidelity() -> Outcome {
    let mut worst_p: f64 = 1.0;
    for (i, mode) in [Mode::Standard, Mode::Restricted].into_iter().enumerate() {
        let p = ModelParams::new(6, 2, 0.8, mode).unwrap();
        let row = build_kernel(&p).unwrap().row_dense(4);
        let hist = mag_histogram(&p, 4, 1, 100_000, &RngStream::new(31, i as u64)).unwrap();
        worst_p = worst_p.min(chi_square_p_value(&hist, &row).unwrap());
    }
    let mut violations = Vec::new();
    for beta in [0.5, 1.0] {
        let p = ModelParams::standard(8, 2, beta).unwrap();
        let full = full_config_kernel(&p).unwrap();
        let times: Vec<u64> = (0..10).map(|i| 2 * i).collect();
        let profiles = full_d_profiles(&full, &gibbs_full(&p), &times);
        for (i, &t) in times.iter().enumerate() {
            let d_full = profiles.iter().map(|prof| prof[i].1).fold(0.0, f64::max);
            let est = mc_tv_lower_bound(&p, 8, t, 10_000, &RngStream::new(32, t)).unwrap();
            if est.value > d_full + SE_MULTIPLIER * est.std_error {
                violations.push(format!("beta={beta} t={t}: {:.4} > {:.4}", est.value, d_full));
            }
        }
    }
    ensure(
        worst_p > CHI_SQUARE_P_MIN && violations.is_empty(),
        format!("min chi-square p {worst_p:.4}; lower-bound violations {violations:?}"),
    )
}

fn two_coordinate() -> Outcome {
    let p = ModelParams::standard(200, 3, 0.5).unwrap();
    let sigma0 = SpinConfig::with_plus_count(200, 100);
    let rep = two_coord_drift(&p, &sigma0, &two_coord_config(200, 40, 40), &two_coord_config(200, 60, 60), 2000, 100_000, &RngStream::new(9, 0))
        .unwrap();
    ensure(
        rep.mean_increment <= SE_MULTIPLIER * rep.std_error && rep.move_frequency >= TWO_COORD_MOVE_FREQUENCY_MIN,
        format!(
            "E[dR] = {:.5} (SE {:.5}, {} increments); move frequency {:.4}; stop events {}",
            rep.mean_increment, rep.std_error, rep.increments, rep.move_frequency, rep.stop_events
        ),
    )
}

fn reproducibility() -> Outcome {
    let mut configs = Vec::new();
    let mut c = ExperimentConfig::defaults(Scenario::CutoffProfile);
    c.n = vec![60, 120];
    c.replicas = 300;
    c.time_grid = TimeGrid { points: 5, ..TimeGrid::default() };
    configs.push(c.clone());
    c.format = OutputFormat::Json;
    configs.push(c);
    let mut c = ExperimentConfig::defaults(Scenario::CriticalScaling);
    c.n = vec![32, 64, 128];
    configs.push(c);
    let mut c = ExperimentConfig::defaults(Scenario::RestrictedScaling);
    c.n = vec![32, 64];
    c.hitting_replicas = 50;
    configs.push(c);
    configs.push(ExperimentConfig::defaults(Scenario::PropertySuite));
    configs.push(ExperimentConfig::defaults(Scenario::KernelExport));
    let mut c = ExperimentConfig::defaults(Scenario::CoupleTrace);
    c.steps = 500;
    configs.push(c);

    let root = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for (i, mut c) in configs.into_iter().enumerate() {
        c.seed = 11;
        let mut outputs = Vec::new();
        for (run, workers) in [1usize, 4, 4].into_iter().enumerate() {
            let dir = root.path().join(format!("{i}_{run}"));
            let out = run_scenario(&c, workers, &dir).map_err(|e| e.to_string())?;
            let bytes: Vec<Vec<u8>> = out.files.iter().map(|f| std::fs::read(f).unwrap()).collect();
            outputs.push(bytes);
        }
        if outputs[0] != outputs[1] || outputs[1] != outputs[2] {
            return Err(format!("scenario {} differs across runs", c.scenario));
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} files identical across 3 runs (workers 1, 4, 4)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact-oracle suite", exact_oracles),
        ("drift bound", drift_bound),
        ("variance order", variance_order),
        ("contraction", contraction),
        ("high-temperature cutoff trend", cutoff),
        ("critical scaling", critical),
        ("low-temperature restricted scaling", restricted),
        ("Monte Carlo fidelity", monte_carlo_fidelity),
        ("two-coordinate supermartingale", two_coordinate),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
