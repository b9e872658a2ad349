//! Exact cutoff profiles at high temperature, on the rescaled time axis
//! `t / t_n`, for growing `n`.
//!
//! `cargo run --release --example cutoff_profile`

use scanmix::harness::{cutoff_scale, interpolate_crossing};
use scanmix::kernels::{build_kernel, exact_d_profile};
use scanmix::ModelParams;

fn main() -> scanmix::Result<()> {
    let grid: Vec<f64> = (0..=14).map(|i| 0.3 + 0.1 * i as f64).collect();
    for n in [200, 800, 1600] {
        let params = ModelParams::standard(n, 2, 0.5)?;
        let kernel = build_kernel(&params)?;
        let t_n = cutoff_scale(&params);
        let times: Vec<u64> = grid.iter().map(|c| (c * t_n).round() as u64).collect();
        let profile: Vec<(f64, f64)> = exact_d_profile(&kernel, n, &times)?
            .into_iter()
            .map(|(t, d)| (t as f64 / t_n, d))
            .collect();
        let hi = interpolate_crossing(&profile, 0.9).unwrap_or(f64::NAN);
        let lo = interpolate_crossing(&profile, 0.1).unwrap_or(f64::NAN);
        let mid = interpolate_crossing(&profile, 0.5).unwrap_or(f64::NAN);
        println!("n={n:5} t_n={t_n:9.1} d=0.5 at c={mid:.3} window width {:.3}", lo - hi);
    }
    Ok(())
}
