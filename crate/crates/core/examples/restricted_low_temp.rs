//! Low-temperature dynamics restricted to `S >= 0`: exact mixing times and
//! Monte Carlo hitting times of the well around `s*`.
//!
//! `cargo run --release --example restricted_low_temp`

use scanmix::estimators::{fixed_point_s_star, hitting_times, mean_hitting_time};
use scanmix::kernels::{build_kernel, exact_mixing_time};
use scanmix::{ModelParams, RngStream};

fn main() -> scanmix::Result<()> {
    let beta = 1.5;
    println!("s* = {:.6}", fixed_point_s_star(beta)?);
    let rng = RngStream::new(7, 0);
    for n in [128usize, 256, 512] {
        let params = ModelParams::restricted(n, 1, beta)?;
        let kernel = build_kernel(&params)?;
        let t_mix = exact_mixing_time(&kernel, &[n.div_ceil(2), n], 0.25, 10_000_000)?;
        let ratio = t_mix as f64 / (n as f64 * (n as f64).ln());
        let above = mean_hitting_time(&hitting_times(&params, 1.0, true, 200, 100 * n as u64, &rng)?, 7);
        let below = mean_hitting_time(&hitting_times(&params, 0.5, false, 200, 100 * n as u64, &rng)?, 7);
        println!(
            "n={n:4} t_mix={t_mix:6} t_mix/(n ln n)={ratio:.3} tau_above/n={:.2} tau_below/n={:.2}",
            above.value / n as f64,
            below.value / n as f64
        );
    }
    Ok(())
}
