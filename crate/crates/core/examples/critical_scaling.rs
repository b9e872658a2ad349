//! Mixing times at the critical temperature and a power-law fit in `n`.
//!
//! `cargo run --release --example critical_scaling`

use scanmix::estimators::fit_power_law;
use scanmix::kernels::{build_kernel, exact_mixing_time};
use scanmix::ModelParams;

fn main() -> scanmix::Result<()> {
    let ns = [64usize, 128, 256, 512];
    let mut t_mix = Vec::new();
    for &n in &ns {
        let params = ModelParams::standard(n, 1, 1.0)?;
        let t = exact_mixing_time(&build_kernel(&params)?, &[n], 0.25, 10_000_000)?;
        println!("n={n:4} t_mix={t}");
        t_mix.push(t as f64);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = fit_power_law(&xs, &t_mix)?;
    println!("exponent {:.3} (r^2 {:.4})", fit.exponent, fit.r_squared);
    Ok(())
}
