//! Builds the banded magnetization kernel, checks it against the Gibbs law,
//! and prints the exact distance-to-stationarity profile.
//!
//! `cargo run --release --example exact_kernel`

use scanmix::checks::{lumping_residual, stationarity_tv};
use scanmix::kernels::{build_kernel, exact_d_profile, exact_mixing_time, export_kernel};
use scanmix::ModelParams;

fn main() -> scanmix::Result<()> {
    let small = ModelParams::standard(8, 2, 1.2)?;
    println!("lumping residual (n=8): {:.2e}", lumping_residual(&small)?);

    let params = ModelParams::standard(200, 3, 0.5)?;
    let kernel = build_kernel(&params)?;
    println!("stationarity tv (n=200): {:.2e}", stationarity_tv(&params)?);

    let times: Vec<u64> = (0..=8).map(|i| i * 100).collect();
    for (t, d) in exact_d_profile(&kernel, params.n(), &times)? {
        println!("t={t:4} d={d:.4}");
    }
    println!("t_mix(1/4) = {}", exact_mixing_time(&kernel, &[params.n()], 0.25, 100_000)?);

    let text = export_kernel(&build_kernel(&ModelParams::standard(6, 1, 0.5)?)?);
    println!("exported kernel for n=6:\n{text}");
    Ok(())
}
