//! Monte Carlo bounds bracketing the exact distance to stationarity.
//!
//! `cargo run --release --example monte_carlo_bounds`

use scanmix::estimators::{mc_coupling_upper_bound, mc_tv_lower_bound};
use scanmix::harness::cutoff_scale;
use scanmix::kernels::{build_kernel, exact_d_profile};
use scanmix::{ModelParams, RngStream};

fn main() -> scanmix::Result<()> {
    let params = ModelParams::standard(200, 2, 0.5)?;
    let kernel = build_kernel(&params)?;
    let t_n = cutoff_scale(&params);
    let rng = RngStream::new(5, 0);
    for c in [0.5, 0.8, 1.0, 1.3, 2.0] {
        let t = (c * t_n).round() as u64;
        let exact = exact_d_profile(&kernel, params.n(), &[t])?[0].1;
        let lower = mc_tv_lower_bound(&params, params.n(), t, 4000, &rng)?;
        let upper = mc_coupling_upper_bound(&params, t, 4000, &rng)?;
        println!(
            "t={t:5} lower {:.3}+-{:.3}  exact {exact:.3}  coupling {:.3}+-{:.3}",
            lower.value, lower.std_error, upper.value, upper.std_error
        );
    }
    Ok(())
}
