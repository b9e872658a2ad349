//! One randomized systematic-scan step on a small configuration, with the
//! trace of intermediate plus counts.
//!
//! `cargo run --example single_step`

use scanmix::model::step;
use scanmix::{ModelParams, RngStream, SpinConfig};

fn main() -> scanmix::Result<()> {
    let params = ModelParams::standard(12, 4, 0.8)?;
    let mut rng = RngStream::new(2024, 0);
    let mut config = SpinConfig::all_plus(params.n());
    for t in 1..=5 {
        let (next, trace) = step(&params, &config, &mut rng)?;
        println!(
            "t={t} scanned {:?} plus counts {:?} magnetization {:+.3}",
            trace.order.vertices(),
            trace.states,
            next.magnetization()
        );
        config = next;
    }
    Ok(())
}
