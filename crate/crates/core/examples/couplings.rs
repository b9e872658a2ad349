//! The coupling family: grand monotone coalescence, rematched monotone steps
//! and the two-coordinate closing rule.
//!
//! `cargo run --release --example couplings`

use scanmix::checks::two_coord_config;
use scanmix::couplings::{coalescence_time, coupled_step, disagreement_count, CoupledPair, CouplingRule};
use scanmix::estimators::two_coord_drift;
use scanmix::{ModelParams, RngStream, SpinConfig};

fn main() -> scanmix::Result<()> {
    let params = ModelParams::standard(100, 2, 0.5)?;
    let mut rng = RngStream::new(11, 0);
    println!("grand coupling coalesced after {:?} steps", coalescence_time(&params, &mut rng, 100_000)?);

    let x = SpinConfig::with_plus_count(100, 50);
    let x_tilde = x.flipped();
    let mut pair = CoupledPair::new(x, x_tilde, CouplingRule::RematchedMonotone)?;
    for t in 1..=2000u64 {
        let (next, stats) = coupled_step(&params, &pair, &mut rng)?;
        pair = next;
        let d = disagreement_count(&pair);
        if t % 50 == 0 || d == 0 {
            println!("t={t:4} gap={:.3} disagreements={d}", stats.mag_gap);
        }
        if d == 0 {
            break;
        }
    }

    let params = ModelParams::standard(200, 3, 0.5)?;
    let sigma0 = SpinConfig::with_plus_count(200, 100);
    let report = two_coord_drift(
        &params,
        &sigma0,
        &two_coord_config(200, 40, 40),
        &two_coord_config(200, 60, 60),
        500,
        100_000,
        &RngStream::new(12, 0),
    )?;
    println!(
        "two-coordinate drift {:.4} (se {:.4}), move frequency {:.3}, stop events {}",
        report.mean_increment, report.std_error, report.move_frequency, report.stop_events
    );
    Ok(())
}
