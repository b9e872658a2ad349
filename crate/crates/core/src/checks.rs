//! Exact-kernel statistics shared by the property suite and the tests.

use crate::error::{Error, Result};
use crate::kernels::{
    build_kernel, build_mag_kernel, evolve, full_config_kernel, gibbs_full, magnetization_moments, one_step_moments,
    stationary_magnetization, tv_distance, Distribution, MagKernel,
};
use crate::model::{ModelParams, SpinConfig};

/// Largest entrywise gap between the projected configuration kernel and the
/// lumped kernel.
pub fn lumping_residual(params: &ModelParams) -> Result<f64> {
    let full = full_config_kernel(params)?.project();
    let lumped = build_kernel(params)?;
    let n = params.n();
    let mut worst: f64 = 0.0;
    for m in lumped.first_state()..=n {
        for j in 0..=n {
            worst = worst.max((full[m][j] - lumped.entry(m, j)).abs());
        }
    }
    Ok(worst)
}

/// `TV(mu K, mu)` for the stationary law of the mode in `params`.
pub fn stationarity_tv(params: &ModelParams) -> Result<f64> {
    let kernel = build_kernel(params)?;
    stationarity_tv_of(params, &kernel)
}

pub fn stationarity_tv_of(params: &ModelParams, kernel: &MagKernel) -> Result<f64> {
    let mu = stationary_magnetization(params);
    tv_distance(&evolve(&mu, kernel, 1)?, &mu)
}

/// `max |pi(x) K(x, y) - pi(y) K(y, x)|` for the single-site (`k = 1`) kernel
/// on all configurations.
pub fn detailed_balance_residual(params: &ModelParams) -> Result<f64> {
    if params.k() != 1 {
        return Err(Error::InvalidParams("detailed balance holds for the single-site kernel".into()));
    }
    let full = full_config_kernel(params)?;
    let pi = gibbs_full(params);
    let size = full.size();
    let mut worst: f64 = 0.0;
    for x in 0..size {
        for y in 0..size {
            worst = worst.max((pi[x] * full.entry(x, y) - pi[y] * full.entry(y, x)).abs());
        }
    }
    Ok(worst)
}

/// Largest `|E[S_1 | m] - (1 - k/n) S - (k/n) tanh(beta S)|` over `m`,
/// against the bound `(2k/n) tanh(2 beta k / n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCheck {
    pub worst_error: f64,
    pub bound: f64,
    pub violations: usize,
}

pub fn drift_check(params: &ModelParams) -> Result<DriftCheck> {
    let kernel = build_mag_kernel(params)?;
    let (n, k, beta) = (params.n() as f64, params.k() as f64, params.beta());
    let bound = 2.0 * k / n * (beta * 2.0 * k / n).tanh();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for m in 0..=params.n() {
        let s = (2.0 * m as f64 - n) / n;
        let (mean, _) = one_step_moments(&kernel, m)?;
        let err = (mean - (1.0 - k / n) * s - k / n * (beta * s).tanh()).abs();
        worst = worst.max(err);
        if err > bound + 1e-14 {
            violations += 1;
        }
    }
    Ok(DriftCheck { worst_error: worst, bound, violations })
}

/// `Var[S_1 | m = floor(n/2)] * n^2 / k`.
pub fn variance_ratio(params: &ModelParams) -> Result<f64> {
    let kernel = build_mag_kernel(params)?;
    let (_, var) = one_step_moments(&kernel, params.n() / 2)?;
    Ok(var * (params.n() * params.n()) as f64 / params.k() as f64)
}

/// `max_t Var[S_t] * n` and `max_t (|E S_t| - 2 exp(-k t (1 - beta)/n))`
/// over `t` in `times`, from the all-plus start.
pub fn moment_decay(params: &ModelParams, times: &[u64]) -> Result<(f64, f64)> {
    let kernel = build_mag_kernel(params)?;
    let n = params.n();
    let mut dist = Distribution::point_mass(n + 1, n);
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    let mut now = 0;
    let (mut var_max, mut excess): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for t in sorted {
        dist = evolve(&dist, &kernel, t - now)?;
        now = t;
        let (mean, var) = magnetization_moments(&dist);
        var_max = var_max.max(var * n as f64);
        let bound = 2.0 * (-(params.k() as f64) * t as f64 * (1.0 - params.beta()) / n as f64).exp();
        excess = excess.max(mean.abs() - bound);
    }
    Ok((var_max, excess))
}

/// Start pair for two-coordinate experiments: reference with `n/2` plus
/// spins first, `x` agreeing with it on `u` plus and `v` minus sites.
pub fn two_coord_config(n: usize, u: usize, v: usize) -> SpinConfig {
    let half = n / 2;
    let spins = (0..n)
        .map(|i| {
            if i < half {
                if i < u {
                    1
                } else {
                    -1
                }
            } else if i - half < v {
                -1
            } else {
                1
            }
        })
        .collect();
    SpinConfig::from_spins(spins).expect("spins are +-1")
}
