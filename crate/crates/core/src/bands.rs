//! Acceptance bands for the trend and scaling checks.
//!
//! The theory fixes orders of growth, not constants, so every numeric band
//! used by the property suite and the acceptance tests lives here. Bump
//! [`TABLE_VERSION`] whenever a band changes.

pub const TABLE_VERSION: u32 = 1;

/// Multiplier on standard errors for Monte Carlo comparisons.
pub const SE_MULTIPLIER: f64 = 3.0;

/// Minimum chi-square p-value for distributional agreement.
pub const CHI_SQUARE_P_MIN: f64 = 0.001;

/// `Var[S_1 | m = n/2] * n^2 / k` must lie in this closed interval.
pub const VARIANCE_BAND: (f64, f64) = (0.5, 8.0);

/// `sup_t Var[S_t] * n` from the all-plus start, high temperature.
pub const ACCUMULATED_VARIANCE_MAX: f64 = 8.0;

/// Critical exponent of `t_mix(1/4)` in `n`.
pub const CRITICAL_EXPONENT_BAND: (f64, f64) = (1.35, 1.65);
pub const CRITICAL_R2_MIN: f64 = 0.98;

/// `t_mix(k = 2) / t_mix(k = 1)` at criticality.
pub const CRITICAL_K_RATIO_BAND: (f64, f64) = (0.4, 0.6);

/// Maximum spread (max / min) of `t_mix k / (n ln n)` in the restricted regime.
pub const RESTRICTED_RATIO_FACTOR: f64 = 3.0;

/// Where the `d = 0.5` crossing may sit, in units of `t_n`.
pub const CUTOFF_CROSSING_BAND: (f64, f64) = (0.7, 1.3);

/// Minimum frequency of `R` moves on interior states.
pub const TWO_COORD_MOVE_FREQUENCY_MIN: f64 = 0.01;

/// Absolute tolerances for the exact-kernel identities.
pub const LUMPING_TOL: f64 = 1e-12;
pub const STATIONARITY_TOL: f64 = 1e-10;
pub const DETAILED_BALANCE_TOL: f64 = 1e-12;

/// Offset `alpha` in the threshold `s* + alpha / sqrt(n)` for the hitting
/// time from `S = 0` in the trend check. At `alpha = 1` the threshold sits
/// about 1.5 stationary standard deviations above `s*` and the resulting
/// `O(n)` waiting time hides the `n log n` escape term at `n <= 1024`.
pub const TAU_BELOW_ALPHA: f64 = 0.5;
