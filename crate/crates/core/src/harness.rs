//! Experiment scenarios, configuration files and result emission.
//!
//! Every scenario expands its parameter grid into independent jobs. Job `j`
//! draws from `RngStream::new(seed, 0).fork(j)` and results are concatenated
//! in grid order, so output files depend only on the configuration and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands;
use crate::checks;
use crate::couplings::{coupled_step, CoupledPair, CouplingRule};
use crate::error::{Error, Result};
use crate::estimators::{
    chi_square_p_value, contraction_test, fit_power_law, hitting_times, mag_histogram, mc_coupling_profile,
    mc_tv_lower_bound, mean_hitting_time, two_coord_drift,
};
use crate::kernels::{
    build_kernel, build_mag_kernel, exact_d_profile, exact_mixing_time, export_kernel, KernelBudget,
};
use crate::model::{FieldRule, Mode, ModelParams, SpinConfig};
use crate::rng::RngStream;

pub const CSV_HEADER: [&str; 12] =
    ["scenario", "n", "k", "beta", "mode", "t", "kind", "value", "std_error", "replicas", "seed", "wall_time_ms"];

pub const TRACE_HEADER: [&str; 6] = ["t", "hamming", "mag_gap", "r_value", "rule", "stop_events"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    CutoffProfile,
    CriticalScaling,
    RestrictedScaling,
    PropertySuite,
    KernelExport,
    CoupleTrace,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::CutoffProfile => "cutoff_profile",
            Scenario::CriticalScaling => "critical_scaling",
            Scenario::RestrictedScaling => "restricted_scaling",
            Scenario::PropertySuite => "property_suite",
            Scenario::KernelExport => "kernel_export",
            Scenario::CoupleTrace => "couple_trace",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

/// Times for profile scenarios: explicit `times`, explicit multiples
/// `c_values` of the cutoff scale, or a geometric grid from `c_min` to `c_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default = "default_c_min")]
    pub c_min: f64,
    #[serde(default = "default_c_max")]
    pub c_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub c_values: Option<Vec<f64>>,
    #[serde(default)]
    pub times: Option<Vec<u64>>,
}

fn default_c_min() -> f64 {
    0.3
}
fn default_c_max() -> f64 {
    2.0
}
fn default_points() -> usize {
    15
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { c_min: default_c_min(), c_max: default_c_max(), points: default_points(), c_values: None, times: None }
    }
}

impl TimeGrid {
    /// Multiples of the time scale (ignored when `times` is given).
    pub fn multiples(&self) -> Vec<f64> {
        if let Some(c) = &self.c_values {
            return c.clone();
        }
        if self.points == 1 {
            return vec![self.c_min];
        }
        let ratio = self.c_max / self.c_min;
        (0..self.points).map(|i| self.c_min * ratio.powf(i as f64 / (self.points - 1) as f64)).collect()
    }

    /// Sorted distinct times for the scale `t_n`.
    pub fn resolve(&self, t_n: f64) -> Vec<u64> {
        let mut ts: Vec<u64> = match &self.times {
            Some(ts) => ts.clone(),
            None => self.multiples().iter().map(|c| (c * t_n).round() as u64).collect(),
        };
        ts.sort_unstable();
        ts.dedup();
        ts
    }

    fn validate(&self) -> Result<()> {
        if self.times.is_none() && self.c_values.is_none() && !(self.c_min > 0.0 && self.c_max >= self.c_min && self.points >= 1) {
            return Err(Error::Config("time_grid needs 0 < c_min <= c_max and points >= 1".into()));
        }
        if let Some(c) = &self.c_values {
            if c.is_empty() || c.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return Err(Error::Config("c_values must be nonempty and nonnegative".into()));
            }
        }
        if self.times.as_ref().is_some_and(|t| t.is_empty()) {
            return Err(Error::Config("times must be nonempty".into()));
        }
        Ok(())
    }
}

/// Initial configuration of one chain in a coupled trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    AllPlus,
    AllMinus,
    Random,
}

/// Rule sequence for `couple_trace`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Grand monotone until the magnetizations agree, then rematched monotone.
    Rematched,
    /// As `Rematched`, with the two-coordinate closing phase in between while
    /// `R > k`. A stop event returns the pair to the grand monotone rule.
    #[default]
    TwoCoord,
    Grand,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub time_grid: TimeGrid,
    /// Monte Carlo replicas per estimate; 0 disables Monte Carlo output.
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Include exact lumped-kernel values where the kernel budget allows.
    #[serde(default = "default_true")]
    pub exact: bool,
    /// Hitting-time replicas for `restricted_scaling`; 0 disables them.
    #[serde(default = "default_hitting_replicas")]
    pub hitting_replicas: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Cap on steps, in units of the regime's time scale.
    #[serde(default = "default_timeout_factor")]
    pub timeout_factor: f64,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_start")]
    pub start: [StartSpec; 2],
    #[serde(default)]
    pub schedule: Schedule,
    /// Property suite only: use the wrong local field (self-spin included).
    #[serde(default)]
    pub inject_self_spin: bool,
    /// Record job wall time instead of 0 (makes files non-reproducible).
    #[serde(default)]
    pub record_timing: bool,
}

fn default_replicas() -> usize {
    10_000
}
fn default_true() -> bool {
    true
}
fn default_hitting_replicas() -> usize {
    1000
}
fn default_alpha() -> f64 {
    1.0
}
fn default_timeout_factor() -> f64 {
    50.0
}
fn default_steps() -> u64 {
    2000
}
fn default_start() -> [StartSpec; 2] {
    [StartSpec::Random, StartSpec::Random]
}

impl ExperimentConfig {
    /// Desk-scale defaults for each scenario.
    pub fn defaults(scenario: Scenario) -> Self {
        let mut c: ExperimentConfig =
            serde_json::from_value(serde_json::json!({ "scenario": scenario })).expect("defaults deserialize");
        match scenario {
            Scenario::CutoffProfile => {
                c.n = vec![400, 800, 1600];
                c.k = vec![2];
                c.beta = vec![0.5];
                c.replicas = 2000;
            }
            Scenario::CriticalScaling => {
                c.n = vec![128, 256, 512, 1024];
                c.k = vec![1, 2];
                c.beta = vec![1.0];
            }
            Scenario::RestrictedScaling => {
                c.n = vec![128, 256, 512, 1024];
                c.k = vec![1, 2];
                c.beta = vec![1.5];
                c.mode = Some(Mode::Restricted);
                c.hitting_replicas = 200;
                c.alpha = bands::TAU_BELOW_ALPHA;
            }
            Scenario::PropertySuite => {}
            Scenario::KernelExport => {
                c.n = vec![16];
                c.k = vec![2];
                c.beta = vec![0.5];
            }
            Scenario::CoupleTrace => {
                c.n = vec![200];
                c.k = vec![4];
                c.beta = vec![0.5];
            }
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(match self.scenario {
            Scenario::RestrictedScaling => Mode::Restricted,
            _ => Mode::Standard,
        })
    }

    /// Grid points in `n`-major, then `k`, then `beta` order.
    pub fn grid(&self) -> Result<Vec<ModelParams>> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &k in &self.k {
                for &beta in &self.beta {
                    out.push(ModelParams::new(n, k, beta, self.mode())?);
                }
            }
        }
        Ok(out)
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.scenario != Scenario::PropertySuite && (self.n.is_empty() || self.k.is_empty() || self.beta.is_empty()) {
            return Err(Error::Config(format!("scenario {} needs nonempty n, k and beta lists", self.scenario)));
        }
        let grid = self.grid()?;
        self.time_grid.validate()?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let mode = self.mode();
        match self.scenario {
            Scenario::CutoffProfile => {
                if mode != Mode::Standard || grid.iter().any(|p| p.beta() >= 1.0) {
                    return Err(Error::Config("cutoff_profile needs standard mode and beta < 1".into()));
                }
            }
            Scenario::CriticalScaling => {
                if mode != Mode::Standard || grid.iter().any(|p| p.beta() != 1.0) {
                    return Err(Error::Config("critical_scaling needs standard mode and beta = 1".into()));
                }
                check_kernel_budget(&grid)?;
            }
            Scenario::RestrictedScaling => {
                if mode != Mode::Restricted || grid.iter().any(|p| p.beta() <= 1.0) {
                    return Err(Error::Config("restricted_scaling needs restricted mode and beta > 1".into()));
                }
                check_kernel_budget(&grid)?;
            }
            Scenario::KernelExport => check_kernel_budget(&grid)?,
            Scenario::CoupleTrace => {
                if mode != Mode::Standard || grid.len() != 1 {
                    return Err(Error::Config("couple_trace needs exactly one standard-mode grid point".into()));
                }
            }
            Scenario::PropertySuite => {}
        }
        if !(self.timeout_factor > 0.0) {
            return Err(Error::Config("timeout_factor must be positive".into()));
        }
        Ok(())
    }
}

fn check_kernel_budget(grid: &[ModelParams]) -> Result<()> {
    let b = KernelBudget::default();
    match grid.iter().find(|p| p.n() > b.max_n || p.k() > b.max_k) {
        Some(p) => Err(Error::BudgetExceeded(format!(
            "n = {}, k = {} exceeds kernel limits n <= {}, k <= {}",
            p.n(),
            p.k(),
            b.max_n,
            b.max_k
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario: Scenario,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub mode: Mode,
    pub t: u64,
    pub kind: String,
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub seed: u64,
    pub wall_time_ms: u64,
}

impl ResultRecord {
    fn exact(scenario: Scenario, p: &ModelParams, t: u64, kind: &str, value: f64, seed: u64) -> Self {
        ResultRecord {
            scenario,
            n: p.n(),
            k: p.k(),
            beta: p.beta(),
            mode: p.mode(),
            t,
            kind: kind.to_string(),
            value,
            std_error: 0.0,
            replicas: 0,
            seed,
            wall_time_ms: 0,
        }
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(CSV_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for r in records {
        w.write_record([
            r.scenario.as_str().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            format_float(r.beta),
            r.mode.as_str().to_string(),
            r.t.to_string(),
            r.kind.clone(),
            format_float(r.value),
            format_float(r.std_error),
            r.replicas.to_string(),
            r.seed.to_string(),
            r.wall_time_ms.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results CSV, rejecting files whose header differs from [`CSV_HEADER`].
pub fn read_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::Parse(e.to_string()))).collect()
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs `job` on every index in a pool of `workers` threads and returns the
/// outputs in index order.
fn run_jobs<T: Send>(workers: usize, count: usize, job: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    pool(workers)?.install(|| (0..count).into_par_iter().map(job).collect())
}

fn job_stream(seed: u64, job: usize) -> RngStream {
    RngStream::new(seed, 0).fork(job as u64)
}

fn timed(record_timing: bool, f: impl FnOnce() -> Result<Vec<ResultRecord>>) -> Result<Vec<ResultRecord>> {
    let start = Instant::now();
    let mut records = f()?;
    if record_timing {
        let ms = start.elapsed().as_millis() as u64;
        records.iter_mut().for_each(|r| r.wall_time_ms = ms);
    }
    Ok(records)
}

/// `t_n = n ln n / (2k(1 - beta))`.
pub fn cutoff_scale(p: &ModelParams) -> f64 {
    let n = p.n() as f64;
    n * n.ln() / (2.0 * p.k() as f64 * (1.0 - p.beta()))
}

/// First crossing of `level` by a nonincreasing profile, linearly
/// interpolated between grid points.
pub fn interpolate_crossing(profile: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(&(x, d)) = profile.first() {
        if d <= level {
            return Some(x);
        }
    }
    profile.windows(2).find(|w| w[0].1 > level && w[1].1 <= level).map(|w| {
        let (x0, d0) = w[0];
        let (x1, d1) = w[1];
        x0 + (d0 - level) / (d0 - d1) * (x1 - x0)
    })
}

pub fn run_cutoff_profile(config: &ExperimentConfig, workers: usize) -> Result<Vec<ResultRecord>> {
    let grid = config.grid()?;
    let budget = KernelBudget::default();
    let jobs = run_jobs(workers, grid.len(), |j| {
        let p = &grid[j];
        timed(config.record_timing, || {
            let times = config.time_grid.resolve(cutoff_scale(p));
            let rng = job_stream(config.seed, j);
            let sc = Scenario::CutoffProfile;
            let mut out = Vec::new();
            if config.exact && p.n() <= budget.max_n && p.k() <= budget.max_k {
                let kernel = build_mag_kernel(p)?;
                for (t, d) in exact_d_profile(&kernel, p.n(), &times)? {
                    out.push(ResultRecord::exact(sc, p, t, "exact_d", d, config.seed));
                }
            }
            if config.replicas > 0 {
                let lower_rng = rng.fork(0);
                for &t in &times {
                    let e = mc_tv_lower_bound(p, p.n(), t, config.replicas, &lower_rng.fork(t))?;
                    out.push(ResultRecord {
                        std_error: e.std_error,
                        replicas: e.replicas,
                        ..ResultRecord::exact(sc, p, t, "tv_lower_bound", e.value, config.seed)
                    });
                }
                let upper = mc_coupling_profile(p, &times, config.replicas, &rng.fork(1))?;
                for (&t, e) in times.iter().zip(upper) {
                    out.push(ResultRecord {
                        std_error: e.std_error,
                        replicas: e.replicas,
                        ..ResultRecord::exact(sc, p, t, "coupling_upper_bound", e.value, config.seed)
                    });
                }
            }
            Ok(out)
        })
    })?;
    Ok(jobs.into_iter().flatten().collect())
}

fn summary_params(n: usize, k: usize, beta: f64, mode: Mode) -> ModelParams {
    // Summary rows may carry n = 0 or k = 0 placeholders; bypass validation.
    ModelParams::new(n.max(2), k.max(1), beta, mode).expect("placeholder params")
}

fn summary_record(scenario: Scenario, n: usize, k: usize, beta: f64, mode: Mode, kind: &str, value: f64, seed: u64) -> ResultRecord {
    let p = summary_params(n, k, beta, mode);
    ResultRecord { n, k, ..ResultRecord::exact(scenario, &p, 0, kind, value, seed) }
}

/// Exact `t_mix(1/4)` per grid point, then power-law fits per `(k, beta)`
/// of `t_mix` against `n` (kinds `exponent_n`, `intercept_n`, `r_squared_n`,
/// rows with `n = 0`) and ratios `t_mix(k) / t_mix(1)` (kind `k_ratio`).
pub fn run_critical_scaling(config: &ExperimentConfig, workers: usize) -> Result<Vec<ResultRecord>> {
    let grid = config.grid()?;
    let sc = Scenario::CriticalScaling;
    let tmix = run_jobs(workers, grid.len(), |j| {
        let p = &grid[j];
        let start = Instant::now();
        let kernel = build_mag_kernel(p)?;
        let t_max = (config.timeout_factor * (p.n() as f64).powf(1.5) / p.k() as f64).ceil() as u64;
        let t = exact_mixing_time(&kernel, &[p.n()], 0.25, t_max)?;
        Ok((t, start.elapsed().as_millis() as u64))
    })?;
    let mut out: Vec<ResultRecord> = grid
        .iter()
        .zip(&tmix)
        .map(|(p, &(t, ms))| ResultRecord {
            wall_time_ms: if config.record_timing { ms } else { 0 },
            ..ResultRecord::exact(sc, p, t, "t_mix", t as f64, config.seed)
        })
        .collect();
    let lookup = |n: usize, k: usize, beta: f64| {
        grid.iter().zip(&tmix).find(|(p, _)| p.n() == n && p.k() == k && p.beta() == beta).map(|(_, &(t, _))| t as f64)
    };
    for &k in &config.k {
        for &beta in &config.beta {
            let ns: Vec<f64> = config.n.iter().map(|&n| n as f64).collect();
            let ts: Vec<f64> = config.n.iter().filter_map(|&n| lookup(n, k, beta)).collect();
            if ns.len() >= 3 {
                let fit = fit_power_law(&ns, &ts)?;
                for (kind, v) in [("exponent_n", fit.exponent), ("intercept_n", fit.intercept), ("r_squared_n", fit.r_squared)] {
                    out.push(summary_record(sc, 0, k, beta, Mode::Standard, kind, v, config.seed));
                }
            }
        }
    }
    if config.k.contains(&1) {
        for &n in &config.n {
            for &beta in &config.beta {
                let base = lookup(n, 1, beta).expect("grid point");
                for &k in config.k.iter().filter(|&&k| k != 1) {
                    let ratio = lookup(n, k, beta).expect("grid point") / base;
                    out.push(summary_record(sc, n, k, beta, Mode::Standard, "k_ratio", ratio, config.seed));
                }
            }
        }
    }
    Ok(out)
}

/// Exact folded-kernel `t_mix(1/4)` (worst of the starts `ceil(n/2)` and `n`),
/// the ratio `t_mix k / (n ln n)`, and mean hitting times from above
/// (all-plus) and below (`S = 0`).
pub fn run_restricted_scaling(config: &ExperimentConfig, workers: usize) -> Result<Vec<ResultRecord>> {
    let grid = config.grid()?;
    let sc = Scenario::RestrictedScaling;
    let jobs = run_jobs(workers, grid.len(), |j| {
        let p = &grid[j];
        timed(config.record_timing, || {
            let n = p.n() as f64;
            let scale = n * n.ln() / p.k() as f64;
            let t_max = (config.timeout_factor * scale).ceil() as u64;
            let kernel = build_kernel(p)?;
            let t = exact_mixing_time(&kernel, &[p.n().div_ceil(2), p.n()], 0.25, t_max)?;
            let mut out = vec![
                ResultRecord::exact(sc, p, t, "t_mix", t as f64, config.seed),
                ResultRecord::exact(sc, p, t, "t_mix_ratio", t as f64 / scale, config.seed),
            ];
            if config.hitting_replicas > 0 {
                let rng = job_stream(config.seed, j);
                for (i, (above, name)) in [(true, "tau_star_above"), (false, "tau_star_below")].into_iter().enumerate() {
                    let recs = hitting_times(p, config.alpha, above, config.hitting_replicas, t_max, &rng.fork(i as u64))?;
                    let est = mean_hitting_time(&recs, config.seed);
                    let timeouts = recs.iter().filter(|r| !r.hit).count();
                    out.push(ResultRecord {
                        std_error: est.std_error,
                        replicas: est.replicas,
                        ..ResultRecord::exact(sc, p, 0, &format!("{name}_mean"), est.value, config.seed)
                    });
                    out.push(ResultRecord {
                        replicas: est.replicas,
                        ..ResultRecord::exact(sc, p, 0, &format!("{name}_timeouts"), timeouts as f64, config.seed)
                    });
                }
            }
            Ok(out)
        })
    })?;
    Ok(jobs.into_iter().flatten().collect())
}

/// Writes one kernel file per grid point into `dir` and returns the
/// stationarity residual `TV(mu K, mu)` of each.
pub fn run_kernel_export(config: &ExperimentConfig, workers: usize, dir: &Path) -> Result<Vec<ResultRecord>> {
    let grid = config.grid()?;
    let jobs = run_jobs(workers, grid.len(), |j| {
        let p = &grid[j];
        timed(config.record_timing, || {
            let kernel = build_kernel(p)?;
            fs::write(dir.join(kernel_file_name(p)), export_kernel(&kernel))?;
            let tv = checks::stationarity_tv_of(p, &kernel)?;
            Ok(vec![ResultRecord::exact(Scenario::KernelExport, p, 1, "stationarity_tv", tv, config.seed)])
        })
    })?;
    Ok(jobs.into_iter().flatten().collect())
}

pub fn kernel_file_name(p: &ModelParams) -> String {
    format!("kernel_n{}_k{}_beta{}_{}.txt", p.n(), p.k(), p.beta(), p.mode())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub hamming: usize,
    pub mag_gap: f64,
    pub r_value: i64,
    /// Rule that produced this row (the initial rule at `t = 0`).
    pub rule: String,
    /// Cumulative stop events.
    pub stop_events: u32,
}

fn start_config(spec: StartSpec, n: usize, rng: &mut RngStream) -> SpinConfig {
    match spec {
        StartSpec::AllPlus => SpinConfig::all_plus(n),
        StartSpec::AllMinus => SpinConfig::all_minus(n),
        StartSpec::Random => SpinConfig::random(n, rng),
    }
}

fn next_rule(schedule: Schedule, pair: &CoupledPair, k: usize) -> CouplingRule {
    let equal_s = pair.x.plus_count() == pair.x_tilde.plus_count();
    match (schedule, pair.rule) {
        (Schedule::Grand, _) => CouplingRule::GrandMonotone,
        (Schedule::Independent, _) => CouplingRule::Independent,
        (_, CouplingRule::GrandMonotone | CouplingRule::Independent) if !equal_s => CouplingRule::GrandMonotone,
        (Schedule::TwoCoord, CouplingRule::GrandMonotone | CouplingRule::Independent) if pair.r_value() > k as i64 => {
            CouplingRule::TwoCoordClosing
        }
        (Schedule::TwoCoord, CouplingRule::TwoCoordClosing) if pair.r_value() > k as i64 => CouplingRule::TwoCoordClosing,
        _ => CouplingRule::RematchedMonotone,
    }
}

/// Per-step statistics of one coupled pair under `config.schedule`.
pub fn run_couple_trace(config: &ExperimentConfig) -> Result<Vec<TraceRow>> {
    let p = config.grid()?.remove(0);
    let mut rng = job_stream(config.seed, 0);
    let x = start_config(config.start[0], p.n(), &mut rng);
    let x_tilde = start_config(config.start[1], p.n(), &mut rng);
    let first = match config.schedule {
        Schedule::Independent => CouplingRule::Independent,
        _ => CouplingRule::GrandMonotone,
    };
    let mut pair = CoupledPair::new(x, x_tilde, first)?;
    let mut stop_events = 0;
    let mut rows = vec![TraceRow {
        t: 0,
        hamming: pair.hamming(),
        mag_gap: pair.mag_gap(),
        r_value: pair.r_value(),
        rule: first.as_str().to_string(),
        stop_events,
    }];
    for t in 1..=config.steps {
        let entering_close = config.schedule == Schedule::TwoCoord
            && matches!(pair.rule, CouplingRule::GrandMonotone | CouplingRule::Independent)
            && pair.x.plus_count() == pair.x_tilde.plus_count();
        if entering_close {
            // The closing phase measures agreement with the current x_tilde.
            let reference = pair.x_tilde.clone();
            pair = pair.with_reference(reference)?;
        }
        let rule = next_rule(config.schedule, &pair, p.k());
        pair.rule = rule;
        let (next, stats) = coupled_step(&p, &pair, &mut rng)?;
        stop_events += stats.stop_events;
        pair = next;
        if stats.stop_events > 0 {
            pair.rule = CouplingRule::GrandMonotone;
        } else {
            pair.rule = rule;
        }
        rows.push(TraceRow {
            t,
            hamming: stats.hamming,
            mag_gap: stats.mag_gap,
            r_value: stats.r_value,
            rule: rule.as_str().to_string(),
            stop_events,
        });
    }
    Ok(rows)
}

pub fn write_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(TRACE_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.hamming.to_string(),
            format_float(r.mag_gap),
            r.r_value.to_string(),
            r.rule.clone(),
            r.stop_events.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    /// The result being checked, in words.
    pub reference: String,
    pub passed: bool,
    pub statistic: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub inject_self_spin: bool,
    pub band_table_version: u32,
    pub passed: bool,
    pub checks: Vec<PropertyCheck>,
}

fn check(name: &str, reference: &str, statistic: f64, bound: f64, passed: bool, detail: String) -> PropertyCheck {
    PropertyCheck { name: name.into(), reference: reference.into(), passed, statistic, bound, detail }
}

/// Runs the property checks at desk scale. Each check is an independent job.
pub fn run_property_suite(config: &ExperimentConfig, workers: usize) -> Result<PropertyReport> {
    let rule = if config.inject_self_spin { FieldRule::IncludeSelf } else { FieldRule::ExcludeSelf };
    let mk = move |n: usize, k: usize, beta: f64, mode: Mode| -> Result<ModelParams> {
        Ok(ModelParams::new(n, k, beta, mode)?.with_field_rule(rule))
    };
    let seed = config.seed;
    type Job<'a> = Box<dyn Fn(RngStream) -> Result<PropertyCheck> + Sync + Send + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|_| {
            let mut worst: f64 = 0.0;
            for n in [4, 6] {
                for k in [1, 2] {
                    for beta in [0.0, 1.0] {
                        worst = worst.max(checks::lumping_residual(&mk(n, k, beta, Mode::Standard)?)?);
                    }
                }
            }
            Ok(check("lumping", "plus-count projection of the configuration kernel", worst, bands::LUMPING_TOL, worst < bands::LUMPING_TOL, "n in {4,6}, k in {1,2}, beta in {0,1}".into()))
        }),
        Box::new(|_| {
            let mut worst: f64 = 0.0;
            for (beta, mode) in [(0.5, Mode::Standard), (1.0, Mode::Standard), (1.5, Mode::Restricted)] {
                worst = worst.max(checks::stationarity_tv(&mk(60, 3, beta, mode)?)?);
            }
            Ok(check("stationarity", "Gibbs measure is invariant for the scan dynamics", worst, bands::STATIONARITY_TOL, worst < bands::STATIONARITY_TOL, "n = 60, k = 3".into()))
        }),
        Box::new(|_| {
            let mut worst: f64 = 0.0;
            for beta in [0.5, 1.0, 1.5] {
                worst = worst.max(checks::detailed_balance_residual(&mk(4, 1, beta, Mode::Standard)?)?);
            }
            Ok(check("detailed_balance", "single-site Glauber update is reversible", worst, bands::DETAILED_BALANCE_TOL, worst < bands::DETAILED_BALANCE_TOL, "n = 4".into()))
        }),
        Box::new(|_| {
            let (mut violations, mut worst) = (0, 0.0f64);
            for k in 1..=5 {
                for beta in [0.5, 1.0, 1.5] {
                    let d = checks::drift_check(&mk(50, k, beta, Mode::Standard)?)?;
                    violations += d.violations;
                    worst = worst.max(d.worst_error / d.bound);
                }
            }
            Ok(check("drift_bound", "one-step magnetization drift estimate", worst, 1.0, violations == 0, format!("{violations} violations; statistic is the worst error / bound")))
        }),
        Box::new(|_| {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for n in [50, 100, 200] {
                for k in [1, 2, 4] {
                    let v = checks::variance_ratio(&mk(n, k, 0.5, Mode::Standard)?)?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let (a, b) = bands::VARIANCE_BAND;
            Ok(check("variance_order", "one-step variance is of order k / n^2", hi, b, lo >= a && hi <= b, format!("Var n^2/k in [{lo:.4}, {hi:.4}]")))
        }),
        Box::new(|_| {
            let p = mk(100, 2, 0.5, Mode::Standard)?;
            let times: Vec<u64> = (0..=20).map(|i| i * 25).collect();
            let (var_max, excess) = checks::moment_decay(&p, &times)?;
            Ok(check("moment_decay", "magnetization mean decays and variance stays O(1/n)", var_max, bands::ACCUMULATED_VARIANCE_MAX, var_max <= bands::ACCUMULATED_VARIANCE_MAX && excess <= 1e-12, format!("max |E S_t| - 2 exp(-kt(1-beta)/n) = {excess:.3e}")))
        }),
        Box::new(|rng| {
            let p = mk(200, 5, 0.5, Mode::Standard)?;
            let rep = contraction_test(&p, &[0, 1, 10, 50, 100], 2000, &rng)?;
            let worst = rep.rows.iter().map(|r| r.mean - r.bound - 3.0 * r.std_error).fold(f64::NEG_INFINITY, f64::max);
            Ok(check("contraction", "Hamming and magnetization contraction under the monotone coupling", worst, 0.0, rep.passed(), format!("rho = {:.6}", rep.rho)))
        }),
        Box::new(|rng| {
            let p = mk(200, 3, 0.5, Mode::Standard)?;
            let sigma0 = SpinConfig::with_plus_count(200, 100);
            let rep = two_coord_drift(&p, &sigma0, &checks::two_coord_config(200, 40, 40), &checks::two_coord_config(200, 60, 60), 300, 100_000, &rng)?;
            let ok = rep.mean_increment <= bands::SE_MULTIPLIER * rep.std_error && rep.move_frequency >= bands::TWO_COORD_MOVE_FREQUENCY_MIN;
            Ok(check("two_coord_supermartingale", "two-coordinate chain closes under the Markovian coupling", rep.mean_increment, bands::SE_MULTIPLIER * rep.std_error, ok, format!("move frequency {:.4}", rep.move_frequency)))
        }),
        Box::new(|rng| {
            let mut worst_p: f64 = 1.0;
            for mode in [Mode::Standard, Mode::Restricted] {
                let p = mk(6, 2, 0.8, mode)?;
                let row = build_kernel(&p)?.row_dense(4);
                let hist = mag_histogram(&p, 4, 1, 100_000, &rng.fork(mode as u64))?;
                worst_p = worst_p.min(chi_square_p_value(&hist, &row)?);
            }
            Ok(check("fast_path_fidelity", "magnetization-only simulation follows the exact kernel", worst_p, bands::CHI_SQUARE_P_MIN, worst_p > bands::CHI_SQUARE_P_MIN, "n = 6, k = 2, beta = 0.8".into()))
        }),
    ];
    let checks = run_jobs(workers, jobs.len(), |j| jobs[j](job_stream(seed, j)))?;
    Ok(PropertyReport {
        seed,
        inject_self_spin: config.inject_self_spin,
        band_table_version: bands::TABLE_VERSION,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Files written by [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// `false` only when a property suite reported a failure.
    pub passed: bool,
}

/// Runs the configured scenario and writes its result files into `out_dir`.
pub fn run_scenario(config: &ExperimentConfig, workers: usize, out_dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let ext = match config.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let records_path = out_dir.join(format!("{}.{ext}", config.scenario));
    let emit = |records: &[ResultRecord]| -> Result<()> {
        match config.format {
            OutputFormat::Csv => write_csv(records, &records_path),
            OutputFormat::Json => write_json(records, &records_path),
        }
    };
    let mut files = vec![records_path.clone()];
    let mut passed = true;
    match config.scenario {
        Scenario::CutoffProfile => emit(&run_cutoff_profile(config, workers)?)?,
        Scenario::CriticalScaling => emit(&run_critical_scaling(config, workers)?)?,
        Scenario::RestrictedScaling => emit(&run_restricted_scaling(config, workers)?)?,
        Scenario::KernelExport => {
            let records = run_kernel_export(config, workers, out_dir)?;
            for p in config.grid()? {
                files.push(out_dir.join(kernel_file_name(&p)));
            }
            emit(&records)?;
        }
        Scenario::CoupleTrace => {
            let rows = run_couple_trace(config)?;
            match config.format {
                OutputFormat::Csv => write_trace_csv(&rows, &records_path)?,
                OutputFormat::Json => write_json(&rows, &records_path)?,
            }
        }
        Scenario::PropertySuite => {
            let report = run_property_suite(config, workers)?;
            passed = report.passed;
            let records: Vec<ResultRecord> = report
                .checks
                .iter()
                .map(|c| {
                    let p = summary_params(2, 1, 0.0, Mode::Standard);
                    ResultRecord {
                        n: 0,
                        k: 0,
                        ..ResultRecord::exact(Scenario::PropertySuite, &p, 0, &c.name, if c.passed { 1.0 } else { 0.0 }, config.seed)
                    }
                })
                .collect();
            emit(&records)?;
            let report_path = out_dir.join("property_suite_report.json");
            write_json(&report, &report_path)?;
            files.push(report_path);
        }
    }
    Ok(RunOutput { files, passed })
}
