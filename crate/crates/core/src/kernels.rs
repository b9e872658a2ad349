//! Exact transition kernels.
//!
//! [`MagKernel`] is the one-step kernel of the plus-count chain. On the
//! complete graph the configuration chain lumps exactly onto plus counts, and
//! the intermediate states of a scan step are integrated out by a dynamic
//! program over `(sub-update i, current plus count, scanned vertices that are
//! currently plus)`. The scanned composition has to be tracked by *current*
//! spin: it decides both which spins can still be selected and what the
//! magnetization is.
//!
//! [`FullKernel`] enumerates all `2^n` configurations and every ordered scan
//! sequence, and is the oracle the lumped kernel is checked against.

use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::model::{Mode, ModelParams, SpinConfig};

/// Size limits for kernel construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBudget {
    pub max_n: usize,
    pub max_k: usize,
    /// Limit on `C(n, k) * k!` for the full configuration kernel.
    pub max_sequences: u64,
}

impl Default for KernelBudget {
    fn default() -> Self {
        Self { max_n: 2048, max_k: 8, max_sequences: 100_000 }
    }
}

/// Largest `n` accepted by [`full_config_kernel`].
pub const FULL_KERNEL_MAX_N: usize = 10;

/// Banded `(n+1) x (n+1)` kernel of the plus-count chain.
///
/// Row `m` stores columns `m - k ..= m + k`; entries outside `[0, n]` are kept
/// as zeros so each row is a fixed-width window.
#[derive(Debug, Clone, PartialEq)]
pub struct MagKernel {
    n: usize,
    k: usize,
    beta: f64,
    mode: Mode,
    band: Vec<f64>,
}

impl MagKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn width(&self) -> usize {
        2 * self.k + 1
    }

    pub fn entry(&self, m: usize, m_next: usize) -> f64 {
        if m > self.n || m_next > self.n || m.abs_diff(m_next) > self.k {
            return 0.0;
        }
        self.band[m * self.width() + (m_next + self.k - m)]
    }

    /// Nonzero-capable window of row `m` as `(first column, values)`.
    /// The first column may be negative.
    pub fn row_band(&self, m: usize) -> (isize, &[f64]) {
        let w = self.width();
        (m as isize - self.k as isize, &self.band[m * w..(m + 1) * w])
    }

    pub fn row_dense(&self, m: usize) -> Vec<f64> {
        (0..=self.n).map(|j| self.entry(m, j)).collect()
    }

    pub fn row_sum(&self, m: usize) -> f64 {
        self.row_band(m).1.iter().sum()
    }

    /// `dist * K` using the band.
    pub fn apply(&self, dist: &[f64], out: &mut [f64]) {
        debug_assert_eq!(dist.len(), self.n + 1);
        out.fill(0.0);
        let w = self.width();
        for (m, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let row = &self.band[m * w..(m + 1) * w];
            let lo = m as isize - self.k as isize;
            for (j, &q) in row.iter().enumerate() {
                if q != 0.0 {
                    out[(lo + j as isize) as usize] += p * q;
                }
            }
        }
    }

    /// First plus count of the state space the chain lives on.
    pub fn first_state(&self) -> usize {
        match self.mode {
            Mode::Standard => 0,
            Mode::Restricted => self.n.div_ceil(2),
        }
    }
}

fn check_budget(params: &ModelParams, budget: &KernelBudget) -> Result<()> {
    if params.n() > budget.max_n || params.k() > budget.max_k {
        return Err(Error::BudgetExceeded(format!(
            "n = {}, k = {} exceeds limits n <= {}, k <= {}",
            params.n(),
            params.k(),
            budget.max_n,
            budget.max_k
        )));
    }
    Ok(())
}

/// Distribution of the plus count after one scan step from plus count `m`.
/// Returned as the band window `m - k ..= m + k`.
fn lumped_row(params: &ModelParams, m: usize) -> Vec<f64> {
    let n = params.n();
    let k = params.k();
    // dp[c_off][a]: c = m + c_off - k is the current plus count, a the number
    // of scanned vertices currently plus.
    let w = 2 * k + 1;
    let idx = |c_off: usize, a: usize| c_off * (k + 1) + a;
    let mut dp = vec![0.0f64; w * (k + 1)];
    let mut next = vec![0.0f64; w * (k + 1)];
    dp[idx(k, 0)] = 1.0;
    for i in 0..k {
        next.fill(0.0);
        let avail_total = (n - i) as f64;
        for c_off in 0..w {
            let c = m as isize + c_off as isize - k as isize;
            if c < 0 || c > n as isize {
                continue;
            }
            let c = c as usize;
            for a in 0..=i {
                let p = dp[idx(c_off, a)];
                if p == 0.0 {
                    continue;
                }
                let scanned_minus = i - a;
                let avail_plus = c - a;
                let avail_minus = n - c - scanned_minus;
                if avail_plus > 0 {
                    let sel = p * avail_plus as f64 / avail_total;
                    let up = params.plus_probability(c, 1);
                    next[idx(c_off, a + 1)] += sel * up;
                    next[idx(c_off - 1, a)] += sel * (1.0 - up);
                }
                if avail_minus > 0 {
                    let sel = p * avail_minus as f64 / avail_total;
                    let up = params.plus_probability(c, -1);
                    next[idx(c_off + 1, a + 1)] += sel * up;
                    next[idx(c_off, a)] += sel * (1.0 - up);
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
    }
    (0..w).map(|c_off| (0..=k).map(|a| dp[idx(c_off, a)]).sum()).collect()
}

/// Exact one-step kernel of the plus-count chain (standard dynamics).
pub fn build_mag_kernel(params: &ModelParams) -> Result<MagKernel> {
    build_mag_kernel_with_budget(params, &KernelBudget::default())
}

pub fn build_mag_kernel_with_budget(params: &ModelParams, budget: &KernelBudget) -> Result<MagKernel> {
    if params.mode() != Mode::Standard {
        return Err(Error::Precondition("build_mag_kernel requires standard mode".into()));
    }
    check_budget(params, budget)?;
    let rows: Vec<Vec<f64>> = (0..=params.n()).into_par_iter().map(|m| lumped_row(params, m)).collect();
    Ok(MagKernel {
        n: params.n(),
        k: params.k(),
        beta: params.beta(),
        mode: Mode::Standard,
        band: rows.concat(),
    })
}

/// Folds a standard kernel: mass landing on `m' < n/2` moves to `n - m'`.
///
/// Rows with `m < n/2` lie outside the restricted state space; they are
/// stored as unit self-loops so the matrix stays row-stochastic.
pub fn fold_kernel(standard: &MagKernel) -> MagKernel {
    let n = standard.n;
    let k = standard.k;
    let w = 2 * k + 1;
    let mut band = vec![0.0; (n + 1) * w];
    for m in 0..=n {
        if 2 * m < n {
            band[m * w + k] = 1.0;
            continue;
        }
        for j in m.saturating_sub(k)..=(m + k).min(n) {
            let target = if 2 * j < n { n - j } else { j };
            debug_assert!(m.abs_diff(target) <= k);
            band[m * w + (target + k - m)] += standard.entry(m, j);
        }
    }
    MagKernel { n, k, beta: standard.beta, mode: Mode::Restricted, band }
}

/// Folded kernel of the restricted dynamics.
pub fn build_restricted_mag_kernel(params: &ModelParams) -> Result<MagKernel> {
    build_restricted_mag_kernel_with_budget(params, &KernelBudget::default())
}

pub fn build_restricted_mag_kernel_with_budget(params: &ModelParams, budget: &KernelBudget) -> Result<MagKernel> {
    if params.mode() != Mode::Restricted {
        return Err(Error::Precondition("build_restricted_mag_kernel requires restricted mode".into()));
    }
    let standard = build_mag_kernel_with_budget(&params.with_mode(Mode::Standard)?, budget)?;
    Ok(fold_kernel(&standard))
}

/// Builds the kernel matching the mode of `params`.
pub fn build_kernel(params: &ModelParams) -> Result<MagKernel> {
    match params.mode() {
        Mode::Standard => build_mag_kernel(params),
        Mode::Restricted => build_restricted_mag_kernel(params),
    }
}

/// Probability weights over a finite index set.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be non-empty, finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidInput("weights have no positive finite mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean_by(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| w * f(i)).sum()
    }
}

/// Gibbs measure projected to plus counts:
/// `mu(m) ∝ C(n, m) exp((beta / (2n)) (2m - n)^2)`, computed in log space.
pub fn stationary_magnetization(params: &ModelParams) -> Distribution {
    let n = params.n();
    let beta = params.beta();
    let logw: Vec<f64> = (0..=n)
        .map(|m| {
            let s = 2.0 * m as f64 - n as f64;
            ln_binomial(n as u64, m as u64) + beta / (2.0 * n as f64) * s * s
        })
        .collect();
    let weights = normalize_log(&logw);
    let mu = Distribution { weights };
    match params.mode() {
        Mode::Standard => mu,
        Mode::Restricted => fold_distribution(&mu),
    }
}

fn normalize_log(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Moves the mass of `m < n/2` onto `n - m`.
pub fn fold_distribution(dist: &Distribution) -> Distribution {
    let n = dist.len() - 1;
    let mut weights = vec![0.0; n + 1];
    for (m, &w) in dist.weights.iter().enumerate() {
        weights[if 2 * m < n { n - m } else { m }] += w;
    }
    Distribution { weights }
}

/// `dist K^t`, renormalizing every 1000 steps to remove round-off drift.
pub fn evolve(dist: &Distribution, kernel: &MagKernel, t: u64) -> Result<Distribution> {
    if dist.len() != kernel.n + 1 {
        return Err(Error::SizeMismatch { expected: kernel.n + 1, got: dist.len() });
    }
    let mut cur = dist.weights.clone();
    let mut next = vec![0.0; cur.len()];
    for step in 1..=t {
        kernel.apply(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        if step % 1000 == 0 {
            renormalize(&mut cur);
        }
    }
    Ok(Distribution { weights: cur })
}

fn renormalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
}

/// Half the L1 distance.
pub fn tv_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { expected: a.len(), got: b.len() });
    }
    Ok(tv_slices(&a.weights, &b.weights))
}

pub(crate) fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    (0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0)
}

/// Stationary distribution matching the kernel's mode.
pub fn kernel_stationary(kernel: &MagKernel) -> Result<Distribution> {
    let params = ModelParams::new(kernel.n, kernel.k, kernel.beta, kernel.mode)?;
    Ok(stationary_magnetization(&params))
}

/// `(t, d(t))` from the start `m0` on the supplied time grid.
pub fn exact_d_profile(kernel: &MagKernel, m0: usize, times: &[u64]) -> Result<Vec<(u64, f64)>> {
    if m0 > kernel.n {
        return Err(Error::InvalidInput(format!("start {m0} outside 0..={}", kernel.n)));
    }
    let mu = kernel_stationary(kernel)?;
    let mut sorted: Vec<u64> = times.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut cur = Distribution::point_mass(kernel.n + 1, m0).weights;
    let mut next = vec![0.0; cur.len()];
    let mut now = 0u64;
    let mut out = Vec::with_capacity(sorted.len());
    for t in sorted {
        while now < t {
            kernel.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            now += 1;
            if now % 1000 == 0 {
                renormalize(&mut cur);
            }
        }
        out.push((t, tv_slices(&cur, &mu.weights)));
    }
    Ok(out)
}

/// Pointwise maximum of the profiles from several starts.
pub fn exact_d_profile_max(kernel: &MagKernel, starts: &[usize], times: &[u64]) -> Result<Vec<(u64, f64)>> {
    let profiles: Vec<Vec<(u64, f64)>> = starts.iter().map(|&m0| exact_d_profile(kernel, m0, times)).collect::<Result<_>>()?;
    let mut out = profiles[0].clone();
    for p in &profiles[1..] {
        for (o, q) in out.iter_mut().zip(p) {
            o.1 = o.1.max(q.1);
        }
    }
    Ok(out)
}

/// Smallest listed `t` with `d(t) <= eps`.
pub fn mixing_time_from_profile(profile: &[(u64, f64)], eps: f64) -> Result<u64> {
    let mut sorted = profile.to_vec();
    sorted.sort_by_key(|p| p.0);
    match sorted.iter().position(|&(_, d)| d <= eps) {
        None => Err(Error::NotBracketed { eps }),
        Some(0) if sorted[0].0 > 0 => Err(Error::NotBracketed { eps }),
        Some(i) => Ok(sorted[i].0),
    }
}

/// Exact `t_mix(eps)` by stepping one scan step at a time, maximizing over
/// `starts`. Errors when `t_max` is reached first.
pub fn exact_mixing_time(kernel: &MagKernel, starts: &[usize], eps: f64, t_max: u64) -> Result<u64> {
    let mu = kernel_stationary(kernel)?;
    let mut cur: Vec<Vec<f64>> = starts.iter().map(|&m| Distribution::point_mass(kernel.n + 1, m).weights).collect();
    let mut next = vec![0.0; kernel.n + 1];
    for t in 0..=t_max {
        if cur.iter().all(|c| tv_slices(c, &mu.weights) <= eps) {
            return Ok(t);
        }
        for c in cur.iter_mut() {
            kernel.apply(c, &mut next);
            std::mem::swap(c, &mut next);
            if (t + 1) % 1000 == 0 {
                renormalize(c);
            }
        }
    }
    Err(Error::NotBracketed { eps })
}

/// Exact mean and variance of the magnetization after one step from plus count `m`.
pub fn one_step_moments(kernel: &MagKernel, m: usize) -> Result<(f64, f64)> {
    if m > kernel.n {
        return Err(Error::InvalidInput(format!("row {m} outside 0..={}", kernel.n)));
    }
    let n = kernel.n as f64;
    let (lo, row) = kernel.row_band(m);
    let mut mean = 0.0;
    let mut second = 0.0;
    for (j, &p) in row.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let s = (2.0 * (lo + j as isize) as f64 - n) / n;
        mean += p * s;
        second += p * s * s;
    }
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// Mean and variance of the magnetization under a plus-count distribution.
pub fn magnetization_moments(dist: &Distribution) -> (f64, f64) {
    let n = (dist.len() - 1) as f64;
    let s = |m: usize| (2.0 * m as f64 - n) / n;
    let mean = dist.mean_by(s);
    let second = dist.mean_by(|m| s(m) * s(m));
    (mean, (second - mean * mean).max(0.0))
}

/// Dense kernel on all `2^n` configurations, indexed by [`SpinConfig::code`].
#[derive(Debug, Clone, PartialEq)]
pub struct FullKernel {
    n: usize,
    matrix: Vec<f64>,
}

impl FullKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.size() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let s = self.size();
        &self.matrix[from * s..(from + 1) * s]
    }

    /// `dist * K` for a distribution over configurations.
    pub fn apply(&self, dist: &[f64]) -> Vec<f64> {
        let s = self.size();
        let mut out = vec![0.0; s];
        for (i, &p) in dist.iter().enumerate() {
            if p != 0.0 {
                for (o, &q) in out.iter_mut().zip(self.row(i)) {
                    *o += p * q;
                }
            }
        }
        out
    }

    /// Sums each row over configurations with equal plus count. Uses the
    /// configuration `with_plus_count(n, m)` as the representative of row `m`.
    pub fn project(&self) -> Vec<Vec<f64>> {
        (0..=self.n)
            .map(|m| {
                let from = SpinConfig::with_plus_count(self.n, m).code();
                let mut row = vec![0.0; self.n + 1];
                for (to, &p) in self.row(from).iter().enumerate() {
                    row[to.count_ones() as usize] += p;
                }
                row
            })
            .collect()
    }
}

/// Gibbs measure on all `2^n` configurations:
/// `pi(sigma) ∝ exp((beta / (2n)) (sum sigma)^2)`.
pub fn gibbs_full(params: &ModelParams) -> Vec<f64> {
    let n = params.n();
    let logw: Vec<f64> = (0..1usize << n)
        .map(|code| {
            let s = 2.0 * code.count_ones() as f64 - n as f64;
            params.beta() / (2.0 * n as f64) * s * s
        })
        .collect();
    normalize_log(&logw)
}

fn sequence_count(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64))
}

/// Exact configuration kernel of one scan step, averaging over every ordered
/// `k`-subset. Restricted mode folds configurations with negative magnetization.
pub fn full_config_kernel(params: &ModelParams) -> Result<FullKernel> {
    full_config_kernel_with_budget(params, &KernelBudget::default())
}

pub fn full_config_kernel_with_budget(params: &ModelParams, budget: &KernelBudget) -> Result<FullKernel> {
    let n = params.n();
    if n > FULL_KERNEL_MAX_N {
        return Err(Error::BudgetExceeded(format!("full kernel needs n <= {FULL_KERNEL_MAX_N}, got {n}")));
    }
    let seqs = sequence_count(n, params.k());
    if seqs > budget.max_sequences {
        return Err(Error::BudgetExceeded(format!("{seqs} scan sequences exceed {}", budget.max_sequences)));
    }
    let size = 1usize << n;
    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|from| {
            let mut row = vec![0.0; size];
            let mut config = SpinConfig::from_code(n, from);
            let mut used = vec![false; n];
            enumerate_scans(params, &mut config, &mut used, params.k(), 1.0, &mut row);
            if params.mode() == Mode::Restricted {
                let mask = size - 1;
                for code in 0..size {
                    if 2 * (code.count_ones() as usize) < n && row[code] != 0.0 {
                        let p = std::mem::take(&mut row[code]);
                        row[!code & mask] += p;
                    }
                }
            }
            row
        })
        .collect();
    Ok(FullKernel { n, matrix: rows.concat() })
}

fn enumerate_scans(params: &ModelParams, config: &mut SpinConfig, used: &mut [bool], remaining: usize, prob: f64, row: &mut [f64]) {
    if remaining == 0 {
        row[config.code()] += prob;
        return;
    }
    let n = params.n();
    let available = used.iter().filter(|u| !**u).count() as f64;
    for v in 0..n {
        if used[v] {
            continue;
        }
        used[v] = true;
        let old = config.spin(v);
        let up = params.plus_probability(config.plus_count(), old);
        for (spin, p) in [(1i8, up), (-1i8, 1.0 - up)] {
            if p == 0.0 {
                continue;
            }
            config.set_spin(v, spin);
            enumerate_scans(params, config, used, remaining - 1, prob * p / available, row);
        }
        config.set_spin(v, old);
        used[v] = false;
    }
}

/// `d(t)` of the full chain from each configuration on a time grid; returns
/// one profile per start configuration code.
pub fn full_d_profiles(kernel: &FullKernel, pi: &[f64], times: &[u64]) -> Vec<Vec<(u64, f64)>> {
    let size = kernel.size();
    (0..size)
        .map(|start| {
            let mut cur = vec![0.0; size];
            cur[start] = 1.0;
            let mut now = 0;
            let mut out = Vec::new();
            let mut sorted = times.to_vec();
            sorted.sort_unstable();
            for t in sorted {
                while now < t {
                    cur = kernel.apply(&cur);
                    now += 1;
                }
                out.push((t, tv_slices(&cur, pi)));
            }
            out
        })
        .collect()
}

/// Text serialization: a header (`n`, `k`, `beta`, `mode`) followed by one
/// `m m' value` line per in-range band entry, values in 17 significant digits.
pub fn export_kernel(kernel: &MagKernel) -> String {
    let mut s = String::new();
    writeln!(s, "scanmix-kernel 1").unwrap();
    writeln!(s, "n {}", kernel.n).unwrap();
    writeln!(s, "k {}", kernel.k).unwrap();
    writeln!(s, "beta {:.16e}", kernel.beta).unwrap();
    writeln!(s, "mode {}", kernel.mode).unwrap();
    for m in 0..=kernel.n {
        for j in m.saturating_sub(kernel.k)..=(m + kernel.k).min(kernel.n) {
            writeln!(s, "{m} {j} {:.16e}", kernel.entry(m, j)).unwrap();
        }
    }
    s
}

pub fn import_kernel(text: &str) -> Result<MagKernel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing '{key}' header")))?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
            _ => Err(Error::Parse(format!("expected '{key} <value>', got '{line}'"))),
        }
    };
    if header("scanmix-kernel")? != "1" {
        return Err(Error::Parse("unsupported kernel format version".into()));
    }
    let parse_usize = |s: String| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
    let n = parse_usize(header("n")?)?;
    let k = parse_usize(header("k")?)?;
    let beta: f64 = header("beta")?.parse().map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
    let mode: Mode = header("mode")?.parse()?;
    let params = ModelParams::new(n, k, beta, mode)?;
    let w = 2 * k + 1;
    let mut band = vec![0.0; (n + 1) * w];
    for line in lines {
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("malformed entry line '{line}'")));
        };
        let m: usize = a.parse().map_err(|_| Error::Parse(format!("bad row index in '{line}'")))?;
        let j: usize = b.parse().map_err(|_| Error::Parse(format!("bad column index in '{line}'")))?;
        let value: f64 = v.parse().map_err(|_| Error::Parse(format!("bad value in '{line}'")))?;
        if m > n || j > n || m.abs_diff(j) > k {
            return Err(Error::Parse(format!("entry ({m}, {j}) outside the band")));
        }
        band[m * w + (j + k - m)] = value;
    }
    Ok(MagKernel { n: params.n(), k: params.k(), beta: params.beta(), mode: params.mode(), band })
}
