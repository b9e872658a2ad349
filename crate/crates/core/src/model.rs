//! Model parameters, spin configurations and the randomized systematic-scan
//! Glauber step on the complete graph.
//!
//! One scan step picks an ordered set of `k` distinct vertices uniformly at
//! random and resamples them one at a time. Vertex `v` becomes `+1` iff the
//! shared uniform `u` satisfies `u <= p_plus(S(sigma) - sigma(v)/n)`, where
//! `S` is the magnetization of the current intermediate configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Restricted,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Restricted => "restricted",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Mode::Standard),
            "restricted" => Ok(Mode::Restricted),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

/// Which spins enter the local field of the updated vertex.
///
/// `ExcludeSelf` is the model. `IncludeSelf` exists only so the property
/// suite can demonstrate that it detects a wrong update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FieldRule {
    #[default]
    ExcludeSelf,
    IncludeSelf,
}

/// Validated `(n, k, beta, mode)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    k: usize,
    beta: f64,
    mode: Mode,
    field_rule: FieldRule,
    warning: bool,
}

impl ModelParams {
    pub fn new(n: usize, k: usize, beta: f64, mode: Mode) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n must be at least 2, got {n}")));
        }
        if k < 1 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if k > n {
            return Err(Error::InvalidParams(format!("k exceeds n ({k} > {n})")));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParams(format!("beta must be finite and non-negative, got {beta}")));
        }
        let warning = mode == Mode::Restricted && beta <= 1.0;
        Ok(Self { n, k, beta, mode, field_rule: FieldRule::ExcludeSelf, warning })
    }

    pub fn standard(n: usize, k: usize, beta: f64) -> Result<Self> {
        Self::new(n, k, beta, Mode::Standard)
    }

    pub fn restricted(n: usize, k: usize, beta: f64) -> Result<Self> {
        Self::new(n, k, beta, Mode::Restricted)
    }

    pub fn with_field_rule(mut self, rule: FieldRule) -> Self {
        self.field_rule = rule;
        self
    }

    pub fn with_mode(self, mode: Mode) -> Result<Self> {
        Ok(Self::new(self.n, self.k, self.beta, mode)?.with_field_rule(self.field_rule))
    }

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

    pub fn field_rule(&self) -> FieldRule {
        self.field_rule
    }

    /// Set when the restricted dynamics is requested at `beta <= 1`, where it
    /// is accepted but not the regime it is meant for.
    pub fn warning(&self) -> bool {
        self.warning
    }

    /// Local field seen by a vertex with spin `spin` when the configuration
    /// has `plus_count` plus spins.
    #[inline]
    pub fn local_field(&self, plus_count: usize, spin: i8) -> f64 {
        let total = 2 * plus_count as i64 - self.n as i64;
        let sum = match self.field_rule {
            FieldRule::ExcludeSelf => total - spin as i64,
            FieldRule::IncludeSelf => total,
        };
        sum as f64 / self.n as f64
    }

    /// Probability that a vertex with spin `spin` is resampled to `+1`.
    #[inline]
    pub fn plus_probability(&self, plus_count: usize, spin: i8) -> f64 {
        update_prob_plus(self.beta, self.local_field(plus_count, spin))
    }
}

/// Validating constructor, kept as a free function for symmetry with the
/// other operations.
pub fn make_params(n: usize, k: usize, beta: f64, mode: Mode) -> Result<ModelParams> {
    ModelParams::new(n, k, beta, mode)
}

/// `(1 + tanh(beta x)) / 2`.
#[inline]
pub fn update_prob_plus(beta: f64, x: f64) -> f64 {
    0.5 * (1.0 + (beta * x).tanh())
}

/// A configuration in `{-1, +1}^n` with its plus count cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    spins: Vec<i8>,
    plus_count: usize,
}

impl SpinConfig {
    pub fn from_spins(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput(format!("spin value {bad} is not +1 or -1")));
        }
        let plus_count = spins.iter().filter(|&&s| s == 1).count();
        Ok(Self { spins, plus_count })
    }

    pub fn all_plus(n: usize) -> Self {
        Self { spins: vec![1; n], plus_count: n }
    }

    pub fn all_minus(n: usize) -> Self {
        Self { spins: vec![-1; n], plus_count: 0 }
    }

    /// First `plus_count` vertices `+1`, the rest `-1`.
    pub fn with_plus_count(n: usize, plus_count: usize) -> Self {
        assert!(plus_count <= n);
        let mut spins = vec![-1; n];
        spins[..plus_count].fill(1);
        Self { spins, plus_count }
    }

    /// Uniformly random configuration.
    pub fn random(n: usize, rng: &mut RngStream) -> Self {
        let spins: Vec<i8> = (0..n).map(|_| if rng.uniform() < 0.5 { 1 } else { -1 }).collect();
        let plus_count = spins.iter().filter(|&&s| s == 1).count();
        Self { spins, plus_count }
    }

    /// Configuration of `n` spins indexed by the bits of `code` (bit set means `+1`).
    pub fn from_code(n: usize, code: usize) -> Self {
        let spins: Vec<i8> = (0..n).map(|v| if code >> v & 1 == 1 { 1 } else { -1 }).collect();
        let plus_count = code.count_ones() as usize;
        Self { spins, plus_count }
    }

    pub fn code(&self) -> usize {
        self.spins.iter().enumerate().fold(0, |acc, (v, &s)| if s == 1 { acc | 1 << v } else { acc })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    #[inline]
    pub fn spin(&self, v: usize) -> i8 {
        self.spins[v]
    }

    #[inline]
    pub fn plus_count(&self) -> usize {
        self.plus_count
    }

    pub fn magnetization(&self) -> f64 {
        (2.0 * self.plus_count as f64 - self.n() as f64) / self.n() as f64
    }

    /// Recounts the plus spins and compares with the cache.
    pub fn cache_consistent(&self) -> bool {
        self.spins.iter().filter(|&&s| s == 1).count() == self.plus_count
    }

    /// Coordinatewise `self >= other`.
    pub fn dominates(&self, other: &SpinConfig) -> bool {
        self.spins.iter().zip(&other.spins).all(|(a, b)| a >= b)
    }

    pub fn flipped(&self) -> SpinConfig {
        SpinConfig {
            spins: self.spins.iter().map(|s| -s).collect(),
            plus_count: self.n() - self.plus_count,
        }
    }

    pub fn flip_all(&mut self) {
        for s in &mut self.spins {
            *s = -*s;
        }
        self.plus_count = self.spins.len() - self.plus_count;
    }

    #[inline]
    pub fn set_spin(&mut self, v: usize, spin: i8) {
        let old = self.spins[v];
        if old != spin {
            self.spins[v] = spin;
            if spin == 1 {
                self.plus_count += 1;
            } else {
                self.plus_count -= 1;
            }
        }
    }

    /// In-place resampling of vertex `v` driven by the uniform `u`.
    #[inline]
    pub fn update_site(&mut self, params: &ModelParams, v: usize, u: f64) {
        let threshold = params.plus_probability(self.plus_count, self.spins[v]);
        self.set_spin(v, if u <= threshold { 1 } else { -1 });
    }
}

pub fn magnetization(config: &SpinConfig) -> f64 {
    config.magnetization()
}

/// Returns a copy of `config` with vertex `v` resampled using uniform `u`.
pub fn single_site_update(params: &ModelParams, config: &SpinConfig, v: usize, u: f64) -> Result<SpinConfig> {
    check_size(params, config)?;
    if v >= config.n() {
        return Err(Error::VertexOutOfRange { vertex: v, n: config.n() });
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidInput(format!("uniform {u} outside [0, 1]")));
    }
    let mut out = config.clone();
    out.update_site(params, v, u);
    Ok(out)
}

fn check_size(params: &ModelParams, config: &SpinConfig) -> Result<()> {
    if config.n() != params.n() {
        return Err(Error::SizeMismatch { expected: params.n(), got: config.n() });
    }
    Ok(())
}

/// Ordered set of `k` distinct vertices updated in one scan step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOrder {
    vertices: Vec<usize>,
}

impl ScanOrder {
    pub fn new(vertices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in &vertices {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidInput(format!("vertex {v} repeated in scan order")));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Reusable index array for ordered-subset sampling.
///
/// Each call performs a partial Fisher-Yates shuffle of the first `k`
/// positions and consumes exactly `k` 64-bit draws. Starting from any
/// permutation, the resulting prefix is a uniform ordered `k`-subset.
#[derive(Debug, Clone)]
pub struct ScanSampler {
    perm: Vec<usize>,
}

impl ScanSampler {
    pub fn new(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn sample(&mut self, k: usize, rng: &mut RngStream) -> &[usize] {
        let n = self.perm.len();
        for i in 0..k {
            let j = i + rng.index(n - i);
            self.perm.swap(i, j);
        }
        &self.perm[..k]
    }
}

pub fn sample_scan_order(params: &ModelParams, rng: &mut RngStream) -> ScanOrder {
    let mut sampler = ScanSampler::new(params.n());
    ScanOrder { vertices: sampler.sample(params.k(), rng).to_vec() }
}

/// Plus counts of the intermediate configurations of one scan step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntermediateTrace {
    pub states: Vec<usize>,
    pub order: ScanOrder,
}

impl IntermediateTrace {
    pub fn is_consistent(&self) -> bool {
        self.states.len() == self.order.len() + 1
            && self.states.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
    }
}

/// Applies the sub-updates `order[i]` driven by `uniforms[i]` in sequence.
/// This is the deterministic core shared by the plain step and every coupling.
pub fn apply_scan(params: &ModelParams, config: &mut SpinConfig, order: &[usize], uniforms: &[f64]) -> Vec<usize> {
    debug_assert_eq!(order.len(), uniforms.len());
    let mut states = Vec::with_capacity(order.len() + 1);
    states.push(config.plus_count());
    for (&v, &u) in order.iter().zip(uniforms) {
        config.update_site(params, v, u);
        states.push(config.plus_count());
    }
    states
}

/// Draws the order and the `k` uniforms for one scan step (order first).
pub fn draw_scan(params: &ModelParams, sampler: &mut ScanSampler, rng: &mut RngStream, uniforms: &mut Vec<f64>) -> Vec<usize> {
    let order = sampler.sample(params.k(), rng).to_vec();
    uniforms.clear();
    uniforms.extend((0..params.k()).map(|_| rng.uniform()));
    order
}

/// One standard scan step. Returns the new configuration and the trace of
/// intermediate plus counts.
pub fn scan_step(params: &ModelParams, config: &SpinConfig, rng: &mut RngStream) -> Result<(SpinConfig, IntermediateTrace)> {
    check_size(params, config)?;
    if params.mode() != Mode::Standard {
        return Err(Error::Precondition("scan_step requires standard mode".into()));
    }
    Ok(scan_step_unchecked(params, config, rng))
}

fn scan_step_unchecked(params: &ModelParams, config: &SpinConfig, rng: &mut RngStream) -> (SpinConfig, IntermediateTrace) {
    let mut sampler = ScanSampler::new(params.n());
    let mut uniforms = Vec::with_capacity(params.k());
    let order = draw_scan(params, &mut sampler, rng, &mut uniforms);
    let mut out = config.clone();
    let states = apply_scan(params, &mut out, &order, &uniforms);
    (out, IntermediateTrace { states, order: ScanOrder { vertices: order } })
}

/// One restricted step: the standard candidate, globally flipped when its
/// magnetization is negative. A candidate with `S = 0` is kept as is.
pub fn restricted_scan_step(params: &ModelParams, config: &SpinConfig, rng: &mut RngStream) -> Result<(SpinConfig, IntermediateTrace)> {
    check_size(params, config)?;
    if params.mode() != Mode::Restricted {
        return Err(Error::Precondition("restricted_scan_step requires restricted mode".into()));
    }
    if 2 * config.plus_count() < config.n() {
        return Err(Error::Precondition("restricted dynamics needs a start with S >= 0".into()));
    }
    let (mut out, trace) = scan_step_unchecked(params, config, rng);
    if 2 * out.plus_count() < out.n() {
        out.flip_all();
    }
    Ok((out, trace))
}

/// Dispatches on the mode of `params`.
pub fn step(params: &ModelParams, config: &SpinConfig, rng: &mut RngStream) -> Result<(SpinConfig, IntermediateTrace)> {
    match params.mode() {
        Mode::Standard => scan_step(params, config, rng),
        Mode::Restricted => restricted_scan_step(params, config, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_validation() {
        assert!(make_params(10, 3, 0.5, Mode::Standard).is_ok());
        let err = make_params(10, 11, 0.5, Mode::Standard).unwrap_err();
        assert!(err.to_string().contains("k exceeds n"));
        assert!(make_params(10, 0, 0.5, Mode::Standard).is_err());
        assert!(make_params(10, 3, -0.1, Mode::Standard).is_err());
        assert!(make_params(1, 1, 0.5, Mode::Standard).is_err());
        let p = make_params(100, 10, 2.0, Mode::Restricted).unwrap();
        assert!(!p.warning());
        assert!(make_params(100, 10, 0.5, Mode::Restricted).unwrap().warning());
    }

    #[test]
    fn magnetization_examples() {
        assert_eq!(SpinConfig::all_plus(10).magnetization(), 1.0);
        assert_eq!(SpinConfig::with_plus_count(10, 5).magnetization(), 0.0);
        assert_eq!(SpinConfig::with_plus_count(4, 3).magnetization(), 0.5);
    }

    #[test]
    fn update_prob_examples() {
        assert_eq!(update_prob_plus(1.3, 0.0), 0.5);
        assert!((update_prob_plus(1.0, 0.5) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(update_prob_plus(0.9, 0.3) + update_prob_plus(0.9, -0.3), 1.0);
    }

    #[test]
    fn single_site_examples() {
        let p0 = ModelParams::standard(6, 2, 0.0).unwrap();
        let c = SpinConfig::with_plus_count(6, 2);
        assert_eq!(single_site_update(&p0, &c, 4, 0.3).unwrap().spin(4), 1);
        assert_eq!(single_site_update(&p0, &c, 0, 0.7).unwrap().spin(0), -1);

        let p = ModelParams::standard(2, 1, 1.0).unwrap();
        let c = SpinConfig::all_plus(2);
        // Threshold p+(1 - 1/2) = 0.7310...; u = 0.8 lies above it.
        assert!((p.plus_probability(2, 1) - 0.731_058_578_630_004_9).abs() < 1e-15);
        let out = single_site_update(&p, &c, 0, 0.8).unwrap();
        assert_eq!(out.spins(), &[-1, 1]);
        assert!(out.cache_consistent());

        assert!(matches!(
            single_site_update(&p, &c, 2, 0.5),
            Err(Error::VertexOutOfRange { vertex: 2, n: 2 })
        ));
    }

    #[test]
    fn tie_resolves_to_plus() {
        let p = ModelParams::standard(4, 1, 0.7).unwrap();
        let c = SpinConfig::with_plus_count(4, 2);
        let u = p.plus_probability(2, c.spin(0));
        assert_eq!(single_site_update(&p, &c, 0, u).unwrap().spin(0), 1);
    }

    #[test]
    fn scan_order_extremes() {
        let mut rng = RngStream::new(1, 0);
        let p = ModelParams::standard(7, 7, 0.5).unwrap();
        let mut o = sample_scan_order(&p, &mut rng).vertices().to_vec();
        o.sort_unstable();
        assert_eq!(o, (0..7).collect::<Vec<_>>());
        let p1 = ModelParams::standard(7, 1, 0.5).unwrap();
        assert_eq!(sample_scan_order(&p1, &mut rng).len(), 1);
    }

    #[test]
    fn ordered_pairs_uniform() {
        // n = 5, k = 2: 20 ordered pairs, each with probability 1/20.
        let p = ModelParams::standard(5, 2, 0.5).unwrap();
        let mut rng = RngStream::new(42, 0);
        let mut sampler = ScanSampler::new(5);
        let mut counts = [0usize; 25];
        let draws = 1_000_000;
        for _ in 0..draws {
            let o = sampler.sample(p.k(), &mut rng);
            counts[o[0] * 5 + o[1]] += 1;
        }
        let expect = draws as f64 / 20.0;
        let sd = (draws as f64 * (1.0 / 20.0) * (19.0 / 20.0)).sqrt();
        for a in 0..5 {
            for b in 0..5 {
                let c = counts[a * 5 + b] as f64;
                if a == b {
                    assert_eq!(c, 0.0);
                } else {
                    assert!((c - expect).abs() < 4.0 * sd, "pair ({a},{b}): {c}");
                }
            }
        }
    }

    #[test]
    fn beta_zero_full_scan_is_uniform() {
        let p = ModelParams::standard(3, 3, 0.0).unwrap();
        let mut rng = RngStream::new(3, 9);
        let start = SpinConfig::all_plus(3);
        let mut counts = [0usize; 8];
        let draws = 80_000;
        for _ in 0..draws {
            let (out, _) = scan_step(&p, &start, &mut rng).unwrap();
            counts[out.code()] += 1;
        }
        let sd = (draws as f64 / 8.0 * 7.0 / 8.0).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 8.0).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn untouched_vertices_keep_spins() {
        let p = ModelParams::standard(5, 2, 0.8).unwrap();
        let mut rng = RngStream::new(5, 5);
        let mut c = SpinConfig::random(5, &mut rng);
        for _ in 0..1000 {
            let (out, trace) = scan_step(&p, &c, &mut rng).unwrap();
            let same = (0..5).filter(|&v| out.spin(v) == c.spin(v)).count();
            assert!(same >= 3);
            for v in 0..5 {
                if !trace.order.vertices().contains(&v) {
                    assert_eq!(out.spin(v), c.spin(v));
                }
            }
            assert!(trace.is_consistent());
            assert_eq!(trace.states[0], c.plus_count());
            assert_eq!(*trace.states.last().unwrap(), out.plus_count());
            c = out;
        }
    }

    #[test]
    fn zero_magnetization_mean_is_zero() {
        // E[S_1 | S_0 = 0] = 0 for even n; checked by Monte Carlo at 4 SE.
        let p = ModelParams::standard(10, 3, 1.2).unwrap();
        let mut rng = RngStream::new(8, 1);
        let start = SpinConfig::with_plus_count(10, 5);
        let reps = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..reps {
            let m = scan_step(&p, &start, &mut rng).unwrap().0.magnetization();
            s += m;
            s2 += m * m;
        }
        let mean = s / reps as f64;
        let se = ((s2 / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn restricted_examples() {
        let p = ModelParams::restricted(9, 3, 1.5).unwrap();
        let mut rng = RngStream::new(2, 2);
        assert!(restricted_scan_step(&p, &SpinConfig::with_plus_count(9, 4), &mut rng).is_err());
        let mut c = SpinConfig::with_plus_count(9, 5);
        for _ in 0..5000 {
            c = restricted_scan_step(&p, &c, &mut rng).unwrap().0;
            assert!(c.magnetization() >= 0.0);
        }
    }

    #[test]
    fn restricted_flips_only_negative_candidates() {
        // Same stream drives the standard candidate and the restricted step.
        let ps = ModelParams::standard(6, 3, 0.0).unwrap();
        let pr = ps.with_mode(Mode::Restricted).unwrap();
        let start = SpinConfig::with_plus_count(6, 3);
        let (mut kept, mut flipped) = (0, 0);
        for seed in 0..400 {
            let (cand, _) = scan_step(&ps, &start, &mut RngStream::new(seed, 0)).unwrap();
            let (out, _) = restricted_scan_step(&pr, &start, &mut RngStream::new(seed, 0)).unwrap();
            if cand.magnetization() >= 0.0 {
                assert_eq!(out, cand);
                kept += 1;
            } else {
                assert_eq!(out, cand.flipped());
                assert!(out.magnetization() > 0.0);
                flipped += 1;
            }
        }
        assert!(kept > 0 && flipped > 0);
    }

    #[test]
    fn monotone_in_x() {
        for beta in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let mut prev = 0.0;
            for i in -100..=100 {
                let p = update_prob_plus(beta, i as f64 / 100.0);
                assert!(p >= prev);
                assert!(p > 0.0 && p < 1.0);
                prev = p;
            }
        }
    }

    proptest! {
        #[test]
        fn complementarity(beta in 0.0f64..10.0, x in -1.0f64..1.0) {
            let s = update_prob_plus(beta, x) + update_prob_plus(beta, -x);
            prop_assert!((s - 1.0).abs() <= 2.0 * f64::EPSILON);
        }

        #[test]
        fn flip_equivariance(n in 2usize..=12, kfrac in 0.0f64..1.0, beta in 0.0f64..3.0, seed in any::<u64>()) {
            let k = 1 + ((n - 1) as f64 * kfrac) as usize;
            let p = ModelParams::standard(n, k, beta).unwrap();
            let mut rng = RngStream::new(seed, 0);
            let start = SpinConfig::random(n, &mut rng);
            let mut sampler = ScanSampler::new(n);
            let mut us = Vec::new();
            let order = draw_scan(&p, &mut sampler, &mut rng, &mut us);
            let mirrored: Vec<f64> = us.iter().map(|u| 1.0 - u).collect();
            let mut a = start.clone();
            apply_scan(&p, &mut a, &order, &us);
            let mut b = start.flipped();
            apply_scan(&p, &mut b, &order, &mirrored);
            prop_assert_eq!(a.flipped(), b);
        }

        #[test]
        fn determinism(seed in any::<u64>(), stream in any::<u64>()) {
            let p = ModelParams::standard(12, 4, 0.9).unwrap();
            let c = SpinConfig::with_plus_count(12, 7);
            let a = scan_step(&p, &c, &mut RngStream::new(seed, stream)).unwrap();
            let b = scan_step(&p, &c, &mut RngStream::new(seed, stream)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn restricted_never_negative(seed in any::<u64>(), m0 in 10usize..=20) {
            let p = ModelParams::restricted(20, 3, 1.3).unwrap();
            let mut rng = RngStream::new(seed, 1);
            let mut c = SpinConfig::with_plus_count(20, m0);
            for _ in 0..200 {
                c = restricted_scan_step(&p, &c, &mut rng).unwrap().0;
                prop_assert!(2 * c.plus_count() >= 20);
            }
        }
    }
}
