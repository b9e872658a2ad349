//! Couplings of two (or more) copies of the scan dynamics.
//!
//! A [`CoupledPair`] carries a vertex matching: vertex `v` of `x` is paired
//! with vertex `matching[v]` of `x_tilde`. Under the monotone rules the pair
//! shares one scan order (mapped through the matching) and one uniform per
//! sub-update. The matching only changes at whole-step boundaries.

use crate::error::{Error, Result};
use crate::model::{apply_scan, draw_scan, Mode, ModelParams, ScanSampler, SpinConfig};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingRule {
    GrandMonotone,
    RematchedMonotone,
    Independent,
    TwoCoordClosing,
}

impl CouplingRule {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingRule::GrandMonotone => "grand_monotone",
            CouplingRule::RematchedMonotone => "rematched_monotone",
            CouplingRule::Independent => "independent",
            CouplingRule::TwoCoordClosing => "two_coord_closing",
        }
    }
}

impl std::fmt::Display for CouplingRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub x: SpinConfig,
    pub x_tilde: SpinConfig,
    matching: Vec<usize>,
    pub rule: CouplingRule,
    /// Reference configuration `sigma0` for the two-coordinate statistics.
    reference: SpinConfig,
    pub time: u64,
}

impl CoupledPair {
    /// Identity matching; the reference configuration defaults to `x`.
    pub fn new(x: SpinConfig, x_tilde: SpinConfig, rule: CouplingRule) -> Result<Self> {
        if x.n() != x_tilde.n() {
            return Err(Error::SizeMismatch { expected: x.n(), got: x_tilde.n() });
        }
        let n = x.n();
        Ok(Self { reference: x.clone(), x, x_tilde, matching: (0..n).collect(), rule, time: 0 })
    }

    pub fn with_reference(mut self, reference: SpinConfig) -> Result<Self> {
        if reference.n() != self.x.n() {
            return Err(Error::SizeMismatch { expected: self.x.n(), got: reference.n() });
        }
        self.reference = reference;
        Ok(self)
    }

    pub fn with_matching(mut self, matching: Vec<usize>) -> Result<Self> {
        check_bijection(&matching, self.x.n())?;
        self.matching = matching;
        Ok(self)
    }

    pub fn matching(&self) -> &[usize] {
        &self.matching
    }

    pub fn reference(&self) -> &SpinConfig {
        &self.reference
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    /// `U(x_tilde) - U(x)` with respect to the reference configuration.
    pub fn r_value(&self) -> i64 {
        plus_agreements(&self.reference, &self.x_tilde) as i64 - plus_agreements(&self.reference, &self.x) as i64
    }

    /// Positional disagreements, i.e. `dist(x, x_tilde)`.
    pub fn hamming(&self) -> usize {
        positional_hamming(&self.x, &self.x_tilde)
    }

    pub fn mag_gap(&self) -> f64 {
        (self.x.magnetization() - self.x_tilde.magnetization()).abs()
    }

    pub fn coalesced(&self) -> bool {
        self.x == self.x_tilde
    }

    pub fn stats(&self, stop_events: u32, r_trace: Vec<i64>) -> CouplingStats {
        CouplingStats {
            hamming: self.hamming(),
            mag_gap: self.mag_gap(),
            r_value: self.r_value(),
            coalesced: self.coalesced(),
            step: self.time,
            rule: self.rule,
            stop_events,
            r_trace,
        }
    }
}

/// Observables of a coupled pair after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingStats {
    /// Positional Hamming distance `dist(x, x_tilde)`.
    pub hamming: usize,
    pub mag_gap: f64,
    /// `U(x_tilde) - U(x)`.
    pub r_value: i64,
    pub coalesced: bool,
    pub step: u64,
    /// Rule in force at the end of the step.
    pub rule: CouplingRule,
    /// Times the rule's precondition broke and the pair ran independently.
    pub stop_events: u32,
    /// `R` after each sub-update (two-coordinate rule only; `k + 1` values).
    pub r_trace: Vec<i64>,
}

fn check_bijection(matching: &[usize], n: usize) -> Result<()> {
    if matching.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: matching.len() });
    }
    let mut seen = vec![false; n];
    for &w in matching {
        if w >= n || std::mem::replace(&mut seen[w], true) {
            return Err(Error::InvalidInput("matching is not a bijection".into()));
        }
    }
    Ok(())
}

fn positional_hamming(a: &SpinConfig, b: &SpinConfig) -> usize {
    a.spins().iter().zip(b.spins()).filter(|(p, q)| p != q).count()
}

fn plus_agreements(reference: &SpinConfig, sigma: &SpinConfig) -> usize {
    reference.spins().iter().zip(sigma.spins()).filter(|&(&r, &s)| r == 1 && s == 1).count()
}

/// Number of matched pairs `(v, matching[v])` with different spins.
pub fn hamming(x: &SpinConfig, x_tilde: &SpinConfig, matching: &[usize]) -> Result<usize> {
    if x.n() != x_tilde.n() {
        return Err(Error::SizeMismatch { expected: x.n(), got: x_tilde.n() });
    }
    check_bijection(matching, x.n())?;
    Ok((0..x.n()).filter(|&v| x.spin(v) != x_tilde.spin(matching[v])).count())
}

/// Advances every configuration with one shared scan order and one shared
/// uniform per sub-update.
pub fn grand_coupling_step(params: &ModelParams, configs: &mut [SpinConfig], rng: &mut RngStream) -> Result<()> {
    if let Some(c) = configs.iter().find(|c| c.n() != params.n()) {
        return Err(Error::SizeMismatch { expected: params.n(), got: c.n() });
    }
    let mut sampler = ScanSampler::new(params.n());
    let mut uniforms = Vec::with_capacity(params.k());
    let order = draw_scan(params, &mut sampler, rng, &mut uniforms);
    for c in configs.iter_mut() {
        apply_scan(params, c, &order, &uniforms);
    }
    Ok(())
}

/// Matching that pairs agreeing positions with themselves and the `(+,-)`
/// disagreements with the `(-,+)` disagreements in ascending index order.
/// Every matched pair then carries equal spins.
pub fn rematch_by_spin(pair: &CoupledPair) -> Result<CoupledPair> {
    if pair.x.plus_count() != pair.x_tilde.plus_count() {
        return Err(Error::Precondition("rematch_by_spin needs equal magnetizations".into()));
    }
    let n = pair.n();
    let mut matching: Vec<usize> = (0..n).collect();
    let plus_minus: Vec<usize> = (0..n).filter(|&v| pair.x.spin(v) == 1 && pair.x_tilde.spin(v) == -1).collect();
    let minus_plus: Vec<usize> = (0..n).filter(|&v| pair.x.spin(v) == -1 && pair.x_tilde.spin(v) == 1).collect();
    debug_assert_eq!(plus_minus.len(), minus_plus.len());
    for (&a, &b) in plus_minus.iter().zip(&minus_plus) {
        matching[a] = b;
        matching[b] = a;
    }
    let mut out = pair.clone();
    out.matching = matching;
    Ok(out)
}

/// Number of `(+,-)` positions; equals the number of `(-,+)` positions when
/// the magnetizations agree.
pub fn disagreement_count(pair: &CoupledPair) -> usize {
    (0..pair.n()).filter(|&v| pair.x.spin(v) == 1 && pair.x_tilde.spin(v) == -1).count()
}

/// Spin-preserving matching that pairs vertices of the same reference class
/// (`sigma0 = +` or `-`) wherever possible and cross-matches the rest. With
/// equal magnetizations, `|R|` cannot increase under a monotone step through
/// this matching.
pub fn rematch_two_coord(pair: &CoupledPair) -> Result<CoupledPair> {
    if pair.x.plus_count() != pair.x_tilde.plus_count() {
        return Err(Error::Precondition("rematch_two_coord needs equal magnetizations".into()));
    }
    let n = pair.n();
    let mut matching = vec![usize::MAX; n];
    for spin in [1i8, -1] {
        let class = |c: &SpinConfig, r: i8| -> Vec<usize> {
            (0..n).filter(|&v| c.spin(v) == spin && pair.reference.spin(v) == r).collect()
        };
        let (xp, xm) = (class(&pair.x, 1), class(&pair.x, -1));
        let (tp, tm) = (class(&pair.x_tilde, 1), class(&pair.x_tilde, -1));
        let mut rest_x = Vec::new();
        let mut rest_t = Vec::new();
        for (xs, ts) in [(&xp, &tp), (&xm, &tm)] {
            let common = xs.len().min(ts.len());
            for i in 0..common {
                matching[xs[i]] = ts[i];
            }
            rest_x.extend_from_slice(&xs[common..]);
            rest_t.extend_from_slice(&ts[common..]);
        }
        debug_assert_eq!(rest_x.len(), rest_t.len());
        for (a, b) in rest_x.into_iter().zip(rest_t) {
            matching[a] = b;
        }
    }
    let mut out = pair.clone();
    out.matching = matching;
    Ok(out)
}

fn require_standard(params: &ModelParams, pair: &CoupledPair) -> Result<()> {
    if params.mode() != Mode::Standard {
        return Err(Error::Precondition("couplings are defined for the standard dynamics".into()));
    }
    if pair.n() != params.n() {
        return Err(Error::SizeMismatch { expected: params.n(), got: pair.n() });
    }
    Ok(())
}

/// Monotone step through the pair's current matching: `x` scans a uniform
/// ordered subset, `x_tilde` scans its image, and the sub-updates share
/// uniforms.
pub fn matched_monotone_step(params: &ModelParams, pair: &CoupledPair, rng: &mut RngStream) -> Result<(CoupledPair, CouplingStats)> {
    require_standard(params, pair)?;
    let mut sampler = ScanSampler::new(params.n());
    let mut uniforms = Vec::with_capacity(params.k());
    let order = draw_scan(params, &mut sampler, rng, &mut uniforms);
    let image: Vec<usize> = order.iter().map(|&v| pair.matching[v]).collect();
    let mut out = pair.clone();
    apply_scan(params, &mut out.x, &order, &uniforms);
    apply_scan(params, &mut out.x_tilde, &image, &uniforms);
    out.time += 1;
    let stats = out.stats(0, Vec::new());
    Ok((out, stats))
}

/// Rematches by spin, then takes one monotone step. Magnetizations stay equal
/// and the disagreement count `D` never increases.
pub fn rematched_monotone_step(params: &ModelParams, pair: &CoupledPair, rng: &mut RngStream) -> Result<(CoupledPair, CouplingStats)> {
    let mut rematched = rematch_by_spin(pair)?;
    rematched.rule = CouplingRule::RematchedMonotone;
    matched_monotone_step(params, &rematched, rng)
}

/// Both chains advance with independent randomness.
pub fn independent_step(params: &ModelParams, pair: &CoupledPair, rng: &mut RngStream) -> Result<(CoupledPair, CouplingStats)> {
    require_standard(params, pair)?;
    let mut sampler = ScanSampler::new(params.n());
    let mut uniforms = Vec::with_capacity(params.k());
    let mut out = pair.clone();
    let order = draw_scan(params, &mut sampler, rng, &mut uniforms);
    apply_scan(params, &mut out.x, &order, &uniforms);
    let order = draw_scan(params, &mut sampler, rng, &mut uniforms);
    apply_scan(params, &mut out.x_tilde, &order, &uniforms);
    out.time += 1;
    let stats = out.stats(0, Vec::new());
    Ok((out, stats))
}

/// Two-coordinate counts of `sigma` against the reference `sigma0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoCoordState {
    /// Vertices plus in both.
    pub u: usize,
    /// Vertices minus in both.
    pub v: usize,
    pub u0: usize,
    pub v0: usize,
}

impl TwoCoordState {
    pub fn n(&self) -> usize {
        self.u0 + self.v0
    }

    /// `S = 2(U - V)/n - (u0 - v0)/n`.
    pub fn magnetization(&self) -> f64 {
        let n = self.n() as f64;
        2.0 * (self.u as f64 - self.v as f64) / n - (self.u0 as f64 - self.v0 as f64) / n
    }

    /// `n/4 <= u0, v0 <= 3n/4`.
    pub fn balanced_reference(&self) -> bool {
        let n = self.n();
        4 * self.u0 >= n && 4 * self.u0 <= 3 * n && 4 * self.v0 >= n && 4 * self.v0 <= 3 * n
    }

    /// Every coordinate at least `n/16` away from its bounds.
    pub fn interior(&self) -> bool {
        let n = self.n();
        [self.u, self.u0 - self.u, self.v, self.v0 - self.v].iter().all(|&c| 16 * c >= n)
    }
}

pub fn two_coordinate(sigma0: &SpinConfig, sigma: &SpinConfig) -> Result<TwoCoordState> {
    if sigma0.n() != sigma.n() {
        return Err(Error::SizeMismatch { expected: sigma0.n(), got: sigma.n() });
    }
    let u = plus_agreements(sigma0, sigma);
    let v = sigma0.spins().iter().zip(sigma.spins()).filter(|&(&r, &s)| r == -1 && s == -1).count();
    Ok(TwoCoordState { u, v, u0: sigma0.plus_count(), v0: sigma0.n() - sigma0.plus_count() })
}

/// One scan step of the two-coordinate closing coupling.
///
/// Each sub-update picks a uniform available vertex `I` of `x`, then a uniform
/// available vertex of `x_tilde` carrying the same spin as `x(I)`; both get
/// the same new spin. Equal magnetizations give equal thresholds, so `S`
/// stays equal and `R` moves by at most one per sub-update. If `x_tilde` has
/// no such vertex the pair runs independently for the rest of the step and
/// the event is counted.
pub fn two_coord_closing_step(params: &ModelParams, pair: &CoupledPair, rng: &mut RngStream) -> Result<(CoupledPair, CouplingStats)> {
    require_standard(params, pair)?;
    if pair.x.plus_count() != pair.x_tilde.plus_count() {
        return Err(Error::Precondition("two-coordinate coupling needs equal magnetizations".into()));
    }
    let r0 = pair.r_value();
    if r0 <= 0 {
        return Err(Error::Precondition(format!(
            "two-coordinate coupling needs R > 0, got {r0}; use the rematched monotone rule"
        )));
    }
    let n = params.n();
    let mut out = pair.clone();
    out.rule = CouplingRule::TwoCoordClosing;
    let mut perm_x: Vec<usize> = (0..n).collect();
    let mut perm_t: Vec<usize> = (0..n).collect();
    let mut r = r0;
    let mut r_trace = Vec::with_capacity(params.k() + 1);
    r_trace.push(r);
    let mut stop_events = 0;
    let mut candidates = Vec::with_capacity(n);
    let reference = &pair.reference;
    let u_delta = |v: usize, old: i8, new: i8| -> i64 {
        if reference.spin(v) == 1 {
            (new == 1) as i64 - (old == 1) as i64
        } else {
            0
        }
    };
    for i in 0..params.k() {
        let jx = i + rng.index(n - i);
        perm_x.swap(i, jx);
        let vx = perm_x[i];
        let spin = out.x.spin(vx);
        if out.rule == CouplingRule::TwoCoordClosing {
            candidates.clear();
            candidates.extend((i..n).filter(|&j| out.x_tilde.spin(perm_t[j]) == spin));
        }
        if out.rule == CouplingRule::TwoCoordClosing && !candidates.is_empty() {
            let jt = candidates[rng.index(candidates.len())];
            perm_t.swap(i, jt);
            let vt = perm_t[i];
            let u = rng.uniform();
            let new = if u <= params.plus_probability(out.x.plus_count(), spin) { 1 } else { -1 };
            r -= u_delta(vx, spin, new);
            r += u_delta(vt, spin, new);
            out.x.set_spin(vx, new);
            out.x_tilde.set_spin(vt, new);
        } else {
            if out.rule == CouplingRule::TwoCoordClosing {
                stop_events += 1;
                out.rule = CouplingRule::Independent;
            }
            let jt = i + rng.index(n - i);
            perm_t.swap(i, jt);
            let vt = perm_t[i];
            let old_t = out.x_tilde.spin(vt);
            let ux = rng.uniform();
            let ut = rng.uniform();
            let new_x = if ux <= params.plus_probability(out.x.plus_count(), spin) { 1 } else { -1 };
            let new_t = if ut <= params.plus_probability(out.x_tilde.plus_count(), old_t) { 1 } else { -1 };
            r -= u_delta(vx, spin, new_x);
            r += u_delta(vt, old_t, new_t);
            out.x.set_spin(vx, new_x);
            out.x_tilde.set_spin(vt, new_t);
        }
        r_trace.push(r);
    }
    out.time += 1;
    debug_assert_eq!(r, out.r_value());
    let stats = out.stats(stop_events, r_trace);
    Ok((out, stats))
}

/// One step under the pair's current rule. Monotone rules rematch first:
/// by spin for `RematchedMonotone`; `GrandMonotone` keeps its matching.
pub fn coupled_step(params: &ModelParams, pair: &CoupledPair, rng: &mut RngStream) -> Result<(CoupledPair, CouplingStats)> {
    match pair.rule {
        CouplingRule::GrandMonotone => matched_monotone_step(params, pair, rng),
        CouplingRule::RematchedMonotone => rematched_monotone_step(params, pair, rng),
        CouplingRule::Independent => independent_step(params, pair, rng),
        CouplingRule::TwoCoordClosing => two_coord_closing_step(params, pair, rng),
    }
}

/// First step at which the grand-coupled chains from all-plus and all-minus
/// agree, or `None` if they have not met by `t_max`.
pub fn coalescence_time(params: &ModelParams, rng: &mut RngStream, t_max: u64) -> Result<Option<u64>> {
    if params.mode() != Mode::Standard {
        return Err(Error::Precondition("coalescence_time requires standard mode".into()));
    }
    let n = params.n();
    let mut top = SpinConfig::all_plus(n);
    let mut bottom = SpinConfig::all_minus(n);
    let mut sampler = ScanSampler::new(n);
    let mut uniforms = Vec::with_capacity(params.k());
    for t in 1..=t_max {
        let order = draw_scan(params, &mut sampler, rng, &mut uniforms);
        apply_scan(params, &mut top, &order, &uniforms);
        apply_scan(params, &mut bottom, &order, &uniforms);
        // top >= bottom coordinatewise, so equal counts mean equal configurations.
        if top.plus_count() == bottom.plus_count() {
            debug_assert_eq!(top, bottom);
            return Ok(Some(t));
        }
    }
    Ok(None)
}
