//! Path sampling for `(X_t, Λ_t)`.
//!
//! Each step of length `h` applies, in order: an Euler diffusion step with
//! covariance `2 a(x, i) h`, at most one thinned jump, and at most one
//! uniformized switching/killing event. Exits are detected either on the grid
//! or, by default, with a Brownian-bridge crossing test inside each step.
//!
//! A path is a pure function of `(spec, init, stop rule, seed, domain, point,
//! path index)`; see [`crate::rng`].

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Region};
use crate::rng::StreamKey;

/// Crossing probabilities below this are treated as zero (no draw is made).
const NEGLIGIBLE_CROSSING: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopRule {
    Horizon { t: f64 },
    Exit { region: Region },
    /// First entrance into the closed set `target` (in `regime`, if given)
    /// before leaving `container`.
    Hit {
        target: Region,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        regime: Option<usize>,
        container: Region,
    },
    FirstSwitch,
}

impl StopRule {
    fn check(&self, spec: &ModelSpec) -> Result<()> {
        let d = spec.dim();
        match self {
            StopRule::Horizon { t } => {
                if !(t.is_finite() && *t >= 0.0) {
                    return Err(Error::config("stop.t", "horizon must be finite and >= 0"));
                }
            }
            StopRule::Exit { region } => region.check(d, "stop.region")?,
            StopRule::Hit {
                target,
                regime,
                container,
            } => {
                target.check(d, "stop.target")?;
                container.check(d, "stop.container")?;
                if regime.is_some_and(|r| r >= spec.regimes()) {
                    return Err(Error::Usage("target regime out of range".into()));
                }
            }
            StopRule::FirstSwitch => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitDetection {
    /// Exit when a grid point lands outside the region.
    Discrete,
    /// Also test for excursions between grid points and stop on the boundary.
    #[default]
    Bridge,
}

/// `Switching` runs the full process; `Frozen` keeps the initial regime and
/// carries the Feynman–Kac weight `exp(∫ q_ii(X_s) ds)` instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeMode {
    #[default]
    Switching,
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub step: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Separates independent uses of one seed (e.g. two estimators that must not share paths).
    #[serde(default)]
    pub domain: u64,
    /// Worker threads; affects wall time only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub exit_detection: ExitDetection,
}

impl SamplerConfig {
    pub fn new(step: f64, t_max: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            step,
            t_max,
            seed,
            domain: 0,
            workers: None,
            exit_detection: ExitDetection::Bridge,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::config("sampler.step", "must be positive"));
        }
        if !(self.t_max.is_finite() && self.t_max >= self.step) {
            return Err(Error::config("sampler.t_max", "must be finite and at least the step"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("sampler.workers", "must be positive"));
        }
        Ok(())
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_domain(mut self, domain: u64) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_exit_detection(mut self, mode: ExitDetection) -> Self {
        self.exit_detection = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn key(&self, point: u64) -> StreamKey {
        StreamKey::new(self.seed, self.domain, point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Diffuse,
    Jump,
    Switch,
    Kill,
    Stop,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Diffuse => "diffuse",
            EventKind::Jump => "jump",
            EventKind::Switch => "switch",
            EventKind::Kill => "kill",
            EventKind::Stop => "stop",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: Vec<f64>,
    /// `None` is the cemetery.
    pub regime: Option<usize>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Horizon,
    Exited,
    Hit,
    Switched,
    Killed,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnd {
    pub time: f64,
    pub x: Vec<f64>,
    pub regime: Option<usize>,
    pub outcome: Outcome,
    /// Feynman–Kac weight at the stopping time (always 1 in switching mode).
    pub weight: f64,
}

impl PathEnd {
    pub fn killed(&self) -> bool {
        self.outcome == Outcome::Killed
    }

    pub fn truncated(&self) -> bool {
        self.outcome == Outcome::Truncated
    }
}

/// Hooks into the step loop. All methods default to no-ops.
pub trait PathObserver {
    /// A time slice `[t, t + dt)` with its left-endpoint state and weight.
    fn interval(&mut self, _t: f64, _dt: f64, _x: &[f64], _regime: usize, _weight: f64) {}
    /// An accepted jump `from -> to` at time `t`, before any switch in that step.
    fn jump(&mut self, _t: f64, _from: &[f64], _to: &[f64], _regime: usize) {}
    fn event(&mut self, _t: f64, _x: &[f64], _regime: Option<usize>, _kind: EventKind) {}
}

impl PathObserver for () {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: (Vec<f64>, usize),
    /// Event times are nondecreasing; the events of one step share its end time.
    pub events: Vec<Event>,
    pub killed: bool,
    pub truncated: bool,
    pub end: PathEnd,
}

#[derive(Default)]
struct Recorder {
    events: Vec<Event>,
    skip_diffuse: bool,
}

impl PathObserver for Recorder {
    fn event(&mut self, t: f64, x: &[f64], regime: Option<usize>, kind: EventKind) {
        if self.skip_diffuse && kind == EventKind::Diffuse {
            return;
        }
        self.events.push(Event {
            t,
            x: x.to_vec(),
            regime,
            kind,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchOutcome {
    Stay,
    Switch(usize),
    Kill,
}

/// Reusable per-path buffers.
struct Workspace {
    drift: Vec<f64>,
    scratch: Vec<f64>,
    xi: Vec<f64>,
    normal: Vec<f64>,
    z: Vec<f64>,
    near: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            scratch: vec![0.0; d],
            xi: vec![0.0; d],
            normal: vec![0.0; d],
            z: vec![0.0; d],
            near: vec![0.0; d],
        }
    }
}

fn diffuse_into<R: Rng + ?Sized>(
    spec: &ModelSpec,
    x: &[f64],
    i: usize,
    dt: f64,
    rng: &mut R,
    ws: &mut Workspace,
    out: &mut [f64],
) {
    spec.effective_drift(x, i, &mut ws.drift, &mut ws.scratch);
    for v in ws.xi.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for ((o, a), b) in out.iter_mut().zip(x).zip(&ws.drift) {
        *o = a + b * dt;
    }
    spec.add_diffusion_increment(x, i, &ws.xi, dt.sqrt(), out);
}

fn jump_into<R: Rng + ?Sized>(spec: &ModelSpec, x: &[f64], i: usize, dt: f64, rng: &mut R, z: &mut [f64]) -> bool {
    let total = spec.total_intensity(i);
    if total <= 0.0 {
        return false;
    }
    if rng.random::<f64>() >= -(-total * dt).exp_m1() {
        return false;
    }
    let kernels = spec.kernels(i);
    let kernel = if kernels.len() == 1 {
        &kernels[0]
    } else {
        let mut u = rng.random::<f64>() * total;
        let mut pick = &kernels[kernels.len() - 1];
        for k in kernels {
            if u < k.intensity {
                pick = k;
                break;
            }
            u -= k.intensity;
        }
        pick
    };
    kernel.propose(x, rng, z)
}

/// One Euler step: `x + b_eff(x, i) h + sqrt(2 a(x, i) h) N(0, I)`.
pub fn diffuse_step<R: Rng + ?Sized>(spec: &ModelSpec, x: &[f64], i: usize, h: f64, rng: &mut R) -> Vec<f64> {
    let mut ws = Workspace::new(spec.dim());
    let mut out = vec![0.0; spec.dim()];
    diffuse_into(spec, x, i, h, rng, &mut ws, &mut out);
    out
}

/// At most one thinned jump over a step of length `h`.
pub fn sample_jump<R: Rng + ?Sized>(spec: &ModelSpec, x: &[f64], i: usize, h: f64, rng: &mut R) -> Option<Vec<f64>> {
    let mut z = vec![0.0; spec.dim()];
    jump_into(spec, x, i, h, rng, &mut z).then_some(z)
}

/// Uniformized switching over a step of length `h`. No draws are made when `Q_max = 0`.
pub fn switch_event<R: Rng + ?Sized>(spec: &ModelSpec, x: &[f64], i: usize, h: f64, rng: &mut R) -> SwitchOutcome {
    let qmax = spec.q_max();
    if qmax <= 0.0 || !spec.has_switching() {
        return SwitchOutcome::Stay;
    }
    if rng.random::<f64>() >= -(-qmax * h).exp_m1() {
        return SwitchOutcome::Stay;
    }
    let mut u = rng.random::<f64>() * qmax;
    for j in 0..spec.regimes() {
        if j == i {
            continue;
        }
        let q = spec.rate(x, i, j);
        if u < q {
            return SwitchOutcome::Switch(j);
        }
        u -= q;
    }
    if u < spec.killing_rate(x, i) {
        SwitchOutcome::Kill
    } else {
        SwitchOutcome::Stay
    }
}

/// Fraction of the step at which a bridge from gap `g0 > 0` to `g1` first
/// reaches zero, given that it does. `var` is the increment variance along the normal.
fn bridge_crossing_fraction<R: Rng + ?Sized>(g0: f64, g1: f64, var: f64, rng: &mut R) -> f64 {
    if g1 == 0.0 {
        return 1.0;
    }
    if var <= 0.0 {
        return (g0 / (g0 - g1)).clamp(0.0, 1.0);
    }
    let mean = g0 / g1.abs();
    let shape = g0 * g0 / var;
    match InverseGaussian::new(mean, shape) {
        Ok(ig) => {
            let u: f64 = ig.sample(rng);
            (u / (1.0 + u)).clamp(0.0, 1.0)
        }
        Err(_) => 1.0,
    }
}

/// First exit of `region` during a step from `x0` (inside) to `x1`.
/// Returns the step fraction and the exit point.
#[allow(clippy::too_many_arguments)]
fn exit_crossing<R: Rng + ?Sized>(
    spec: &ModelSpec,
    region: &Region,
    x0: &[f64],
    x1: &[f64],
    i: usize,
    dt: f64,
    detection: ExitDetection,
    rng: &mut R,
    ws: &mut Workspace,
) -> Option<(f64, Vec<f64>)> {
    if detection == ExitDetection::Discrete {
        return (!region.contains(x1)).then(|| (1.0, x1.to_vec()));
    }
    let mut best: Option<(f64, usize)> = None;
    for face in 0..region.face_count() {
        let g0 = region.face_gap(face, x0);
        let g1 = region.face_gap(face, x1);
        if !g0.is_finite() {
            continue;
        }
        region.face_normal(face, x0, &mut ws.normal);
        let var = spec.normal_variance(x0, i, &ws.normal) * dt;
        let crossed = if g1 <= 0.0 {
            true
        } else if var <= 0.0 {
            false
        } else {
            let p = (-2.0 * g0 * g1 / var).exp();
            p > NEGLIGIBLE_CROSSING && rng.random::<f64>() < p
        };
        if crossed {
            let s = bridge_crossing_fraction(g0, g1, var, rng);
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, face));
            }
        }
    }
    if best.is_none() && !region.contains(x1) {
        // Outside through a corner or a rounding edge case.
        let mut y = x1.to_vec();
        region.project_outside_point(&mut y);
        return Some((1.0, y));
    }
    best.map(|(s, face)| {
        let mut y: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| a + s * (b - a)).collect();
        region.project_onto_face(face, &mut y);
        (s, y)
    })
}

/// First entrance into the closed `target` during a step from `x0` (outside) to `x1`.
#[allow(clippy::too_many_arguments)]
fn entry_crossing<R: Rng + ?Sized>(
    spec: &ModelSpec,
    target: &Region,
    x0: &[f64],
    x1: &[f64],
    i: usize,
    dt: f64,
    detection: ExitDetection,
    rng: &mut R,
    ws: &mut Workspace,
) -> Option<(f64, Vec<f64>)> {
    if target.contains_closed(x1) {
        return Some((1.0, x1.to_vec()));
    }
    // Bridge entry is only meaningful for targets with interior.
    if detection == ExitDetection::Discrete || target.inradius() <= 0.0 {
        return None;
    }
    let d0 = target.distance_to_closure(x0, &mut ws.near);
    if d0 <= 0.0 || !d0.is_finite() {
        return None;
    }
    for ((n, a), b) in ws.normal.iter_mut().zip(&ws.near).zip(x0) {
        *n = (a - b) / d0;
    }
    let var = spec.normal_variance(x0, i, &ws.normal) * dt;
    if var <= 0.0 {
        return None;
    }
    let d1 = target.distance_to_closure(x1, &mut ws.z);
    let p = (-2.0 * d0 * d1 / var).exp();
    if p <= NEGLIGIBLE_CROSSING || rng.random::<f64>() >= p {
        return None;
    }
    let s = bridge_crossing_fraction(d0, d1, var, rng);
    let y: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| a + s * (b - a)).collect();
    let mut near = vec![0.0; y.len()];
    target.distance_to_closure(&y, &mut near);
    Some((s, near))
}

fn stop_now<O: PathObserver>(
    obs: &mut O,
    time: f64,
    x: &[f64],
    regime: Option<usize>,
    outcome: Outcome,
    weight: f64,
) -> PathEnd {
    let kind = if outcome == Outcome::Killed {
        EventKind::Kill
    } else {
        EventKind::Stop
    };
    obs.event(time, x, regime, kind);
    PathEnd {
        time,
        x: x.to_vec(),
        regime,
        outcome,
        weight,
    }
}

/// Runs one path. Regimes are 0-based. `point` selects the stream family
/// (e.g. the query index) and `path` the path within it.
#[allow(clippy::too_many_arguments)]
pub fn run_path<O: PathObserver>(
    spec: &ModelSpec,
    x0: &[f64],
    i0: usize,
    stop: &StopRule,
    cfg: &SamplerConfig,
    mode: RegimeMode,
    point: u64,
    path: u64,
    obs: &mut O,
) -> PathEnd {
    let d = spec.dim();
    let mut streams = cfg.key(point).path(path);
    let mut ws = Workspace::new(d);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut i = i0;
    let mut weight = 1.0;
    let h = cfg.step;

    let (horizon, truncate_at) = match stop {
        StopRule::Horizon { t } => (Some(*t), cfg.t_max.max(*t)),
        _ => (None, cfg.t_max),
    };
    match stop {
        StopRule::Horizon { t } if *t <= 0.0 => {
            return stop_now(obs, 0.0, &x, Some(i), Outcome::Horizon, weight)
        }
        StopRule::Exit { region } if !region.contains(&x) => {
            return stop_now(obs, 0.0, &x, Some(i), Outcome::Exited, weight)
        }
        StopRule::Hit {
            target,
            regime,
            container,
        } => {
            if target.contains_closed(&x) && regime.is_none_or(|r| r == i) {
                return stop_now(obs, 0.0, &x, Some(i), Outcome::Hit, weight);
            }
            if !container.contains(&x) {
                return stop_now(obs, 0.0, &x, Some(i), Outcome::Exited, weight);
            }
        }
        _ => {}
    }

    let mut k: u64 = 0;
    let mut t = 0.0;
    loop {
        let end = horizon.unwrap_or(f64::INFINITY).min(truncate_at);
        if t >= end {
            let outcome = if horizon.is_some_and(|hz| t >= hz) {
                Outcome::Horizon
            } else {
                Outcome::Truncated
            };
            return stop_now(obs, t, &x, Some(i), outcome, weight);
        }
        let t_next = ((k + 1) as f64 * h).min(end);
        let dt = t_next - t;

        diffuse_into(spec, &x, i, dt, &mut streams.diffusion, &mut ws, &mut next);

        // Continuous-part stopping inside the step.
        let mut stopped: Option<(f64, Vec<f64>, Outcome)> = None;
        match stop {
            StopRule::Exit { region } => {
                if let Some((s, y)) = exit_crossing(
                    spec,
                    region,
                    &x,
                    &next,
                    i,
                    dt,
                    cfg.exit_detection,
                    &mut streams.bridge,
                    &mut ws,
                ) {
                    stopped = Some((s, y, Outcome::Exited));
                }
            }
            StopRule::Hit {
                target,
                regime,
                container,
            } => {
                let exit = exit_crossing(
                    spec,
                    container,
                    &x,
                    &next,
                    i,
                    dt,
                    cfg.exit_detection,
                    &mut streams.bridge,
                    &mut ws,
                );
                let hit = if regime.is_none_or(|r| r == i) {
                    entry_crossing(
                        spec,
                        target,
                        &x,
                        &next,
                        i,
                        dt,
                        cfg.exit_detection,
                        &mut streams.bridge,
                        &mut ws,
                    )
                } else {
                    None
                };
                stopped = match (hit, exit) {
                    (Some((sh, yh)), Some((se, _))) if sh <= se => Some((sh, yh, Outcome::Hit)),
                    (Some((sh, yh)), None) => Some((sh, yh, Outcome::Hit)),
                    (_, Some((se, ye))) => Some((se, ye, Outcome::Exited)),
                    (None, None) => None,
                };
            }
            _ => {}
        }

        let dt_eff = stopped.as_ref().map_or(dt, |(s, _, _)| s * dt);
        obs.interval(t, dt_eff, &x, i, weight);
        if mode == RegimeMode::Frozen {
            let q = spec.rate(&x, i, i);
            if q != 0.0 {
                weight *= (q * dt_eff).exp();
            }
        }
        if let Some((_, y, outcome)) = stopped {
            return stop_now(obs, t + dt_eff, &y, Some(i), outcome, weight);
        }

        std::mem::swap(&mut x, &mut next);
        t = t_next;
        k += 1;
        obs.event(t, &x, Some(i), EventKind::Diffuse);

        if jump_into(spec, &x, i, dt, &mut streams.jump, &mut ws.z) {
            for ((n, a), b) in next.iter_mut().zip(&x).zip(&ws.z) {
                *n = a + b;
            }
            obs.jump(t, &x, &next, i);
            std::mem::swap(&mut x, &mut next);
            obs.event(t, &x, Some(i), EventKind::Jump);
            match stop {
                StopRule::Exit { region } if !region.contains(&x) => {
                    return stop_now(obs, t, &x, Some(i), Outcome::Exited, weight)
                }
                StopRule::Hit {
                    target,
                    regime,
                    container,
                } => {
                    if target.contains_closed(&x) && regime.is_none_or(|r| r == i) {
                        return stop_now(obs, t, &x, Some(i), Outcome::Hit, weight);
                    }
                    if !container.contains(&x) {
                        return stop_now(obs, t, &x, Some(i), Outcome::Exited, weight);
                    }
                }
                _ => {}
            }
        }

        if mode == RegimeMode::Switching {
            match switch_event(spec, &x, i, dt, &mut streams.switch) {
                SwitchOutcome::Stay => {}
                SwitchOutcome::Kill => {
                    return stop_now(obs, t, &x, None, Outcome::Killed, 0.0);
                }
                SwitchOutcome::Switch(j) => {
                    i = j;
                    obs.event(t, &x, Some(i), EventKind::Switch);
                    match stop {
                        StopRule::FirstSwitch => {
                            return stop_now(obs, t, &x, Some(i), Outcome::Switched, weight)
                        }
                        StopRule::Hit {
                            target,
                            regime: Some(r),
                            ..
                        } if *r == i && target.contains_closed(&x) => {
                            return stop_now(obs, t, &x, Some(i), Outcome::Hit, weight)
                        }
                        _ => {}
                    }
                }
            }
        }
    }
}

fn check_inputs(spec: &ModelSpec, x0: &[f64], i0: usize, stop: &StopRule, cfg: &SamplerConfig) -> Result<()> {
    cfg.check()?;
    if x0.len() != spec.dim() {
        return Err(Error::Structural(format!(
            "initial point has dimension {} but the model has d = {}",
            x0.len(),
            spec.dim()
        )));
    }
    if i0 >= spec.regimes() {
        return Err(Error::Usage(format!(
            "initial regime {} outside 1..={}",
            i0 + 1,
            spec.regimes()
        )));
    }
    stop.check(spec)
}

/// One recorded trajectory (switching mode). Regimes are 0-based.
pub fn sample_path(
    spec: &ModelSpec,
    x0: &[f64],
    i0: usize,
    stop: &StopRule,
    cfg: &SamplerConfig,
    path: u64,
) -> Result<Trajectory> {
    check_inputs(spec, x0, i0, stop, cfg)?;
    Ok(record(spec, x0, i0, stop, cfg, path, false))
}

fn record(
    spec: &ModelSpec,
    x0: &[f64],
    i0: usize,
    stop: &StopRule,
    cfg: &SamplerConfig,
    path: u64,
    events_only: bool,
) -> Trajectory {
    let mut rec = Recorder {
        events: Vec::new(),
        skip_diffuse: events_only,
    };
    let end = run_path(spec, x0, i0, stop, cfg, RegimeMode::Switching, 0, path, &mut rec);
    Trajectory {
        start: (x0.to_vec(), i0),
        events: rec.events,
        killed: end.killed(),
        truncated: end.truncated(),
        end,
    }
}

/// `n` recorded trajectories, paths `0..n`. With `events_only`, diffuse events are omitted.
pub fn sample_paths(
    spec: &ModelSpec,
    x0: &[f64],
    i0: usize,
    stop: &StopRule,
    cfg: &SamplerConfig,
    n: usize,
    events_only: bool,
) -> Result<Vec<Trajectory>> {
    check_inputs(spec, x0, i0, stop, cfg)?;
    par_map(n, cfg.workers, |p| record(spec, x0, i0, stop, cfg, p, events_only))
}

/// Maps `f` over `0..n` on a pool of `workers` threads, preserving index order.
pub fn par_map<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers == Some(1) || n <= 1 {
        return Ok((0..n as u64).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n as u64).into_par_iter().map(f).collect()))
}

/// Tab-separated dump: header `path t x_1 .. x_d regime event`, regimes 1-based, 0 for the cemetery.
pub fn write_dump<W: Write>(out: &mut W, dim: usize, trajectories: &[Trajectory]) -> std::io::Result<()> {
    write!(out, "path\tt")?;
    for k in 1..=dim {
        write!(out, "\tx_{k}")?;
    }
    writeln!(out, "\tregime\tevent")?;
    for (p, tr) in trajectories.iter().enumerate() {
        for e in &tr.events {
            write!(out, "{p}\t{}", e.t)?;
            for v in &e.x {
                write!(out, "\t{v}")?;
            }
            writeln!(out, "\t{}\t{}", e.regime.map_or(0, |r| r + 1), e.kind.as_str())?;
        }
    }
    Ok(())
}
