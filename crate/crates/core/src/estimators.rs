//! Monte Carlo estimators built on the sampler: exit times, hitting
//! probabilities, harmonic functions, killed Green operators and the
//! Lévy-system residual.
//!
//! All reductions run sequentially in path-index order, so results do not
//! depend on the worker count.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryData, ModelSpec, Region};
use crate::sampler::{par_map, run_path, Outcome, PathEnd, PathObserver, RegimeMode, SamplerConfig, StopRule};

const TRUNCATION_WARN: f64 = 0.01;
/// Fewer quadrature nodes per dimension than this triggers a warning.
pub const MIN_QUADRATURE_NODES: usize = 8;
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub truncated_fraction: f64,
    /// Not serialized, so output files stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EstimateResult {
    fn from_samples(values: &[f64], cfg: &SamplerConfig, truncated: usize, started: Instant) -> Self {
        let (value, stderr) = mean_stderr(values);
        let n = values.len();
        let truncated_fraction = if n == 0 { 0.0 } else { truncated as f64 / n as f64 };
        let mut warnings = Vec::new();
        if truncated_fraction > TRUNCATION_WARN {
            warnings.push(format!(
                "{:.2}% of paths reached t_max = {} without stopping",
                100.0 * truncated_fraction,
                cfg.t_max
            ));
        }
        Self {
            value,
            stderr,
            n_paths: n,
            seed: cfg.seed,
            h: cfg.step,
            warnings,
            truncated_fraction,
            wall_time: started.elapsed(),
        }
    }

    /// `|value - target| / stderr`, infinite when the standard error vanishes and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            diff / self.stderr
        }
    }

    pub fn within(&self, target: f64, bands: f64) -> bool {
        (self.value - target).abs() <= bands * self.stderr
    }
}

/// Sample mean and standard error of the mean, summed in index order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

fn require_paths(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Usage("need at least one path".into()))
    } else {
        Ok(())
    }
}

fn require_inside(region: &Region, x: &[f64], what: &str) -> Result<()> {
    if region.contains(x) {
        Ok(())
    } else {
        Err(Error::Usage(format!("{what} {x:?} is not inside the region")))
    }
}

fn check_start(spec: &ModelSpec, x: &[f64], i: usize, cfg: &SamplerConfig) -> Result<()> {
    cfg.check()?;
    if x.len() != spec.dim() {
        return Err(Error::Structural(format!(
            "point {x:?} has dimension {} but d = {}",
            x.len(),
            spec.dim()
        )));
    }
    if i >= spec.regimes() {
        return Err(Error::Usage(format!("regime {} outside 1..={}", i + 1, spec.regimes())));
    }
    Ok(())
}

/// Exit samples `(tau, exit state)` from `D`, paths `0..n`. Killed paths end at their lifetime.
pub fn sample_exits(
    spec: &ModelSpec,
    region: &Region,
    x0: &[f64],
    i0: usize,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<Vec<PathEnd>> {
    check_start(spec, x0, i0, cfg)?;
    region.check(spec.dim(), "region")?;
    let stop = StopRule::Exit {
        region: region.clone(),
    };
    par_map(n, cfg.workers, |p| {
        run_path(spec, x0, i0, &stop, cfg, RegimeMode::Switching, 0, p, &mut ())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    /// Empirical `P(tau <= t)`.
    pub p: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeEstimate {
    pub mean: EstimateResult,
    pub tail: Vec<TailPoint>,
    pub killed_fraction: f64,
}

fn binomial(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Mean exit time of `D` from `(x0, i0)` and the empirical distribution function at `tail_times`.
pub fn estimate_exit_time(
    spec: &ModelSpec,
    region: &Region,
    x0: &[f64],
    i0: usize,
    cfg: &SamplerConfig,
    n: usize,
    tail_times: &[f64],
) -> Result<ExitTimeEstimate> {
    require_paths(n)?;
    require_inside(region, x0, "initial point")?;
    let started = Instant::now();
    let ends = sample_exits(spec, region, x0, i0, cfg, n)?;
    let taus: Vec<f64> = ends.iter().map(|e| e.time).collect();
    let truncated = ends.iter().filter(|e| e.truncated()).count();
    let killed = ends.iter().filter(|e| e.killed()).count();
    let tail = tail_times
        .iter()
        .map(|&t| {
            let (p, stderr) = binomial(taus.iter().filter(|&&tau| tau <= t).count(), n);
            TailPoint { t, p, stderr }
        })
        .collect();
    Ok(ExitTimeEstimate {
        mean: EstimateResult::from_samples(&taus, cfg, truncated, started),
        tail,
        killed_fraction: killed as f64 / n as f64,
    })
}

/// Probability of entering the closed set `target` (in `target_regime`, if
/// given) before leaving `container`. Binomial standard error.
#[allow(clippy::too_many_arguments)]
pub fn estimate_hitting_prob(
    spec: &ModelSpec,
    target: &Region,
    target_regime: Option<usize>,
    container: &Region,
    x0: &[f64],
    i0: usize,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<EstimateResult> {
    require_paths(n)?;
    check_start(spec, x0, i0, cfg)?;
    require_inside(container, x0, "initial point")?;
    let started = Instant::now();
    let stop = StopRule::Hit {
        target: target.clone(),
        regime: target_regime,
        container: container.clone(),
    };
    let ends = par_map(n, cfg.workers, |p| {
        run_path(spec, x0, i0, &stop, cfg, RegimeMode::Switching, 0, p, &mut ())
    })?;
    let hits: Vec<f64> = ends
        .iter()
        .map(|e| if e.outcome == Outcome::Hit { 1.0 } else { 0.0 })
        .collect();
    let truncated = ends.iter().filter(|e| e.truncated()).count();
    let mut r = EstimateResult::from_samples(&hits, cfg, truncated, started);
    let (p, se) = binomial(hits.iter().filter(|&&v| v > 0.0).count(), n);
    r.value = p;
    r.stderr = se;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEstimate {
    /// One estimate per query, in query order.
    pub estimates: Vec<EstimateResult>,
    pub killed_fraction: Vec<f64>,
    /// Largest single-path value `phi(X_tau, Λ_tau)` seen over all queries.
    pub max_path_value: f64,
    /// Largest single-path value per query.
    pub path_max: Vec<f64>,
    /// Paths whose value exceeded the declared bound `M` (must be zero).
    pub bound_violations: usize,
}

/// Path values `phi(X_tau, Λ_tau)` (0 when killed or truncated) for one query.
pub(crate) fn harmonic_path_values(
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    x: &[f64],
    i: usize,
    point: u64,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<(Vec<f64>, usize, usize)> {
    let stop = StopRule::Exit {
        region: region.clone(),
    };
    let ends = par_map(n, cfg.workers, |p| {
        run_path(spec, x, i, &stop, cfg, RegimeMode::Switching, point, p, &mut ())
    })?;
    let mut killed = 0;
    let mut truncated = 0;
    let values = ends
        .iter()
        .map(|e| match (e.outcome, e.regime) {
            (Outcome::Exited, Some(j)) => phi.eval(&e.x, j),
            (Outcome::Killed, _) => {
                killed += 1;
                0.0
            }
            _ => {
                truncated += 1;
                0.0
            }
        })
        .collect();
    Ok((values, killed, truncated))
}

/// `u(x, i) = E_{x,i}[phi(X_tau, Λ_tau)]` at each query; killed paths contribute 0.
/// Query `q` uses stream point `q`.
pub fn estimate_harmonic(
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    queries: &[(Vec<f64>, usize)],
    cfg: &SamplerConfig,
    n: usize,
) -> Result<HarmonicEstimate> {
    require_paths(n)?;
    region.check(spec.dim(), "region")?;
    phi.check(spec.dim(), spec.regimes())?;
    let mut out = HarmonicEstimate {
        estimates: Vec::with_capacity(queries.len()),
        killed_fraction: Vec::with_capacity(queries.len()),
        max_path_value: f64::NEG_INFINITY,
        path_max: Vec::with_capacity(queries.len()),
        bound_violations: 0,
    };
    for (q, (x, i)) in queries.iter().enumerate() {
        check_start(spec, x, *i, cfg)?;
        require_inside(region, x, "query point")?;
        let started = Instant::now();
        let (values, killed, truncated) =
            harmonic_path_values(spec, region, phi, x, *i, q as u64, cfg, n)?;
        let mut top = f64::NEG_INFINITY;
        for &v in &values {
            top = top.max(v);
            if v > phi.bound() {
                out.bound_violations += 1;
            }
        }
        out.max_path_value = out.max_path_value.max(top);
        out.path_max.push(top);
        out.estimates
            .push(EstimateResult::from_samples(&values, cfg, truncated, started));
        out.killed_fraction.push(killed as f64 / n as f64);
    }
    Ok(out)
}

struct GreenAccumulator<'a, F> {
    f: &'a F,
    total: f64,
}

impl<F: Fn(&[f64]) -> f64> PathObserver for GreenAccumulator<'_, F> {
    fn interval(&mut self, _t: f64, dt: f64, x: &[f64], _regime: usize, weight: f64) {
        self.total += weight * (self.f)(x) * dt;
    }
}

/// `G_D^i f(x) = E_x ∫_0^{tau_D} exp(∫_0^s q_ii(X^i_r) dr) f(X^i_s) ds` for the
/// single-regime process in regime `i`, by left-endpoint rectangles.
pub fn estimate_green<F>(
    spec: &ModelSpec,
    i: usize,
    region: &Region,
    f: &F,
    x: &[f64],
    cfg: &SamplerConfig,
    n: usize,
) -> Result<EstimateResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    require_paths(n)?;
    check_start(spec, x, i, cfg)?;
    region.check(spec.dim(), "region")?;
    require_inside(region, x, "query point")?;
    let started = Instant::now();
    let stop = StopRule::Exit {
        region: region.clone(),
    };
    let rows = par_map(n, cfg.workers, |p| {
        let mut acc = GreenAccumulator { f, total: 0.0 };
        let end = run_path(spec, x, i, &stop, cfg, RegimeMode::Frozen, 0, p, &mut acc);
        (acc.total, end.truncated())
    })?;
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let truncated = rows.iter().filter(|r| r.1).count();
    Ok(EstimateResult::from_samples(&values, cfg, truncated, started))
}

/// Distance between two regions (exact for ball/ball, box/box and ball/box).
pub fn region_distance(a: &Region, b: &Region) -> f64 {
    match (a, b) {
        (Region::Ball { center: c1, radius: r1 }, Region::Ball { center: c2, radius: r2 }) => {
            let d: f64 = c1.iter().zip(c2).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            (d - r1 - r2).max(0.0)
        }
        (Region::Box { lo: l1, hi: h1 }, Region::Box { lo: l2, hi: h2 }) => {
            let mut s = 0.0;
            for k in 0..l1.len() {
                let gap = (l2[k] - h1[k]).max(l1[k] - h2[k]).max(0.0);
                s += gap * gap;
            }
            s.sqrt()
        }
        (Region::Ball { center, radius }, bx @ Region::Box { .. })
        | (bx @ Region::Box { .. }, Region::Ball { center, radius }) => {
            let mut near = vec![0.0; center.len()];
            (bx.distance_to_closure(center, &mut near) - radius).max(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyResidual {
    /// Jump count minus compensator, per path.
    pub residual: EstimateResult,
    pub jumps: EstimateResult,
    pub compensator: EstimateResult,
    pub nodes: usize,
}

struct LevyObserver<'a> {
    spec: &'a ModelSpec,
    a: &'a Region,
    b: &'a Region,
    regime: usize,
    nodes: usize,
    jumps: f64,
    compensator: f64,
}

impl PathObserver for LevyObserver<'_> {
    fn interval(&mut self, _t: f64, dt: f64, x: &[f64], regime: usize, _weight: f64) {
        if regime != self.regime || !self.a.contains_closed(x) {
            return;
        }
        let mass: f64 = self
            .spec
            .kernels(regime)
            .iter()
            .map(|k| k.mass_into(x, self.b, self.nodes))
            .sum();
        self.compensator += mass * dt;
    }

    fn jump(&mut self, _t: f64, from: &[f64], to: &[f64], regime: usize) {
        if regime == self.regime && self.a.contains_closed(from) && self.b.contains_closed(to) {
            self.jumps += 1.0;
        }
    }
}

/// `E[#{s <= t: X_{s-} in A, X_s in B, Λ_s = i0}] - E[∫_0^t 1_A(X_s) 1_{i0}(Λ_s) π(X_s, B - X_s) ds]`
/// on shared paths from `(x0, i_init)`; the kernel mass is integrated by the
/// midpoint rule with `nodes` points per dimension.
#[allow(clippy::too_many_arguments)]
pub fn levy_system_residual(
    spec: &ModelSpec,
    a: &Region,
    b: &Region,
    i0: usize,
    horizon: f64,
    x0: &[f64],
    i_init: usize,
    cfg: &SamplerConfig,
    n: usize,
    nodes: usize,
) -> Result<LevyResidual> {
    require_paths(n)?;
    check_start(spec, x0, i_init, cfg)?;
    if i0 >= spec.regimes() {
        return Err(Error::Usage(format!("regime {} outside 1..={}", i0 + 1, spec.regimes())));
    }
    a.check(spec.dim(), "levy.a")?;
    b.check(spec.dim(), "levy.b")?;
    if region_distance(a, b) <= 0.0 {
        return Err(Error::Usage("sets A and B must be a positive distance apart".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Usage("horizon must be positive".into()));
    }
    if nodes == 0 {
        return Err(Error::Usage("quadrature needs at least one node".into()));
    }
    let started = Instant::now();
    let stop = StopRule::Horizon { t: horizon };
    let rows = par_map(n, cfg.workers, |p| {
        let mut obs = LevyObserver {
            spec,
            a,
            b,
            regime: i0,
            nodes,
            jumps: 0.0,
            compensator: 0.0,
        };
        run_path(spec, x0, i_init, &stop, cfg, RegimeMode::Switching, 0, p, &mut obs);
        (obs.jumps, obs.compensator)
    })?;
    let jumps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let comp: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let resid: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();

    let mut warnings = Vec::new();
    if nodes < MIN_QUADRATURE_NODES {
        warnings.push(format!(
            "compensator quadrature uses {nodes} nodes per dimension (< {MIN_QUADRATURE_NODES})"
        ));
    }
    let (blo, bhi) = b.bounding_box();
    let cell = blo
        .iter()
        .zip(&bhi)
        .map(|(l, h)| (h - l) / nodes as f64)
        .fold(0.0, f64::max);
    for k in spec.kernels(i0) {
        let (slo, shi) = k.density.support_box(spec.dim());
        let width = slo.iter().zip(&shi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min);
        if cell > width / MIN_QUADRATURE_NODES as f64 {
            warnings.push(format!(
                "quadrature cell {cell:.3e} is coarse relative to the kernel support width {width:.3e}"
            ));
            break;
        }
    }
    let mut residual = EstimateResult::from_samples(&resid, cfg, 0, started);
    residual.warnings.extend(warnings);
    Ok(LevyResidual {
        residual,
        jumps: EstimateResult::from_samples(&jumps, cfg, 0, started),
        compensator: EstimateResult::from_samples(&comp, cfg, 0, started),
        nodes,
    })
}

/// One line of the estimate record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub label: String,
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub h: f64,
    pub model_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimateRecord {
    pub fn new(label: impl Into<String>, r: &EstimateResult, model_hash: &str) -> Self {
        Self {
            label: label.into(),
            value: r.value,
            stderr: r.stderr,
            n: r.n_paths,
            seed: r.seed,
            h: r.h,
            model_hash: model_hash.to_string(),
            warnings: r.warnings.clone(),
        }
    }
}

/// Writes one JSON object per line.
pub fn write_records<W: Write>(out: &mut W, records: &[EstimateRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
