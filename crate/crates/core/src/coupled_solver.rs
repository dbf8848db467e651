//! Lattice solver for the coupled harmonic system
//!
//! `u(x, i) = v_i(x) + sum_{j != i} G_D^i(q_ij u(., j))(x)`,
//!
//! where `v_i` is the Feynman–Kac-discounted boundary term and `G_D^i` the
//! Green operator of the single-regime process killed at rate `-q_ii`.
//!
//! The Green operator is sampled once per `(node, regime)` as a matrix acting
//! on lattice values (through the interpolation weights), then the fixed point
//! is iterated deterministically. Standard errors come from the per-path
//! covariance of `[boundary term, Green row]` propagated through `(I - G)^-1`.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{harmonic_path_values, mean_stderr, EstimateResult};
use crate::model::{validate_model, BoundaryData, CheckStatus, ModelSpec, Region};
use crate::sampler::{par_map, run_path, Outcome, PathObserver, RegimeMode, SamplerConfig, StopRule};

/// Paths per reduction chunk; fixed so that merged moments do not depend on the worker count.
const CHUNK: usize = 256;
/// Stream domain offset for the direct estimates in [`compare_direct`].
const DIRECT_DOMAIN: u64 = 0xD1_5EC7;
pub const DEFAULT_MAX_ITER: usize = 50;
const MAX_LATTICE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    region: Region,
    spacing: f64,
    origin: Vec<f64>,
    counts: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    /// Dense grid index -> node index.
    slots: Vec<Option<usize>>,
}

/// Regular grid of spacing `s` anchored at the lower corner of `D`'s bounding
/// box, keeping points with `dist(x, D^c) > s/2`, in lexicographic order.
pub fn build_lattice(region: &Region, spacing: f64) -> Result<Lattice> {
    let d = region.dim();
    if d > MAX_LATTICE_DIM {
        return Err(Error::config("lattice", format!("lattices are limited to d <= {MAX_LATTICE_DIM}")));
    }
    if !region.is_bounded() {
        return Err(Error::config("lattice.region", "region must be bounded"));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::config("lattice.spacing", "must be positive"));
    }
    if spacing >= 2.0 * region.inradius() {
        return Err(Error::config(
            "lattice.spacing",
            format!("spacing {spacing} is not below twice the inradius {}", region.inradius()),
        ));
    }
    let (lo, hi) = region.bounding_box();
    let counts: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| ((h - l) / spacing + 1e-9).floor() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let mut slots = vec![None; total];
    let mut nodes = Vec::new();
    let mut idx = vec![0usize; d];
    for slot in slots.iter_mut() {
        let x: Vec<f64> = (0..d).map(|k| lo[k] + idx[k] as f64 * spacing).collect();
        if region.contains(&x) && region.boundary_distance(&x) > spacing / 2.0 {
            *slot = Some(nodes.len());
            nodes.push(x);
        }
        // Last coordinate fastest: first coordinate is most significant.
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    if nodes.is_empty() {
        return Err(Error::config("lattice.spacing", "the lattice has no nodes"));
    }
    Ok(Lattice {
        region: region.clone(),
        spacing,
        origin: lo,
        counts,
        nodes,
        slots,
    })
}

impl Lattice {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn slot(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (k, &i) in idx.iter().enumerate() {
            if i < 0 || i as usize >= self.counts[k] {
                return None;
            }
            flat = flat * self.counts[k] + i as usize;
        }
        self.slots[flat]
    }

    /// Multilinear interpolation weights at `x` as `(node, weight)` pairs
    /// summing to one. Corners that are not nodes are dropped and the rest
    /// renormalized; with no corner node the nearest node gets weight one.
    /// The flag reports whether any corner was missing.
    pub fn weights(&self, x: &[f64], out: &mut Vec<(usize, f64)>) -> bool {
        out.clear();
        let d = x.len();
        let mut base = [0i64; MAX_LATTICE_DIM];
        let mut frac = [0f64; MAX_LATTICE_DIM];
        for k in 0..d {
            let u = (x[k] - self.origin[k]) / self.spacing;
            let mut c = u.floor();
            let mut f = u - c;
            if f > 1.0 - 1e-9 {
                c += 1.0;
                f = 0.0;
            }
            base[k] = c as i64;
            frac[k] = f;
        }
        let mut total = 0.0;
        let mut missing = false;
        let mut idx = [0i64; MAX_LATTICE_DIM];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                idx[k] = base[k] + up as i64;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
            }
            if w == 0.0 {
                continue;
            }
            match self.slot(&idx[..d]) {
                Some(node) => {
                    out.push((node, w));
                    total += w;
                }
                None => missing = true,
            }
        }
        if out.is_empty() {
            let nearest = self
                .nodes
                .iter()
                .enumerate()
                .map(|(n, y)| (n, y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
                .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
            out.push((nearest.0, 1.0));
            return true;
        }
        if missing {
            for (_, w) in out.iter_mut() {
                *w /= total;
            }
        }
        missing
    }

    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let mut w = Vec::with_capacity(1 << x.len());
        self.weights(x, &mut w);
        w.iter().map(|&(n, c)| c * values[n]).sum()
    }
}

/// Values on `(node, regime)` pairs, node-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub lattice: Lattice,
    /// Regimes stored (0-based), in order.
    pub regimes: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

impl LatticeField {
    pub fn new(lattice: Lattice, regimes: Vec<usize>, values: Vec<f64>, stderr: Option<Vec<f64>>) -> Result<Self> {
        let n = lattice.len() * regimes.len();
        if values.len() != n || stderr.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::Structural(format!(
                "lattice field needs {n} values ({} nodes x {} regimes)",
                lattice.len(),
                regimes.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("lattice field values must be finite".into()));
        }
        Ok(Self {
            lattice,
            regimes,
            values,
            stderr,
        })
    }

    fn slot(&self, regime: usize) -> usize {
        self.regimes
            .iter()
            .position(|&r| r == regime)
            .unwrap_or_else(|| panic!("regime {} not stored in this field", regime + 1))
    }

    pub fn get(&self, node: usize, regime: usize) -> f64 {
        self.values[node * self.regimes.len() + self.slot(regime)]
    }

    pub fn stderr_at(&self, node: usize, regime: usize) -> Option<f64> {
        let s = self.slot(regime);
        self.stderr.as_ref().map(|e| e[node * self.regimes.len() + s])
    }

    /// Node values of one regime.
    pub fn regime_values(&self, regime: usize) -> Vec<f64> {
        (0..self.lattice.len()).map(|n| self.get(n, regime)).collect()
    }

    pub fn interpolate(&self, x: &[f64], regime: usize) -> f64 {
        self.lattice.interpolate(&self.regime_values(regime), x)
    }

    /// CSV with header `node,x_1..x_d,regime,value,stderr` (regimes 1-based).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "node")?;
        for k in 1..=self.lattice.region.dim() {
            write!(out, ",x_{k}")?;
        }
        writeln!(out, ",regime,value,stderr")?;
        for (n, x) in self.lattice.nodes.iter().enumerate() {
            for (s, &r) in self.regimes.iter().enumerate() {
                let flat = n * self.regimes.len() + s;
                write!(out, "{n}")?;
                for v in x {
                    write!(out, ",{v}")?;
                }
                let se = self.stderr.as_ref().map_or(String::new(), |e| e[flat].to_string());
                writeln!(out, ",{},{},{se}", r + 1, self.values[flat])?;
            }
        }
        Ok(())
    }
}

/// Streaming mean and co-moment matrix (Welford / Chan merges).
#[derive(Debug, Clone)]
struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len * len],
        }
    }

    fn push(&mut self, y: &[f64], delta: &mut [f64]) {
        self.n += 1;
        let len = y.len();
        let inv = 1.0 / self.n as f64;
        for k in 0..len {
            delta[k] = y[k] - self.mean[k];
            self.mean[k] += delta[k] * inv;
        }
        for a in 0..len {
            if delta[a] == 0.0 {
                continue;
            }
            let after = y[a] - self.mean[a];
            for b in 0..len {
                self.m2[a * len + b] += after * delta[b];
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let len = self.mean.len();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for a in 0..len {
            for b in 0..len {
                self.m2[a * len + b] += other.m2[a * len + b] + delta[a] * delta[b] * na * nb / n;
            }
        }
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d * nb / n;
        }
        self.n += other.n;
    }

    /// Sample covariance entry.
    fn cov(&self, a: usize, b: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2[a * self.mean.len() + b] / (self.n - 1) as f64
        }
    }
}

/// Per-path accumulator of `[e(tau) phi(X_tau, i), W_j[k]]` with
/// `W_j[k] = sum e(t) q_ij(X_t) w_k(X_t) dt` (block `j = i` stays zero).
struct RowObserver<'a> {
    spec: &'a ModelSpec,
    lattice: &'a Lattice,
    m: usize,
    y: Vec<f64>,
    rates: Vec<f64>,
    weights: Vec<(usize, f64)>,
    steps: u64,
    extrapolated: u64,
}

impl PathObserver for RowObserver<'_> {
    fn interval(&mut self, _t: f64, dt: f64, x: &[f64], i: usize, weight: f64) {
        self.steps += 1;
        if self.m == 1 {
            return;
        }
        let mut any = false;
        for j in 0..self.m {
            self.rates[j] = if j != i && !self.spec.rate_is_zero(i, j) {
                self.spec.rate(x, i, j)
            } else {
                0.0
            };
            any |= self.rates[j] != 0.0;
        }
        if !any {
            return;
        }
        if self.lattice.weights(x, &mut self.weights) {
            self.extrapolated += 1;
        }
        let k_nodes = self.lattice.len();
        for j in 0..self.m {
            let q = self.rates[j];
            if q == 0.0 {
                continue;
            }
            let scale = weight * q * dt;
            for &(node, w) in &self.weights {
                self.y[1 + j * k_nodes + node] += scale * w;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct RowStats {
    moments: Moments,
    truncated: usize,
    steps: u64,
    extrapolated: u64,
}

struct ChunkOut {
    moments: Moments,
    truncated: usize,
    steps: u64,
    extrapolated: u64,
}

#[allow(clippy::too_many_arguments)]
fn sample_row(
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    lattice: &Lattice,
    node: usize,
    i: usize,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<RowStats> {
    let m = spec.regimes();
    let len = 1 + m * lattice.len();
    let stop = StopRule::Exit {
        region: region.clone(),
    };
    let x0 = &lattice.nodes[node];
    let point = (node * m + i) as u64;
    let chunks = n.div_ceil(CHUNK);
    let outs = par_map(chunks, cfg.workers, |c| {
        let mut out = ChunkOut {
            moments: Moments::new(len),
            truncated: 0,
            steps: 0,
            extrapolated: 0,
        };
        let mut delta = vec![0.0; len];
        let mut obs = RowObserver {
            spec,
            lattice,
            m,
            y: vec![0.0; len],
            rates: vec![0.0; m],
            weights: Vec::with_capacity(8),
            steps: 0,
            extrapolated: 0,
        };
        let start = c as usize * CHUNK;
        for p in start..(start + CHUNK).min(n) {
            obs.y.iter_mut().for_each(|v| *v = 0.0);
            let end = run_path(spec, x0, i, &stop, cfg, RegimeMode::Frozen, point, p as u64, &mut obs);
            obs.y[0] = match end.outcome {
                Outcome::Exited => end.weight * phi.eval(&end.x, i),
                _ => {
                    out.truncated += 1;
                    0.0
                }
            };
            out.moments.push(&obs.y, &mut delta);
        }
        out.steps = obs.steps;
        out.extrapolated = obs.extrapolated;
        out
    })?;
    let mut stats = RowStats {
        moments: Moments::new(len),
        truncated: 0,
        steps: 0,
        extrapolated: 0,
    };
    for o in &outs {
        stats.moments.merge(&o.moments);
        stats.truncated += o.truncated;
        stats.steps += o.steps;
        stats.extrapolated += o.extrapolated;
    }
    Ok(stats)
}

fn check_solver_inputs(spec: &ModelSpec, region: &Region, phi: &BoundaryData, lattice: &Lattice, cfg: &SamplerConfig, n: usize) -> Result<()> {
    cfg.check()?;
    if n == 0 {
        return Err(Error::Usage("need at least one path".into()));
    }
    region.check(spec.dim(), "region")?;
    phi.check(spec.dim(), spec.regimes())?;
    if lattice.region.dim() != spec.dim() {
        return Err(Error::Structural("lattice dimension differs from the model".into()));
    }
    if lattice.nodes.iter().any(|x| !region.contains(x)) {
        return Err(Error::Usage("lattice nodes must lie inside the region".into()));
    }
    Ok(())
}

/// `v_i(x) = E_x[exp(∫_0^tau q_ii(X^i_s) ds) phi(X^i_tau, i)]` at every node.
#[allow(clippy::too_many_arguments)]
pub fn estimate_boundary_term(
    spec: &ModelSpec,
    i: usize,
    region: &Region,
    phi: &BoundaryData,
    lattice: &Lattice,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<LatticeField> {
    check_solver_inputs(spec, region, phi, lattice, cfg, n)?;
    let m = spec.regimes();
    let mut values = Vec::with_capacity(lattice.len());
    let mut errs = Vec::with_capacity(lattice.len());
    let stop = StopRule::Exit {
        region: region.clone(),
    };
    for (node, x) in lattice.nodes.iter().enumerate() {
        let point = (node * m + i) as u64;
        let vals = par_map(n, cfg.workers, |p| {
            let end = run_path(spec, x, i, &stop, cfg, RegimeMode::Frozen, point, p, &mut ());
            match end.outcome {
                Outcome::Exited => end.weight * phi.eval(&end.x, i),
                _ => 0.0,
            }
        })?;
        let (v, se) = mean_stderr(&vals);
        values.push(v);
        errs.push(se);
    }
    LatticeField::new(lattice.clone(), vec![i], values, Some(errs))
}

struct ApplyObserver<'a> {
    spec: &'a ModelSpec,
    lattice: &'a Lattice,
    g: &'a [f64],
    j: usize,
    weights: Vec<(usize, f64)>,
    total: f64,
    extrapolated: u64,
}

impl PathObserver for ApplyObserver<'_> {
    fn interval(&mut self, _t: f64, dt: f64, x: &[f64], i: usize, weight: f64) {
        let q = self.spec.rate(x, i, self.j);
        if q == 0.0 {
            return;
        }
        if self.lattice.weights(x, &mut self.weights) {
            self.extrapolated += 1;
        }
        let g: f64 = self.weights.iter().map(|(n, w)| w * self.g[*n]).sum();
        self.total += weight * q * g * dt;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenApplication {
    pub field: LatticeField,
    /// Steps at which the interpolant was extended by constant extrapolation.
    pub extrapolated_steps: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `G_D^i(q_ij g)(x)` at every node, with `g` the interpolated regime-`j` values of `field`.
#[allow(clippy::too_many_arguments)]
pub fn green_apply(
    spec: &ModelSpec,
    i: usize,
    j: usize,
    region: &Region,
    field: &LatticeField,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<GreenApplication> {
    let lattice = &field.lattice;
    check_solver_inputs(spec, region, &BoundaryData::constant(0.0, spec.regimes()), lattice, cfg, n)?;
    if i >= spec.regimes() || j >= spec.regimes() {
        return Err(Error::Usage("regime out of range".into()));
    }
    let g = field.regime_values(j);
    let m = spec.regimes();
    let stop = StopRule::Exit {
        region: region.clone(),
    };
    let mut values = Vec::with_capacity(lattice.len());
    let mut errs = Vec::with_capacity(lattice.len());
    let mut extrapolated = 0;
    for (node, x) in lattice.nodes.iter().enumerate() {
        let point = (node * m + i) as u64;
        let rows = par_map(n, cfg.workers, |p| {
            let mut obs = ApplyObserver {
                spec,
                lattice,
                g: &g,
                j,
                weights: Vec::with_capacity(8),
                total: 0.0,
                extrapolated: 0,
            };
            run_path(spec, x, i, &stop, cfg, RegimeMode::Frozen, point, p, &mut obs);
            (obs.total, obs.extrapolated)
        })?;
        let vals: Vec<f64> = rows.iter().map(|r| r.0).collect();
        extrapolated += rows.iter().map(|r| r.1).sum::<u64>();
        let (v, se) = mean_stderr(&vals);
        values.push(v);
        errs.push(se);
    }
    let mut warnings = Vec::new();
    if extrapolated > 0 {
        warnings.push(format!(
            "{extrapolated} path steps fell outside the lattice hull and used constant extrapolation"
        ));
    }
    Ok(GreenApplication {
        field: LatticeField::new(lattice.clone(), vec![i], values, Some(errs))?,
        extrapolated_steps: extrapolated,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub u: LatticeField,
    pub v: LatticeField,
    /// Sup-norm of each update `u^(k+1) - u^(k)`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub h: f64,
    /// Fraction of sampled steps that needed constant extrapolation.
    pub extrapolated_fraction: f64,
    pub truncated_fraction: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FixedPointSolution {
    /// Ratios of consecutive update norms.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.trace.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Update norms below this are floating-point noise, not divergence.
const NOISE_FLOOR: f64 = 1e-13;

/// Frozen-Green fixed-point solve. `tol = None` uses `max(1e-3, 3 * median stderr of v)`.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_solve(
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    lattice: &Lattice,
    cfg: &SamplerConfig,
    n: usize,
    max_iter: usize,
    tol: Option<f64>,
) -> Result<FixedPointSolution> {
    check_solver_inputs(spec, region, phi, lattice, cfg, n)?;
    let report = validate_model(spec);
    if let Some(q) = report.check("Q").filter(|c| c.status == CheckStatus::Fail) {
        return Err(Error::Precondition(format!("switching matrix is not sub-Markovian: {}", q.detail)));
    }
    let m = spec.regimes();
    let k = lattice.len();
    let rows_n = k * m;

    let mut rows = Vec::with_capacity(rows_n);
    for node in 0..k {
        for i in 0..m {
            rows.push(sample_row(spec, region, phi, lattice, node, i, cfg, n)?);
        }
    }

    let v: Vec<f64> = rows.iter().map(|r| r.moments.mean[0]).collect();
    let v_se: Vec<f64> = rows
        .iter()
        .map(|r| (r.moments.cov(0, 0) / n as f64).sqrt())
        .collect();
    // G[(x,i), (k,j)] with row/column index node * m + regime.
    let mut g = DMatrix::<f64>::zeros(rows_n, rows_n);
    for (r, row) in rows.iter().enumerate() {
        for j in 0..m {
            for node in 0..k {
                g[(r, node * m + j)] = row.moments.mean[1 + j * k + node];
            }
        }
    }

    let tol = tol.unwrap_or_else(|| {
        let mut s = v_se.clone();
        s.sort_by(f64::total_cmp);
        let median = if s.is_empty() { 0.0 } else { s[s.len() / 2] };
        1e-3f64.max(3.0 * median)
    });
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Usage("tolerance must be positive".into()));
    }

    let vv = nalgebra::DVector::from_column_slice(&v);
    let mut u = vv.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut rising = 0;
    for _ in 0..max_iter.max(1) {
        let next = &vv + &g * &u;
        let norm = (&next - &u).amax();
        u = next;
        if let Some(&prev) = trace.last() {
            if norm >= prev && norm > NOISE_FLOOR {
                rising += 1;
            } else {
                rising = 0;
            }
        }
        trace.push(norm);
        if norm < tol {
            converged = true;
            break;
        }
        if rising >= 3 {
            return Err(Error::Divergence(format!(
                "update norms did not decrease for 3 consecutive iterations: {trace:?}"
            )));
        }
    }

    // Delta method: row r varies as c_r' dy_r with c_r = [1, u]; rows are
    // independent and propagate through M = (I - G)^-1.
    let mut row_var = vec![0.0; rows_n];
    for (r, row) in rows.iter().enumerate() {
        let mut c = vec![0.0; 1 + m * k];
        c[0] = 1.0;
        for j in 0..m {
            for node in 0..k {
                c[1 + j * k + node] = u[node * m + j];
            }
        }
        let len = c.len();
        let mut q = 0.0;
        for a in 0..len {
            if c[a] == 0.0 {
                continue;
            }
            for b in 0..len {
                q += c[a] * row.moments.cov(a, b) * c[b];
            }
        }
        row_var[r] = q.max(0.0) / n as f64;
    }
    let ident = DMatrix::<f64>::identity(rows_n, rows_n);
    let mut warnings = Vec::new();
    let u_se: Vec<f64> = match (ident - &g).try_inverse() {
        Some(minv) => (0..rows_n)
            .map(|a| (0..rows_n).map(|b| minv[(a, b)].powi(2) * row_var[b]).sum::<f64>().sqrt())
            .collect(),
        None => {
            warnings.push("I - G is singular; standard errors ignore the coupling".into());
            row_var.iter().map(|v| v.sqrt()).collect()
        }
    };
    if !converged {
        warnings.push(format!("no convergence to tol = {tol} within {max_iter} iterations"));
    }
    let steps: u64 = rows.iter().map(|r| r.steps).sum();
    let extrapolated: u64 = rows.iter().map(|r| r.extrapolated).sum();
    let truncated: usize = rows.iter().map(|r| r.truncated).sum();
    let extrapolated_fraction = if steps == 0 { 0.0 } else { extrapolated as f64 / steps as f64 };
    if extrapolated > 0 {
        warnings.push(format!(
            "{:.2}% of sampled steps used constant extrapolation beyond the lattice hull",
            100.0 * extrapolated_fraction
        ));
    }
    let truncated_fraction = truncated as f64 / (n * rows_n) as f64;
    if truncated_fraction > 0.01 {
        warnings.push(format!("{:.2}% of paths were truncated", 100.0 * truncated_fraction));
    }
    let regimes: Vec<usize> = (0..m).collect();
    Ok(FixedPointSolution {
        u: LatticeField::new(lattice.clone(), regimes.clone(), u.iter().copied().collect(), Some(u_se))?,
        v: LatticeField::new(lattice.clone(), regimes, v, Some(v_se))?,
        iterations: trace.len(),
        trace,
        converged,
        tol,
        n_paths: n,
        seed: cfg.seed,
        h: cfg.step,
        extrapolated_fraction,
        truncated_fraction,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeComparison {
    pub node: usize,
    pub x: Vec<f64>,
    pub regime: usize,
    pub fixed: f64,
    pub direct: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_z: f64,
    pub nodes: Vec<NodeComparison>,
    pub direct: LatticeField,
}

/// Direct switching Monte Carlo at every `(node, regime)` of `u_fixed`,
/// on streams independent of the fixed-point samples.
pub fn compare_direct(
    u_fixed: &LatticeField,
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<DiscrepancyReport> {
    let lattice = &u_fixed.lattice;
    check_solver_inputs(spec, region, phi, lattice, cfg, n)?;
    let m = spec.regimes();
    let direct_cfg = cfg.clone().with_domain(cfg.domain.wrapping_add(DIRECT_DOMAIN));
    let mut values = Vec::new();
    let mut errs = Vec::new();
    let mut nodes = Vec::new();
    for (node, x) in lattice.nodes.iter().enumerate() {
        for &i in &u_fixed.regimes {
            let (vals, _, _) =
                harmonic_path_values(spec, region, phi, x, i, (node * m + i) as u64, &direct_cfg, n)?;
            let (d, se) = mean_stderr(&vals);
            let fixed = u_fixed.get(node, i);
            let fse = u_fixed.stderr_at(node, i).unwrap_or(0.0);
            let est = EstimateResult {
                value: fixed - d,
                stderr: (se * se + fse * fse).sqrt(),
                n_paths: n,
                seed: cfg.seed,
                h: cfg.step,
                warnings: vec![],
                truncated_fraction: 0.0,
                wall_time: Default::default(),
            };
            nodes.push(NodeComparison {
                node,
                x: x.clone(),
                regime: i,
                fixed,
                direct: d,
                z: est.z_score(0.0),
            });
            values.push(d);
            errs.push(se);
        }
    }
    let abs: Vec<f64> = nodes.iter().map(|c| (c.fixed - c.direct).abs()).collect();
    Ok(DiscrepancyReport {
        max_abs: abs.iter().copied().fold(0.0, f64::max),
        mean_abs: abs.iter().sum::<f64>() / abs.len() as f64,
        max_z: nodes.iter().map(|c| c.z).fold(0.0, f64::max),
        nodes,
        direct: LatticeField::new(lattice.clone(), u_fixed.regimes.clone(), values, Some(errs))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::estimate_harmonic;
    use crate::model::BoundaryFamily;

    fn spec(src: &str) -> ModelSpec {
        ModelSpec::from_toml_str(src).unwrap()
    }

    const BM: &str = "[dimensions]\nd = 1\nm = 1\n[[regimes]]\ndiffusion = { matrix = [[0.5]] }\n";

    const TWO: &str = r#"
[dimensions]
d = 1
m = 2
[[regimes]]
diffusion = { matrix = [[0.5]] }
[[regimes]]
drift = [0.2]
diffusion = { matrix = [[0.3]] }
[[jumps]]
regime = 2
intensity = 1.0
density = { family = "uniform_ball", radius = 0.3 }
[switching]
rates = [["balance", 1.0], [1.5, "balance"]]
"#;

    fn right_face(m: usize) -> BoundaryData {
        BoundaryData::uniform(
            BoundaryFamily::Indicator {
                set: Region::interval(1.0, f64::INFINITY),
                value: 1.0,
            },
            m,
        )
    }

    #[test]
    fn lattice_examples() {
        let l = build_lattice(&Region::interval(0.0, 1.0), 0.25).unwrap();
        assert_eq!(l.nodes(), &[vec![0.25], vec![0.5], vec![0.75]]);
        let l = build_lattice(&Region::interval(0.0, 1.0), 0.1).unwrap();
        assert_eq!(l.len(), 9);
        let disc = Region::ball(vec![0.0, 0.0], 1.0);
        let l = build_lattice(&disc, 0.5).unwrap();
        let mut expected = Vec::new();
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for b in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let x = vec![a, b];
                if disc.boundary_distance(&x) > 0.25 && disc.contains(&x) {
                    expected.push(x);
                }
            }
        }
        assert_eq!(l.nodes(), expected.as_slice());
        assert!(matches!(build_lattice(&Region::interval(0.0, 1.0), 1.0), Err(Error::Config { .. })));
        assert!(matches!(build_lattice(&Region::interval(0.0, 1.0), -0.1), Err(Error::Config { .. })));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_extrapolates_constantly() {
        let l = build_lattice(&Region::cube(vec![0.0, 0.0], vec![1.0, 1.0]), 0.25).unwrap();
        let vals: Vec<f64> = l.nodes().iter().map(|x| 1.0 + 2.0 * x[0] - x[1]).collect();
        for (x, v) in l.nodes().iter().zip(&vals) {
            assert!((l.interpolate(&vals, x) - v).abs() < 1e-12);
        }
        // bilinear inside the hull is exact for affine data
        assert!((l.interpolate(&vals, &[0.4, 0.6]) - (1.0 + 0.8 - 0.6)).abs() < 1e-12);
        let mut w = Vec::new();
        assert!(l.weights(&[0.1, 0.5], &mut w));
        let corner = l.interpolate(&vals, &[0.05, 0.05]);
        assert!((corner - (1.0 + 0.5 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn boundary_term_matches_harmonic_without_switching() {
        let s = spec(BM);
        let d = Region::interval(0.0, 1.0);
        let l = build_lattice(&d, 0.25).unwrap();
        let cfg = SamplerConfig::new(1e-3, 50.0, 3).unwrap();
        let v = estimate_boundary_term(&s, 0, &d, &right_face(1), &l, &cfg, 400).unwrap();
        let q: Vec<(Vec<f64>, usize)> = l.nodes().iter().map(|x| (x.clone(), 0)).collect();
        let h = estimate_harmonic(&s, &d, &right_face(1), &q, &cfg, 400).unwrap();
        for (a, b) in v.values.iter().zip(&h.estimates) {
            assert_eq!(*a, b.value);
        }
    }

    #[test]
    fn discounted_boundary_term_is_below_one() {
        let s = spec("[dimensions]\nd = 1\nm = 1\n[[regimes]]\ndiffusion = { matrix = [[0.5]] }\n[switching]\nrates = [[\"balance\"]]\nkilling = [2.0]\n");
        let d = Region::interval(0.0, 1.0);
        let l = build_lattice(&d, 0.25).unwrap();
        let cfg = SamplerConfig::new(1e-3, 50.0, 3).unwrap();
        let v = estimate_boundary_term(&s, 0, &d, &BoundaryData::constant(1.0, 1), &l, &cfg, 300).unwrap();
        // E[exp(-k tau)] = cosh(sqrt(2k)(x - 1/2)) / cosh(sqrt(2k)/2) for generator (1/2) d^2
        for (x, val) in l.nodes().iter().zip(&v.values) {
            let c = (4.0f64).sqrt();
            let exact = (c * (x[0] - 0.5)).cosh() / (c / 2.0).cosh();
            assert!(*val < 1.0);
            assert!((val - exact).abs() < 4.0 * v.stderr.as_ref().unwrap()[0].max(0.01));
        }
    }

    #[test]
    fn green_apply_identities() {
        let s = spec("[dimensions]\nd = 1\nm = 2\n[[regimes]]\ndiffusion = { matrix = [[0.5]] }\n[[regimes]]\ndiffusion = { matrix = [[0.5]] }\n[switching]\nrates = [[0.0, 0.7], [0.7, 0.0]]\n");
        let d = Region::interval(0.0, 1.0);
        let l = build_lattice(&d, 0.25).unwrap();
        let cfg = SamplerConfig::new(1e-3, 50.0, 5).unwrap();
        let zero = LatticeField::new(l.clone(), vec![0, 1], vec![0.0; 6], None).unwrap();
        let r = green_apply(&s, 0, 1, &d, &zero, &cfg, 100).unwrap();
        assert!(r.field.values.iter().all(|v| *v == 0.0));
        let one = LatticeField::new(l.clone(), vec![0, 1], vec![1.0; 6], None).unwrap();
        let r = green_apply(&s, 0, 1, &d, &one, &cfg, 200).unwrap();
        // compare with 0.7 * E tau on the same streams (point = node * m + i)
        for (node, x) in l.nodes().iter().enumerate() {
            let ends = crate::sampler::par_map(200, None, |p| {
                run_path(&s, x, 0, &StopRule::Exit { region: d.clone() }, &cfg, RegimeMode::Frozen, (node * 2) as u64, p, &mut ())
                    .time
            })
            .unwrap();
            let tau = ends.iter().sum::<f64>() / 200.0;
            assert!((r.field.values[node] - 0.7 * tau).abs() < 1e-9);
        }
    }

    #[test]
    fn single_regime_converges_in_one_iteration() {
        let s = spec(BM);
        let d = Region::interval(0.0, 1.0);
        let l = build_lattice(&d, 0.25).unwrap();
        let cfg = SamplerConfig::new(1e-3, 50.0, 3).unwrap();
        let sol = fixed_point_solve(&s, &d, &right_face(1), &l, &cfg, 300, 20, None).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.converged);
        assert_eq!(sol.u.values, sol.v.values);
    }

    #[test]
    fn decoupled_system_equals_boundary_terms() {
        let s = spec("[dimensions]\nd = 1\nm = 2\n[[regimes]]\ndiffusion = { matrix = [[0.5]] }\n[[regimes]]\ndiffusion = { matrix = [[0.2]] }\n");
        let d = Region::interval(0.0, 1.0);
        let l = build_lattice(&d, 0.25).unwrap();
        let cfg = SamplerConfig::new(1e-3, 50.0, 3).unwrap();
        let sol = fixed_point_solve(&s, &d, &right_face(2), &l, &cfg, 200, 20, None).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.u.values, sol.v.values);
    }

    #[test]
    fn coupled_solve_contracts_and_agrees_with_direct() {
        let s = spec(TWO);
        let d = Region::interval(0.0, 1.0);
        let l = build_lattice(&d, 0.25).unwrap();
        let cfg = SamplerConfig::new(2e-3, 50.0, 11).unwrap();
        let sol = fixed_point_solve(&s, &d, &right_face(2), &l, &cfg, 2000, 50, Some(1e-9)).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations >= 3);
        assert!(sol.contraction_ratios().iter().take(3).all(|r| *r < 1.0));
        let rep = compare_direct(&sol.u, &s, &d, &right_face(2), &cfg, 2000).unwrap();
        assert!(rep.max_z < 4.0, "{rep:?}");

        // linearity in phi on shared seeds
        let twice = BoundaryData::uniform(
            BoundaryFamily::Indicator {
                set: Region::interval(1.0, f64::INFINITY),
                value: 2.0,
            },
            2,
        );
        let sol2 = fixed_point_solve(&s, &d, &twice, &l, &cfg, 2000, 50, Some(1e-9)).unwrap();
        for (a, b) in sol.u.values.iter().zip(&sol2.u.values) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
        let zero = fixed_point_solve(&s, &d, &BoundaryData::constant(0.0, 2), &l, &cfg, 200, 50, None).unwrap();
        assert!(zero.u.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn moments_merge_matches_direct() {
        let data: Vec<Vec<f64>> = (0..1000).map(|k| vec![(k as f64).sin(), (k as f64 * 0.3).cos()]).collect();
        let mut whole = Moments::new(2);
        let mut delta = vec![0.0; 2];
        for y in &data {
            whole.push(y, &mut delta);
        }
        let mut merged = Moments::new(2);
        for chunk in data.chunks(77) {
            let mut part = Moments::new(2);
            for y in chunk {
                part.push(y, &mut delta);
            }
            merged.merge(&part);
        }
        for a in 0..2 {
            assert!((whole.mean[a] - merged.mean[a]).abs() < 1e-12);
            for b in 0..2 {
                assert!((whole.cov(a, b) - merged.cov(a, b)).abs() < 1e-12);
            }
        }
        let m0 = data.iter().map(|y| y[0]).sum::<f64>() / 1000.0;
        let m1 = data.iter().map(|y| y[1]).sum::<f64>() / 1000.0;
        let c01 = data.iter().map(|y| (y[0] - m0) * (y[1] - m1)).sum::<f64>() / 999.0;
        assert!((whole.cov(0, 1) - c01).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let l = build_lattice(&Region::interval(0.0, 1.0), 0.25).unwrap();
        let f = LatticeField::new(l, vec![0], vec![0.25, 0.5, 0.75], Some(vec![0.1, 0.1, 0.1])).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node,x_1,regime,value,stderr\n0,0.25,1,0.25,0.1\n"));
    }
}
