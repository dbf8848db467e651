//! Statistical test procedures for the structural results: maximum principle,
//! positivity, Harnack stability, exit-time scaling, the Lévy system and
//! hitting lower bounds. Each returns a [`TheoremReport`] with a verdict and
//! the evidence behind it.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupled_solver::Lattice;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_harmonic, estimate_hitting_prob, harmonic_path_values, levy_system_residual, mean_stderr,
    sample_exits,
};
use crate::model::{irreducibility_check, sample_points, BoundaryData, BoundaryFamily, IrreducibilityMode, ModelSpec, Region};
use crate::sampler::{par_map, run_path, Outcome, PathEnd, RegimeMode, SamplerConfig, StopRule};

/// Confidence half-width in standard errors used by every check.
pub const BANDS: f64 = 3.0;

const LATTICE_SURROGATE: &str =
    "identity on a continuum checked at lattice nodes with 3-standard-error bands";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "MaxPrinciple-I")]
    MaxPrincipleI,
    #[serde(rename = "MaxPrinciple-II-surrogate")]
    MaxPrincipleIISurrogate,
    Positivity,
    Harnack,
    ExitUpper,
    ExitLower,
    ExitTail,
    LevySystem,
    HittingLower,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::MaxPrincipleI => "MaxPrinciple-I",
            TheoremId::MaxPrincipleIISurrogate => "MaxPrinciple-II-surrogate",
            TheoremId::Positivity => "Positivity",
            TheoremId::Harnack => "Harnack",
            TheoremId::ExitUpper => "ExitUpper",
            TheoremId::ExitLower => "ExitLower",
            TheoremId::ExitTail => "ExitTail",
            TheoremId::LevySystem => "LevySystem",
            TheoremId::HittingLower => "HittingLower",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One statistic behind a verdict. Regimes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub label: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<usize>,
}

impl Evidence {
    fn new(label: impl Into<String>, value: f64) -> Self {
        Self {
            label: label.into(),
            value,
            stderr: None,
            z: None,
            x: None,
            regime: None,
        }
    }

    fn se(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    fn z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    fn at(mut self, x: &[f64], regime: usize) -> Self {
        self.x = Some(x.to_vec());
        self.regime = Some(regime + 1);
        self
    }
}

/// The statistic that fell outside its band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportWitness {
    pub label: String,
    pub statistic: f64,
    pub band: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<usize>,
}

impl ReportWitness {
    fn new(label: impl Into<String>, statistic: f64, band: f64) -> Self {
        Self {
            label: label.into(),
            statistic,
            band,
            x: None,
            regime: None,
        }
    }

    fn at(mut self, x: &[f64], regime: usize) -> Self {
        self.x = Some(x.to_vec());
        self.regime = Some(regime + 1);
        self
    }
}

/// A fail verdict always carries a witness; an inconclusive one the exhausted
/// path budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub verdict: Verdict,
    /// An exact pathwise assertion was violated: a defect, not a statistical failure.
    pub pathwise_violation: bool,
    pub evidence: Vec<Evidence>,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<ReportWitness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub config_hash: String,
    pub seed: u64,
}

impl TheoremReport {
    fn new(theorem: TheoremId, spec: &ModelSpec, cfg: &SamplerConfig) -> Self {
        Self {
            theorem,
            verdict: Verdict::Pass,
            pathwise_violation: false,
            evidence: Vec::new(),
            constants: BTreeMap::new(),
            witness: None,
            budget: None,
            surrogate: None,
            notes: Vec::new(),
            config_hash: spec.hash(),
            seed: cfg.seed,
        }
    }

    /// Records a failure; the first witness is kept.
    fn fail(&mut self, witness: ReportWitness) {
        self.verdict = Verdict::Fail;
        if self.witness.is_none() {
            self.witness = Some(witness);
        }
    }

    fn pathwise(&mut self, witness: ReportWitness) {
        self.pathwise_violation = true;
        self.fail(witness);
    }

    fn inconclusive(&mut self, budget: usize) {
        if self.verdict != Verdict::Fail {
            self.verdict = Verdict::Inconclusive;
        }
        self.budget = Some(self.budget.map_or(budget, |b| b.max(budget)));
    }

    fn constant(&mut self, name: impl Into<String>, value: f64) {
        self.constants.insert(name.into(), value);
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One-line summary used by the CLI table.
    pub fn summary(&self) -> String {
        let mut line = format!("{:<26} {:<12}", self.theorem.as_str(), self.verdict.as_str());
        let consts: Vec<String> = self
            .constants
            .iter()
            .take(4)
            .map(|(k, v)| format!("{k}={v:.4}"))
            .collect();
        line.push_str(&consts.join(" "));
        if let Some(w) = &self.witness {
            line.push_str(&format!("  witness: {} = {:.4e} (band {:.4e})", w.label, w.statistic, w.band));
        }
        if let Some(b) = self.budget {
            line.push_str(&format!("  budget: {b} paths"));
        }
        if self.pathwise_violation {
            line.push_str("  PATHWISE VIOLATION");
        }
        line
    }
}

/// Human-readable table of reports.
pub fn render_table(reports: &[TheoremReport]) -> String {
    let mut out = format!("{:<26} {:<12}{}\n", "theorem", "verdict", "constants");
    for r in reports {
        out.push_str(&r.summary());
        out.push('\n');
    }
    out
}

fn node_queries(lattice: &Lattice, m: usize) -> Vec<(Vec<f64>, usize)> {
    lattice
        .nodes()
        .iter()
        .flat_map(|x| (0..m).map(move |i| (x.clone(), i)))
        .collect()
}

/// Lattice nodes plus the model's declared sample points inside `region`.
fn probe_points(spec: &ModelSpec, region: &Region, extra: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = extra.to_vec();
    pts.extend(sample_points(spec).into_iter().filter(|x| region.contains(x)));
    pts
}

fn largest_killing(spec: &ModelSpec, points: &[Vec<f64>]) -> f64 {
    let mut k: f64 = 0.0;
    for x in points {
        for i in 0..spec.regimes() {
            k = k.max(spec.killing_rate(x, i));
        }
    }
    k
}

fn constant_value(phi: &BoundaryData) -> Option<f64> {
    let mut value = None;
    for f in phi.families() {
        match f {
            BoundaryFamily::Constant { value: v } if value.is_none_or(|c| c == *v) => value = Some(*v),
            _ => return None,
        }
    }
    value
}

/// Bound check `u <= M` (pathwise, then with bands) and the rigidity surrogate:
/// `phi ≡ M` with Markovian switching gives `u ≡ M`; killing pushes some node
/// strictly below `M`.
pub fn check_maximum_principle(
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    lattice: &Lattice,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<TheoremReport> {
    let m = spec.regimes();
    let queries = node_queries(lattice, m);
    let est = estimate_harmonic(spec, region, phi, &queries, cfg, n)?;
    let big_m = phi.bound();
    let mut rep = TheoremReport::new(TheoremId::MaxPrincipleI, spec, cfg);
    rep.surrogate = Some(LATTICE_SURROGATE.into());
    rep.constant("M", big_m);
    rep.constant("max_path_value", est.max_path_value);

    for (q, (x, i)) in queries.iter().enumerate() {
        if est.path_max[q] > big_m {
            rep.pathwise(
                ReportWitness::new("single-path value above the declared supremum", est.path_max[q], big_m).at(x, *i),
            );
        }
    }
    rep.constant("bound_violations", est.bound_violations as f64);

    let mut at_max = Vec::new();
    let mut below = Vec::new();
    let mut max_est = f64::NEG_INFINITY;
    for (q, ((x, i), e)) in queries.iter().zip(&est.estimates).enumerate() {
        let z = if e.stderr > 0.0 { (e.value - big_m) / e.stderr } else if e.value == big_m { 0.0 } else { (e.value - big_m).signum() * f64::INFINITY };
        rep.evidence.push(Evidence::new("u", e.value).se(e.stderr).z(z).at(x, *i));
        max_est = max_est.max(e.value);
        if e.value > big_m + BANDS * e.stderr {
            rep.fail(ReportWitness::new("estimate above M + 3 stderr", e.value, big_m + BANDS * e.stderr).at(x, *i));
        }
        if e.value < big_m - BANDS * e.stderr {
            below.push(q);
        } else {
            at_max.push(q);
        }
    }
    rep.constant("max_estimate", max_est);

    let points = probe_points(spec, region, lattice.nodes());
    let killing = largest_killing(spec, &points);
    let markovian = killing <= 0.0;
    rep.constant("max_killing_rate", killing);
    match (constant_value(phi), markovian) {
        (Some(c), true) if c == big_m => {
            for &q in &below {
                let (x, i) = &queries[q];
                let e = &est.estimates[q];
                rep.fail(ReportWitness::new("conservation: u below M - 3 stderr", e.value, big_m - BANDS * e.stderr).at(x, *i));
            }
        }
        (Some(c), false) if c == big_m => {
            if below.is_empty() {
                rep.notes.push("killing is present but no node is resolved below M".into());
                rep.inconclusive(n);
            } else {
                rep.notes.push(format!("{} of {} nodes strictly below M under killing", below.len(), queries.len()));
            }
        }
        _ => {
            if at_max.is_empty() {
                rep.notes.push("every node strictly below M".into());
            } else if below.is_empty() {
                if markovian {
                    rep.notes.push("u = M within bands at every node".into());
                } else {
                    rep.notes.push("u = M within bands at every node despite killing".into());
                    rep.inconclusive(n);
                }
            } else {
                rep.notes.push(format!(
                    "{} nodes within bands of M, {} strictly below; rigidity not resolved",
                    at_max.len(),
                    below.len()
                ));
                rep.inconclusive(n);
            }
        }
    }
    Ok(rep)
}

/// The strong maximum principle is checked through its corollary for harmonic
/// functions, i.e. on the same evidence as [`check_maximum_principle`].
pub fn strong_maximum_principle_surrogate(report: &TheoremReport) -> TheoremReport {
    let mut r = report.clone();
    r.theorem = TheoremId::MaxPrincipleIISurrogate;
    r.surrogate = Some(format!(
        "checked through its corollary for harmonic functions (same evidence as {}); {LATTICE_SURROGATE}",
        TheoremId::MaxPrincipleI
    ));
    r
}

/// Positivity dichotomy: `phi ≡ 0` must give exactly zero; otherwise every
/// node's lower bound must be positive, escalating `n` by 4x up to `budget`.
pub fn check_positivity(
    spec: &ModelSpec,
    region: &Region,
    phi: &BoundaryData,
    lattice: &Lattice,
    cfg: &SamplerConfig,
    n: usize,
    budget: usize,
) -> Result<TheoremReport> {
    phi.check(spec.dim(), spec.regimes())?;
    if !phi.is_nonnegative() {
        return Err(Error::Usage("positivity check needs nonnegative boundary data".into()));
    }
    if n == 0 {
        return Err(Error::Usage("at least one path is required".into()));
    }
    let points = probe_points(spec, region, lattice.nodes());
    let irr = irreducibility_check(spec, region, IrreducibilityMode::Irreducible, &points)?;
    if !irr.passed {
        let (a, b) = irr.witness.unwrap_or((0, 0));
        return Err(Error::Precondition(format!(
            "switching is not irreducible on the region: no path from regime {a} to regime {b}"
        )));
    }
    let m = spec.regimes();
    let queries = node_queries(lattice, m);
    let mut rep = TheoremReport::new(TheoremId::Positivity, spec, cfg);
    rep.surrogate = Some(LATTICE_SURROGATE.into());

    if phi.is_identically_zero() {
        for (q, (x, i)) in queries.iter().enumerate() {
            let (values, _, _) = harmonic_path_values(spec, region, phi, x, *i, q as u64, cfg, n)?;
            let (mean, se) = mean_stderr(&values);
            if let Some(v) = values.iter().find(|v| **v != 0.0) {
                rep.pathwise(ReportWitness::new("nonzero path value under zero data", *v, 0.0).at(x, *i));
            }
            rep.evidence.push(Evidence::new("u", mean).se(se).at(x, *i));
        }
        rep.constant("n", n as f64);
        return Ok(rep);
    }

    let budget = budget.max(n);
    let mut results = vec![(0.0, 0.0, 0usize); queries.len()];
    let mut pending: Vec<usize> = (0..queries.len()).collect();
    let mut cur = n;
    loop {
        for &q in &pending {
            let (x, i) = &queries[q];
            let (values, _, _) = harmonic_path_values(spec, region, phi, x, *i, q as u64, cfg, cur)?;
            if let Some(v) = values.iter().find(|v| **v < 0.0) {
                rep.pathwise(ReportWitness::new("negative path value under nonnegative data", *v, 0.0).at(x, *i));
            }
            let (mean, se) = mean_stderr(&values);
            results[q] = (mean, se, cur);
        }
        pending.retain(|&q| results[q].0 - BANDS * results[q].1 <= 0.0);
        if pending.is_empty() || cur >= budget {
            break;
        }
        cur = (cur * 4).min(budget);
    }
    let mut min_lower = f64::INFINITY;
    for (q, (x, i)) in queries.iter().enumerate() {
        let (mean, se, used) = results[q];
        min_lower = min_lower.min(mean - BANDS * se);
        let mut e = Evidence::new("u", mean).se(se).at(x, *i);
        e.z = Some(if se > 0.0 { mean / se } else { f64::INFINITY });
        rep.evidence.push(e);
        rep.constant(format!("n[{q}]"), used as f64);
    }
    rep.constant("min_lower_bound", min_lower);
    rep.constant("max_n", cur as f64);
    if !pending.is_empty() {
        for &q in &pending {
            let (x, i) = &queries[q];
            rep.notes.push(format!(
                "lower bound not positive at x = {:?}, regime {} after {} paths",
                x,
                i + 1,
                results[q].2
            ));
        }
        rep.inconclusive(cur);
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackOptions {
    /// Nested path counts; each must be at least the previous one.
    pub sample_sizes: Vec<usize>,
    /// Largest path count used when a lower confidence bound is not positive.
    pub budget: usize,
    /// Minimum distance from `K` to the boundary of `D`.
    pub margin: f64,
    /// Center of a reflection symmetry of the model, if any; mirror pairs in
    /// `K` are then compared for every reflection-invariant `phi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror: Option<Vec<f64>>,
    /// Allowed relative spread of the fitted constant across sample sizes.
    pub stability: f64,
}

impl Default for HarnackOptions {
    fn default() -> Self {
        Self {
            sample_sizes: vec![10_000, 40_000, 160_000],
            budget: 640_000,
            margin: 0.0,
            mirror: None,
            stability: 0.2,
        }
    }
}

/// Checks `phi(2c - y, i) == phi(y, i)` on a deterministic sample of exterior points.
fn reflection_invariant(phi: &BoundaryData, region: &Region, c: &[f64]) -> bool {
    let (lo, hi) = region.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4d1_4404);
    let d = c.len();
    let mut y = vec![0.0; d];
    for _ in 0..2000 {
        for k in 0..d {
            let (l, h) = (lo[k].max(-1e3), hi[k].min(1e3));
            let pad = 0.5 * (h - l) + 1.0;
            y[k] = rng.random_range(l - pad..h + pad);
        }
        if region.contains(&y) {
            continue;
        }
        let r: Vec<f64> = y.iter().zip(c).map(|(a, b)| 2.0 * b - a).collect();
        for i in 0..phi.regimes() {
            if (phi.eval(&y, i) - phi.eval(&r, i)).abs() > 1e-12 {
                return false;
            }
        }
    }
    true
}

struct HarnackPoint {
    x: Vec<f64>,
    regime: usize,
    ends: Vec<PathEnd>,
}

impl HarnackPoint {
    fn ensure(&mut self, spec: &ModelSpec, region: &Region, cfg: &SamplerConfig, point: u64, n: usize) -> Result<()> {
        let have = self.ends.len();
        if n > have {
            let stop = StopRule::Exit { region: region.clone() };
            let more = par_map(n - have, cfg.workers, |p| {
                run_path(spec, &self.x, self.regime, &stop, cfg, RegimeMode::Switching, point, have as u64 + p, &mut ())
            })?;
            self.ends.extend(more);
        }
        Ok(())
    }

    fn stats(&self, phi: &BoundaryData, n: usize) -> (f64, f64) {
        let values: Vec<f64> = self.ends[..n]
            .iter()
            .map(|e| match (e.outcome, e.regime) {
                (Outcome::Exited, Some(j)) => phi.eval(&e.x, j),
                _ => 0.0,
            })
            .collect();
        mean_stderr(&values)
    }
}

/// Empirical Harnack constant `max u(x,i) / min u(y,j)` over `K x regimes`,
/// with upper/lower confidence bounds, for each boundary function in `family`,
/// and its stability across the nested sample sizes. Paths are shared across
/// the family: exit states do not depend on `phi`.
pub fn estimate_harnack_constant(
    spec: &ModelSpec,
    region: &Region,
    k_points: &[Vec<f64>],
    family: &[BoundaryData],
    cfg: &SamplerConfig,
    opts: &HarnackOptions,
) -> Result<TheoremReport> {
    if family.len() < 5 {
        return Err(Error::Usage(format!(
            "the Harnack check needs at least 5 boundary functions, got {}",
            family.len()
        )));
    }
    for phi in family {
        phi.check(spec.dim(), spec.regimes())?;
        if !phi.is_nonnegative() {
            return Err(Error::Usage("Harnack boundary functions must be nonnegative".into()));
        }
    }
    if k_points.is_empty() {
        return Err(Error::Usage("the compact set K has no points".into()));
    }
    for x in k_points {
        if x.len() != spec.dim() || !region.contains(x) || region.boundary_distance(x) < opts.margin {
            return Err(Error::Usage(format!(
                "K point {x:?} is not inside the region at distance >= {}",
                opts.margin
            )));
        }
    }
    let sizes = &opts.sample_sizes;
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] < w[0]) || sizes[0] == 0 {
        return Err(Error::Usage("sample sizes must be positive and nondecreasing".into()));
    }
    let points = probe_points(spec, region, k_points);
    let irr = irreducibility_check(spec, region, IrreducibilityMode::Strict, &points)?;
    if !irr.passed {
        let (a, b) = irr.witness.unwrap_or((0, 0));
        return Err(Error::Precondition(format!(
            "strict irreducibility fails on the region at regime pair ({a}, {b})"
        )));
    }

    let m = spec.regimes();
    let mut pts: Vec<HarnackPoint> = k_points
        .iter()
        .flat_map(|x| {
            (0..m).map(move |i| HarnackPoint {
                x: x.clone(),
                regime: i,
                ends: Vec::new(),
            })
        })
        .collect();
    let n_max = *sizes.last().unwrap();
    for (q, p) in pts.iter_mut().enumerate() {
        p.ensure(spec, region, cfg, q as u64, n_max)?;
    }

    let mut rep = TheoremReport::new(TheoremId::Harnack, spec, cfg);
    rep.surrogate = Some(
        "empirical lower bound on any valid Harnack constant over the K lattice; not an estimate of the optimal constant"
            .into(),
    );
    let budget = opts.budget.max(n_max);
    // c_hat[f][s]
    let mut c_hat = vec![vec![f64::NAN; sizes.len()]; family.len()];
    let mut unresolved = false;
    for (f, phi) in family.iter().enumerate() {
        for (s, &n0) in sizes.iter().enumerate() {
            let mut n = n0;
            loop {
                let stats: Vec<(f64, f64)> = pts.iter().map(|p| p.stats(phi, n)).collect();
                let lower = stats.iter().map(|(u, se)| u - BANDS * se).fold(f64::INFINITY, f64::min);
                let upper = stats.iter().map(|(u, se)| u + BANDS * se).fold(f64::NEG_INFINITY, f64::max);
                if lower > 0.0 {
                    c_hat[f][s] = upper / lower;
                    if n != n0 {
                        rep.notes.push(format!("phi #{} at N = {n0} escalated to {n} paths", f + 1));
                    }
                    break;
                }
                if n >= budget {
                    rep.notes.push(format!(
                        "phi #{}: lower confidence bound not positive after {n} paths",
                        f + 1
                    ));
                    unresolved = true;
                    break;
                }
                n = (n * 4).min(budget);
                for (q, p) in pts.iter_mut().enumerate() {
                    p.ensure(spec, region, cfg, q as u64, n)?;
                }
            }
            rep.constant(format!("C_hat[phi{}][N={n0}]", f + 1), c_hat[f][s]);
        }
        let point: Vec<f64> = pts.iter().map(|p| p.stats(phi, n_max).0).collect();
        let ratio = point.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            / point.iter().copied().fold(f64::INFINITY, f64::min);
        rep.evidence.push(Evidence::new(format!("point ratio phi{}", f + 1), ratio));
    }
    if unresolved {
        rep.inconclusive(budget);
    }

    for (s, &n0) in sizes.iter().enumerate() {
        let c = (0..family.len()).map(|f| c_hat[f][s]).filter(|c| c.is_finite()).fold(f64::NAN, f64::max);
        rep.constant(format!("C_hat[N={n0}]"), c);
        rep.evidence.push(Evidence::new(format!("C_hat N={n0}"), c));
        if c < 1.0 {
            rep.fail(ReportWitness::new("fitted constant below 1", c, 1.0));
        }
    }
    for (f, row) in c_hat.iter().enumerate() {
        let vals: Vec<f64> = row.iter().copied().filter(|c| c.is_finite()).collect();
        if vals.len() < 2 {
            continue;
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = (hi - lo) / lo;
        rep.constant(format!("spread[phi{}]", f + 1), spread);
        if spread >= opts.stability {
            rep.fail(ReportWitness::new(
                format!("relative spread of C_hat(phi{}) across sample sizes", f + 1),
                spread,
                opts.stability,
            ));
        }
    }

    if let Some(c) = &opts.mirror {
        for (f, phi) in family.iter().enumerate() {
            if !reflection_invariant(phi, region, c) {
                rep.notes.push(format!("phi #{}: not reflection-invariant, mirror pairs skipped", f + 1));
                continue;
            }
            for (a, xa) in k_points.iter().enumerate() {
                let mirror: Vec<f64> = xa.iter().zip(c).map(|(x, c)| 2.0 * c - x).collect();
                let Some(b) = k_points
                    .iter()
                    .position(|xb| xb.iter().zip(&mirror).all(|(p, q)| (p - q).abs() < 1e-9))
                else {
                    continue;
                };
                if b <= a {
                    continue;
                }
                for i in 0..m {
                    let (ua, sa) = pts[a * m + i].stats(phi, n_max);
                    let (ub, sb) = pts[b * m + i].stats(phi, n_max);
                    let band = BANDS * (sa * sa + sb * sb).sqrt();
                    let mut e = Evidence::new(format!("mirror ratio phi{}", f + 1), ua / ub).at(xa, i);
                    e.z = Some(if band > 0.0 { BANDS * (ua - ub).abs() / band } else { 0.0 });
                    rep.evidence.push(e);
                    if (ua - ub).abs() > band {
                        rep.fail(
                            ReportWitness::new(format!("mirror pair difference, phi{}", f + 1), (ua - ub).abs(), band)
                                .at(xa, i),
                        );
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Weighted least-squares slope of `y` against `t` and its standard error.
fn trend(t: &[f64], y: &[f64], se: &[f64]) -> Option<(f64, f64)> {
    if t.len() < 2 || se.iter().any(|s| *s <= 0.0) {
        return None;
    }
    let w: Vec<f64> = se.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let tm = w.iter().zip(t).map(|(w, t)| w * t).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(t).map(|(w, t)| w * (t - tm) * (t - tm)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = (0..t.len()).map(|k| w[k] * (t[k] - tm) * (y[k] - ym)).sum();
    Some((sxy / sxx, 1.0 / sxx.sqrt()))
}

/// Off-center starts sit at `x0 + (1 - OFF_CENTER_EPS) r / 2` along the first axis.
const OFF_CENTER_EPS: f64 = 0.1;

/// Exit-time scaling on balls `B(x0, r)`: fitted `c_lower = min E tau / r^2`
/// and `c_upper = max E tau / r^2` over radii, regimes and starts, a trend test
/// of the ratio against `log r`, and the tail bound `P(tau <= c r^2) <= 1/2`
/// with `c` the pooled median of `tau / r^2`.
/// Returns the `ExitLower`, `ExitUpper` and `ExitTail` reports.
pub fn exit_time_bound_suite(
    spec: &ModelSpec,
    x0: &[f64],
    radii: &[f64],
    cfg: &SamplerConfig,
    n: usize,
) -> Result<Vec<TheoremReport>> {
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Usage("radii must be positive".into()));
    }
    if x0.len() != spec.dim() {
        return Err(Error::Usage("center dimension does not match the model".into()));
    }
    let mut lower = TheoremReport::new(TheoremId::ExitLower, spec, cfg);
    let mut upper = TheoremReport::new(TheoremId::ExitUpper, spec, cfg);
    let mut tail = TheoremReport::new(TheoremId::ExitTail, spec, cfg);
    let (mut c_lo, mut c_lo_bound, mut c_hi) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut worst_trend: f64 = 0.0;
    let logs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();

    for i in 0..spec.regimes() {
        let mut pooled: Vec<f64> = Vec::new();
        let mut centered: Vec<Vec<f64>> = Vec::new();
        for (s, label) in ["center", "off-center"].into_iter().enumerate() {
            let (mut ratio, mut ratio_se) = (Vec::new(), Vec::new());
            for &r in radii {
                let mut start = x0.to_vec();
                if s == 1 {
                    start[0] += 0.5 * (1.0 - OFF_CENTER_EPS) * r;
                }
                let ball = Region::ball(x0.to_vec(), r);
                let ends = sample_exits(spec, &ball, &start, i, cfg, n)?;
                let taus: Vec<f64> = ends.iter().map(|e| e.time).collect();
                let truncated = ends.iter().filter(|e| e.truncated()).count() as f64 / n as f64;
                let (mean, se) = mean_stderr(&taus);
                let (q, qse) = (mean / (r * r), se / (r * r));
                let ev = Evidence::new(format!("E tau / r^2 ({label}, r={r})"), q).se(qse).at(&start, i);
                lower.evidence.push(ev.clone());
                upper.evidence.push(ev);
                c_lo = c_lo.min(q);
                c_lo_bound = c_lo_bound.min(q - BANDS * qse);
                c_hi = c_hi.max(q);
                if truncated > 0.01 {
                    upper.notes.push(format!(
                        "{:.2}% of paths truncated at r = {r}, regime {}, {label}",
                        100.0 * truncated,
                        i + 1
                    ));
                    upper.inconclusive(n);
                }
                ratio.push(q);
                ratio_se.push(qse);
                if s == 0 {
                    pooled.extend(taus.iter().map(|t| t / (r * r)));
                    centered.push(taus);
                }
            }
            if let Some((slope, sse)) = trend(&logs, &ratio, &ratio_se) {
                let z = slope / sse;
                worst_trend = worst_trend.max(z.abs());
                let ev = Evidence::new(format!("trend slope in log r ({label}, regime {})", i + 1), slope)
                    .se(sse)
                    .z(z);
                lower.evidence.push(ev.clone());
                upper.evidence.push(ev);
                if z.abs() > BANDS {
                    let w = ReportWitness::new(
                        format!("drift of E tau / r^2 in log r ({label}, regime {})", i + 1),
                        slope,
                        BANDS * sse,
                    );
                    lower.fail(w.clone());
                    upper.fail(w);
                }
            }
        }
        pooled.sort_by(f64::total_cmp);
        let c_tail = pooled[pooled.len() / 2];
        tail.constant(format!("c_tail[regime {}]", i + 1), c_tail);
        for (taus, &r) in centered.iter().zip(radii) {
            let hits = taus.iter().filter(|&&t| t <= c_tail * r * r).count();
            let p = hits as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            tail.evidence.push(
                Evidence::new(format!("P(tau <= c r^2) (r={r}, regime {})", i + 1), p)
                    .se(se)
                    .z(if se > 0.0 { (p - 0.5) / se } else { 0.0 }),
            );
            if p > 0.5 + BANDS * se {
                tail.fail(
                    ReportWitness::new(format!("P(tau <= c r^2) at r = {r}"), p, 0.5 + BANDS * se).at(x0, i),
                );
            }
        }
    }
    lower.constant("c_lower", c_lo);
    lower.constant("c_lower_bound", c_lo_bound);
    lower.constant("max_trend_z", worst_trend);
    upper.constant("c_upper", c_hi);
    upper.constant("max_trend_z", worst_trend);
    if c_lo_bound <= 0.0 {
        lower.notes.push("lower confidence bound of c_lower is not positive".into());
        lower.inconclusive(n);
    }
    Ok(vec![lower, upper, tail])
}

/// A Lévy-system test case: jumps from `a` into `b` while in `regime` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyPair {
    pub a: Region,
    pub b: Region,
    pub regime: usize,
}

/// Residual `|z| < 4` at `h` and `h/2` for every pair, and
/// `|residual(h/2)| <= |residual(h)| + 2 stderr(h/2)`.
#[allow(clippy::too_many_arguments)]
pub fn levy_system_check(
    spec: &ModelSpec,
    pairs: &[LevyPair],
    horizon: f64,
    x0: &[f64],
    i0: usize,
    cfg: &SamplerConfig,
    n: usize,
    nodes: usize,
) -> Result<TheoremReport> {
    let mut rep = TheoremReport::new(TheoremId::LevySystem, spec, cfg);
    let half = SamplerConfig {
        step: cfg.step / 2.0,
        ..cfg.clone()
    };
    let mut worst: f64 = 0.0;
    for (k, pair) in pairs.iter().enumerate() {
        let r1 = levy_system_residual(spec, &pair.a, &pair.b, pair.regime, horizon, x0, i0, cfg, n, nodes)?;
        let r2 = levy_system_residual(spec, &pair.a, &pair.b, pair.regime, horizon, x0, i0, &half, n, nodes)?;
        for (r, h) in [(&r1, cfg.step), (&r2, half.step)] {
            let z = r.residual.z_score(0.0);
            worst = worst.max(z);
            rep.evidence.push(
                Evidence::new(format!("residual pair {} h={h}", k + 1), r.residual.value)
                    .se(r.residual.stderr)
                    .z(z),
            );
            rep.notes.extend(r.residual.warnings.iter().cloned());
            if z >= 4.0 {
                rep.fail(ReportWitness::new(format!("residual z-score, pair {}, h = {h}", k + 1), z, 4.0));
            }
        }
        let bound = r1.residual.value.abs() + 2.0 * r2.residual.stderr;
        if r2.residual.value.abs() > bound {
            rep.fail(ReportWitness::new(
                format!("residual grows under step halving, pair {}", k + 1),
                r2.residual.value.abs(),
                bound,
            ));
        }
        rep.constant(format!("compensator[pair{}]", k + 1), r2.compensator.value);
    }
    rep.constant("max_z", worst);
    Ok(rep)
}

/// `P(sigma_{B(target, R 2^-k)} < tau_{B(x0, 2R)})` from `start` for
/// `k = 0..=levels`: strictly positive lower bounds and nonincreasing in `k`
/// within bands.
#[allow(clippy::too_many_arguments)]
pub fn hitting_lower_bound_check(
    spec: &ModelSpec,
    x0: &[f64],
    big_r: f64,
    target: &[f64],
    start: &[f64],
    regime: usize,
    levels: usize,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<TheoremReport> {
    if !(big_r.is_finite() && big_r > 0.0) {
        return Err(Error::Usage("R must be positive".into()));
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    if dist(target, x0) >= big_r || dist(start, x0) >= big_r {
        return Err(Error::Usage("target center and start must lie in B(x0, R)".into()));
    }
    let container = Region::ball(x0.to_vec(), 2.0 * big_r);
    let mut rep = TheoremReport::new(TheoremId::HittingLower, spec, cfg);
    let mut prev: Option<(f64, f64)> = None;
    let mut unresolved = false;
    for k in 0..=levels {
        let r = big_r / f64::powi(2.0, k as i32);
        let ball = Region::ball(target.to_vec(), r);
        let e = estimate_hitting_prob(spec, &ball, None, &container, start, regime, cfg, n)?;
        rep.evidence.push(Evidence::new(format!("P(hit) r={r}"), e.value).se(e.stderr).at(start, regime));
        rep.constant(format!("p[r=R/{}]", 1u64 << k), e.value);
        if e.value - BANDS * e.stderr <= 0.0 {
            rep.notes.push(format!("hitting probability not resolved above 0 at r = {r}"));
            unresolved = true;
        }
        if let Some((p, se)) = prev {
            let band = BANDS * (se * se + e.stderr * e.stderr).sqrt();
            if e.value > p + band {
                rep.fail(ReportWitness::new(format!("increase when shrinking to r = {r}"), e.value - p, band));
            }
        }
        prev = Some((e.value, e.stderr));
    }
    if unresolved {
        rep.inconclusive(n);
    }
    Ok(rep)
}
