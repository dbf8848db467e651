//! Model definitions: coefficients, jump kernels, switching matrix, domains and
//! boundary data, plus sample-based checks of the standing assumptions.

mod boundary;
mod config;
mod family;
mod jump;
mod region;
mod validate;

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use sha2::{Digest, Sha256};

pub use boundary::{BoundaryData, BoundaryFamily};
pub use config::{
    AssumptionsConfig, DiffusionConfig, Dimensions, JumpConfig, ModelConfig, RateEntry,
    RegimeConfig, SwitchingConfig,
};
pub use family::ScalarField;
pub use jump::{midpoint_box, Compensation, HarnackMeta, JumpDensity, JumpKernel};
pub use region::Region;
pub use validate::{
    ellipticity_bounds, irreducibility_check, sample_points, validate_model, AssumptionCheck,
    CheckStatus, EllipticityBounds, IrreducibilityMode, IrreducibilityReport, PairPath,
    ValidationReport, Witness,
};

use crate::error::{Error, Result};

/// `a(x, i) = factor(x) * base`, with a precomputed square root of `2 * base`.
#[derive(Debug, Clone)]
struct DiffusionField {
    base: Vec<f64>,
    sqrt2: Vec<f64>,
    factor: Option<ScalarField>,
}

impl DiffusionField {
    fn new(cfg: &DiffusionConfig, dim: usize, field: &str) -> Result<Self> {
        if cfg.matrix.len() != dim || cfg.matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::Structural(format!(
                "`{field}.matrix` must be {dim}x{dim}"
            )));
        }
        let base: Vec<f64> = cfg.matrix.iter().flatten().copied().collect();
        if base.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{field}.matrix"), "entries must be finite"));
        }
        for k in 0..dim {
            for l in 0..k {
                let (p, q) = (base[k * dim + l], base[l * dim + k]);
                if (p - q).abs() > 1e-12 * (1.0 + p.abs().max(q.abs())) {
                    return Err(Error::Structural(format!(
                        "`{field}.matrix` is not symmetric (entry [{}][{}] = {p} vs [{}][{}] = {q})",
                        k + 1,
                        l + 1,
                        l + 1,
                        k + 1
                    )));
                }
            }
        }
        if let Some(f) = &cfg.factor {
            f.check(dim, &format!("{field}.factor"))?;
            if f.range().0 < 0.0 {
                return Err(Error::config(
                    format!("{field}.factor"),
                    "the diffusion factor must be non-negative",
                ));
            }
        }
        let m = DMatrix::from_row_slice(dim, dim, &base) * 2.0;
        let eig = SymmetricEigen::new(m);
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let s = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let mut sqrt2 = vec![0.0; dim * dim];
        for k in 0..dim {
            for l in 0..dim {
                sqrt2[k * dim + l] = s[(k, l)];
            }
        }
        Ok(Self {
            base,
            sqrt2,
            factor: cfg.factor.clone(),
        })
    }

    fn scale(&self, x: &[f64]) -> f64 {
        self.factor.as_ref().map_or(1.0, |f| f.eval(x))
    }
}

#[derive(Debug, Clone)]
struct Regime {
    drift: Vec<ScalarField>,
    diffusion: DiffusionField,
    kernels: Vec<JumpKernel>,
    intensity: f64,
    has_compensation: bool,
}

#[derive(Debug, Clone)]
struct Switching {
    rates: Vec<Vec<RateEntry>>,
    killing: Vec<ScalarField>,
    q_max: f64,
    strict_lower: Option<Vec<Vec<f64>>>,
    zero: bool,
}

/// A validated-structure model. Coefficient values are checked against the
/// standing assumptions separately by [`validate_model`].
#[derive(Debug, Clone)]
pub struct ModelSpec {
    dim: usize,
    regimes: Vec<Regime>,
    switching: Switching,
    config: ModelConfig,
}

impl ModelSpec {
    pub fn from_config(config: ModelConfig) -> Result<Self> {
        let Dimensions { d, m } = config.dimensions;
        if d == 0 {
            return Err(Error::config("dimensions.d", "must be positive"));
        }
        if m == 0 {
            return Err(Error::config("dimensions.m", "must be positive"));
        }
        if config.regimes.len() != m {
            return Err(Error::Structural(format!(
                "{} [[regimes]] sections for m = {m}",
                config.regimes.len()
            )));
        }

        let mut regimes = Vec::with_capacity(m);
        for (i, rc) in config.regimes.iter().enumerate() {
            let field = format!("regimes[{}]", i + 1);
            let drift = if rc.drift.is_empty() {
                vec![ScalarField::Constant(0.0); d]
            } else {
                rc.drift.clone()
            };
            if drift.len() != d {
                return Err(Error::Structural(format!(
                    "`{field}.drift` has {} components but d = {d}",
                    drift.len()
                )));
            }
            for (k, f) in drift.iter().enumerate() {
                f.check(d, &format!("{field}.drift[{}]", k + 1))?;
            }
            let diffusion = DiffusionField::new(&rc.diffusion, d, &format!("{field}.diffusion"))?;
            regimes.push(Regime {
                drift,
                diffusion,
                kernels: Vec::new(),
                intensity: 0.0,
                has_compensation: false,
            });
        }

        for (n, jc) in config.jumps.iter().enumerate() {
            let field = format!("jumps[{}]", n + 1);
            if jc.regime == 0 || jc.regime > m {
                return Err(Error::Structural(format!(
                    "`{field}.regime` = {} is outside 1..={m}",
                    jc.regime
                )));
            }
            let kernel = JumpKernel::new(
                d,
                jc.regime - 1,
                jc.intensity,
                jc.density.clone(),
                jc.state_ratio.clone(),
                jc.jump_ratio.clone(),
                jc.compensation,
                jc.harnack,
                &field,
            )?;
            let r = &mut regimes[jc.regime - 1];
            r.intensity += kernel.intensity;
            r.has_compensation |= kernel.compensation == Compensation::Compensated;
            r.kernels.push(kernel);
        }

        let switching = build_switching(config.switching.as_ref(), d, m)?;

        Ok(Self {
            dim: d,
            regimes,
            switching,
            config,
        })
    }

    pub fn from_toml_str(source: &str) -> Result<Self> {
        let config: ModelConfig = toml::from_str(source)
            .map_err(|e| Error::parse_at(source, e.span().map(|s| s.start), e.message()))?;
        Self::from_config(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let source = std::fs::read_to_string(path)?;
        Self::from_toml_str(&source)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.config).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regimes(&self) -> usize {
        self.regimes.len()
    }

    pub fn drift(&self, x: &[f64], i: usize, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.regimes[i].drift) {
            *o = f.eval(x);
        }
    }

    /// Drift actually used by the sampler: `b(x, i) - int_{|z|<1} z pi_i(x, dz)`
    /// summed over compensated kernels.
    pub fn effective_drift(&self, x: &[f64], i: usize, out: &mut [f64], scratch: &mut [f64]) {
        self.drift(x, i, out);
        let r = &self.regimes[i];
        if !r.has_compensation {
            return;
        }
        for k in &r.kernels {
            if k.compensation == Compensation::Compensated {
                k.small_jump_drift(x, scratch);
                for (o, s) in out.iter_mut().zip(scratch.iter()) {
                    *o -= s;
                }
            }
        }
    }

    /// `a(x, i)` as a row-major `d x d` matrix.
    pub fn diffusion_matrix(&self, x: &[f64], i: usize) -> Vec<f64> {
        let df = &self.regimes[i].diffusion;
        let s = df.scale(x);
        df.base.iter().map(|v| v * s).collect()
    }

    /// Adds `sqrt(2 a(x, i)) * xi * sqrt_dt` to `out`.
    pub(crate) fn add_diffusion_increment(
        &self,
        x: &[f64],
        i: usize,
        xi: &[f64],
        sqrt_dt: f64,
        out: &mut [f64],
    ) {
        let df = &self.regimes[i].diffusion;
        let s = df.scale(x).max(0.0).sqrt() * sqrt_dt;
        if s == 0.0 {
            return;
        }
        let d = self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &df.sqrt2[k * d..(k + 1) * d];
            *o += s * row.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Variance rate of the diffusion along the unit vector `n`: `n' 2a(x,i) n`.
    pub fn normal_variance(&self, x: &[f64], i: usize, n: &[f64]) -> f64 {
        let df = &self.regimes[i].diffusion;
        let d = self.dim;
        let mut q = 0.0;
        for k in 0..d {
            if n[k] == 0.0 {
                continue;
            }
            for l in 0..d {
                q += n[k] * df.base[k * d + l] * n[l];
            }
        }
        2.0 * df.scale(x) * q
    }

    pub fn kernels(&self, i: usize) -> &[JumpKernel] {
        &self.regimes[i].kernels
    }

    pub fn total_intensity(&self, i: usize) -> f64 {
        self.regimes[i].intensity
    }

    /// `q_ij(x)`, diagonal included.
    pub fn rate(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let sw = &self.switching;
        if sw.zero {
            return 0.0;
        }
        match &sw.rates[i][j] {
            RateEntry::Field(f) => f.eval(x),
            RateEntry::Balance => {
                let off: f64 = (0..self.regimes())
                    .filter(|&k| k != i)
                    .map(|k| self.rate(x, i, k))
                    .sum();
                -off - sw.killing[i].eval(x)
            }
        }
    }

    /// `kappa(x, i) = -sum_j q_ij(x)`.
    pub fn killing_rate(&self, x: &[f64], i: usize) -> f64 {
        if self.switching.zero {
            return 0.0;
        }
        match &self.switching.rates[i][i] {
            RateEntry::Balance => self.switching.killing[i].eval(x),
            RateEntry::Field(_) => -(0..self.regimes()).map(|j| self.rate(x, i, j)).sum::<f64>(),
        }
    }

    /// Uniformization rate `Q_max >= sup_x max_i |q_ii(x)|`.
    pub fn q_max(&self) -> f64 {
        self.switching.q_max
    }

    pub fn has_switching(&self) -> bool {
        !self.switching.zero
    }

    /// Off-diagonal entry is identically zero by construction.
    pub fn rate_is_zero(&self, i: usize, j: usize) -> bool {
        self.switching.zero
            || matches!(&self.switching.rates[i][j], RateEntry::Field(f) if f.is_zero())
    }

    pub fn strict_lower(&self) -> Option<&[Vec<f64>]> {
        self.switching.strict_lower.as_deref()
    }

    pub(crate) fn rate_entry(&self, i: usize, j: usize) -> Option<&RateEntry> {
        if self.switching.zero {
            None
        } else {
            Some(&self.switching.rates[i][j])
        }
    }

    pub(crate) fn drift_fields(&self, i: usize) -> &[ScalarField] {
        &self.regimes[i].drift
    }

    pub(crate) fn diffusion_factor(&self, i: usize) -> Option<&ScalarField> {
        self.regimes[i].diffusion.factor.as_ref()
    }
}

fn build_switching(cfg: Option<&SwitchingConfig>, d: usize, m: usize) -> Result<Switching> {
    let Some(cfg) = cfg else {
        return Ok(Switching {
            rates: vec![vec![RateEntry::Field(ScalarField::Constant(0.0)); m]; m],
            killing: vec![ScalarField::Constant(0.0); m],
            q_max: 0.0,
            strict_lower: None,
            zero: true,
        });
    };
    if cfg.rates.len() != m || cfg.rates.iter().any(|r| r.len() != m) {
        return Err(Error::Structural(format!("`switching.rates` must be {m}x{m}")));
    }
    for (i, row) in cfg.rates.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let field = format!("switching.rates[{}][{}]", i + 1, j + 1);
            match e {
                RateEntry::Field(f) => f.check(d, &field)?,
                RateEntry::Balance if i != j => {
                    return Err(Error::config(field, "\"balance\" is only allowed on the diagonal"))
                }
                RateEntry::Balance => {}
            }
        }
    }
    let killing = match &cfg.killing {
        None => vec![ScalarField::Constant(0.0); m],
        Some(k) => {
            if k.len() != m {
                return Err(Error::Structural(format!(
                    "`switching.killing` has {} entries for m = {m}",
                    k.len()
                )));
            }
            for (i, f) in k.iter().enumerate() {
                let field = format!("switching.killing[{}]", i + 1);
                f.check(d, &field)?;
                if !f.is_zero() && !matches!(cfg.rates[i][i], RateEntry::Balance) {
                    return Err(Error::config(
                        field,
                        "killing requires a \"balance\" diagonal entry",
                    ));
                }
            }
            k.clone()
        }
    };
    if let Some(lower) = &cfg.strict_lower {
        if lower.len() != m || lower.iter().any(|r| r.len() != m) {
            return Err(Error::Structural(format!("`switching.strict_lower` must be {m}x{m}")));
        }
    }

    let all_zero = cfg.rates.iter().flatten().all(|e| match e {
        RateEntry::Field(f) => f.is_zero(),
        RateEntry::Balance => true,
    }) && killing.iter().all(ScalarField::is_zero);

    let diag_bound = |i: usize| match &cfg.rates[i][i] {
        RateEntry::Field(f) => f.abs_bound(),
        RateEntry::Balance => {
            (0..m)
                .filter(|&j| j != i)
                .map(|j| match &cfg.rates[i][j] {
                    RateEntry::Field(f) => f.abs_bound(),
                    RateEntry::Balance => 0.0,
                })
                .sum::<f64>()
                + killing[i].abs_bound()
        }
    };
    let q_max = match cfg.q_max {
        Some(q) => {
            if !(q.is_finite() && q >= 0.0) {
                return Err(Error::config("switching.q_max", "must be finite and non-negative"));
            }
            if q == 0.0 && !all_zero {
                return Err(Error::config(
                    "switching.q_max",
                    "Q_max = 0 but a nonzero switching matrix is declared",
                ));
            }
            q
        }
        None => (0..m).map(diag_bound).fold(0.0, f64::max),
    };

    Ok(Switching {
        rates: cfg.rates.clone(),
        killing,
        q_max,
        strict_lower: cfg.strict_lower.clone(),
        zero: all_zero,
    })
}
