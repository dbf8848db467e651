//! Run configuration: what to compute on a model (region, boundary data,
//! queries, lattice, checks) and how to sample it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryData, BoundaryFamily, Region};
use crate::sampler::{ExitDetection, SamplerConfig, StopRule};
use crate::verify::{HarnackOptions, LevyPair};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<HarmonicSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub exit_detection: ExitDetection,
}

fn default_step() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    100.0
}
fn default_paths() -> usize {
    10_000
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            step: default_step(),
            t_max: default_t_max(),
            seed: 0,
            paths: default_paths(),
            exit_detection: ExitDetection::default(),
        }
    }
}

/// Boundary data: one family for every regime or one per regime (1-based order),
/// with an optional declared supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<BoundaryFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_regime: Option<Vec<BoundaryFamily>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl BoundarySpec {
    pub fn build(&self, regimes: usize, field: &str) -> Result<BoundaryData> {
        let data = match (&self.uniform, &self.per_regime) {
            (Some(f), None) => BoundaryData::uniform(f.clone(), regimes),
            (None, Some(fs)) => BoundaryData::per_regime(fs.clone()),
            _ => {
                return Err(Error::config(field, "give exactly one of `uniform` or `per_regime`"));
            }
        };
        Ok(match self.bound {
            Some(b) => data.with_declared_bound(b),
            None => data,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub x0: Vec<f64>,
    /// 1-based.
    #[serde(default = "first")]
    pub regime: usize,
    pub stop: StopRule,
}

fn first() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub x: Vec<f64>,
    /// 1-based.
    pub regime: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSection {
    pub queries: Vec<Query>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub spacing: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub compare_direct: bool,
}

fn default_max_iter() -> usize {
    crate::coupled_solver::DEFAULT_MAX_ITER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub checks: Vec<CheckSpec>,
}

/// One verification procedure. Regimes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    MaximumPrinciple {
        spacing: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary: Option<BoundarySpec>,
    },
    Positivity {
        spacing: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary: Option<BoundarySpec>,
        #[serde(default = "default_budget")]
        budget: usize,
    },
    Harnack {
        k: Vec<Vec<f64>>,
        family: Vec<BoundarySpec>,
        #[serde(default = "default_sizes")]
        sample_sizes: Vec<usize>,
        #[serde(default = "default_budget")]
        budget: usize,
        #[serde(default)]
        margin: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mirror: Option<Vec<f64>>,
    },
    ExitTime {
        center: Vec<f64>,
        radii: Vec<f64>,
    },
    LevySystem {
        pairs: Vec<LevyPairSpec>,
        horizon: f64,
        x0: Vec<f64>,
        #[serde(default = "first")]
        regime: usize,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Hitting {
        center: Vec<f64>,
        radius: f64,
        target: Vec<f64>,
        start: Vec<f64>,
        #[serde(default = "first")]
        regime: usize,
        #[serde(default = "default_levels")]
        levels: usize,
    },
}

fn default_budget() -> usize {
    1_600_000
}
fn default_sizes() -> Vec<usize> {
    HarnackOptions::default().sample_sizes
}
fn default_nodes() -> usize {
    crate::estimators::DEFAULT_QUADRATURE_NODES
}
fn default_levels() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyPairSpec {
    pub a: Region,
    pub b: Region,
    #[serde(default = "first")]
    pub regime: usize,
}

impl LevyPairSpec {
    pub fn build(&self, regimes: usize) -> Result<LevyPair> {
        Ok(LevyPair {
            a: self.a.clone(),
            b: self.b.clone(),
            regime: zero_based(self.regime, regimes, "levy_system.pairs.regime")?,
        })
    }
}

/// Converts a 1-based regime from a config file.
pub fn zero_based(regime: usize, regimes: usize, field: &str) -> Result<usize> {
    if regime == 0 || regime > regimes {
        return Err(Error::config(field, format!("regime {regime} outside 1..={regimes}")));
    }
    Ok(regime - 1)
}

impl RunConfig {
    pub fn from_toml_str(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| {
            Error::parse_at(source, e.span().map(|s| s.start), e.message().to_string())
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn region(&self) -> Result<&Region> {
        self.region
            .as_ref()
            .ok_or_else(|| Error::config("region", "this command needs a region"))
    }

    pub fn boundary(&self, regimes: usize) -> Result<BoundaryData> {
        self.boundary
            .as_ref()
            .ok_or_else(|| Error::config("boundary", "this command needs boundary data"))?
            .build(regimes, "boundary")
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let s = &self.sampler;
        Ok(SamplerConfig::new(s.step, s.t_max, s.seed)?.with_exit_detection(s.exit_detection))
    }
}
