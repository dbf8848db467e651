//! Model configuration schema (TOML).
//!
//! ```toml
//! [dimensions]
//! d = 1
//! m = 2
//!
//! [assumptions]            # optional
//! kappa0 = 0.25            # ellipticity constant
//! pi_bound = 2.0           # bound on int (1 ^ |z|^2) Pi(dz)
//! sample_lo = [-2.0]       # box used for sample-based checks
//! sample_hi = [2.0]
//! samples = 10000
//!
//! [[regimes]]
//! drift = [0.2]                               # one scalar family per component
//! diffusion = { matrix = [[0.5]] }            # a(x,i) = factor(x) * matrix
//!
//! [[regimes]]
//! drift = [{ family = "logistic", lo = -0.1, hi = 0.1, weights = [1.0], threshold = 0.5, steepness = 4.0 }]
//! diffusion = { matrix = [[0.25]], factor = 1.0 }
//!
//! [[jumps]]
//! regime = 1                                  # 1-based
//! intensity = 1.0
//! density = { family = "uniform_ball", radius = 0.3 }
//! state_ratio = 1.0                           # r(x, z) = state_ratio(x) * jump_ratio(z)
//! jump_ratio = 1.0
//! compensation = "plain"                      # or "compensated"
//! harnack = { kappa2 = 2.0, beta = 0.0 }      # optional
//!
//! [switching]
//! rates = [["balance", 1.0], [2.0, "balance"]]
//! killing = [0.0, 0.5]                        # only with "balance" diagonals
//! q_max = 3.0                                 # optional uniformization rate
//! strict_lower = [[0.0, 1.0], [2.0, 0.0]]     # optional declared q_ij^0
//! ```
//!
//! Every section rejects unknown keys.

use serde::{Deserialize, Serialize};

use super::family::ScalarField;
use super::jump::{Compensation, HarnackMeta, JumpDensity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimensions: Dimensions,
    #[serde(default)]
    pub assumptions: AssumptionsConfig,
    pub regimes: Vec<RegimeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<JumpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching: Option<SwitchingConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimensions {
    pub d: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drift: Vec<ScalarField>,
    pub diffusion: DiffusionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<ScalarField>,
}

fn unit() -> ScalarField {
    ScalarField::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub regime: usize,
    pub intensity: f64,
    pub density: JumpDensity,
    #[serde(default = "unit")]
    pub state_ratio: ScalarField,
    #[serde(default = "unit")]
    pub jump_ratio: ScalarField,
    #[serde(default)]
    pub compensation: Compensation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harnack: Option<HarnackMeta>,
}

/// A switching-rate entry: a scalar family, or `"balance"` on the diagonal
/// meaning `q_ii = -sum_{j != i} q_ij - killing_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateRepr", into = "RateRepr")]
pub enum RateEntry {
    Balance,
    Field(ScalarField),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RateRepr {
    Field(ScalarField),
    Keyword(String),
}

impl TryFrom<RateRepr> for RateEntry {
    type Error = String;

    fn try_from(r: RateRepr) -> Result<Self, String> {
        match r {
            RateRepr::Field(f) => Ok(RateEntry::Field(f)),
            RateRepr::Keyword(k) if k == "balance" => Ok(RateEntry::Balance),
            RateRepr::Keyword(k) => Err(format!("unknown rate keyword `{k}` (expected \"balance\")")),
        }
    }
}

impl From<RateEntry> for RateRepr {
    fn from(e: RateEntry) -> Self {
        match e {
            RateEntry::Balance => RateRepr::Keyword("balance".into()),
            RateEntry::Field(f) => RateRepr::Field(f),
        }
    }
}

impl From<f64> for RateEntry {
    fn from(v: f64) -> Self {
        RateEntry::Field(ScalarField::Constant(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub rates: Vec<Vec<RateEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub killing: Option<Vec<ScalarField>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_lower: Option<Vec<Vec<f64>>>,
}

impl SwitchingConfig {
    /// Constant Markovian generator from the off-diagonal rates of `q`.
    pub fn constant_markovian(q: &[Vec<f64>]) -> Self {
        let rates = q
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        if i == j {
                            RateEntry::Balance
                        } else {
                            RateEntry::from(*v)
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            rates,
            killing: None,
            q_max: None,
            strict_lower: None,
        }
    }
}
