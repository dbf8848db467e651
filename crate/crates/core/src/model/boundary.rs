use serde::{Deserialize, Serialize};

use super::family::ScalarField;
use super::region::Region;
use crate::error::{Error, Result};

/// One regime's boundary function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryFamily {
    Constant {
        value: f64,
    },
    /// `value` on the closed set, zero elsewhere.
    Indicator {
        set: Region,
        #[serde(default = "one")]
        value: f64,
    },
    /// `base + amplitude * exp(-|y - center|^2 / width^2)`
    Radial {
        center: Vec<f64>,
        base: f64,
        amplitude: f64,
        width: f64,
    },
    /// `clamp(offset + slope . y, lo, hi)`
    Affine {
        offset: f64,
        slope: Vec<f64>,
        lo: f64,
        hi: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl BoundaryFamily {
    fn as_field(&self) -> Option<ScalarField> {
        match self {
            BoundaryFamily::Constant { value } => Some(ScalarField::Constant(*value)),
            BoundaryFamily::Radial {
                center,
                base,
                amplitude,
                width,
            } => Some(ScalarField::RadialBump {
                base: *base,
                amplitude: *amplitude,
                center: center.clone(),
                width: *width,
            }),
            BoundaryFamily::Affine {
                offset,
                slope,
                lo,
                hi,
            } => Some(ScalarField::AffineClamped {
                offset: *offset,
                slope: slope.clone(),
                lo: *lo,
                hi: *hi,
            }),
            BoundaryFamily::Indicator { .. } => None,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            BoundaryFamily::Constant { value } => *value,
            BoundaryFamily::Indicator { set, value } => {
                if set.contains_closed(y) {
                    *value
                } else {
                    0.0
                }
            }
            BoundaryFamily::Radial {
                center,
                base,
                amplitude,
                width,
            } => {
                let r2: f64 = y.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                base + amplitude * (-r2 / (width * width)).exp()
            }
            BoundaryFamily::Affine {
                offset,
                slope,
                lo,
                hi,
            } => (offset + y.iter().zip(slope).map(|(a, s)| a * s).sum::<f64>()).clamp(*lo, *hi),
        }
    }

    /// Range guaranteed by the family's parameters.
    pub fn range(&self) -> (f64, f64) {
        match self {
            BoundaryFamily::Indicator { value, .. } => (value.min(0.0), value.max(0.0)),
            other => other.as_field().expect("scalar family").range(),
        }
    }

    fn check(&self, dim: usize, field: &str) -> Result<()> {
        match self {
            BoundaryFamily::Indicator { set, value } => {
                if !value.is_finite() {
                    return Err(Error::config(format!("{field}.value"), "must be finite"));
                }
                set.check(dim, &format!("{field}.set"))
            }
            other => other.as_field().expect("scalar family").check(dim, field),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            BoundaryFamily::Constant { value } => *value == 0.0,
            BoundaryFamily::Indicator { value, .. } => *value == 0.0,
            BoundaryFamily::Radial {
                base, amplitude, ..
            } => *base == 0.0 && *amplitude == 0.0,
            BoundaryFamily::Affine { lo, hi, .. } => *lo == 0.0 && *hi == 0.0,
        }
    }
}

/// Exterior data `phi(y, i)` together with its declared supremum `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    families: Vec<BoundaryFamily>,
    bound: f64,
}

impl BoundaryData {
    /// Same family in every regime; the bound is the family's supremum.
    pub fn uniform(family: BoundaryFamily, regimes: usize) -> Self {
        Self::per_regime(vec![family; regimes])
    }

    pub fn per_regime(families: Vec<BoundaryFamily>) -> Self {
        let bound = families
            .iter()
            .map(|f| f.range().1)
            .fold(f64::NEG_INFINITY, f64::max);
        Self { families, bound }
    }

    /// Overrides the declared supremum. A bound below the true supremum is a
    /// mis-declared model, which the maximum-principle check reports.
    pub fn with_declared_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn constant(value: f64, regimes: usize) -> Self {
        Self::uniform(BoundaryFamily::Constant { value }, regimes)
    }

    pub fn regimes(&self) -> usize {
        self.families.len()
    }

    pub fn families(&self) -> &[BoundaryFamily] {
        &self.families
    }

    /// Declared `M = sup phi`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, y: &[f64], regime: usize) -> f64 {
        self.families[regime].eval(y)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.families.iter().all(BoundaryFamily::is_zero)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.families.iter().all(|f| f.range().0 >= 0.0)
    }

    pub fn check(&self, dim: usize, regimes: usize) -> Result<()> {
        if self.families.len() != regimes {
            return Err(Error::Structural(format!(
                "boundary data has {} regime entries but the model has {regimes} regimes",
                self.families.len()
            )));
        }
        for (i, f) in self.families.iter().enumerate() {
            f.check(dim, &format!("boundary.per_regime[{}]", i + 1))?;
        }
        if !self.bound.is_finite() {
            return Err(Error::config("boundary.bound", "must be finite"));
        }
        Ok(())
    }
}
