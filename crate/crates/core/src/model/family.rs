//! Bounded parametric scalar families used for every state-dependent coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded scalar function of position.
///
/// In configuration files a bare number is shorthand for `constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScalarRepr", into = "ScalarRepr")]
pub enum ScalarField {
    Constant(f64),
    /// `clamp(offset + slope . x, lo, hi)`
    AffineClamped {
        offset: f64,
        slope: Vec<f64>,
        lo: f64,
        hi: f64,
    },
    /// `base + amplitude * exp(-|x - center|^2 / width^2)`
    RadialBump {
        base: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// `lo + (hi - lo) / (1 + exp(-steepness * (weights . x - threshold)))`
    Logistic {
        lo: f64,
        hi: f64,
        weights: Vec<f64>,
        threshold: f64,
        steepness: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Number(f64),
    Family(FamilyRepr),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum FamilyRepr {
    Constant {
        value: f64,
    },
    AffineClamped {
        offset: f64,
        slope: Vec<f64>,
        lo: f64,
        hi: f64,
    },
    RadialBump {
        base: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    Logistic {
        lo: f64,
        hi: f64,
        weights: Vec<f64>,
        threshold: f64,
        steepness: f64,
    },
}

impl TryFrom<ScalarRepr> for ScalarField {
    type Error = String;

    fn try_from(r: ScalarRepr) -> std::result::Result<Self, String> {
        Ok(match r {
            ScalarRepr::Number(v) => ScalarField::Constant(v),
            ScalarRepr::Family(f) => match f {
                FamilyRepr::Constant { value } => ScalarField::Constant(value),
                FamilyRepr::AffineClamped {
                    offset,
                    slope,
                    lo,
                    hi,
                } => ScalarField::AffineClamped {
                    offset,
                    slope,
                    lo,
                    hi,
                },
                FamilyRepr::RadialBump {
                    base,
                    amplitude,
                    center,
                    width,
                } => ScalarField::RadialBump {
                    base,
                    amplitude,
                    center,
                    width,
                },
                FamilyRepr::Logistic {
                    lo,
                    hi,
                    weights,
                    threshold,
                    steepness,
                } => ScalarField::Logistic {
                    lo,
                    hi,
                    weights,
                    threshold,
                    steepness,
                },
            },
        })
    }
}

impl From<ScalarField> for ScalarRepr {
    fn from(f: ScalarField) -> Self {
        match f {
            ScalarField::Constant(v) => ScalarRepr::Number(v),
            ScalarField::AffineClamped {
                offset,
                slope,
                lo,
                hi,
            } => ScalarRepr::Family(FamilyRepr::AffineClamped {
                offset,
                slope,
                lo,
                hi,
            }),
            ScalarField::RadialBump {
                base,
                amplitude,
                center,
                width,
            } => ScalarRepr::Family(FamilyRepr::RadialBump {
                base,
                amplitude,
                center,
                width,
            }),
            ScalarField::Logistic {
                lo,
                hi,
                weights,
                threshold,
                steepness,
            } => ScalarRepr::Family(FamilyRepr::Logistic {
                lo,
                hi,
                weights,
                threshold,
                steepness,
            }),
        }
    }
}

impl Default for ScalarField {
    fn default() -> Self {
        ScalarField::Constant(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl ScalarField {
    pub fn constant(v: f64) -> Self {
        ScalarField::Constant(v)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::AffineClamped {
                offset,
                slope,
                lo,
                hi,
            } => (offset + dot(slope, x)).clamp(*lo, *hi),
            ScalarField::RadialBump {
                base,
                amplitude,
                center,
                width,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                base + amplitude * (-r2 / (width * width)).exp()
            }
            ScalarField::Logistic {
                lo,
                hi,
                weights,
                threshold,
                steepness,
            } => {
                let s = steepness * (dot(weights, x) - threshold);
                lo + (hi - lo) / (1.0 + (-s).exp())
            }
        }
    }

    /// Closed interval guaranteed to contain every value of the family.
    pub fn range(&self) -> (f64, f64) {
        match self {
            ScalarField::Constant(v) => (*v, *v),
            ScalarField::AffineClamped { lo, hi, .. } => (*lo, *hi),
            ScalarField::RadialBump {
                base, amplitude, ..
            } => {
                let peak = base + amplitude;
                (base.min(peak), base.max(peak))
            }
            ScalarField::Logistic { lo, hi, .. } => (lo.min(*hi), lo.max(*hi)),
        }
    }

    /// Declared bound on `|f|`.
    pub fn abs_bound(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Constant(v) if *v == 0.0)
    }

    /// Parameter sanity for a family evaluated on `R^dim`.
    pub fn check(&self, dim: usize, field: &str) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    format!("{field}.{name}"),
                    "must be a finite number",
                ))
            }
        };
        let len = |name: &str, v: &[f64]| {
            if v.len() != dim {
                Err(Error::Structural(format!(
                    "`{field}.{name}` has length {} but the dimension is {dim}",
                    v.len()
                )))
            } else if v.iter().any(|c| !c.is_finite()) {
                Err(Error::config(
                    format!("{field}.{name}"),
                    "entries must be finite",
                ))
            } else {
                Ok(())
            }
        };
        match self {
            ScalarField::Constant(v) => finite("value", *v),
            ScalarField::AffineClamped {
                offset,
                slope,
                lo,
                hi,
            } => {
                finite("offset", *offset)?;
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                len("slope", slope)?;
                if lo > hi {
                    return Err(Error::config(format!("{field}.lo"), "lo must not exceed hi"));
                }
                Ok(())
            }
            ScalarField::RadialBump {
                base,
                amplitude,
                center,
                width,
            } => {
                finite("base", *base)?;
                finite("amplitude", *amplitude)?;
                len("center", center)?;
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::config(format!("{field}.width"), "width must be positive"));
                }
                Ok(())
            }
            ScalarField::Logistic {
                lo,
                hi,
                weights,
                threshold,
                steepness,
            } => {
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                finite("threshold", *threshold)?;
                finite("steepness", *steepness)?;
                len("weights", weights)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Deserialize)]
    struct Holder {
        f: ScalarField,
    }

    fn parse(s: &str) -> std::result::Result<ScalarField, toml::de::Error> {
        toml::from_str::<Holder>(s).map(|h| h.f)
    }

    #[test]
    fn number_is_constant_shorthand() {
        assert_eq!(parse("f = 2.5").unwrap(), ScalarField::Constant(2.5));
        assert_eq!(
            parse("f = { family = \"constant\", value = 1.0 }").unwrap(),
            ScalarField::Constant(1.0)
        );
    }

    #[test]
    fn families_parse_and_stay_in_range() {
        let f = parse(
            "f = { family = \"logistic\", lo = 0.5, hi = 2.0, weights = [1.0], threshold = 0.0, steepness = 4.0 }",
        )
        .unwrap();
        let (lo, hi) = f.range();
        for k in -50..=50 {
            let v = f.eval(&[k as f64 * 0.1]);
            assert!(v >= lo && v <= hi);
        }
        assert!((f.eval(&[0.0]) - 1.25).abs() < 1e-12);

        let g = parse(
            "f = { family = \"affine_clamped\", offset = 0.0, slope = [2.0], lo = -1.0, hi = 1.0 }",
        )
        .unwrap();
        assert_eq!(g.eval(&[3.0]), 1.0);
        assert_eq!(g.eval(&[0.25]), 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("f = { family = \"constant\", value = 1.0, extra = 2 }").is_err());
    }

    #[test]
    fn malformed_parameters_name_the_field() {
        let f = ScalarField::RadialBump {
            base: 0.0,
            amplitude: 1.0,
            center: vec![0.0],
            width: 0.0,
        };
        match f.check(1, "regimes[1].drift[1]") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "regimes[1].drift[1].width"),
            other => panic!("unexpected {other:?}"),
        }
        let g = ScalarField::AffineClamped {
            offset: 0.0,
            slope: vec![1.0, 2.0],
            lo: 0.0,
            hi: 1.0,
        };
        assert!(matches!(g.check(1, "x"), Err(Error::Structural(_))));
    }
}
