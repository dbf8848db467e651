//! Finite-activity jump kernels `pi_i(x, dz) = intensity * r_i(x, z) * rho(z) dz`.
//!
//! `rho` is a normalized dominating density and `r_i(x, z) = s(x) * w(z)` is the
//! thinning ratio, split into a state factor and a jump-size factor so that the
//! small-jump compensation integral can be tabulated once.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::family::ScalarField;
use super::region::{dist2, Region};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDensity {
    UniformBall {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Isotropic normal density.
    Gaussian {
        std: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
    },
}

fn dist2_from(z: &[f64], center: &Option<Vec<f64>>) -> f64 {
    match center {
        Some(c) => dist2(z, c),
        None => z.iter().map(|v| v * v).sum(),
    }
}

/// Gaussian densities are integrated over `mean +- GAUSS_CUTOFF * std`.
const GAUSS_CUTOFF: f64 = 8.0;

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

impl JumpDensity {
    fn offset(&self, dim: usize) -> Vec<f64> {
        match self {
            JumpDensity::UniformBall { center, .. } => {
                center.clone().unwrap_or_else(|| vec![0.0; dim])
            }
            JumpDensity::Gaussian { mean, .. } => mean.clone().unwrap_or_else(|| vec![0.0; dim]),
            JumpDensity::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        }
    }

    pub fn check(&self, dim: usize, field: &str) -> Result<()> {
        let vec_ok = |name: &str, v: &[f64]| {
            if v.len() != dim {
                Err(Error::Structural(format!(
                    "`{field}.{name}` has length {} but the dimension is {dim}",
                    v.len()
                )))
            } else if v.iter().any(|c| !c.is_finite()) {
                Err(Error::config(format!("{field}.{name}"), "entries must be finite"))
            } else {
                Ok(())
            }
        };
        match self {
            JumpDensity::UniformBall { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config(format!("{field}.radius"), "must be positive"));
                }
                if let Some(c) = center {
                    vec_ok("center", c)?;
                }
            }
            JumpDensity::UniformBox { lo, hi } => {
                vec_ok("lo", lo)?;
                vec_ok("hi", hi)?;
                if lo.iter().zip(hi).any(|(a, b)| a >= b) {
                    return Err(Error::config(format!("{field}.lo"), "need lo < hi"));
                }
            }
            JumpDensity::Gaussian { std, mean } => {
                if !(std.is_finite() && *std > 0.0) {
                    return Err(Error::config(format!("{field}.std"), "must be positive"));
                }
                if let Some(m) = mean {
                    vec_ok("mean", m)?;
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let dim = out.len();
        match self {
            JumpDensity::UniformBall { radius, center } => {
                loop {
                    for o in out.iter_mut() {
                        *o = 2.0 * rng.random::<f64>() - 1.0;
                    }
                    if out.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                        break;
                    }
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o = *o * radius + center.as_ref().map_or(0.0, |c| c[k]);
                }
            }
            JumpDensity::UniformBox { lo, hi } => {
                for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
                    *o = a + (b - a) * rng.random::<f64>();
                }
            }
            JumpDensity::Gaussian { std, mean } => {
                for (k, o) in out.iter_mut().enumerate().take(dim) {
                    let g: f64 = rng.sample(StandardNormal);
                    *o = mean.as_ref().map_or(0.0, |m| m[k]) + std * g;
                }
            }
        }
    }

    pub fn pdf(&self, z: &[f64]) -> f64 {
        let dim = z.len();
        match self {
            JumpDensity::UniformBall { radius, center } => {
                if dist2_from(z, center) < radius * radius {
                    1.0 / (unit_ball_volume(dim) * radius.powi(dim as i32))
                } else {
                    0.0
                }
            }
            JumpDensity::UniformBox { lo, hi } => {
                let inside = z
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (a, b))| v >= a && v < b);
                if inside {
                    1.0 / lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>()
                } else {
                    0.0
                }
            }
            JumpDensity::Gaussian { std, mean } => {
                let r2 = dist2_from(z, mean);
                let norm = (2.0 * std::f64::consts::PI * std * std).powf(dim as f64 / 2.0);
                (-r2 / (2.0 * std * std)).exp() / norm
            }
        }
    }

    /// Box containing the support (effective support for Gaussians).
    pub fn support_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let c = self.offset(dim);
        match self {
            JumpDensity::UniformBall { radius, .. } => (
                c.iter().map(|v| v - radius).collect(),
                c.iter().map(|v| v + radius).collect(),
            ),
            JumpDensity::UniformBox { lo, hi } => (lo.clone(), hi.clone()),
            JumpDensity::Gaussian { std, .. } => (
                c.iter().map(|v| v - GAUSS_CUTOFF * std).collect(),
                c.iter().map(|v| v + GAUSS_CUTOFF * std).collect(),
            ),
        }
    }
}

/// Composite midpoint rule on a box with `n` nodes per dimension.
pub fn midpoint_box<F: FnMut(&[f64]) -> f64>(lo: &[f64], hi: &[f64], n: usize, mut f: F) -> f64 {
    let dim = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| b <= a) || n == 0 {
        return 0.0;
    }
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / n as f64).collect();
    let cell: f64 = widths.iter().product();
    let mut idx = vec![0usize; dim];
    let mut z = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        for k in 0..dim {
            z[k] = lo[k] + (idx[k] as f64 + 0.5) * widths[k];
        }
        total += f(&z);
        let mut k = 0;
        loop {
            if k == dim {
                return total * cell;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// Jumps enter the generator as `f(x+z) - f(x)`.
    #[default]
    Plain,
    /// The generator also carries `-grad f . z 1{|z|<1}`.
    Compensated,
}

/// Declared constants of the kernel comparability condition: `alpha_r <= kappa2 * r^-beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackMeta {
    pub kappa2: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct JumpKernel {
    pub regime: usize,
    pub intensity: f64,
    pub density: JumpDensity,
    pub state_ratio: ScalarField,
    pub jump_ratio: ScalarField,
    pub compensation: Compensation,
    pub harnack: Option<HarnackMeta>,
    small_jump_mean: Vec<f64>,
    always_accept: bool,
}

fn small_jump_nodes(dim: usize) -> usize {
    match dim {
        1 => 4000,
        2 => 300,
        3 => 60,
        _ => 16,
    }
}

impl JumpKernel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        dim: usize,
        regime: usize,
        intensity: f64,
        density: JumpDensity,
        state_ratio: ScalarField,
        jump_ratio: ScalarField,
        compensation: Compensation,
        harnack: Option<HarnackMeta>,
        field: &str,
    ) -> Result<Self> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(Error::config(
                format!("{field}.intensity"),
                "must be a finite non-negative rate",
            ));
        }
        density.check(dim, &format!("{field}.density"))?;
        state_ratio.check(dim, &format!("{field}.state_ratio"))?;
        jump_ratio.check(dim, &format!("{field}.jump_ratio"))?;
        if let Some(h) = &harnack {
            if !(h.kappa2 > 0.0 && h.beta >= 0.0) {
                return Err(Error::config(
                    format!("{field}.harnack"),
                    "need kappa2 > 0 and beta >= 0",
                ));
            }
        }
        let always_accept = matches!(state_ratio, ScalarField::Constant(v) if v == 1.0)
            && matches!(jump_ratio, ScalarField::Constant(v) if v == 1.0);
        let mut kernel = JumpKernel {
            regime,
            intensity,
            density,
            state_ratio,
            jump_ratio,
            compensation,
            harnack,
            small_jump_mean: vec![0.0; dim],
            always_accept,
        };
        if compensation == Compensation::Compensated {
            kernel.small_jump_mean = kernel.tabulate_small_jump_mean(dim);
        }
        Ok(kernel)
    }

    fn tabulate_small_jump_mean(&self, dim: usize) -> Vec<f64> {
        let (slo, shi) = self.density.support_box(dim);
        let lo: Vec<f64> = slo.iter().map(|v| v.max(-1.0)).collect();
        let hi: Vec<f64> = shi.iter().map(|v| v.min(1.0)).collect();
        (0..dim)
            .map(|k| {
                midpoint_box(&lo, &hi, small_jump_nodes(dim), |z| {
                    if z.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                        z[k] * self.jump_ratio.eval(z) * self.density.pdf(z)
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    /// `r(x, z) = s(x) * w(z)`.
    pub fn ratio(&self, x: &[f64], z: &[f64]) -> f64 {
        if self.always_accept {
            1.0
        } else {
            self.state_ratio.eval(x) * self.jump_ratio.eval(z)
        }
    }

    pub fn always_accepts(&self) -> bool {
        self.always_accept
    }

    /// Lebesgue density of `pi_i(x, dz)` at `z`.
    pub fn density_at(&self, x: &[f64], z: &[f64]) -> f64 {
        let p = self.density.pdf(z);
        if p == 0.0 {
            0.0
        } else {
            self.intensity * self.ratio(x, z) * p
        }
    }

    /// `int_{|z|<1} z pi(x, dz)` for compensated kernels, zero for plain ones.
    pub fn small_jump_drift(&self, x: &[f64], out: &mut [f64]) {
        if self.compensation == Compensation::Plain || self.intensity == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let scale = self.intensity * self.state_ratio.eval(x);
        for (o, m) in out.iter_mut().zip(&self.small_jump_mean) {
            *o = scale * m;
        }
    }

    pub fn small_jump_mean(&self) -> &[f64] {
        &self.small_jump_mean
    }

    /// `pi(x, B - x)` by the midpoint rule with `nodes` points per dimension.
    pub fn mass_into(&self, x: &[f64], target: &Region, nodes: usize) -> f64 {
        if self.intensity == 0.0 {
            return 0.0;
        }
        let dim = x.len();
        let (slo, shi) = self.density.support_box(dim);
        let (blo, bhi) = target.bounding_box();
        let lo: Vec<f64> = (0..dim).map(|k| blo[k].max(slo[k] + x[k])).collect();
        let hi: Vec<f64> = (0..dim).map(|k| bhi[k].min(shi[k] + x[k])).collect();
        let mut z = vec![0.0; dim];
        let integral = midpoint_box(&lo, &hi, nodes, |y| {
            if !target.contains_closed(y) {
                return 0.0;
            }
            for k in 0..dim {
                z[k] = y[k] - x[k];
            }
            self.jump_ratio.eval(&z) * self.density.pdf(&z)
        });
        self.intensity * self.state_ratio.eval(x) * integral
    }

    /// Upper bound on `int (1 ^ |z|^2) pi(x, dz)` over all `x`.
    pub fn truncated_second_moment_bound(&self, dim: usize) -> f64 {
        let (lo, hi) = self.density.support_box(dim);
        let n = small_jump_nodes(dim).min(400);
        let (_, s_hi) = self.state_ratio.range();
        let m = midpoint_box(&lo, &hi, n, |z| {
            let r2: f64 = z.iter().map(|v| v * v).sum();
            r2.min(1.0) * self.jump_ratio.eval(z).max(0.0) * self.density.pdf(z)
        });
        self.intensity * s_hi.max(0.0) * m
    }

    /// Draws a candidate jump into `z` and thins it; returns whether it was accepted.
    pub(crate) fn propose<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R, z: &mut [f64]) -> bool {
        self.density.sample(rng, z);
        if self.always_accept {
            return true;
        }
        let r = self.ratio(x, z);
        rng.random::<f64>() < r
    }
}
