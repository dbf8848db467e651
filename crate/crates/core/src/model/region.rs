use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An open spatial domain: a ball or an axis-aligned box (bounds may be infinite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Region::Box { lo, hi }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    pub fn check(&self, dim: usize, field: &str) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::Structural(format!(
                "`{field}` has dimension {} but the model dimension is {dim}",
                self.dim()
            )));
        }
        match self {
            Region::Ball { center, radius } => {
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::config(format!("{field}.center"), "entries must be finite"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config(format!("{field}.radius"), "radius must be positive"));
                }
            }
            Region::Box { lo, hi } => {
                if hi.len() != lo.len() {
                    return Err(Error::Structural(format!(
                        "`{field}` has lo/hi of different lengths"
                    )));
                }
                if lo.iter().zip(hi).any(|(a, b)| a.is_nan() || b.is_nan() || a >= b) {
                    return Err(Error::config(format!("{field}.lo"), "need lo < hi in every coordinate"));
                }
            }
        }
        Ok(())
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => dist2(x, center) < radius * radius,
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| v > a && v < b),
        }
    }

    /// Membership in the closure.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => dist2(x, center) <= radius * radius,
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| v >= a && v <= b),
        }
    }

    /// Center of a ball, midpoint of a box (finite bounds only).
    pub fn center(&self) -> Vec<f64> {
        match self {
            Region::Ball { center, .. } => center.clone(),
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    /// Smallest ball (for a box: the circumscribed ball) containing the region.
    pub fn containing_ball(&self) -> (Vec<f64>, f64) {
        match self {
            Region::Ball { center, radius } => (center.clone(), *radius),
            Region::Box { lo, hi } => {
                let r = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| 0.25 * (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt();
                (self.center(), r)
            }
        }
    }

    pub fn inradius(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => *radius,
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| 0.5 * (b - a))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            Region::Ball { .. } => true,
            Region::Box { lo, hi } => lo.iter().chain(hi).all(|v| v.is_finite()),
        }
    }

    /// Distance from `x` to the complement (zero outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        (0..self.face_count())
            .map(|f| self.face_gap(f, x))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub(crate) fn face_count(&self) -> usize {
        match self {
            Region::Ball { .. } => 1,
            Region::Box { lo, .. } => 2 * lo.len(),
        }
    }

    /// Signed distance from `x` to the supporting surface of `face`, positive on the inside.
    pub(crate) fn face_gap(&self, face: usize, x: &[f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => radius - dist2(x, center).sqrt(),
            Region::Box { lo, hi } => {
                let k = face / 2;
                if face % 2 == 0 {
                    x[k] - lo[k]
                } else {
                    hi[k] - x[k]
                }
            }
        }
    }

    /// Outward unit normal of `face` at the point of the face nearest to `x`.
    pub(crate) fn face_normal(&self, face: usize, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            Region::Ball { center, .. } => {
                let r = dist2(x, center).sqrt();
                if r > 0.0 {
                    for ((o, a), c) in out.iter_mut().zip(x).zip(center) {
                        *o = (a - c) / r;
                    }
                } else {
                    out[0] = 1.0;
                }
            }
            Region::Box { .. } => {
                out[face / 2] = if face % 2 == 0 { -1.0 } else { 1.0 };
            }
        }
    }

    /// Moves `y` onto `face`, guaranteeing the result is not in the open set.
    pub(crate) fn project_onto_face(&self, face: usize, y: &mut [f64]) {
        match self {
            Region::Ball { center, radius } => {
                let r = dist2(y, center).sqrt();
                if r == 0.0 {
                    y[0] = center[0] + radius;
                    return;
                }
                let mut scale = radius / r;
                loop {
                    let p: Vec<f64> = y
                        .iter()
                        .zip(center)
                        .map(|(a, c)| c + (a - c) * scale)
                        .collect();
                    if !self.contains(&p) {
                        y.copy_from_slice(&p);
                        return;
                    }
                    scale *= 1.0 + 4.0 * f64::EPSILON;
                }
            }
            Region::Box { lo, hi } => {
                let k = face / 2;
                y[k] = if face % 2 == 0 { lo[k] } else { hi[k] };
            }
        }
    }

    /// Moves a point that has left the open set onto the nearest boundary point.
    pub(crate) fn project_outside_point(&self, y: &mut [f64]) {
        match self {
            Region::Ball { .. } => self.project_onto_face(0, y),
            Region::Box { lo, hi } => {
                for ((v, a), b) in y.iter_mut().zip(lo).zip(hi) {
                    *v = v.clamp(*a, *b);
                }
            }
        }
    }

    /// Euclidean distance from `x` to the closed set, with the nearest point written to `near`.
    pub(crate) fn distance_to_closure(&self, x: &[f64], near: &mut [f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => {
                let r = dist2(x, center).sqrt();
                if r <= *radius {
                    near.copy_from_slice(x);
                    0.0
                } else {
                    for ((n, a), c) in near.iter_mut().zip(x).zip(center) {
                        *n = c + (a - c) * radius / r;
                    }
                    r - radius
                }
            }
            Region::Box { lo, hi } => {
                for (((n, v), a), b) in near.iter_mut().zip(x).zip(lo).zip(hi) {
                    *n = v.clamp(*a, *b);
                }
                dist2(x, near).sqrt()
            }
        }
    }

    /// Uniform sample from the region (bounded regions only).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.bounding_box();
        loop {
            let x: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                .collect();
            if self.contains(&x) {
                return x;
            }
        }
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}
