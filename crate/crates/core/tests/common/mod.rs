//! Shared test helpers: a dense finite-difference oracle for one-dimensional
//! coupled systems and the model configurations used across test targets.
#![allow(dead_code)]

use rsjd::model::{BoundaryData, BoundaryFamily, Compensation, ModelSpec, Region};

/// Solution of
///
/// `a u'' + b u' + ∫ (u(x+z, i) - u(x, i)) π_i(x, dz) + Σ_j q_ij u(x, j) = 0` on `(lo, hi)`,
/// `u = φ` outside,
///
/// on a uniform grid, with the compensated small-jump drift folded into `b`.
pub struct Oracle {
    pub lo: f64,
    pub hi: f64,
    pub dx: f64,
    /// `u[i][n]` at `lo + n dx`, `n = 0..=intervals` (end points hold φ).
    pub u: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl Oracle {
    pub fn at(&self, x: f64, i: usize) -> f64 {
        let s = (x - self.lo) / self.dx;
        let n = (s.floor() as usize).min(self.u[i].len() - 2);
        let f = s - n as f64;
        self.u[i][n] * (1.0 - f) + self.u[i][n + 1] * f
    }
}

/// ∫_{|z|<1} z π(x, dz) by a fine midpoint rule, from the kernel density alone.
fn small_jump_mean(spec: &ModelSpec, i: usize, x: f64) -> f64 {
    let mut total = 0.0;
    for k in spec.kernels(i) {
        if k.compensation != Compensation::Compensated {
            continue;
        }
        let (lo, hi) = k.density.support_box(1);
        let (a, b) = (lo[0].max(-1.0), hi[0].min(1.0));
        let n = 20_000;
        let w = (b - a) / n as f64;
        for c in 0..n {
            let z = a + (c as f64 + 0.5) * w;
            total += z * k.density_at(&[x], &[z]) * w;
        }
    }
    total
}

/// Jump mass of each grid-aligned cell `[k dx - dx/2, k dx + dx/2]`, `k != 0`.
fn cell_weights(spec: &ModelSpec, i: usize, x: f64, dx: f64) -> Vec<(i64, f64)> {
    let mut cells: Vec<(i64, f64)> = Vec::new();
    for k in spec.kernels(i) {
        let (lo, hi) = k.density.support_box(1);
        let first = (lo[0] / dx - 0.5).floor() as i64;
        let last = (hi[0] / dx + 0.5).ceil() as i64;
        for c in first..=last {
            if c == 0 {
                continue;
            }
            let a = (c as f64 - 0.5) * dx;
            let b = (c as f64 + 0.5) * dx;
            let (a, b) = (a.max(lo[0]), b.min(hi[0]));
            if b <= a {
                continue;
            }
            let sub = 8;
            let w = (b - a) / sub as f64;
            let mass: f64 = (0..sub)
                .map(|s| k.density_at(&[x], &[a + (s as f64 + 0.5) * w]) * w)
                .sum();
            if mass > 0.0 {
                match cells.iter_mut().find(|(cc, _)| *cc == c) {
                    Some(e) => e.1 += mass,
                    None => cells.push((c, mass)),
                }
            }
        }
    }
    cells
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for k in 1..n {
        let den = diag[k] - sub[k] * c[k - 1];
        c[k] = sup[k] / den;
        d[k] = (rhs[k] - sub[k] * d[k - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    x
}

/// Solves by iterating exact tridiagonal solves of the local part against the
/// nonlocal and coupling terms until the update falls below `1e-12`.
pub fn solve_1d(spec: &ModelSpec, lo: f64, hi: f64, intervals: usize, phi: &BoundaryData) -> Oracle {
    assert_eq!(spec.dim(), 1);
    let m = spec.regimes();
    let dx = (hi - lo) / intervals as f64;
    let inner = intervals - 1;
    let xs: Vec<f64> = (0..=intervals).map(|n| lo + n as f64 * dx).collect();

    let mut sub = vec![vec![0.0; inner]; m];
    let mut diag = vec![vec![0.0; inner]; m];
    let mut sup = vec![vec![0.0; inner]; m];
    let mut cells = vec![Vec::with_capacity(inner); m];
    let mut q = vec![vec![vec![0.0; inner]; m]; m];
    for i in 0..m {
        for n in 0..inner {
            let x = xs[n + 1];
            let a = spec.diffusion_matrix(&[x], i)[0];
            let mut b = [0.0];
            spec.drift(&[x], i, &mut b);
            let b = b[0] - small_jump_mean(spec, i, x);
            let w = cell_weights(spec, i, x, dx);
            let total: f64 = w.iter().map(|c| c.1).sum();
            for j in 0..m {
                q[i][j][n] = spec.rate(&[x], i, j);
            }
            sub[i][n] = a / (dx * dx) - b / (2.0 * dx);
            sup[i][n] = a / (dx * dx) + b / (2.0 * dx);
            diag[i][n] = -2.0 * a / (dx * dx) - total + q[i][i][n];
            cells[i].push(w);
        }
    }

    let mut u: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut v = vec![0.0; intervals + 1];
            v[0] = phi.eval(&[lo], i);
            v[intervals] = phi.eval(&[hi], i);
            v
        })
        .collect();
    let value = |u: &[Vec<f64>], i: usize, idx: i64| -> f64 {
        if idx <= 0 || idx >= intervals as i64 {
            phi.eval(&[lo + idx as f64 * dx], i)
        } else {
            u[i][idx as usize]
        }
    };
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 0..m {
            let mut rhs = vec![0.0; inner];
            for n in 0..inner {
                let idx = (n + 1) as i64;
                let jump: f64 = cells[i][n].iter().map(|&(c, w)| w * value(&u, i, idx + c)).sum();
                let coupling: f64 = (0..m).filter(|&j| j != i).map(|j| q[i][j][n] * u[j][n + 1]).sum();
                rhs[n] = -(jump + coupling);
            }
            rhs[0] -= sub[i][0] * u[i][0];
            rhs[inner - 1] -= sup[i][inner - 1] * u[i][intervals];
            let sol = thomas(&sub[i], &diag[i], &sup[i], &rhs);
            for n in 0..inner {
                change = change.max((sol[n] - u[i][n + 1]).abs());
                u[i][n + 1] = sol[n];
            }
        }
        if change < 1e-12 || iterations >= 20_000 {
            break;
        }
    }
    Oracle {
        lo,
        hi,
        dx,
        u,
        iterations,
    }
}

pub fn spec(src: &str) -> ModelSpec {
    ModelSpec::from_toml_str(src).expect("test model parses")
}

/// One-dimensional diffusion with `a = 1/2` (generator `½ ∂²`).
pub const BROWNIAN_1D: &str = r#"
[dimensions]
d = 1
m = 1

[[regimes]]
diffusion = { matrix = [[0.5]] }
"#;

/// Two regimes on the line with jumps in both, one compensated asymmetric
/// kernel, and constant switching.
pub const TWO_REGIME_JUMPS: &str = r#"
[dimensions]
d = 1
m = 2

[assumptions]
kappa0 = 0.25

[[regimes]]
diffusion = { matrix = [[0.5]] }

[[regimes]]
drift = [0.2]
diffusion = { matrix = [[0.3]] }

[[jumps]]
regime = 1
intensity = 1.0
density = { family = "uniform_box", lo = [0.0], hi = [0.3] }
compensation = "compensated"

[[jumps]]
regime = 2
intensity = 1.5
density = { family = "uniform_ball", radius = 0.3 }

[switching]
rates = [["balance", 1.0], [1.5, "balance"]]
"#;

/// Two regimes without spatial structure and unit switching rates.
pub const SWITCHING_PAIR: &str = r#"
[dimensions]
d = 1
m = 2

[[regimes]]
diffusion = { matrix = [[0.5]] }

[[regimes]]
diffusion = { matrix = [[0.5]] }

[switching]
rates = [["balance", 1.0], [1.0, "balance"]]
"#;

/// Diffusion plus translation-invariant uniform jumps.
pub const UNIFORM_JUMPS_1D: &str = r#"
[dimensions]
d = 1
m = 1

[[regimes]]
diffusion = { matrix = [[0.5]] }

[[jumps]]
regime = 1
intensity = 2.0
density = { family = "uniform_ball", radius = 0.5 }
"#;

/// Reflection-symmetric (about 0) two-regime model with symmetric jumps.
pub const SYMMETRIC_TWO_REGIME: &str = r#"
[dimensions]
d = 1
m = 2

[[regimes]]
diffusion = { matrix = [[1.0]] }

[[regimes]]
diffusion = { matrix = [[0.6]] }

[[jumps]]
regime = 1
intensity = 1.0
density = { family = "uniform_ball", radius = 0.3 }

[[jumps]]
regime = 2
intensity = 2.0
density = { family = "uniform_ball", radius = 0.2 }

[switching]
rates = [["balance", 1.0], [1.0, "balance"]]
"#;

/// `a = 1/2` with constant killing rate `k`.
pub fn killed_brownian(k: f64) -> String {
    format!("{BROWNIAN_1D}[switching]\nrates = [[\"balance\"]]\nkilling = [{k}]\n")
}

/// Indicator of `[1, inf)` in every regime.
pub fn right_face(m: usize) -> BoundaryData {
    BoundaryData::uniform(
        BoundaryFamily::Indicator {
            set: Region::interval(1.0, f64::INFINITY),
            value: 1.0,
        },
        m,
    )
}

/// Regime 1 sees the right-face indicator, regime 2 the ramp `0.25 + y / 2`.
pub fn mixed_boundary() -> BoundaryData {
    BoundaryData::per_regime(vec![
        BoundaryFamily::Indicator {
            set: Region::interval(1.0, f64::INFINITY),
            value: 1.0,
        },
        BoundaryFamily::Affine {
            offset: 0.25,
            slope: vec![0.5],
            lo: 0.0,
            hi: 1.0,
        },
    ])
}
