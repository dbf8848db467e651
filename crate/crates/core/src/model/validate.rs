//! Sample-based checks of the standing assumptions on a [`ModelSpec`].

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelSpec, RateEntry, Region};
use crate::error::{Error, Result};

const DEFAULT_SAMPLES: usize = 10_000;
const DEFAULT_HALF_WIDTH: f64 = 2.0;
const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotDeclared,
}

/// Sample point at which a check failed. Regimes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub regime: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    pub usable: bool,
    pub samples: usize,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Deterministic uniform sample of the model's assumption-check box.
pub fn sample_points(spec: &ModelSpec) -> Vec<Vec<f64>> {
    let a = &spec.config().assumptions;
    let d = spec.dim();
    let lo = a.sample_lo.clone().unwrap_or_else(|| vec![-DEFAULT_HALF_WIDTH; d]);
    let hi = a.sample_hi.clone().unwrap_or_else(|| vec![DEFAULT_HALF_WIDTH; d]);
    let n = a.samples.unwrap_or(DEFAULT_SAMPLES);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
    (0..n)
        .map(|_| {
            lo.iter()
                .zip(&hi)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let points = sample_points(spec);
    let checks = vec![
        check_bounded(spec, &points),
        check_ellipticity(spec, &points),
        check_jumps(spec, &points),
        check_switching(spec, &points),
        check_comparability(spec, &points),
    ];
    let usable = checks
        .iter()
        .filter(|c| c.name != "A4")
        .all(|c| c.status != CheckStatus::Fail);
    ValidationReport {
        checks,
        usable,
        samples: points.len(),
    }
}

fn pass(name: &str, detail: impl Into<String>) -> AssumptionCheck {
    AssumptionCheck {
        name: name.into(),
        status: CheckStatus::Pass,
        detail: detail.into(),
        witness: None,
    }
}

fn fail(name: &str, detail: impl Into<String>, witness: Witness) -> AssumptionCheck {
    AssumptionCheck {
        name: name.into(),
        status: CheckStatus::Fail,
        detail: detail.into(),
        witness: Some(witness),
    }
}

fn check_bounded(spec: &ModelSpec, points: &[Vec<f64>]) -> AssumptionCheck {
    let d = spec.dim();
    let mut b = vec![0.0; d];
    let mut sup_b: f64 = 0.0;
    let mut sup_q: f64 = 0.0;
    for x in points {
        for i in 0..spec.regimes() {
            spec.drift(x, i, &mut b);
            for (k, (v, f)) in b.iter().zip(spec.drift_fields(i)).enumerate() {
                let (lo, hi) = f.range();
                if !v.is_finite() || *v < lo - TOL || *v > hi + TOL {
                    return fail(
                        "A1",
                        "drift exceeds its declared bound",
                        Witness {
                            point: x.clone(),
                            regime: i + 1,
                            xi: None,
                            value: *v,
                            field: Some(format!("regimes[{}].drift[{}]", i + 1, k + 1)),
                        },
                    );
                }
                sup_b = sup_b.max(v.abs());
            }
            if let Some(f) = spec.diffusion_factor(i) {
                let v = f.eval(x);
                let (lo, hi) = f.range();
                if !v.is_finite() || v < lo - TOL || v > hi + TOL {
                    return fail(
                        "A1",
                        "diffusion factor exceeds its declared bound",
                        Witness {
                            point: x.clone(),
                            regime: i + 1,
                            xi: None,
                            value: v,
                            field: Some(format!("regimes[{}].diffusion.factor", i + 1)),
                        },
                    );
                }
            }
            for j in 0..spec.regimes() {
                let q = spec.rate(x, i, j);
                if !q.is_finite() {
                    return fail(
                        "A1",
                        "switching rate is not finite",
                        Witness {
                            point: x.clone(),
                            regime: i + 1,
                            xi: None,
                            value: q,
                            field: Some(format!("switching.rates[{}][{}]", i + 1, j + 1)),
                        },
                    );
                }
                sup_q = sup_q.max(q.abs());
            }
        }
    }
    pass(
        "A1",
        format!("sup |b| = {sup_b:.6}, sup |q| = {sup_q:.6} over {} points", points.len()),
    )
}

/// Eigenvalue range of `a(x, i)` over a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityBounds {
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    /// `[min, max]` lies in `[kappa0, 1/kappa0]`; `None` when no `kappa0` is declared.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub argmin: Witness,
    pub argmax: Witness,
}

pub fn ellipticity_bounds(
    spec: &ModelSpec,
    sample_points: &[(Vec<f64>, usize)],
) -> Result<EllipticityBounds> {
    if sample_points.is_empty() {
        return Err(Error::Usage("ellipticity_bounds needs at least one sample point".into()));
    }
    let d = spec.dim();
    let mut lo = (f64::INFINITY, None);
    let mut hi = (f64::NEG_INFINITY, None);
    for (x, i) in sample_points {
        if *i >= spec.regimes() {
            return Err(Error::Usage(format!("regime {} out of range", i + 1)));
        }
        let a = spec.diffusion_matrix(x, *i);
        for k in 0..d {
            for l in 0..k {
                if (a[k * d + l] - a[l * d + k]).abs() > 1e-12 {
                    return Err(Error::Structural(format!(
                        "a(x, {}) is not symmetric at {x:?}",
                        i + 1
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &a));
        for (n, &v) in eig.eigenvalues.iter().enumerate() {
            let w = || Witness {
                point: x.clone(),
                regime: i + 1,
                xi: Some(eig.eigenvectors.column(n).iter().copied().collect()),
                value: v,
                field: Some(format!("regimes[{}].diffusion", i + 1)),
            };
            if v < lo.0 {
                lo = (v, Some(w()));
            }
            if v > hi.0 {
                hi = (v, Some(w()));
            }
        }
    }
    let kappa0 = spec.config().assumptions.kappa0;
    let pass = kappa0.map(|k| lo.0 >= k - TOL && hi.0 <= 1.0 / k + TOL);
    Ok(EllipticityBounds {
        min: lo.0,
        max: hi.0,
        kappa0,
        pass,
        argmin: lo.1.expect("nonempty"),
        argmax: hi.1.expect("nonempty"),
    })
}

fn check_ellipticity(spec: &ModelSpec, points: &[Vec<f64>]) -> AssumptionCheck {
    let pairs: Vec<(Vec<f64>, usize)> = points
        .iter()
        .flat_map(|x| (0..spec.regimes()).map(move |i| (x.clone(), i)))
        .collect();
    let b = match ellipticity_bounds(spec, &pairs) {
        Ok(b) => b,
        Err(e) => {
            return AssumptionCheck {
                name: "A2".into(),
                status: CheckStatus::Fail,
                detail: e.to_string(),
                witness: None,
            }
        }
    };
    let range = format!("eigenvalues in [{:.6}, {:.6}]", b.min, b.max);
    match (b.kappa0, b.pass) {
        (Some(k), Some(true)) => pass("A2", format!("{range} within [{k}, {}]", 1.0 / k)),
        (Some(k), _) => {
            let witness = if b.min < k - TOL { b.argmin } else { b.argmax };
            fail("A2", format!("{range} not within [{k}, {}]", 1.0 / k), witness)
        }
        (None, _) if b.min <= 0.0 => fail("A2", format!("{range}: degenerate diffusion"), b.argmin),
        (None, _) => AssumptionCheck {
            name: "A2".into(),
            status: CheckStatus::NotDeclared,
            detail: format!(
                "{range}; kappa0 not declared (largest admissible value {:.6})",
                b.min.min(1.0 / b.max).min(1.0)
            ),
            witness: None,
        },
    }
}

fn check_jumps(spec: &ModelSpec, points: &[Vec<f64>]) -> AssumptionCheck {
    let d = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4133);
    let mut z = vec![0.0; d];
    for i in 0..spec.regimes() {
        for (n, k) in spec.kernels(i).iter().enumerate() {
            for x in points {
                k.density.sample(&mut rng, &mut z);
                let r = k.ratio(x, &z);
                if !(0.0..=1.0).contains(&r) {
                    return fail(
                        "A3",
                        "thinning ratio r(x, z) outside [0, 1]",
                        Witness {
                            point: x.clone(),
                            regime: i + 1,
                            xi: Some(z.clone()),
                            value: r,
                            field: Some(format!("regime {} kernel {}", i + 1, n + 1)),
                        },
                    );
                }
            }
        }
    }
    let moment = (0..spec.regimes())
        .map(|i| {
            spec.kernels(i)
                .iter()
                .map(|k| k.truncated_second_moment_bound(d))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    match spec.config().assumptions.pi_bound {
        Some(k1) if moment > k1 + TOL => fail(
            "A3",
            format!("int (1 ^ |z|^2) Pi(dz) ~ {moment:.6} exceeds declared {k1}"),
            Witness {
                point: vec![],
                regime: 0,
                xi: None,
                value: moment,
                field: Some("assumptions.pi_bound".into()),
            },
        ),
        _ => pass(
            "A3",
            format!("finite intensities, ratios in [0, 1], int (1 ^ |z|^2) Pi(dz) ~ {moment:.6}"),
        ),
    }
}

fn check_switching(spec: &ModelSpec, points: &[Vec<f64>]) -> AssumptionCheck {
    let m = spec.regimes();
    let qmax = spec.q_max();
    let w = |x: &Vec<f64>, i: usize, j: usize, v: f64| Witness {
        point: x.clone(),
        regime: i + 1,
        xi: None,
        value: v,
        field: Some(format!("switching.rates[{}][{}]", i + 1, j + 1)),
    };
    for x in points {
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                let q = spec.rate(x, i, j);
                row += q;
                if i != j && q < 0.0 {
                    return fail("Q", format!("negative off-diagonal rate q_{}{}", i + 1, j + 1), w(x, i, j, q));
                }
                if i == j && q.abs() > qmax + TOL {
                    return fail(
                        "Q",
                        format!("|q_{0}{0}| exceeds the uniformization rate {qmax}", i + 1),
                        w(x, i, i, q),
                    );
                }
            }
            if row > TOL {
                let field = match spec.rate_entry(i, i) {
                    Some(RateEntry::Balance) => format!("switching.killing[{}]", i + 1),
                    _ => format!("switching.rates[{}][{}]", i + 1, i + 1),
                };
                return fail(
                    "Q",
                    format!("row {} sums to {row} > 0 (not sub-Markovian)", i + 1),
                    Witness {
                        field: Some(field),
                        ..w(x, i, i, row)
                    },
                );
            }
        }
    }
    pass("Q", format!("sub-Markovian with Q_max = {qmax}"))
}

fn check_comparability(spec: &ModelSpec, points: &[Vec<f64>]) -> AssumptionCheck {
    let d = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4134);
    let mut any = false;
    let mut worst: f64 = 0.0;
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let n2: f64 = v.iter().map(|c| c * c).sum();
            if n2 > 1e-6 && n2 <= 1.0 {
                let n = n2.sqrt();
                return v.into_iter().map(|c| c / n).collect();
            }
        }
    };
    for i in 0..spec.regimes() {
        for k in spec.kernels(i) {
            let Some(meta) = k.harnack else { continue };
            any = true;
            let (slo, shi) = k.density.support_box(d);
            let reach = slo
                .iter()
                .chain(&shi)
                .fold(0.0f64, |a, v| a.max(v.abs()));
            for x0 in points {
                let r = rng.random::<f64>().max(1e-3);
                let alpha = (meta.kappa2 * r.powf(-meta.beta)).max(1.0);
                let inner = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                    let u = unit(rng);
                    let s = 0.5 * r * rng.random::<f64>();
                    x0.iter().zip(&u).map(|(a, b)| a + s * b).collect()
                };
                let x = inner(&mut rng);
                let y = inner(&mut rng);
                let u = unit(&mut rng);
                let s = r + (reach + r) * rng.random::<f64>();
                let z: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + s * b).collect();
                let zx: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
                let zy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
                let px = k.density_at(&x, &zx);
                let py = k.density_at(&y, &zy);
                if px <= 0.0 {
                    continue;
                }
                let ratio = if py > 0.0 { px / py } else { f64::INFINITY };
                worst = worst.max(ratio / alpha);
                if ratio > alpha * (1.0 + 1e-9) {
                    return fail(
                        "A4",
                        format!("kernel density ratio {ratio:.4} exceeds alpha_r = {alpha:.4} at r = {r:.4}"),
                        Witness {
                            point: x,
                            regime: i + 1,
                            xi: Some(z),
                            value: ratio,
                            field: Some(format!("jumps (regime {}).harnack", i + 1)),
                        },
                    );
                }
            }
        }
    }
    if any {
        pass("A4", format!("worst ratio / alpha_r = {worst:.4}"))
    } else {
        AssumptionCheck {
            name: "A4".into(),
            status: CheckStatus::NotDeclared,
            detail: "no kernel declares comparability constants".into(),
            witness: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrreducibilityMode {
    Irreducible,
    Strict,
}

/// Connecting regime path for an ordered pair (1-based), or `None` when disconnected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPath {
    pub from: usize,
    pub to: usize,
    pub path: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    pub mode: IrreducibilityMode,
    pub passed: bool,
    /// `(i, j, fraction of samples with q_ij > 0, sampled infimum)`, 1-based.
    pub links: Vec<(usize, usize, f64, f64)>,
    pub pairs: Vec<PairPath>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(usize, usize)>,
}

pub fn irreducibility_check(
    spec: &ModelSpec,
    region: &Region,
    mode: IrreducibilityMode,
    sample_points: &[Vec<f64>],
) -> Result<IrreducibilityReport> {
    let inside: Vec<&Vec<f64>> = sample_points.iter().filter(|x| region.contains(x)).collect();
    if inside.is_empty() {
        return Err(Error::Usage(
            "irreducibility_check needs sample points inside the region".into(),
        ));
    }
    let m = spec.regimes();
    let lower = spec.strict_lower();
    let mut adj = vec![vec![false; m]; m];
    let mut links = Vec::new();
    let mut witness = None;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let mut positive = 0usize;
            let mut inf = f64::INFINITY;
            for x in &inside {
                let q = spec.rate(x, i, j);
                if q > 0.0 {
                    positive += 1;
                }
                inf = inf.min(q);
            }
            let frac = positive as f64 / inside.len() as f64;
            adj[i][j] = match mode {
                IrreducibilityMode::Irreducible => positive > 0,
                IrreducibilityMode::Strict => {
                    let floor = lower.map_or(0.0, |l| l[i][j]);
                    inf > 0.0 && inf >= floor && (lower.is_none() || floor > 0.0)
                }
            };
            if mode == IrreducibilityMode::Strict && !adj[i][j] && witness.is_none() {
                witness = Some((i + 1, j + 1));
            }
            links.push((i + 1, j + 1, frac, inf));
        }
    }
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let path = bfs(&adj, i, j).map(|p| p.into_iter().map(|k| k + 1).collect());
            if path.is_none() && witness.is_none() {
                witness = Some((i + 1, j + 1));
            }
            pairs.push(PairPath {
                from: i + 1,
                to: j + 1,
                path,
            });
        }
    }
    Ok(IrreducibilityReport {
        mode,
        passed: witness.is_none(),
        links,
        pairs,
        witness,
    })
}

fn bfs(adj: &[Vec<bool>], from: usize, to: usize) -> Option<Vec<usize>> {
    let m = adj.len();
    let mut prev = vec![usize::MAX; m];
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for v in 0..m {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(body: &str) -> ModelSpec {
        ModelSpec::from_toml_str(body).unwrap()
    }

    const SIMPLE: &str = r#"
[dimensions]
d = 1
m = 2
[assumptions]
kappa0 = 1.0
samples = 500
[[regimes]]
diffusion = { matrix = [[1.0]] }
[[regimes]]
diffusion = { matrix = [[1.0]] }
[switching]
rates = [["balance", 1.0], [1.0, "balance"]]
"#;

    #[test]
    fn constant_model_passes_everything() {
        let r = validate_model(&model(SIMPLE));
        assert!(r.usable);
        for name in ["A1", "A2", "A3", "Q"] {
            assert_eq!(r.check(name).unwrap().status, CheckStatus::Pass, "{name}");
        }
        assert_eq!(r.check("A4").unwrap().status, CheckStatus::NotDeclared);
    }

    #[test]
    fn validation_is_pure() {
        let spec = model(SIMPLE);
        assert_eq!(validate_model(&spec), validate_model(&spec));
    }

    #[test]
    fn ellipticity_failure_reports_first_axis() {
        let src = "[dimensions]\nd = 2\nm = 1\n[assumptions]\nkappa0 = 1.0\nsamples = 10\n[[regimes]]\ndiffusion = { matrix = [[2.0, 0.0], [0.0, 1.0]] }\n";
        let r = validate_model(&model(src));
        let a2 = r.check("A2").unwrap();
        assert_eq!(a2.status, CheckStatus::Fail);
        let xi = a2.witness.as_ref().unwrap().xi.clone().unwrap();
        assert!((xi[0].abs() - 1.0).abs() < 1e-12 && xi[1].abs() < 1e-12);
        assert!(!r.usable);
    }

    #[test]
    fn negative_off_diagonal_fails_with_field() {
        let src = SIMPLE.replace("[\"balance\", 1.0]", "[\"balance\", -1.0]");
        let r = validate_model(&model(&src));
        let q = r.check("Q").unwrap();
        assert_eq!(q.status, CheckStatus::Fail);
        assert_eq!(
            q.witness.as_ref().unwrap().field.as_deref(),
            Some("switching.rates[1][2]")
        );
        assert!(!r.usable);
    }

    #[test]
    fn ellipticity_bound_examples() {
        let spec = model("[dimensions]\nd = 2\nm = 1\n[[regimes]]\ndiffusion = { matrix = [[2.0, 0.0], [0.0, 0.5]] }\n");
        let b = ellipticity_bounds(&spec, &[(vec![0.0, 0.0], 0)]).unwrap();
        assert!((b.min - 0.5).abs() < 1e-12 && (b.max - 2.0).abs() < 1e-12);
        assert_eq!(b.pass, None);

        let id = model(SIMPLE);
        let b = ellipticity_bounds(&id, &[(vec![0.3], 0), (vec![-0.3], 1)]).unwrap();
        assert_eq!((b.min, b.max, b.pass), (1.0, 1.0, Some(true)));

        let singular = model("[dimensions]\nd = 2\nm = 1\n[assumptions]\nkappa0 = 0.01\n[[regimes]]\ndiffusion = { matrix = [[1.0, 1.0], [1.0, 1.0]] }\n");
        let b = ellipticity_bounds(&singular, &[(vec![0.0, 0.0], 0)]).unwrap();
        assert!(b.min.abs() < 1e-12);
        assert_eq!(b.pass, Some(false));

        assert!(matches!(ellipticity_bounds(&id, &[]), Err(Error::Usage(_))));
    }

    #[test]
    fn irreducibility_examples() {
        let d = Region::interval(-1.0, 1.0);
        let pts: Vec<Vec<f64>> = (0..21).map(|k| vec![-0.95 + 0.095 * k as f64]).collect();

        let r = irreducibility_check(&model(SIMPLE), &d, IrreducibilityMode::Strict, &pts).unwrap();
        assert!(r.passed);
        assert_eq!(r.pairs[0].path, Some(vec![1, 2]));
        assert_eq!(r.pairs[1].path, Some(vec![2, 1]));

        let absent = SIMPLE.replace("[\"balance\", 1.0]", "[\"balance\", 0.0]");
        let r = irreducibility_check(&model(&absent), &d, IrreducibilityMode::Irreducible, &pts)
            .unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness, Some((1, 2)));

        let cycle = r#"
[dimensions]
d = 1
m = 3
[[regimes]]
diffusion = { matrix = [[1.0]] }
[[regimes]]
diffusion = { matrix = [[1.0]] }
[[regimes]]
diffusion = { matrix = [[1.0]] }
[switching]
rates = [["balance", 1.0, 0.0], [0.0, "balance", 1.0], [1.0, 0.0, "balance"]]
"#;
        let r = irreducibility_check(&model(cycle), &d, IrreducibilityMode::Irreducible, &pts)
            .unwrap();
        assert!(r.passed);
        let p13 = r.pairs.iter().find(|p| p.from == 1 && p.to == 3).unwrap();
        assert_eq!(p13.path, Some(vec![1, 2, 3]));
        let strict = irreducibility_check(&model(cycle), &d, IrreducibilityMode::Strict, &pts)
            .unwrap();
        assert!(!strict.passed);

        assert!(matches!(
            irreducibility_check(&model(SIMPLE), &d, IrreducibilityMode::Strict, &[]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn comparability_spot_check() {
        let gauss = r#"
[dimensions]
d = 1
m = 1
[assumptions]
samples = 2000
[[regimes]]
diffusion = { matrix = [[1.0]] }
[[jumps]]
regime = 1
intensity = 1.0
density = { family = "gaussian", std = 0.5 }
harnack = { kappa2 = 1.0, beta = 0.0 }
"#;
        // Gaussian tails are not comparable with a constant alpha.
        let r = validate_model(&model(gauss));
        assert_eq!(r.check("A4").unwrap().status, CheckStatus::Fail);
        assert!(r.usable);
        let generous = gauss.replace("kappa2 = 1.0, beta = 0.0", "kappa2 = 1e300, beta = 0.0");
        let r = validate_model(&model(&generous));
        assert_eq!(r.check("A4").unwrap().status, CheckStatus::Pass);
    }
}
