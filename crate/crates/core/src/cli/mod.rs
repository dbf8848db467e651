//! Command-line front end.
//!
//! Exit codes: 0 pass (inconclusive checks included, with a warning), 1
//! statistical failure, 2 configuration or usage error, 3 I/O error, 4
//! pathwise defect (an exact invariant was violated).

pub mod manifest;
pub mod run;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::coupled_solver::{build_lattice, compare_direct, fixed_point_solve, LatticeField};
use crate::error::{Error, Result};
use crate::estimators::estimate_harmonic;
use crate::model::{validate_model, ModelSpec};
use crate::sampler::{sample_paths, write_dump, SamplerConfig, StopRule};
use crate::verify::{
    check_maximum_principle, check_positivity, estimate_harnack_constant, exit_time_bound_suite,
    hitting_lower_bound_check, levy_system_check, render_table, strong_maximum_principle_surrogate,
    HarnackOptions, TheoremReport, Verdict,
};
use manifest::{now_rfc3339, sha256_hex, OutputFile, RunManifest};
use run::{zero_based, CheckSpec, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_STATISTICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PATHWISE: i32 = 4;

/// Discrepancy above this many standard errors fails `solve --compare-direct`.
const DIRECT_Z_LIMIT: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "rsjd", version, about = "Simulate and verify regime-switching jump diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Model configuration (TOML).
    config: PathBuf,
    /// Run configuration (TOML): region, boundary data, queries, checks.
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    /// Worker threads; never changes any number.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "rsjd-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the model assumptions and write validation.json.
    Validate {
        config: PathBuf,
        #[arg(long, default_value = "rsjd-out")]
        out: PathBuf,
    },
    /// Sample trajectories and write the event dump.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Omit diffusion steps from the dump.
        #[arg(long)]
        events_only: bool,
        /// Stop every path at this time (overrides the run file's stop rule).
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Initial regime (1-based).
        #[arg(long)]
        regime: Option<usize>,
    },
    /// Estimate the harmonic function at the run file's query points.
    Harmonic {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the coupled system on a lattice by the frozen-Green fixed point.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the run file's verification checks.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-run a manifest and compare output hashes.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Effective options of a run, as recorded in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub paths: usize,
    pub seed: u64,
    pub step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub format: Format,
    #[serde(default)]
    pub events_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Pass,
    Statistical,
    Pathwise,
}

impl Status {
    fn code(self) -> i32 {
        match self {
            Status::Pass => EXIT_PASS,
            Status::Statistical => EXIT_STATISTICAL,
            Status::Pathwise => EXIT_PATHWISE,
        }
    }
}

/// A fully resolved command: sources plus effective options.
struct Job {
    subcommand: String,
    model_source: String,
    run_source: Option<String>,
    options: Options,
}

struct Outcome {
    status: Status,
    files: Vec<(String, Vec<u8>)>,
    summary: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Structural(_) | Error::Parse { .. } | Error::Usage(_) | Error::Precondition(_) => {
            EXIT_CONFIG
        }
        Error::Divergence(_) => EXIT_STATISTICAL,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_source(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Validate { config, out } => {
            let job = Job {
                subcommand: "validate".into(),
                model_source: read_source(&config)?,
                run_source: None,
                options: Options {
                    paths: 0,
                    seed: 0,
                    step: 0.0,
                    workers: None,
                    format: Format::Json,
                    events_only: false,
                    horizon: None,
                    x0: None,
                    regime: None,
                },
            };
            finish(&job, &out)
        }
        Command::Simulate {
            common,
            events_only,
            horizon,
            x0,
            regime,
        } => {
            let mut job = job("simulate", &common)?;
            job.options.events_only = events_only;
            job.options.horizon = horizon;
            job.options.x0 = x0;
            job.options.regime = regime;
            finish(&job, &common.out)
        }
        Command::Harmonic { common } => finish(&job("harmonic", &common)?, &common.out),
        Command::Solve { common } => finish(&job("solve", &common)?, &common.out),
        Command::Verify { common } => finish(&job("verify", &common)?, &common.out),
        Command::Rerun { manifest, out, workers } => rerun(&manifest, out, workers),
    }
}

impl Options {
    /// Options taken from a run file's `[sampler]` section (defaults without one).
    pub fn from_run_source(run_source: Option<&str>) -> Result<Self> {
        let run = match run_source {
            Some(s) => RunConfig::from_toml_str(s)?,
            None => RunConfig::default(),
        };
        Ok(Options {
            paths: run.sampler.paths,
            seed: run.sampler.seed,
            step: run.sampler.step,
            workers: None,
            format: Format::Csv,
            events_only: false,
            horizon: None,
            x0: None,
            regime: None,
        })
    }
}

/// In-memory result of a command: its exit code, output files and summary text.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub exit_code: i32,
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

/// Runs `subcommand` (validate, simulate, harmonic, solve or verify) on model
/// and run sources without touching the filesystem.
pub fn evaluate(subcommand: &str, model_source: &str, run_source: Option<&str>, options: &Options) -> Result<Evaluation> {
    let job = Job {
        subcommand: subcommand.into(),
        model_source: model_source.into(),
        run_source: run_source.map(Into::into),
        options: options.clone(),
    };
    let o = execute(&job)?;
    Ok(Evaluation {
        exit_code: o.status.code(),
        files: o.files,
        summary: o.summary,
    })
}

fn job(subcommand: &str, a: &CommonArgs) -> Result<Job> {
    let model_source = read_source(&a.config)?;
    let run_source = a.run.as_deref().map(read_source).transpose()?;
    let mut options = Options::from_run_source(run_source.as_deref())?;
    options.paths = a.paths.unwrap_or(options.paths);
    options.seed = a.seed.unwrap_or(options.seed);
    options.step = a.step.unwrap_or(options.step);
    options.workers = a.workers;
    options.format = a.format;
    Ok(Job {
        subcommand: subcommand.into(),
        model_source,
        run_source,
        options,
    })
}

/// Executes `job`, writes its outputs and manifest into `out`, returns the exit code.
fn finish(job: &Job, out: &Path) -> Result<i32> {
    let outcome = execute(job)?;
    let outputs = write_outputs(out, &outcome.files)?;
    let spec_hash = ModelSpec::from_toml_str(&job.model_source)?.hash();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp: now_rfc3339(),
        subcommand: job.subcommand.clone(),
        config_hash: spec_hash,
        run_hash: job.run_source.as_deref().map(|s| sha256_hex(s.as_bytes())),
        seed: job.options.seed,
        options: job.options.clone(),
        model_source: job.model_source.clone(),
        run_source: job.run_source.clone(),
        outputs,
    };
    let text = serde_json::to_vec_pretty(&manifest)?;
    fs::write(out.join("manifest.json"), text)?;
    print!("{}", outcome.summary);
    Ok(outcome.status.code())
}

fn write_outputs(out: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<OutputFile>> {
    fs::create_dir_all(out)?;
    let mut list = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(out.join(name), bytes)?;
        list.push(OutputFile::of(name, bytes));
    }
    Ok(list)
}

fn rerun(path: &Path, out: Option<PathBuf>, workers: Option<usize>) -> Result<i32> {
    let m = RunManifest::read(path)?;
    let mut options = m.options.clone();
    if workers.is_some() {
        options.workers = workers;
    }
    let job = Job {
        subcommand: m.subcommand.clone(),
        model_source: m.model_source.clone(),
        run_source: m.run_source.clone(),
        options,
    };
    let out = out.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("rerun"));
    let outcome = execute(&job)?;
    let fresh = write_outputs(&out, &outcome.files)?;
    let mut mismatched = Vec::new();
    for old in &m.outputs {
        match fresh.iter().find(|f| f.file == old.file) {
            Some(f) if f.sha256 == old.sha256 => {}
            _ => mismatched.push(old.file.clone()),
        }
    }
    for f in &fresh {
        if !m.outputs.iter().any(|o| o.file == f.file) {
            mismatched.push(f.file.clone());
        }
    }
    if mismatched.is_empty() {
        println!("rerun of `{}`: {} output files identical", m.subcommand, fresh.len());
        Ok(EXIT_PASS)
    } else {
        println!("rerun of `{}`: outputs differ: {}", m.subcommand, mismatched.join(", "));
        Ok(EXIT_STATISTICAL)
    }
}

fn sampler_config(run: &RunConfig, o: &Options) -> Result<SamplerConfig> {
    let mut cfg = run.sampler_config()?;
    cfg.seed = o.seed;
    cfg.step = o.step;
    cfg.workers = o.workers;
    cfg.check()?;
    if o.paths == 0 {
        return Err(Error::config("paths", "at least one path is required"));
    }
    Ok(cfg)
}

fn execute(job: &Job) -> Result<Outcome> {
    let spec = ModelSpec::from_toml_str(&job.model_source)?;
    let run = match &job.run_source {
        Some(s) => RunConfig::from_toml_str(s)?,
        None => RunConfig::default(),
    };
    match job.subcommand.as_str() {
        "validate" => cmd_validate(&spec),
        "simulate" => cmd_simulate(&spec, &run, &job.options),
        "harmonic" => cmd_harmonic(&spec, &run, &job.options),
        "solve" => cmd_solve(&spec, &run, &job.options),
        "verify" => cmd_verify(&spec, &run, &job.options),
        other => Err(Error::Usage(format!("unknown subcommand `{other}` in manifest"))),
    }
}

fn cmd_validate(spec: &ModelSpec) -> Result<Outcome> {
    let report = validate_model(spec);
    let mut summary = String::new();
    for c in &report.checks {
        let _ = writeln!(summary, "{:<4} {:<13} {}", c.name, format!("{:?}", c.status), c.detail);
    }
    Ok(Outcome {
        status: if report.usable { Status::Pass } else { Status::Statistical },
        files: vec![("validation.json".into(), serde_json::to_vec_pretty(&report)?)],
        summary,
    })
}

fn cmd_simulate(spec: &ModelSpec, run: &RunConfig, o: &Options) -> Result<Outcome> {
    let cfg = sampler_config(run, o)?;
    let section = run.simulate.as_ref();
    let stop = match (o.horizon, section) {
        (Some(t), _) => StopRule::Horizon { t },
        (None, Some(s)) => s.stop.clone(),
        (None, None) => {
            return Err(Error::config("simulate", "give --horizon or a [simulate] section in the run file"));
        }
    };
    let x0 = o
        .x0
        .clone()
        .or_else(|| section.map(|s| s.x0.clone()))
        .unwrap_or_else(|| vec![0.0; spec.dim()]);
    let regime = o.regime.or(section.map(|s| s.regime)).unwrap_or(1);
    let i0 = zero_based(regime, spec.regimes(), "simulate.regime")?;
    let trajectories = sample_paths(spec, &x0, i0, &stop, &cfg, o.paths, o.events_only)?;
    let (name, bytes) = match o.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_dump(&mut buf, spec.dim(), &trajectories)?;
            ("trajectories.tsv", buf)
        }
        Format::Json => ("trajectories.json", serde_json::to_vec(&trajectories)?),
    };
    let events: usize = trajectories.iter().map(|t| t.events.len()).sum();
    Ok(Outcome {
        status: Status::Pass,
        files: vec![(name.into(), bytes)],
        summary: format!("{} paths, {events} events written to {name}\n", o.paths),
    })
}

#[derive(Serialize)]
struct HarmonicRow<'a> {
    query: usize,
    x: &'a [f64],
    regime: usize,
    value: f64,
    stderr: f64,
    n: usize,
    killed_fraction: f64,
    truncated_fraction: f64,
    seed: u64,
    h: f64,
    model_hash: &'a str,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    warnings: &'a [String],
}

fn cmd_harmonic(spec: &ModelSpec, run: &RunConfig, o: &Options) -> Result<Outcome> {
    let cfg = sampler_config(run, o)?;
    let region = run.region()?;
    let phi = run.boundary(spec.regimes())?;
    let section = run
        .harmonic
        .as_ref()
        .ok_or_else(|| Error::config("harmonic", "the run file needs a [harmonic] section with queries"))?;
    let queries = section
        .queries
        .iter()
        .map(|q| Ok((q.x.clone(), zero_based(q.regime, spec.regimes(), "harmonic.queries.regime")?)))
        .collect::<Result<Vec<_>>>()?;
    let est = estimate_harmonic(spec, region, &phi, &queries, &cfg, o.paths)?;
    let hash = spec.hash();
    let rows: Vec<HarmonicRow> = queries
        .iter()
        .zip(&est.estimates)
        .enumerate()
        .map(|(q, ((x, i), e))| HarmonicRow {
            query: q,
            x,
            regime: i + 1,
            value: e.value,
            stderr: e.stderr,
            n: e.n_paths,
            killed_fraction: est.killed_fraction[q],
            truncated_fraction: e.truncated_fraction,
            seed: e.seed,
            h: e.h,
            model_hash: &hash,
            warnings: &e.warnings,
        })
        .collect();
    let (name, bytes) = match o.format {
        Format::Json => ("harmonic.json", serde_json::to_vec_pretty(&rows)?),
        Format::Csv => {
            let mut s = String::from("query");
            for k in 1..=spec.dim() {
                let _ = write!(s, ",x_{k}");
            }
            s.push_str(",regime,value,stderr,n,killed_fraction,truncated_fraction\n");
            for r in &rows {
                let _ = write!(s, "{}", r.query);
                for v in r.x {
                    let _ = write!(s, ",{v}");
                }
                let _ = writeln!(
                    s,
                    ",{},{},{},{},{},{}",
                    r.regime, r.value, r.stderr, r.n, r.killed_fraction, r.truncated_fraction
                );
            }
            ("harmonic.csv", s.into_bytes())
        }
    };
    let mut summary = String::new();
    for r in &rows {
        let _ = writeln!(summary, "x = {:?} regime {}: {:.6} ± {:.6}", r.x, r.regime, r.value, r.stderr);
    }
    let status = if est.bound_violations > 0 {
        let _ = writeln!(summary, "PATHWISE VIOLATION: {} path values above the declared bound", est.bound_violations);
        Status::Pathwise
    } else {
        Status::Pass
    };
    Ok(Outcome {
        status,
        files: vec![(name.into(), bytes)],
        summary,
    })
}

fn field_csv(f: &LatticeField) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f.write_csv(&mut buf)?;
    Ok(buf)
}

fn cmd_solve(spec: &ModelSpec, run: &RunConfig, o: &Options) -> Result<Outcome> {
    let cfg = sampler_config(run, o)?;
    let region = run.region()?;
    let phi = run.boundary(spec.regimes())?;
    let section = run
        .solve
        .as_ref()
        .ok_or_else(|| Error::config("solve", "the run file needs a [solve] section"))?;
    let lattice = build_lattice(region, section.spacing)?;
    let sol = fixed_point_solve(spec, region, &phi, &lattice, &cfg, o.paths, section.max_iter, section.tol)?;
    let mut status = if sol.converged { Status::Pass } else { Status::Statistical };
    let mut summary = format!(
        "{} nodes x {} regimes, {} iterations, converged: {}, tol {:.3e}\n",
        lattice.len(),
        spec.regimes(),
        sol.iterations,
        sol.converged,
        sol.tol
    );
    for (k, n) in sol.trace.iter().enumerate() {
        let _ = writeln!(summary, "  iteration {}: |update| = {n:.3e}", k + 1);
    }
    for w in &sol.warnings {
        let _ = writeln!(summary, "warning: {w}");
    }
    let direct = if section.compare_direct {
        let rep = compare_direct(&sol.u, spec, region, &phi, &cfg, o.paths)?;
        let _ = writeln!(summary, "direct comparison: max |z| = {:.3}, max |diff| = {:.3e}", rep.max_z, rep.max_abs);
        if rep.max_z >= DIRECT_Z_LIMIT {
            status = status.max(Status::Statistical);
        }
        Some(rep)
    } else {
        None
    };
    let mut files = Vec::new();
    match o.format {
        Format::Json => {
            files.push(("solution.json".to_string(), serde_json::to_vec_pretty(&sol)?));
            if let Some(rep) = &direct {
                files.push(("discrepancy.json".into(), serde_json::to_vec_pretty(rep)?));
            }
        }
        Format::Csv => {
            files.push(("u.csv".into(), field_csv(&sol.u)?));
            files.push(("v.csv".into(), field_csv(&sol.v)?));
            let mut t = String::from("iteration,update_norm\n");
            for (k, n) in sol.trace.iter().enumerate() {
                let _ = writeln!(t, "{},{n}", k + 1);
            }
            files.push(("trace.csv".into(), t.into_bytes()));
            if let Some(rep) = &direct {
                let mut s = String::from("node");
                for k in 1..=spec.dim() {
                    let _ = write!(s, ",x_{k}");
                }
                s.push_str(",regime,fixed,direct,z\n");
                for c in &rep.nodes {
                    let _ = write!(s, "{}", c.node);
                    for v in &c.x {
                        let _ = write!(s, ",{v}");
                    }
                    let _ = writeln!(s, ",{},{},{},{}", c.regime + 1, c.fixed, c.direct, c.z);
                }
                files.push(("discrepancy.csv".into(), s.into_bytes()));
            }
        }
    }
    Ok(Outcome { status, files, summary })
}

fn run_check(spec: &ModelSpec, run: &RunConfig, cfg: &SamplerConfig, n: usize, check: &CheckSpec) -> Result<Vec<TheoremReport>> {
    let m = spec.regimes();
    let boundary = |b: &Option<run::BoundarySpec>| match b {
        Some(b) => b.build(m, "verify.checks.boundary"),
        None => run.boundary(m),
    };
    Ok(match check {
        CheckSpec::MaximumPrinciple { spacing, boundary: b } => {
            let region = run.region()?;
            let lattice = build_lattice(region, *spacing)?;
            let r = check_maximum_principle(spec, region, &boundary(b)?, &lattice, cfg, n)?;
            let strong = strong_maximum_principle_surrogate(&r);
            vec![r, strong]
        }
        CheckSpec::Positivity {
            spacing,
            boundary: b,
            budget,
        } => {
            let region = run.region()?;
            let lattice = build_lattice(region, *spacing)?;
            vec![check_positivity(spec, region, &boundary(b)?, &lattice, cfg, n, *budget)?]
        }
        CheckSpec::Harnack {
            k,
            family,
            sample_sizes,
            budget,
            margin,
            mirror,
        } => {
            let region = run.region()?;
            let family = family
                .iter()
                .map(|b| b.build(m, "verify.checks.family"))
                .collect::<Result<Vec<_>>>()?;
            let opts = HarnackOptions {
                sample_sizes: sample_sizes.clone(),
                budget: *budget,
                margin: *margin,
                mirror: mirror.clone(),
                ..HarnackOptions::default()
            };
            vec![estimate_harnack_constant(spec, region, k, &family, cfg, &opts)?]
        }
        CheckSpec::ExitTime { center, radii } => exit_time_bound_suite(spec, center, radii, cfg, n)?,
        CheckSpec::LevySystem {
            pairs,
            horizon,
            x0,
            regime,
            nodes,
        } => {
            let pairs = pairs.iter().map(|p| p.build(m)).collect::<Result<Vec<_>>>()?;
            let i0 = zero_based(*regime, m, "verify.checks.regime")?;
            vec![levy_system_check(spec, &pairs, *horizon, x0, i0, cfg, n, *nodes)?]
        }
        CheckSpec::Hitting {
            center,
            radius,
            target,
            start,
            regime,
            levels,
        } => {
            let i0 = zero_based(*regime, m, "verify.checks.regime")?;
            vec![hitting_lower_bound_check(spec, center, *radius, target, start, i0, *levels, cfg, n)?]
        }
    })
}

fn cmd_verify(spec: &ModelSpec, run: &RunConfig, o: &Options) -> Result<Outcome> {
    let cfg = sampler_config(run, o)?;
    let checks = &run
        .verify
        .as_ref()
        .ok_or_else(|| Error::config("verify", "the run file needs [[verify.checks]] entries"))?
        .checks;
    let mut reports = Vec::new();
    for c in checks {
        reports.extend(run_check(spec, run, &cfg, o.paths, c)?);
    }
    let mut status = Status::Pass;
    let mut inconclusive = 0;
    for r in &reports {
        match r.verdict {
            Verdict::Fail if r.pathwise_violation => status = status.max(Status::Pathwise),
            Verdict::Fail => status = status.max(Status::Statistical),
            Verdict::Inconclusive => inconclusive += 1,
            Verdict::Pass => {}
        }
    }
    let table = render_table(&reports);
    let mut summary = table.clone();
    if inconclusive > 0 {
        let _ = writeln!(summary, "warning: {inconclusive} inconclusive report(s)");
    }
    Ok(Outcome {
        status,
        files: vec![
            ("reports.json".into(), serde_json::to_vec_pretty(&reports)?),
            ("reports.txt".into(), table.into_bytes()),
        ],
        summary,
    })
}
