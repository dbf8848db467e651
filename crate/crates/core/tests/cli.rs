use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rsjd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsjd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ok");
    let o = rsjd(&["validate", &cfg("two_regime.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(out.join("validation.json").exists());
    assert!(out.join("manifest.json").exists());

    let bad = std::fs::read_to_string(configs().join("two_regime.toml"))
        .unwrap()
        .replace("[1.5, \"balance\"]", "[-1.5, \"balance\"]");
    let bad = write(dir.path(), "bad.toml", &bad);
    let out = dir.path().join("bad");
    let o = rsjd(&["validate", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let report = std::fs::read_to_string(out.join("validation.json")).unwrap();
    assert!(report.contains("switching.rates[2][1]"));

    assert_eq!(code(&rsjd(&["validate", "/definitely/not/here.toml"])), 2);

    let broken = write(dir.path(), "broken.toml", "[dimensions]\nd = 1\nm = \n");
    let o = rsjd(&["validate", &broken, "--out", dir.path().join("p").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn simulate_single_event_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = rsjd(&["simulate", &cfg("brownian.toml"), "--paths", "1", "--horizon", "0", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let dump = std::fs::read_to_string(a.join("trajectories.tsv")).unwrap();
    assert_eq!(dump.lines().count(), 2, "{dump}");

    let run = cfg("two_regime_run.toml");
    let mut dumps = Vec::new();
    for (name, workers) in [("b", "1"), ("c", "3")] {
        let out = dir.path().join(name);
        let o = rsjd(&[
            "simulate",
            &cfg("two_regime.toml"),
            "--run",
            &run,
            "--paths",
            "50",
            "--seed",
            "5",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        dumps.push(std::fs::read(out.join("trajectories.tsv")).unwrap());
    }
    assert_eq!(dumps[0], dumps[1]);
}

#[test]
fn simulate_two_regime_has_switches_from_both_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = rsjd(&[
        "simulate",
        &cfg("two_regime.toml"),
        "--run",
        &cfg("two_regime_run.toml"),
        "--paths",
        "10000",
        "--horizon",
        "1",
        "--events-only",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let dump = std::fs::read_to_string(out.join("trajectories.tsv")).unwrap();
    // a switch row carries the regime after the switch
    let into = |r: &str| dump.lines().any(|l| l.ends_with(&format!("\t{r}\tswitch")));
    assert!(into("1") && into("2"));
}

#[test]
fn solve_single_regime_converges_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let run = write(
        dir.path(),
        "run.toml",
        "region = { shape = \"box\", lo = [0.0], hi = [1.0] }\n\
         [sampler]\nstep = 1e-3\nseed = 2\n\
         [boundary]\nuniform = { family = \"indicator\", set = { shape = \"box\", lo = [1.0], hi = [1e300] } }\n\
         [solve]\nspacing = 0.25\n",
    );
    let out = dir.path().join("s");
    let o = rsjd(&["solve", &cfg("brownian.toml"), "--run", &run, "--paths", "200", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2, "{trace}");
}

#[test]
fn verify_baseline_passes_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = rsjd(&[
        "verify",
        &cfg("brownian.toml"),
        "--run",
        &cfg("brownian_verify.toml"),
        "--paths",
        "1000",
        "--step",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports.json")).unwrap()).unwrap();
    for r in reports.as_array().unwrap() {
        assert_eq!(r["verdict"], "pass", "{r}");
    }

    let manifest = out.join("manifest.json");
    let again = dir.path().join("again");
    let o = rsjd(&["rerun", manifest.to_str().unwrap(), "--workers", "2", "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    // a tampered hash is reported as a difference
    let text = std::fs::read_to_string(&manifest).unwrap();
    let mut m: serde_json::Value = serde_json::from_str(&text).unwrap();
    m["outputs"][0]["sha256"] = "00".into();
    let tampered = write(dir.path(), "tampered.json", &m.to_string());
    let o = rsjd(&["rerun", &tampered, "--out", dir.path().join("t").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_fault_injection_reports_pathwise_defect() {
    let dir = tempfile::tempdir().unwrap();
    let run = write(
        dir.path(),
        "run.toml",
        "region = { shape = \"box\", lo = [0.0], hi = [1.0] }\n\
         [sampler]\nstep = 1e-3\n\
         [boundary]\nuniform = { family = \"indicator\", set = { shape = \"box\", lo = [1.0], hi = [1e300] } }\nbound = 0.5\n\
         [[verify.checks]]\ncheck = \"maximum_principle\"\nspacing = 0.25\n",
    );
    let out = dir.path().join("v");
    let o = rsjd(&["verify", &cfg("brownian.toml"), "--run", &run, "--paths", "200", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports.json")).unwrap()).unwrap();
    let first = &reports[0];
    assert_eq!(first["verdict"], "fail");
    assert!(first["witness"]["x"].is_array());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = rsjd(&["simulate", &cfg("brownian.toml"), "--paths", "1", "--horizon", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn harmonic_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h");
    let o = rsjd(&[
        "harmonic",
        &cfg("two_regime.toml"),
        "--run",
        &cfg("two_regime_run.toml"),
        "--paths",
        "300",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("harmonic.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
    assert_eq!(rows[2]["regime"], 2);
    assert_eq!(rows[0]["n"], 300);
}
