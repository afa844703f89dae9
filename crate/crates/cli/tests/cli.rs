use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
name = "tiny"
mode = "mitigate"
seed = 5

[system]
omega_s = 1.0
delta = 1.0

[bath]
omega0 = 1.0
gamma = 0.6
alpha = 0.02
beta = "inf"

[pseudomodes]
fock_dim = 3
mats_fock_dim = 2
n_mats = 1

[field]
n_xi = 10
horizon = 2.0
n_traj = 3

[sweep]
n_exp = 4
t_end = 1.0
dt = 0.25

[extrapolation]
order = 2
probe_time = 0.5
resamples = 4
orders = [1, 2, 3]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudomode")).args(args).env_remove("PSEUDOMODE_OUT_DIR").output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn tiny(dir: &Path) -> String {
    let p = dir.join("tiny.toml");
    fs::write(&p, TINY).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn correlation_table() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("c.csv");
    ok(&run(&["correlation", "--bath", "mitigation", "--tmax", "10", "--out", s(&out)]));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im"));
    assert_eq!(lines.count(), 201);
}

#[test]
fn bounds_report() {
    let out = run(&["bounds", "--N", "12", "--M", "10", "--sigma", "1e-5", "--q", "1"]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("stability error") && text.contains("bias bound"), "{text}");
}

#[test]
fn schema_errors_are_aggregated() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.toml");
    fs::write(&p, TINY.replace("omega0 = 1.0\n", "").replace("beta = \"inf\"\n", "")).unwrap();
    let out = run(&["sweep", "--preset", s(&p), "--out-dir", s(&d.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bath.omega0") && err.contains("bath.beta"), "{err}");
}

#[test]
fn unknown_preset_and_missing_input() {
    assert_eq!(run(&["sweep", "--preset", "nope"]).status.code(), Some(2));
    let d = tempfile::tempdir().unwrap();
    let out = run(&["reconstruct", "--in", s(&d.path().join("none.csv")), "--M", "2", "--out", s(&d.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(4));
    let bad = d.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n").unwrap();
    let out = run(&["reconstruct", "--in", s(&bad), "--M", "2", "--out", s(&d.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_seed_last_wins() {
    let d = tempfile::tempdir().unwrap();
    let preset = tiny(d.path());
    let o = d.path().join("o");
    let out = run(&["sweep", "--preset", &preset, "--seed", "1", "--seed", "42", "--out-dir", s(&o)]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let manifest: toml::Table = fs::read_to_string(o.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["seed"].as_integer(), Some(42));
}

#[test]
fn staged_pipeline_matches_fused_run() {
    let d = tempfile::tempdir().unwrap();
    let preset = tiny(d.path());
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    ok(&run(&["mitigate", "--preset", &preset, "--out-dir", s(&a)]));
    ok(&run(&["sweep", "--preset", &preset, "--out-dir", s(&b)]));
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
    let rec = d.path().join("rec.csv");
    ok(&run(&["reconstruct", "--in", s(&b.join("sweep.csv")), "--M", "2", "--out", s(&rec)]));
    assert_eq!(fs::read(a.join("reconstruction.csv")).unwrap(), fs::read(&rec).unwrap());
    for f in ["comparison.csv", "manifest.toml"] {
        assert!(a.join(f).exists(), "{f}");
    }
}

#[test]
fn output_directory_protection_and_replay() {
    let d = tempfile::tempdir().unwrap();
    let preset = tiny(d.path());
    let o = d.path().join("o");
    ok(&run(&["mitigate", "--preset", &preset, "--out-dir", s(&o), "--traj", "4"]));
    assert_eq!(run(&["mitigate", "--preset", &preset, "--out-dir", s(&o)]).status.code(), Some(4));
    let leftovers: Vec<_> = fs::read_dir(d.path()).unwrap().filter_map(|e| e.ok()).filter(|e| e.file_name().to_string_lossy().contains("partial")).collect();
    assert!(leftovers.is_empty());

    let r = d.path().join("replayed");
    ok(&run(&["replay", "--manifest", s(&o.join("manifest.toml")), "--out-dir", s(&r)]));
    for f in ["sweep.csv", "reconstruction.csv", "comparison.csv"] {
        assert_eq!(fs::read(o.join(f)).unwrap(), fs::read(r.join(f)).unwrap(), "{f}");
    }
    ok(&run(&["replay", "--manifest", s(&o.join("manifest.toml")), "--out-dir", s(&r), "--overwrite"]));
}

#[test]
fn single_worker_reproduces_parallel_run() {
    let d = tempfile::tempdir().unwrap();
    let preset = tiny(d.path());
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    ok(&run(&["sweep", "--preset", &preset, "--out-dir", s(&a), "--workers", "3"]));
    ok(&run(&["sweep", "--preset", &preset, "--out-dir", s(&b), "--workers", "1"]));
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
}

#[test]
fn order_study_outputs() {
    let d = tempfile::tempdir().unwrap();
    let preset = tiny(d.path());
    let o = d.path().join("o");
    ok(&run(&["errstudy", "--preset", &preset, "--sigma", "1e-4", "--out-dir", s(&o)]));
    let text = fs::read_to_string(o.join("errstudy.csv")).unwrap();
    assert!(text.starts_with("M,mean_error,noiseless_error\n"));
    assert_eq!(text.lines().count(), 4);
}
