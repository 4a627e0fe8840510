use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quartercar::cli::{read_summary, OptimizeDoc};
use quartercar::ModelKind;

const FAST: &str = r#"
[es]
iterations = 4
lambda = 8
mu = 2

[tune]
points = 8

[sim]
random_duration = 10.0
step_duration = 6.0
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quartercar"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn default_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["default-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = write_config(dir.path(), "d.toml", &text);
    let again = run(dir.path(), &["--config", &cfg, "default-config"]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn invalid_class_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[random_road]\nclass = \"Z\"\n");
    let out = run(dir.path(), &["--config", &cfg, "road"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("class"), "{}", stderr(&out));
}

#[test]
fn unknown_key_and_bad_value_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[params]\nbogus = 1.0\n");
    let out = run(dir.path(), &["--config", &cfg, "simulate", "--model", "twin"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "neg.toml", "[params]\nc2 = -5.0\n");
    let out = run(dir.path(), &["--config", &cfg, "simulate", "--model", "twin"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("c2"), "{}", stderr(&out));

    let out = run(dir.path(), &["--road", "gravel", "road"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn road_writes_trace_and_psd_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--seed", "7", "road", "--duration", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = fs::read_to_string(dir.path().join("road_random.csv")).unwrap();
    let mut lines = trace.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# quartercar config_hash=") && first.contains("seed=7"));
    assert_eq!(lines.next(), Some("t,q"));
    assert_eq!(lines.count(), 20_001);
    let psd = fs::read_to_string(dir.path().join("road_random_psd.csv")).unwrap();
    assert_eq!(psd.lines().nth(1), Some("n,psd,target_psd"));

    let out = run(dir.path(), &["--road", "step", "road"]);
    assert!(out.status.success());
    assert!(dir.path().join("road_step.csv").exists());
    assert!(!dir.path().join("road_step_psd.csv").exists());
}

#[test]
fn simulate_writes_trajectory_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--road", "step", "simulate", "--model", "active"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let traj = fs::read_to_string(dir.path().join("sim_active_step.csv")).unwrap();
    assert_eq!(traj.lines().nth(1), Some("t,xs,vs,xu,vu,x3,acc_s,tire_force,fa,q"));
    let index = fs::read_to_string(dir.path().join("index_active_step.csv")).unwrap();
    assert_eq!(index.lines().nth(1), Some("acc_rms,sws_rms,dtl_rms"));

    let bad = run(dir.path(), &["simulate", "--model", "semi"]);
    assert!(!bad.status.success());
}

#[test]
fn compare_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg = write_config(dir.path(), "fast.toml", FAST);
    for d in [&a, &b] {
        let out = run(d, &["--config", &cfg, "--road", "step", "compare"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        assert!(fs::read(a.join(&name)).unwrap() == fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn optimize_then_tune_then_compare_from_prior_results() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{FAST}\n[compare]\ninline_optimize = false\ninline_tune = false\n");
    let cfg = write_config(dir.path(), "prior.toml", &body);

    let missing = run(dir.path(), &["--config", &cfg, "--road", "step", "compare"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("optimize"), "{}", stderr(&missing));

    for cmd in ["optimize", "tune", "compare"] {
        let out = run(dir.path(), &["--config", &cfg, "--road", "step", cmd]);
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
    }
    let doc: OptimizeDoc =
        serde_json::from_str(&fs::read_to_string(dir.path().join("optimize_step.json")).unwrap()).unwrap();
    assert!((900.0..=2500.0).contains(&doc.c1));
    assert!(doc.best_cost <= 1.0);
    assert_eq!(doc.generations, 4);

    let rows = read_summary(&dir.path().join("compare_step_summary.csv")).unwrap();
    let models: Vec<_> = rows.iter().map(|r| r.model).collect();
    assert_eq!(models, [ModelKind::Passive, ModelKind::Twin, ModelKind::Active]);
    assert_eq!(rows[0].cost, 1.0);
}

#[test]
fn flat_step_compare_reports_zero_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.toml", &format!("{FAST}\n[step_road]\nheight = 0.0\n"));
    let out = run(dir.path(), &["--config", &cfg, "--road", "step", "compare"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_summary(&dir.path().join("compare_step_summary.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!((r.index.acc_rms, r.index.sws_rms, r.index.dtl_rms), (0.0, 0.0, 0.0));
        assert!(r.cost.is_nan());
    }
}
