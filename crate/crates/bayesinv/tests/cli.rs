use std::path::Path;
use std::process::{Command, Output};

use bayesinv::formats::read_csv;
use serde_json::Value;

fn bayesinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayesinv")).args(args).output().unwrap()
}

fn meta(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn list_names_problems_priors_and_capabilities() {
    let out = bayesinv(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in bayesinv_core::problems::PROBLEMS {
        assert!(text.contains(name), "{name} missing");
    }
    assert!(text.contains("rlrto (requires: rlrto-form)"));
    assert!(text.contains("prior hierarchical-gmrf [gibbs]"));
}

#[test]
fn run_writes_samples_summary_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = bayesinv(&["run", "simplest-linear", "--samples", "300", "--seed", "5", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, values) = read_csv(&dir.path().join("samples.csv")).unwrap();
    assert_eq!(header, vec!["x0", "x1"]);
    assert_eq!(values.len(), 600);
    let m = meta(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["sampler"], "linear-rto");
    assert_eq!(m["prior_class"], "explicit/proper");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["kept_draws"], 300);
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn capability_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = out_arg(dir.path());
    for args in [
        vec!["run", "simplest-linear", "--prior", "nonneg", "--sampler", "linear-rto", "--out", &d],
        vec!["run", "simplest-nonlinear", "--sampler", "linear-rto", "--out", &d],
        vec!["run", "deconvolution-1d", "--prior", "hierarchical-gmrf", "--sampler", "ula", "--out", &d],
    ] {
        let out = bayesinv(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("lacks capability"));
    }
    assert!(!dir.path().join("samples.csv").exists());
}

#[test]
fn bad_input_exits_1() {
    assert_eq!(bayesinv(&["run", "no-such-problem"]).status.code(), Some(1));
    assert_eq!(bayesinv(&["run", "simplest-linear", "--prior", "nope"]).status.code(), Some(1));
    assert_eq!(
        bayesinv(&["run", "simplest-linear", "--samples", "10", "--burn-in", "10"]).status.code(),
        Some(1)
    );
}

#[test]
fn failing_restorator_exits_3_with_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = format!("{} nonneg --exit-after 40", env!("CARGO_BIN_EXE_restore-child"));
    let out = bayesinv(&[
        "run",
        "simplest-nonlinear",
        "--prior",
        "nonneg",
        "--samples",
        "1000",
        "--restorator-cmd",
        &cmd,
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = meta(dir.path());
    assert_eq!(m["status"], "numerical-failure");
    assert_eq!(m["failures"][0]["iteration"], 40);
    assert!(m["restorator"].as_str().unwrap().starts_with("external("));
    let (_, values) = read_csv(&dir.path().join("samples.csv")).unwrap();
    assert_eq!(values.len(), 80);
}

#[test]
fn external_restorator_run_matches_builtin() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let cmd = format!("{} nonneg", env!("CARGO_BIN_EXE_restore-child"));
    let base = ["run", "simplest-nonlinear", "--prior", "nonneg", "--samples", "400"];
    let a = bayesinv(&[&base[..], &["--out", &out_arg(dirs[0].path())]].concat());
    let b = bayesinv(&[&base[..], &["--restorator-cmd", &cmd, "--out", &out_arg(dirs[1].path())]].concat());
    assert!(a.status.success() && b.status.success());
    let read = |d: &Path| std::fs::read(d.join("samples.csv")).unwrap();
    assert_eq!(read(dirs[0].path()), read(dirs[1].path()));
}

#[test]
fn chains_are_deterministic_and_recorded() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = bayesinv(&[
            "run",
            "simplest-nonlinear",
            "--prior",
            "l1",
            "--samples",
            "500",
            "--chains",
            "1,0;-1,0;0,-1",
            "--out",
            &out_arg(d.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &Path| std::fs::read(d.join("samples.csv")).unwrap();
    assert_eq!(read(dirs[0].path()), read(dirs[1].path()));
    let m = meta(dirs[0].path());
    let chains = m["chains"].as_array().unwrap();
    assert_eq!(chains.len(), 3);
    assert_eq!(chains[1]["initial_point"], serde_json::json!([-1.0, 0.0]));
    assert_eq!(m["kept_draws"], 1500);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "problem = simplest-linear\nprior = latent-exp\n[chain]\nsamples = 400\nseed = 3\n[output]\ndir = {}\n",
            dir.path().join("from-file").display()
        ),
    )
    .unwrap();
    let out = bayesinv(&["run", cfg.to_str().unwrap(), "--samples", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("from-file");
    let (_, z) = read_csv(&run.join("latent_samples.csv")).unwrap();
    let (_, x) = read_csv(&run.join("samples.csv")).unwrap();
    assert_eq!(x.len(), 400);
    for (xi, zi) in x.iter().zip(&z) {
        assert_eq!(*xi, zi.exp());
    }
    let m = meta(&run);
    assert_eq!(m["seed"], 3);
    assert_eq!(m["sampler"], "mh");
    assert!(m["acceptance_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn image_problems_write_pgm_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bayesinv(&["run", "inpainting", "--size", "16", "--samples", "60", "--burn-in", "20", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["mean.pgm", "std.pgm", "ci_width.pgm", "truth.pgm", "data.pgm"] {
        let img = bayesinv::formats::read_pgm(&dir.path().join(name)).unwrap();
        assert_eq!((img.rows, img.cols), (16, 16), "{name}");
    }
    let m = meta(dir.path());
    assert_eq!(m["kept_draws"], 40);
    assert_eq!(m["prior_class"].as_str().unwrap().split('/').next(), Some("implicit"));
}

#[test]
fn check_passes_and_reports_induced_failure() {
    let out = bayesinv(&["check"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("PASS").count(), 4);
    let out = bayesinv(&["check", "--prox-slack", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("prox-oracles         FAIL"));
}
