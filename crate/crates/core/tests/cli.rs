use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use echostate::cli::{run, Command, ExperimentConfig, WORKERS_ENV};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_echostate"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn invoke(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("ex1_sigmoid.toml", 0, 0.875),
        ("ex2_tanh.toml", 2, 1.2),
        ("leak.toml", 2, 1.25),
    ];
    for (name, code, factor) in cases {
        let out = dir.path().join(name);
        let o = invoke(&["certify", config(name).to_str().unwrap()], &out);
        assert_eq!(
            o.status.code(),
            Some(code),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let report = json(&out.join("certificate.json"));
        let got = report["certificate"]["contraction_factor"]
            .as_f64()
            .unwrap();
        assert!((got - factor).abs() < 1e-9, "{name}: {got}");
        assert_eq!(report["meta"]["tool"], "echostate");
    }
}

#[test]
fn weak_input_tanh_does_not_converge() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(
        &["esp-test", config("ex2_tanh.toml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        json(&dir.path().join("esp_report.json"))["converged"],
        false
    );
}

#[test]
fn fmp_on_uncertified_reservoir_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(
        &["fmp-test", config("ex2_tanh.toml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let r = json(&dir.path().join("fmp_report.json"));
    assert_eq!(r["certified"], false);
    assert!(r["all_hold"].is_null());
    assert!(dir.path().join("pullback_diameter.csv").exists());
}

#[test]
fn malformed_config_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "seed = 1\n\n[reservoir]\nn = 10\nactivation = { kind = \"tanh\" }\nspectral = 3\n",
    )
    .unwrap();
    let o = invoke(&["certify", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 6"), "{err}");
    assert!(err.contains("spectral"), "{err}");
}

#[test]
fn ipc_refuses_non_uniform_signal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let text = fs::read_to_string(config("ipc.toml"))
        .unwrap()
        .replace("lo = -1.0", "lo = 0.0");
    fs::write(&cfg, text).unwrap();
    let o = invoke(&["ipc", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("uniform"));
}

#[test]
fn seed_override_reaches_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let path = config("ex1_sigmoid.toml");
    invoke(&["drive", path.to_str().unwrap()], &a);
    invoke(&["drive", path.to_str().unwrap(), "--seed", "99"], &b);
    let head = |d: &Path| {
        fs::read_to_string(d.join("trajectory.csv"))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_owned()
    };
    assert!(head(&a).ends_with("seed=1"));
    assert!(head(&b).ends_with("seed=99"));
    assert_ne!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(b.join("trajectory.csv")).unwrap()
    );
}

fn sweep_config(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&config("sweep.toml")).unwrap();
    cfg.out_dir = Some(out.to_path_buf());
    cfg
}

#[test]
fn sweep_shape_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(dir.path());
    run(Command::Sweep, &cfg).unwrap();
    let csv = dir.path().join("sweep.csv");
    let first = fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# echostate "));
    assert_eq!(
        lines.next().unwrap(),
        "rho,input_scale,leak,seed,lambda_max,d_ky,h_ks,mc_total"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 18);
    for r in &rows {
        for field in r.split(',') {
            assert!(field.parse::<f64>().unwrap().is_finite(), "{r}");
        }
    }

    // Fresh run after deleting the journal.
    let journal = dir.path().join("sweep.journal");
    fs::remove_file(&journal).unwrap();
    run(Command::Sweep, &cfg).unwrap();
    assert_eq!(fs::read(&csv).unwrap(), first);

    // Interrupted run: keep a few finished rows and a torn line.
    let full = fs::read_to_string(&journal).unwrap();
    let keep: Vec<&str> = full.lines().take(6).collect();
    fs::write(&journal, format!("{}\n7\t0.9,0.", keep.join("\n"))).unwrap();
    fs::remove_file(&csv).unwrap();
    let out = run(Command::Sweep, &cfg).unwrap();
    assert!(out.summary.contains("5 resumed"), "{}", out.summary);
    assert_eq!(fs::read(&csv).unwrap(), first);
}

#[test]
fn sweep_rejects_foreign_journal() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sweep_config(dir.path());
    cfg.sweep.rho = vec![0.5];
    cfg.sweep.input_scale = vec![0.5];
    run(Command::Sweep, &cfg).unwrap();
    cfg.seed += 1;
    let err = run(Command::Sweep, &cfg).unwrap_err().to_string();
    assert!(err.contains("different config"), "{err}");
}

#[test]
fn sweep_worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let path = config("sweep.toml");
    let o = bin()
        .args(["sweep", path.to_str().unwrap(), "--out"])
        .arg(&a)
        .env(WORKERS_ENV, "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = bin()
        .args(["sweep", path.to_str().unwrap(), "--out"])
        .arg(&b)
        .env(WORKERS_ENV, "4")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        fs::read(a.join("sweep.csv")).unwrap(),
        fs::read(b.join("sweep.csv")).unwrap()
    );
    let o = bin()
        .args(["sweep", path.to_str().unwrap(), "--out"])
        .arg(dir.path().join("c"))
        .env(WORKERS_ENV, "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn every_artifact_starts_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["drive", "capacity", "lyapunov"] {
        let o = invoke(&[cmd, config("ipc.toml").to_str().unwrap()], dir.path());
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let mut seen = 0;
    for e in fs::read_dir(dir.path()).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        match p.extension().and_then(|s| s.to_str()) {
            Some("csv") => {
                let head = text.lines().next().unwrap();
                assert!(head.starts_with("# echostate "), "{}", p.display());
                for key in ["config=", "rng=", "seed=6"] {
                    assert!(head.contains(key), "{}: {head}", p.display());
                }
                assert!(!text.contains('\r'));
            }
            Some("json") => {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["meta"]["seed"], 6);
                assert_eq!(v["meta"]["config_hash"].as_str().unwrap().len(), 64);
            }
            _ => continue,
        }
        seen += 1;
    }
    assert_eq!(seen, 6);
}
