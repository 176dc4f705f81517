use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use carleman_lab::{Command, ExperimentConfig};
use serde_json::Value;

fn bin() -> Process {
    let mut p = Process::new(env!("CARGO_BIN_EXE_carleman-lab"));
    p.env_remove("CARLEMAN_LAB_THREADS");
    p
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    bin()
        .args([sub, "--config"])
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn error_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr {text:?} is not JSON: {e}"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn command_for(name: &str) -> Command {
    match name {
        "carleman_annulus" => Command::VerifyCarleman,
        "parabolic_carleman" => Command::VerifyParabolic,
        "parabolic_stability" => Command::ParabolicStability,
        "oracle_check" => Command::OracleCheck,
        n if n.starts_with("solve_") => Command::Solve,
        n if n.starts_with("stability_") => Command::Stability,
        n => panic!("no subcommand for shipped config {n}"),
    }
}

#[test]
fn shipped_configs_validate() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        if path.extension().is_some_and(|e| e == "json") && name != "schema" {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate(command_for(&name))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            seen += 1;
        }
    }
    assert!(seen >= 8, "only {seen} shipped configs");
}

#[test]
fn missing_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("solve", &tmp.path().join("absent.json"), tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "ConfigInvalid");
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [
        r#"{"output": {"dir": "x"}, "outptu": 1}"#,
        r#"{"output": {"dir": "x", "thread": 2}}"#,
        r#"{"geometry": {"kind": "disk", "radius": 1, "n_r": 8, "n_theta": 16, "gamma_radius": 0.5, "gama": 1},
            "data": {"kind": "elliptic", "trace": {"c0": 1}}, "output": {"dir": "x"}}"#,
        r#"{"geometry": {"kind": "disk", "radius": 1, "n_r": 8, "n_theta": 16, "gamma_radius": 0.5},
            "data": {"kind": "elliptic", "trace": {"c0": 1, "coss": [1]}}, "output": {"dir": "x"}}"#,
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = run("solve", &cfg, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert_eq!(error_json(&o)["error"], "ConfigInvalid");
    }
}

#[test]
fn command_specific_blocks_are_required() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"kind": "disk", "radius": 1, "n_r": 8, "n_theta": 16, "gamma_radius": 0.5},
            "output": {"dir": "x"}}"#,
    );
    for sub in ["solve", "stability", "verify-carleman", "parabolic-stability"] {
        assert_eq!(run(sub, &cfg, tmp.path()).status.code(), Some(2), "{sub}");
    }
    // gamma off the grid
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"kind": "disk", "radius": 1, "n_r": 8, "n_theta": 16, "gamma_radius": 0.3},
            "data": {"kind": "elliptic", "trace": {"c0": 1}}, "output": {"dir": "x"}}"#,
    );
    assert_eq!(run("solve", &cfg, tmp.path()).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    // R_inf = 5 leaves a truncation bound of e^{-3}
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"kind": "exterior", "r_s": 1, "n_r": 40, "n_theta": 16, "gamma_radius": 2},
            "potential": {"p": {"preset": "constant", "value": 1}, "eta": 1},
            "solver": {"r_inf": 5},
            "data": {"kind": "elliptic", "trace": {"c0": 1}}, "output": {"dir": "x"}}"#,
    );
    let o = run("solve", &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "TruncationTooSmall");
}

#[test]
fn bad_thread_override_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .env("CARLEMAN_LAB_THREADS", "zero")
        .args(["solve", "--config"])
        .arg(configs_dir().join("solve_interior.json"))
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_interior_data_gives_flat_cauchy_data() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("solve", &configs_dir().join("solve_interior.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("cauchy.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["theta", "trace", "normal_derivative"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let trace: f64 = rec[1].parse().unwrap();
        let dn: f64 = rec[2].parse().unwrap();
        assert!((trace - 1.0).abs() <= 1e-8, "trace {trace}");
        assert!(dn.abs() <= 1e-8, "normal derivative {dn}");
        rows += 1;
    }
    assert_eq!(rows, 128);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("solve_summary.json")).unwrap()).unwrap();
    let ratio = summary["record"]["ratio"].as_f64().unwrap();
    assert!((ratio - 2f64.sqrt()).abs() < 1e-8);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_do_not_depend_on_pool_width_or_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"kind": "disk", "radius": 1, "n_r": 16, "n_theta": 32, "gamma_radius": 0.5},
            "admissible": {"alpha": 1, "beta": 2, "fourier_degree": 3, "seed": 3},
            "study": {"count": 12}, "output": {"dir": "unused"}}"#,
    );
    let mut outs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let o = bin()
            .env("CARLEMAN_LAB_THREADS", threads)
            .args(["stability", "--config"])
            .arg(&cfg)
            .arg("--output-dir")
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outs.push(read_all(&dir));
    }
    assert_eq!(outs[0].len(), 3);
    assert_eq!(outs[0], outs[1]);
    for (_, bytes) in &outs[0] {
        assert!(!bytes.contains(&b'\r'));
    }
}
