mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use modfix::io::{read_certificate, read_trace, reverify_certificate, reverify_trace};
use modfix::ModularSpec;

struct Run {
    code: i32,
    stderr: String,
    out: PathBuf,
}

impl Run {
    fn json(&self, file: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out.join(file)).unwrap()).unwrap()
    }
}

fn modfix(dir: &TempDir, command: &str, config: &Path, extra: &[&str]) -> Run {
    let out = dir
        .path()
        .join(format!("out-{command}-{}", extra.join("_")));
    let output = Command::new(env!("CARGO_BIN_EXE_modfix"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: output.status.code().unwrap(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        out,
    }
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn shipped(name: &str) -> PathBuf {
    common::configs_dir().join(name)
}

#[test]
fn empty_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "empty.toml", "");
    for command in ["check", "solve", "certificate"] {
        assert_eq!(modfix(&dir, command, &config, &[]).code, 2, "{command}");
    }
}

#[test]
fn malformed_key_is_named_in_the_diagnostic() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "bad.toml",
        "[space]\nfamily = \"ppower\"\np = -1.0\ndim = 2\n",
    );
    let run = modfix(&dir, "check", &config, &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("space.p"), "{}", run.stderr);

    let config = write_config(
        &dir,
        "typo.toml",
        "[space]\nfamily = \"ppower\"\np = 1.0\ndim = 2\nflavour = 3\n",
    );
    let run = modfix(&dir, "check", &config, &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("space.flavour"), "{}", run.stderr);
}

#[test]
fn missing_config_flag_is_a_usage_error() {
    let status = Command::new(env!("CARGO_BIN_EXE_modfix"))
        .arg("check")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn check_reports_exact_doubling_constant_for_p2() {
    let dir = TempDir::new().unwrap();
    let run = modfix(&dir, "check", &shipped("p2_check.toml"), &[]);
    assert_eq!(run.code, 0);
    let k = run.json("delta2.json")["estimate"]["constant"]
        .as_f64()
        .unwrap();
    assert!((k - 4.0).abs() <= 1e-6, "{k}");
    for file in [
        "axioms.json",
        "s_convexity.json",
        "fatou.json",
        "summary.json",
    ] {
        assert!(run.out.join(file).exists(), "{file}");
    }
}

#[test]
fn check_flags_planted_convexity_failure() {
    let dir = TempDir::new().unwrap();
    let run = modfix(&dir, "check", &shipped("planted_sine_bump.toml"), &[]);
    assert_eq!(run.code, 1);
    let axioms = run.json("axioms.json");
    let witnesses = axioms["violations"].as_array().unwrap();
    assert!(witnesses.iter().any(|v| v["axiom"] == "convexity"));
}

#[test]
fn check_passes_on_every_valid_shipped_space() {
    let dir = TempDir::new().unwrap();
    for name in [
        "p2_check.toml",
        "orlicz_exp_check.toml",
        "half_p1.toml",
        "weighted_affine.toml",
        "logistic_ulog.toml",
    ] {
        assert_eq!(modfix(&dir, "check", &shipped(name), &[]).code, 0, "{name}");
    }
    for name in ["planted_asymmetric.toml", "planted_dead_zone.toml"] {
        assert_eq!(modfix(&dir, "check", &shipped(name), &[]).code, 1, "{name}");
    }
}

#[test]
fn solve_half_map_converges() {
    let dir = TempDir::new().unwrap();
    let run = modfix(&dir, "solve", &shipped("half_p1.toml"), &[]);
    assert_eq!(run.code, 0);
    let summary = run.json("summary.json");
    assert_eq!(summary["converged"], true);
    let tol = summary["tol"].as_f64().unwrap();
    let trace = read_trace(&run.out.join("trace.csv")).unwrap();
    assert!(trace.last().unwrap().residual <= tol);
}

#[test]
fn solve_reports_divergence_with_partial_trace() {
    let dir = TempDir::new().unwrap();
    let run = modfix(&dir, "solve", &shipped("divergent_affine.toml"), &[]);
    assert_eq!(run.code, 1);
    let trace = read_trace(&run.out.join("trace.csv")).unwrap();
    assert!(trace.len() > 1);
}

#[test]
fn solve_with_no_iterations_keeps_only_the_start() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(shipped("half_p1.toml"))
        .unwrap()
        .replace("max_iter = 1000", "max_iter = 0");
    assert!(text.contains("max_iter = 0"));
    let config = write_config(&dir, "zero.toml", &text);
    let run = modfix(&dir, "solve", &config, &[]);
    assert_eq!(run.code, 1);
    let trace = read_trace(&run.out.join("trace.csv")).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(trace[0].n, 0);
    assert_eq!(trace[0].point, vec![1.0]);
}

#[test]
fn certificate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let base = fs::read_to_string(shipped("half_p1.toml")).unwrap();
    assert_eq!(
        modfix(&dir, "certificate", &shipped("half_p1.toml"), &[]).code,
        0
    );

    // omega = 1 under p = 1 gives alpha = 1 + 1e-6; half of it cannot dominate the orbit
    let halved = write_config(
        &dir,
        "halved.toml",
        &base.replace("N = 60", "N = 60\nalpha = 0.5000005"),
    );
    let run = modfix(&dir, "certificate", &halved, &[]);
    assert_eq!(run.code, 1);
    assert_eq!(run.json("certificate.json")["all_pass"], false);

    let empty = write_config(&dir, "n0.toml", &base.replace("N = 60", "N = 0"));
    let run = modfix(&dir, "certificate", &empty, &[]);
    assert_eq!(run.code, 0);
    assert_eq!(run.json("certificate.json")["pair_check_vacuous"], true);

    assert_eq!(
        modfix(&dir, "certificate", &shipped("divergent_affine.toml"), &[]).code,
        1
    );
}

#[test]
fn shipped_contractions_solve_and_certify() {
    let dir = TempDir::new().unwrap();
    for name in common::CONTRACTIONS {
        assert_eq!(
            modfix(&dir, "solve", &shipped(name), &[]).code,
            0,
            "solve {name}"
        );
        assert_eq!(
            modfix(&dir, "certificate", &shipped(name), &[]).code,
            0,
            "certificate {name}"
        );
    }
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    for (command, name, file) in [
        ("check", "planted_sine_bump.toml", "summary.json"),
        ("solve", "affine_2d_p2.toml", "summary.json"),
        ("certificate", "weighted_affine.toml", "certificate.json"),
    ] {
        let a = modfix(&dir, command, &shipped(name), &["--seed", "77"]);
        let out_b = dir.path().join("second");
        let b = Command::new(env!("CARGO_BIN_EXE_modfix"))
            .args([command, "--seed", "77", "--quiet", "--config"])
            .arg(shipped(name))
            .arg("--out")
            .arg(&out_b)
            .status()
            .unwrap();
        assert_eq!(Some(a.code), b.code());
        let second: Value =
            serde_json::from_str(&fs::read_to_string(out_b.join(file)).unwrap()).unwrap();
        assert_eq!(a.json(file), second, "{command} {name}");
        fs::remove_dir_all(&out_b).unwrap();
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let a = modfix(
        &dir,
        "check",
        &shipped("planted_sine_bump.toml"),
        &["--seed", "1"],
    );
    let b = modfix(
        &dir,
        "check",
        &shipped("planted_sine_bump.toml"),
        &["--seed", "2"],
    );
    assert_eq!(a.json("summary.json")["seed"], 1);
    assert_eq!(b.json("summary.json")["seed"], 2);
    assert_ne!(
        a.json("axioms.json")["violations"],
        b.json("axioms.json")["violations"]
    );
}

#[test]
fn written_files_reverify() {
    let dir = TempDir::new().unwrap();
    for name in common::CONTRACTIONS {
        let cfg = common::load(name);
        let run = modfix(&dir, "solve", &shipped(name), &[]);
        let trace = read_trace(&run.out.join("trace.csv")).unwrap();
        let power = run.json("summary.json")["trace"]["power"].as_u64().unwrap() as usize;
        let map = modfix::cli::iterated_map(cfg.map.as_ref().unwrap(), power);
        let rv = reverify_trace(&trace, &cfg.space, Some(&map)).unwrap();
        assert!(rv.ok(), "trace {name}: {rv:?}");

        let run = modfix(&dir, "certificate", &shipped(name), &[]);
        let records = read_certificate(&run.out.join("certificate.csv")).unwrap();
        let rv = reverify_certificate(&records, &cfg.space).unwrap();
        assert!(rv.ok(), "certificate {name}: {rv:?}");
    }
}

#[test]
fn tampered_certificate_fails_reverification() {
    let dir = TempDir::new().unwrap();
    let run = modfix(&dir, "certificate", &shipped("half_p1.toml"), &[]);
    let mut records = read_certificate(&run.out.join("certificate.csv")).unwrap();
    records[3].pair_slack = records[3].pair_slack.map(|s| s + 1e-3);
    let rv = reverify_certificate(&records, &ModularSpec::p_power(1.0).unwrap()).unwrap();
    assert!(!rv.ok());
}
