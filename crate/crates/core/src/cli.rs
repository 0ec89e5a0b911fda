//! The `check`, `solve` and `certificate` commands.
//!
//! Each command writes its reports into the output directory and returns an
//! exit code: 0 on success, 1 on a mathematical failure (violation,
//! divergence, failed certificate), 2 on usage or I/O errors.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::chain::{build_chain, cauchy_modulus, compute_alpha};
use crate::checks::{
    check_fatou_sampled, check_modular_axioms, check_s_convexity, delta2_type_estimate,
};
use crate::config::ProblemConfig;
use crate::error::Error;
use crate::io::{write_certificate, write_json, write_trace, IoError};
use crate::map::{ContractionClaim, MapSpec, SelfMap};
use crate::sampler::PointSampler;
use crate::solver::{
    orbit_bound_check, picard_solve, resolve_doubling_constant, solve_via_power,
    verify_contraction, verify_s_contraction, ContractionReport, IterationTrace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Number of sampled `(x, y)` pairs for the Fatou check.
pub const FATOU_PAIRS: usize = 16;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
    pub files: Vec<PathBuf>,
}

/// Independent seeds for the different samplers of one run.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn require_map(cfg: &ProblemConfig) -> Result<&MapSpec, CliError> {
    cfg.map
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing key `map.kind`".into()))
}

fn usage_or(e: Error) -> Result<String, CliError> {
    if e.is_usage() {
        Err(CliError::Usage(e.to_string()))
    } else {
        Ok(e.to_string())
    }
}

pub fn run_check(cfg: &ProblemConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    prepare_out_dir(out_dir)?;
    let m = &cfg.space;
    let mut files = Vec::new();
    let mut failures = Vec::new();

    let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 0));
    let axioms = check_modular_axioms(m, &mut sampler, cfg.trials)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !axioms.passed() {
        failures.push(format!("{} axiom violations", axioms.violation_count));
    }
    let path = out_dir.join("axioms.json");
    write_json(&path, &axioms)?;
    files.push(path);

    let s_report = match cfg.check_s {
        Some(s) => {
            let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 1));
            let report = check_s_convexity(m, s, &mut sampler, cfg.trials)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if !report.passed() {
                failures.push(format!("{} s-convexity violations", report.violation_count));
            }
            let path = out_dir.join("s_convexity.json");
            write_json(&path, &json!({ "s": s, "report": report }))?;
            files.push(path);
            Some(report.passed())
        }
        None => None,
    };

    let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 2));
    let delta2 = match delta2_type_estimate(m, &mut sampler, cfg.trials) {
        Ok(est) => json!({ "estimate": est }),
        Err(e) => {
            let msg = usage_or(e)?;
            failures.push(format!("doubling constant: {msg}"));
            json!({ "error": msg })
        }
    };
    let path = out_dir.join("delta2.json");
    write_json(&path, &delta2)?;
    files.push(path);

    let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 3));
    let mut fatou = Vec::with_capacity(FATOU_PAIRS);
    for _ in 0..FATOU_PAIRS {
        let x = sampler.point();
        let y = sampler.point();
        let report = check_fatou_sampled(m, &x, &y, cfg.fatou_ratio, cfg.fatou_steps, &mut sampler)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        fatou.push(json!({ "x": x, "y": y, "report": report }));
    }
    let fatou_fail = fatou
        .iter()
        .filter(|f| f["report"]["holds"] == json!(false))
        .count();
    if fatou_fail > 0 {
        failures.push(format!("{fatou_fail} Fatou failures"));
    }
    let path = out_dir.join("fatou.json");
    write_json(&path, &fatou)?;
    files.push(path);

    let pass = failures.is_empty();
    let path = out_dir.join("summary.json");
    write_json(
        &path,
        &json!({
            "command": "check",
            "seed": cfg.seed,
            "space": m,
            "trials": cfg.trials,
            "axioms_pass": axioms.passed(),
            "axiom_violations": axioms.violation_count,
            "s_convexity_pass": s_report,
            "delta2": delta2,
            "fatou_failures": fatou_fail,
            "pass": pass,
        }),
    )?;
    files.push(path);

    Ok(Outcome {
        exit_code: if pass { EXIT_OK } else { EXIT_FAILURE },
        message: if pass {
            "all checks passed".into()
        } else {
            failures.join("; ")
        },
        files,
    })
}

/// Verifies the claimed constant and measures the empirical one.
fn contraction_evidence(
    cfg: &ProblemConfig,
    map: &MapSpec,
) -> Result<(f64, Option<ContractionReport>, Option<ContractionReport>), CliError> {
    let m = &cfg.space;
    let usage = |e: Error| CliError::Usage(e.to_string());
    let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 4));
    // c = 0 flags every pair; only the observed ratio is used
    let empirical = verify_contraction(map, m, 0.0, &mut sampler, cfg.trials).map_err(usage)?;
    let mut claimed = None;
    let mut s_claim = None;
    match map.claim {
        Some(ContractionClaim::Banach { c }) => {
            let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 5));
            claimed = Some(verify_contraction(map, m, c, &mut sampler, cfg.trials).map_err(usage)?);
        }
        Some(ContractionClaim::SConvex { c, k, s }) => {
            let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 5));
            s_claim = Some(
                verify_s_contraction(map, m, c, k, s, &mut sampler, cfg.trials).map_err(usage)?,
            );
        }
        None => {}
    }
    Ok((empirical.max_ratio, claimed, s_claim))
}

fn solver_constant(map: &MapSpec, empirical: f64) -> f64 {
    match map.claim {
        Some(ContractionClaim::Banach { c }) => c,
        _ => empirical,
    }
}

fn trace_summary(trace: &IterationTrace) -> serde_json::Value {
    json!({
        "power": trace.power,
        "iterations": trace.iterations(),
        "converged": trace.converged,
        "fixed_point": trace.fixed_point,
        "final_step_mod": trace.last().and_then(|s| s.step_mod),
        "final_residual": trace.last().map(|s| s.residual),
    })
}

pub fn run_solve(cfg: &ProblemConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let map = require_map(cfg)?;
    prepare_out_dir(out_dir)?;
    let m = &cfg.space;
    let (empirical, claimed, s_claim) = contraction_evidence(cfg, map)?;
    let c = solver_constant(map, empirical);

    let mut sampler = PointSampler::new(cfg.dim, sub_seed(cfg.seed, 6));
    let doubling = match resolve_doubling_constant(m, &mut sampler, cfg.trials) {
        Ok(d) => Some(d),
        Err(e) => {
            usage_or(e)?;
            None
        }
    };
    let k = doubling.map_or(f64::INFINITY, |d| d.k);
    let use_power = c < 1.0 && k.is_finite() && c * k >= 0.5;

    let x0 = &cfg.initial_point;
    let result = if use_power {
        solve_via_power(map, m, c, k, x0, cfg.tol, cfg.max_iter)
            .map(|sol| (sol.trace, sol.base_residual))
    } else {
        picard_solve(map, m, x0, cfg.tol, cfg.max_iter).map(|t| (t, None))
    };

    let trace_path = out_dir.join("trace.csv");
    let mut files = Vec::new();
    let (trace, base_residual, failure) = match result {
        Ok((trace, base)) => (Some(trace), base, None),
        Err(Error::Divergence { step, trace }) => {
            (Some(*trace), None, Some(format!("diverged at step {step}")))
        }
        Err(e) => (None, None, Some(usage_or(e)?)),
    };
    if let Some(trace) = &trace {
        write_trace(&trace_path, trace)?;
        files.push(trace_path);
    }

    let converged = trace.as_ref().is_some_and(|t| t.converged);
    let summary_path = out_dir.join("summary.json");
    write_json(
        &summary_path,
        &json!({
            "command": "solve",
            "seed": cfg.seed,
            "space": m,
            "map": map,
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
            "empirical_c": empirical,
            "c_used": c,
            "claimed_contraction": claimed,
            "s_contraction": s_claim,
            "doubling_constant": doubling,
            "path": if use_power { "power" } else { "picard" },
            "trace": trace.as_ref().map(trace_summary),
            "base_residual": base_residual,
            "failure": failure,
            "converged": converged,
        }),
    )?;
    files.push(summary_path);

    let message = match (&trace, &failure) {
        (_, Some(f)) => f.clone(),
        (Some(t), None) if t.converged => format!(
            "converged after {} iterations (power {})",
            t.iterations(),
            t.power
        ),
        (Some(t), None) => format!("no convergence within {} iterations", t.iterations()),
        (None, None) => "no trace".into(),
    };
    Ok(Outcome {
        exit_code: if converged { EXIT_OK } else { EXIT_FAILURE },
        message,
        files,
    })
}

pub fn run_certificate(cfg: &ProblemConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let map = require_map(cfg)?;
    prepare_out_dir(out_dir)?;
    let m = &cfg.space;
    let summary_path = out_dir.join("certificate.json");
    let fail = |reason: String, files: Vec<PathBuf>| -> Result<Outcome, CliError> {
        write_json(
            &summary_path,
            &json!({ "command": "certificate", "all_pass": false, "failure": reason }),
        )?;
        let mut files = files;
        files.push(summary_path.clone());
        Ok(Outcome {
            exit_code: EXIT_FAILURE,
            message: reason,
            files,
        })
    };

    let (empirical, _, _) = contraction_evidence(cfg, map)?;
    let c = solver_constant(map, empirical);
    if c >= 1.0 {
        return fail(format!("not a contraction: empirical constant {c}"), vec![]);
    }

    let omega = &cfg.initial_point;
    let orbit = orbit_bound_check(map, m, omega, cfg.chain_n.max(2))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !orbit.sup.is_finite() {
        return fail(
            "unbounded orbit: sup rho(2 T^n omega) is infinite".into(),
            vec![],
        );
    }

    let alpha = match cfg.chain_alpha {
        Some(a) => a,
        None => match compute_alpha(m, map, omega, c, cfg.chain_n) {
            Ok(a) => a,
            Err(e) => return fail(usage_or(e)?, vec![]),
        },
    };
    let cert = match build_chain(m, map, omega, c, alpha, cfg.chain_n) {
        Ok(cert) => cert,
        Err(e) => return fail(usage_or(e)?, vec![]),
    };
    let cauchy = cauchy_modulus(&cert);

    let csv_path = out_dir.join("certificate.csv");
    write_certificate(&csv_path, &cert, m)?;
    write_json(
        &summary_path,
        &json!({
            "command": "certificate",
            "seed": cfg.seed,
            "space": m,
            "map": map,
            "omega": cert.omega,
            "c": c,
            "alpha": cert.alpha,
            "N": cert.len(),
            "orbit_sup": orbit.sup,
            "orbit_stabilized": orbit.stabilized,
            "limit_candidate": cert.limit_candidate,
            "pair_check": cert.pair_check,
            "pair_check_vacuous": cert.pair_check.is_vacuous(),
            "max_check": cert.max_check,
            "cauchy_modulus": cauchy,
            "all_pass": cert.all_pass,
        }),
    )?;

    Ok(Outcome {
        exit_code: if cert.all_pass { EXIT_OK } else { EXIT_FAILURE },
        message: if cert.all_pass {
            format!("certificate verified for N = {}", cert.len())
        } else {
            format!(
                "certificate failed: worst pair slack {:e}, worst maximum slack {:e}",
                cert.pair_check.worst_slack, cert.max_check.worst_slack
            )
        },
        files: vec![csv_path, summary_path],
    })
}

/// The map that produced a trace written by `solve`, for re-verification.
pub fn iterated_map(map: &MapSpec, power: usize) -> impl SelfMap + '_ {
    crate::map::Power { map, n: power }
}
