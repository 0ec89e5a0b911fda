//! Trace and certificate files.
//!
//! Both are comma-separated with a fixed header row; numbers are written in
//! scientific notation with 17 significant digits so that reading a file back
//! reproduces every value bit for bit.

use std::fs::File;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::chain::ChainCertificate;
use crate::map::SelfMap;
use crate::modular::Modular;
use crate::point::Point;
use crate::solver::IterationTrace;
use crate::tolerance::allowance;

pub const TRACE_HEADER: [&str; 4] = ["n", "step_mod", "residual", "doubled_orbit"];
pub const CERTIFICATE_HEADER: [&str; 4] = ["n", "alpha", "pair_slack", "max_slack"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Math(#[from] crate::error::Error),
}

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_number(field: &str, line: usize) -> Result<f64, IoError> {
    field
        .trim()
        .parse()
        .map_err(|_| IoError::Format(format!("line {line}: cannot parse number `{field}`")))
}

fn parse_optional(field: &str, line: usize) -> Result<Option<f64>, IoError> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_number(field, line).map(Some)
    }
}

fn header(fixed: &[&str], dim: usize) -> Vec<String> {
    fixed
        .iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|i| format!("x{i}")))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path)?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub step_mod: Option<f64>,
    pub residual: f64,
    pub doubled_orbit: f64,
    pub point: Vec<f64>,
}

pub fn write_trace(path: &Path, trace: &IterationTrace) -> Result<(), IoError> {
    let dim = trace.steps.first().map_or(0, |s| s.point.dim());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(&TRACE_HEADER, dim))?;
    for step in &trace.steps {
        let mut row = vec![
            step.n.to_string(),
            step.step_mod.map(format_number).unwrap_or_default(),
            format_number(step.residual),
            format_number(step.doubled_orbit),
        ];
        row.extend(step.point.coords().iter().map(|&v| format_number(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let head = r.headers()?.clone();
    if head.len() < TRACE_HEADER.len() || head.iter().zip(TRACE_HEADER).any(|(a, b)| a != b) {
        return Err(IoError::Format(format!("unexpected trace header {head:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        out.push(TraceRecord {
            n: rec[0]
                .parse()
                .map_err(|_| IoError::Format(format!("line {line}: bad step index")))?,
            step_mod: parse_optional(&rec[1], line)?,
            residual: parse_number(&rec[2], line)?,
            doubled_orbit: parse_number(&rec[3], line)?,
            point: rec
                .iter()
                .skip(TRACE_HEADER.len())
                .map(|f| parse_number(f, line))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(out)
}

/// Largest disagreement found when recomputing recorded values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reverification {
    pub checked: usize,
    pub mismatches: usize,
    /// Largest `|recorded - recomputed|`.
    pub max_abs_diff: f64,
}

impl Reverification {
    fn new() -> Self {
        Reverification {
            checked: 0,
            mismatches: 0,
            max_abs_diff: 0.0,
        }
    }

    fn compare(&mut self, recorded: f64, recomputed: f64) {
        self.checked += 1;
        if recorded == recomputed {
            return;
        }
        let diff = (recorded - recomputed).abs();
        if diff.is_nan() || diff > allowance(recomputed) {
            self.mismatches += 1;
        }
        if !diff.is_nan() {
            self.max_abs_diff = self.max_abs_diff.max(diff);
        }
    }

    pub fn ok(&self) -> bool {
        self.mismatches == 0
    }
}

/// Recomputes step modulars and doubled-orbit values from the stored
/// coordinates, and residuals when `map` is supplied.
///
/// `map` must be the map that was iterated (the composed power for the
/// power path).
pub fn reverify_trace<M: Modular + ?Sized>(
    records: &[TraceRecord],
    m: &M,
    map: Option<&dyn SelfMap>,
) -> Result<Reverification, IoError> {
    let mut rv = Reverification::new();
    let points = records
        .iter()
        .map(|r| Point::new(r.point.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, rec) in records.iter().enumerate() {
        let x = &points[i];
        rv.compare(rec.doubled_orbit, crate::modular::eval_scaled(m, x, 2.0)?);
        if let (Some(step), true) = (rec.step_mod, i > 0) {
            rv.compare(step, crate::modular::distance(m, x, &points[i - 1])?);
        }
        if let Some(map) = map {
            if rec.residual.is_finite() {
                rv.compare(
                    rec.residual,
                    crate::modular::distance(m, &map.apply(x)?, x)?,
                );
            }
        }
    }
    Ok(rv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRecord {
    pub n: usize,
    pub alpha: f64,
    pub pair_slack: Option<f64>,
    pub max_slack: f64,
    pub point: Vec<f64>,
}

pub fn write_certificate<M: Modular + ?Sized>(
    path: &Path,
    cert: &ChainCertificate,
    m: &M,
) -> Result<(), IoError> {
    let slacks = cert.node_slacks(m)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(&CERTIFICATE_HEADER, cert.omega.dim()))?;
    for (n, (node, (pair, max))) in cert.nodes.iter().zip(slacks).enumerate() {
        let mut row = vec![
            n.to_string(),
            format_number(node.alpha),
            pair.map(format_number).unwrap_or_default(),
            format_number(max),
        ];
        row.extend(node.point.coords().iter().map(|&v| format_number(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_certificate(path: &Path) -> Result<Vec<CertificateRecord>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let head = r.headers()?.clone();
    if head.len() < CERTIFICATE_HEADER.len()
        || head.iter().zip(CERTIFICATE_HEADER).any(|(a, b)| a != b)
    {
        return Err(IoError::Format(format!(
            "unexpected certificate header {head:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        out.push(CertificateRecord {
            n: rec[0]
                .parse()
                .map_err(|_| IoError::Format(format!("line {line}: bad node index")))?,
            alpha: parse_number(&rec[1], line)?,
            pair_slack: parse_optional(&rec[2], line)?,
            max_slack: parse_number(&rec[3], line)?,
            point: rec
                .iter()
                .skip(CERTIFICATE_HEADER.len())
                .map(|f| parse_number(f, line))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(out)
}

/// Recomputes every node's pair slack and maximum-element slack from the
/// stored nodes; the last node is the limit candidate.
pub fn reverify_certificate<M: Modular + ?Sized>(
    records: &[CertificateRecord],
    m: &M,
) -> Result<Reverification, IoError> {
    let Some(last) = records.last() else {
        return Err(IoError::Format("certificate has no nodes".into()));
    };
    let limit = Point::new(last.point.clone())?;
    let points = records
        .iter()
        .map(|r| Point::new(r.point.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rv = Reverification::new();
    for (p, rec) in records.iter().enumerate() {
        let mut worst: Option<f64> = None;
        for (q, later) in records.iter().enumerate().skip(p + 1) {
            let slack =
                (rec.alpha - later.alpha) - crate::modular::distance(m, &points[p], &points[q])?;
            worst = Some(worst.map_or(slack, |w| w.min(slack)));
        }
        match (rec.pair_slack, worst) {
            (Some(a), Some(b)) => rv.compare(a, b),
            (None, None) => {}
            _ => rv.mismatches += 1,
        }
        rv.compare(
            rec.max_slack,
            rec.alpha - crate::modular::distance(m, &points[p], &limit)?,
        );
    }
    Ok(rv)
}
