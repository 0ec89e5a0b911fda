#![allow(dead_code)]

use std::path::PathBuf;

use modfix::config::ProblemConfig;
use modfix::map::ContractionClaim;
use modfix::solver::verify_contraction;
use modfix::{MapSpec, PointSampler};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load(name: &str) -> ProblemConfig {
    ProblemConfig::load(&configs_dir().join(name)).unwrap()
}

/// Shipped configurations whose map is a contraction.
pub const CONTRACTIONS: [&str; 8] = [
    "half_p1.toml",
    "half_p2.toml",
    "affine_half_p1.toml",
    "affine_2d_p2.toml",
    "weighted_affine.toml",
    "logistic_ulog.toml",
    "const_p2.toml",
    "s_contraction.toml",
];

/// Claimed constant, or the empirical one when the claim is of the s-form.
pub fn banach_constant(cfg: &ProblemConfig) -> f64 {
    let map = cfg.map.as_ref().unwrap();
    match map.claim {
        Some(ContractionClaim::Banach { c }) => c,
        _ => {
            let mut s = PointSampler::new(cfg.dim, cfg.seed);
            verify_contraction(map, &cfg.space, 0.0, &mut s, cfg.trials)
                .unwrap()
                .max_ratio
        }
    }
}

/// Solves `(I - A) x = b` by Gaussian elimination with partial pivoting.
pub fn solve_fixed_point_directly(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let d = b.len();
    let mut m: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut row: Vec<f64> = (0..d)
                .map(|j| if i == j { 1.0 - a[i][j] } else { -a[i][j] })
                .collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let pivot_row = m[col].clone();
        for row in &mut m[col + 1..] {
            let f = row[col] / pivot_row[col];
            for (a, b) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *a -= f * b;
            }
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][d] - s) / m[i][i];
    }
    x
}

pub fn affine_rows(map: &MapSpec) -> Vec<Vec<f64>> {
    map.matrix_rows().unwrap()
}
