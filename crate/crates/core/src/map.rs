//! Self-maps of the discretized modular space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::Point;

/// A map `T: X -> X` on points of a fixed dimension.
pub trait SelfMap {
    /// Fixed dimension, or `None` for maps acting coordinate-wise on any dimension.
    fn dim(&self) -> Option<usize>;

    /// `T(x)`; non-finite results are reported as [`Error::NonFinite`].
    fn apply(&self, x: &Point) -> Result<Point>;

    fn check_point(&self, x: &Point) -> Result<()> {
        match self.dim() {
            Some(d) => x.check_dim(d),
            None => Ok(()),
        }
    }
}

impl<T: SelfMap + ?Sized> SelfMap for &T {
    fn dim(&self) -> Option<usize> {
        (**self).dim()
    }
    fn apply(&self, x: &Point) -> Result<Point> {
        (**self).apply(x)
    }
}

/// `n`-fold composition `T^n`, applied step by step.
#[derive(Debug, Clone, Copy)]
pub struct Power<M> {
    pub map: M,
    pub n: usize,
}

impl<M: SelfMap> SelfMap for Power<M> {
    fn dim(&self) -> Option<usize> {
        self.map.dim()
    }

    fn apply(&self, x: &Point) -> Result<Point> {
        let mut y = x.clone();
        for _ in 0..self.n {
            y = self.map.apply(&y)?;
        }
        Ok(y)
    }
}

/// One-dimensional maps applied to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScalarMap {
    /// `u / 2`
    Half,
    /// `lambda u / (1 + |u|)`
    LogisticDamped { lambda: f64 },
    /// `u -> value`
    Const { value: f64 },
}

impl ScalarMap {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            ScalarMap::Half => 0.5 * u,
            ScalarMap::LogisticDamped { lambda } => lambda * u / (1.0 + u.abs()),
            ScalarMap::Const { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    /// `x -> A x + b`, `A` stored row-major.
    Affine {
        dim: usize,
        matrix: Vec<f64>,
        offset: Vec<f64>,
    },
    Scalarwise {
        map: ScalarMap,
    },
}

/// The contraction constants a map is claimed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ContractionClaim {
    /// `rho(Tx - Ty) <= c rho(x - y)` with `0 <= c < 1`.
    Banach { c: f64 },
    /// `rho(c (Tx - Ty)) <= k^s rho(x - y)` with `c > max(1, k)`, `0 < s <= 1`.
    SConvex { c: f64, k: f64, s: f64 },
}

impl ContractionClaim {
    pub fn validate(self) -> Result<Self> {
        match self {
            ContractionClaim::Banach { c } => check_banach_constant(c)?,
            ContractionClaim::SConvex { c, k, s } => check_s_constants(c, k, s)?,
        }
        Ok(self)
    }
}

pub(crate) fn check_banach_constant(c: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "contraction constant must lie in [0, 1), got {c}"
        )));
    }
    Ok(())
}

pub(crate) fn check_s_constants(c: f64, k: f64, s: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0 && c.is_finite() && c > k.max(1.0)) {
        return Err(Error::InvalidParameter(format!(
            "need c > max(1, k), got c = {c}, k = {k}"
        )));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "s must lie in (0, 1], got {s}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSpec {
    pub kind: MapKind,
    pub claim: Option<ContractionClaim>,
}

impl MapSpec {
    /// `x -> A x + b`; `rows` is `A` given row by row.
    pub fn affine(rows: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 {
            return Err(Error::EmptyPoint);
        }
        if rows.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rows.len(),
            });
        }
        let mut matrix = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            matrix.extend(row);
        }
        if matrix.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "affine coefficients must be finite".into(),
            ));
        }
        Ok(MapSpec {
            kind: MapKind::Affine {
                dim,
                matrix,
                offset,
            },
            claim: None,
        })
    }

    /// `x -> scale x + b`.
    pub fn affine_diagonal(scale: f64, offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect();
        Self::affine(rows, offset)
    }

    pub fn scalarwise(map: ScalarMap) -> Result<Self> {
        match map {
            ScalarMap::LogisticDamped { lambda } if !lambda.is_finite() => {
                return Err(Error::InvalidParameter("lambda must be finite".into()))
            }
            ScalarMap::Const { value } if !value.is_finite() => {
                return Err(Error::InvalidParameter("constant must be finite".into()))
            }
            _ => {}
        }
        Ok(MapSpec {
            kind: MapKind::Scalarwise { map },
            claim: None,
        })
    }

    pub fn with_claim(mut self, claim: ContractionClaim) -> Result<Self> {
        self.claim = Some(claim.validate()?);
        Ok(self)
    }

    /// Rows of `A` for affine maps.
    pub fn matrix_rows(&self) -> Option<Vec<Vec<f64>>> {
        match &self.kind {
            MapKind::Affine { dim, matrix, .. } => {
                Some(matrix.chunks(*dim).map(<[f64]>::to_vec).collect())
            }
            MapKind::Scalarwise { .. } => None,
        }
    }
}

impl SelfMap for MapSpec {
    fn dim(&self) -> Option<usize> {
        match &self.kind {
            MapKind::Affine { dim, .. } => Some(*dim),
            MapKind::Scalarwise { .. } => None,
        }
    }

    fn apply(&self, x: &Point) -> Result<Point> {
        self.check_point(x)?;
        let coords = match &self.kind {
            MapKind::Affine {
                dim,
                matrix,
                offset,
            } => matrix
                .chunks(*dim)
                .zip(offset)
                .map(|(row, b)| row.iter().zip(x.coords()).map(|(a, v)| a * v).sum::<f64>() + b)
                .collect(),
            MapKind::Scalarwise { map } => x.coords().iter().map(|&u| map.apply(u)).collect(),
        };
        Point::new(coords)
    }
}
