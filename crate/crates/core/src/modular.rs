//! Modular functionals on finite-dimensional vectors and the F-norm they induce.
//!
//! A modular is a functional `rho: X -> [0, inf]` with `rho(x) = 0` iff
//! `x = 0`, `rho(-x) = rho(x)` and `rho(a x + b y) <= rho(x) + rho(y)` for
//! `a, b >= 0`, `a + b = 1`. Values may be `+inf`; overflow is propagated
//! rather than clamped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::Point;

/// A functional on finite-dimensional real vectors.
pub trait Modular {
    /// Fixed dimension of the space, or `None` when any dimension is accepted.
    fn dim(&self) -> Option<usize>;

    /// Evaluates on raw coordinates without validation. Callers must have
    /// checked the dimension; coordinates may be infinite.
    fn eval_raw(&self, coords: &[f64]) -> f64;

    /// The exact constant `k` with `rho(2x) = k rho(x)` when the family is
    /// homogeneous, `None` when it has to be estimated.
    fn doubling_constant(&self) -> Option<f64> {
        None
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        match self.dim() {
            Some(d) => x.check_dim(d),
            None => Ok(()),
        }
    }
}

impl<M: Modular + ?Sized> Modular for &M {
    fn dim(&self) -> Option<usize> {
        (**self).dim()
    }
    fn eval_raw(&self, coords: &[f64]) -> f64 {
        (**self).eval_raw(coords)
    }
    fn doubling_constant(&self) -> Option<f64> {
        (**self).doubling_constant()
    }
}

/// `rho(x)`, rejecting points of the wrong dimension.
pub fn eval<M: Modular + ?Sized>(m: &M, x: &Point) -> Result<f64> {
    m.check_point(x)?;
    Ok(m.eval_raw(x.coords()))
}

/// `rho(x - y)`.
pub fn distance<M: Modular + ?Sized>(m: &M, x: &Point, y: &Point) -> Result<f64> {
    m.check_point(x)?;
    y.check_dim(x.dim())?;
    let diff: Vec<f64> = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| a - b)
        .collect();
    Ok(m.eval_raw(&diff))
}

/// `rho(factor * x)`, letting coordinates overflow to infinity.
pub fn eval_scaled<M: Modular + ?Sized>(m: &M, x: &Point, factor: f64) -> Result<f64> {
    m.check_point(x)?;
    let scaled: Vec<f64> = x.coords().iter().map(|v| factor * v).collect();
    Ok(m.eval_raw(&scaled))
}

/// Young-type integrands for the discretized Orlicz modular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Young {
    /// `u^p`
    Power { p: f64 },
    /// `e^u - 1`
    ExpMinusOne,
    /// `u log(1 + u)`
    ULog,
}

impl Young {
    /// `phi(u)` for `u >= 0`.
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Young::Power { p } => u.powf(p),
            Young::ExpMinusOne => u.exp_m1(),
            Young::ULog => {
                if u == 0.0 {
                    0.0
                } else {
                    u * u.ln_1p()
                }
            }
        }
    }
}

/// Deliberately broken functionals, each violating exactly one modular axiom.
/// They exist so the checkers can be shown to catch failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Planted {
    /// `sum |sin(pi x_i)| + |x_i| / 10`; fails the convexity axiom.
    SineBump,
    /// `sum max(x_i, 0) + 2 max(-x_i, 0)`; fails symmetry.
    Asymmetric,
    /// `sum max(|x_i| - 1/2, 0)`; vanishes at small nonzero points.
    DeadZone,
}

impl Planted {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sine_bump" => Some(Planted::SineBump),
            "asymmetric" => Some(Planted::Asymmetric),
            "dead_zone" => Some(Planted::DeadZone),
            _ => None,
        }
    }

    fn term(self, v: f64) -> f64 {
        match self {
            Planted::SineBump => (std::f64::consts::PI * v).sin().abs() + v.abs() / 10.0,
            Planted::Asymmetric => v.max(0.0) + 2.0 * (-v).max(0.0),
            Planted::DeadZone => (v.abs() - 0.5).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `sum |x_i|^p`
    PPower {
        p: f64,
    },
    /// `(1/N) sum phi(|f_i|)`, coordinates being midpoint samples on `[0, 1]`.
    Orlicz {
        phi: Young,
        quadrature_nodes: usize,
    },
    /// `sum w_i |x_i|^p`
    WeightedSum {
        p: f64,
        weights: Vec<f64>,
    },
    Planted {
        functional: Planted,
    },
}

/// A validated description of one of the shipped modular families.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ModularSpec {
    family: Family,
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent p must be finite and positive, got {p}"
        )));
    }
    Ok(())
}

impl ModularSpec {
    pub fn p_power(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(ModularSpec {
            family: Family::PPower { p },
        })
    }

    pub fn orlicz(phi: Young, quadrature_nodes: usize) -> Result<Self> {
        if let Young::Power { p } = phi {
            check_exponent(p)?;
        }
        if quadrature_nodes == 0 {
            return Err(Error::InvalidParameter(
                "quadrature_nodes must be at least 1".into(),
            ));
        }
        Ok(ModularSpec {
            family: Family::Orlicz {
                phi,
                quadrature_nodes,
            },
        })
    }

    pub fn weighted_sum(p: f64, weights: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        if weights.is_empty() {
            return Err(Error::InvalidParameter("weights must be nonempty".into()));
        }
        // a zero weight makes rho vanish on a coordinate axis
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite and strictly positive, got {w}"
            )));
        }
        Ok(ModularSpec {
            family: Family::WeightedSum { p, weights },
        })
    }

    pub fn planted(functional: Planted) -> Self {
        ModularSpec {
            family: Family::Planted { functional },
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_planted(&self) -> bool {
        matches!(self.family, Family::Planted { .. })
    }
}

impl Modular for ModularSpec {
    fn dim(&self) -> Option<usize> {
        match &self.family {
            Family::PPower { .. } | Family::Planted { .. } => None,
            Family::Orlicz {
                quadrature_nodes, ..
            } => Some(*quadrature_nodes),
            Family::WeightedSum { weights, .. } => Some(weights.len()),
        }
    }

    fn eval_raw(&self, coords: &[f64]) -> f64 {
        match &self.family {
            Family::PPower { p } => coords.iter().map(|v| v.abs().powf(*p)).sum(),
            Family::Orlicz {
                phi,
                quadrature_nodes,
            } => {
                let total: f64 = coords.iter().map(|v| phi.apply(v.abs())).sum();
                total / *quadrature_nodes as f64
            }
            Family::WeightedSum { p, weights } => weights
                .iter()
                .zip(coords)
                .map(|(w, v)| w * v.abs().powf(*p))
                .sum(),
            Family::Planted { functional } => coords.iter().map(|&v| functional.term(v)).sum(),
        }
    }

    fn doubling_constant(&self) -> Option<f64> {
        match &self.family {
            Family::PPower { p } | Family::WeightedSum { p, .. } => Some(2f64.powf(*p)),
            Family::Orlicz {
                phi: Young::Power { p },
                ..
            } => Some(2f64.powf(*p)),
            _ => None,
        }
    }
}

/// Maximum number of doublings when bracketing the F-norm from `t = 1`.
pub const FNORM_MAX_DOUBLINGS: usize = 200;
/// Maximum number of bisection steps for the F-norm.
pub const FNORM_MAX_BISECTIONS: usize = 128;

/// The F-norm `inf { t > 0 : rho(x / t) <= t }`, to within `tol`.
///
/// `g(t) = rho(x/t) - t` is strictly decreasing for a modular, so the set
/// `{g <= 0}` is a ray. The upper end is found by doubling from `t = 1`,
/// then the bracket is bisected.
pub fn f_norm<M: Modular + ?Sized>(m: &M, x: &Point, tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    m.check_point(x)?;
    if x.is_zero() {
        return Ok(0.0);
    }

    let mut scratch = vec![0.0; x.dim()];
    let mut g = |t: f64| {
        for (s, v) in scratch.iter_mut().zip(x.coords()) {
            *s = v / t;
        }
        m.eval_raw(&scratch) - t
    };

    let mut hi = 1.0;
    let mut doublings = 0;
    while g(hi) > 0.0 {
        if doublings == FNORM_MAX_DOUBLINGS {
            return Err(Error::NoBracket { doublings });
        }
        hi *= 2.0;
        doublings += 1;
    }
    // g(0+) > 0 for x != 0, so 0 is a valid lower end
    let mut lo = if doublings == 0 { 0.0 } else { hi / 2.0 };

    for _ in 0..FNORM_MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
