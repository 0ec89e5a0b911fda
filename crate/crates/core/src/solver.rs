//! Contraction checks and Picard iteration in a modular space.
//!
//! Under `rho(Tx - Ty) <= c rho(x - y)` the Picard orbit `x_{n+1} = T x_n`
//! is rho-Cauchy whenever the doubling constant `k` of `rho` satisfies
//! `c k < 1/2`. When it does not, `T` is replaced by `T^n` for the smallest
//! `n` with `c^n k < 1/2`; the fixed point is the same.

use serde::{Deserialize, Serialize};

use crate::checks::{delta2_type_estimate, AxiomId, AxiomReport};
use crate::error::{Error, Result};
use crate::map::{check_banach_constant, check_s_constants, Power, SelfMap};
use crate::modular::{distance, eval, eval_scaled, Modular};
use crate::point::Point;
use crate::sampler::PointSampler;
use crate::tolerance::leq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    #[serde(flatten)]
    pub report: AxiomReport,
    /// Largest observed ratio of the two sides. Empirical, never a proof.
    pub max_ratio: f64,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

fn check_space<T: SelfMap + ?Sized, M: Modular + ?Sized>(map: &T, m: &M, dim: usize) -> Result<()> {
    for expected in [map.dim(), m.dim()].into_iter().flatten() {
        if expected != dim {
            return Err(Error::DimensionMismatch {
                expected,
                found: dim,
            });
        }
    }
    Ok(())
}

/// Draws the pair for trial `t`. The first `dim` trials probe unit steps
/// along each coordinate axis, where the ratio of a linear map under a
/// 1-power modular is largest.
fn draw_pair(sampler: &mut PointSampler, t: usize) -> Result<(Point, Point)> {
    let x = sampler.point();
    let y = if t < sampler.dim() {
        let mut coords = x.coords().to_vec();
        coords[t] += 1.0;
        Point::new(coords)?
    } else {
        sampler.point()
    };
    Ok((x, y))
}

/// Samples `rho(Tx - Ty) <= c rho(x - y)`.
pub fn verify_contraction<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    map: &T,
    m: &M,
    c: f64,
    sampler: &mut PointSampler,
    trials: usize,
) -> Result<ContractionReport> {
    check_banach_constant(c)?;
    check_trials(trials)?;
    check_space(map, m, sampler.dim())?;
    let mut report = AxiomReport::new();
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let (x, y) = draw_pair(sampler, t)?;
        let lhs = distance(m, &map.apply(&x)?, &map.apply(&y)?)?;
        let base = distance(m, &x, &y)?;
        if base > 0.0 {
            max_ratio = max_ratio.max(lhs / base);
        }
        report.check_leq(AxiomId::Contraction, &x, Some(&y), &[c], lhs, c * base);
        report.trials += 1;
    }
    Ok(ContractionReport { report, max_ratio })
}

/// Samples `rho(c (Tx - Ty)) <= k^s rho(x - y)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_s_contraction<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    map: &T,
    m: &M,
    c: f64,
    k: f64,
    s: f64,
    sampler: &mut PointSampler,
    trials: usize,
) -> Result<ContractionReport> {
    check_s_constants(c, k, s)?;
    check_trials(trials)?;
    check_space(map, m, sampler.dim())?;
    let ks = k.powf(s);
    let mut report = AxiomReport::new();
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let (x, y) = draw_pair(sampler, t)?;
        let diff = map.apply(&x)?.sub(&map.apply(&y)?)?;
        let lhs = eval_scaled(m, &diff, c)?;
        let base = distance(m, &x, &y)?;
        if base > 0.0 {
            max_ratio = max_ratio.max(lhs / base);
        }
        report.check_leq(
            AxiomId::SContraction,
            &x,
            Some(&y),
            &[c, k, s],
            lhs,
            ks * base,
        );
        report.trials += 1;
    }
    Ok(ContractionReport { report, max_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitBound {
    /// `max_{1<=n<=N} rho(2 T^n omega)`
    pub sup: f64,
    /// Running max unchanged (within tolerance) over the last `ceil(N/2)` steps.
    pub stabilized: bool,
    /// `rho(2 T^n omega)` for `n = 1..`; shorter than `N` if the orbit overflowed.
    pub values: Vec<f64>,
}

/// Evaluates `rho(2 T^n omega)` for `n = 1..=n_max`.
pub fn orbit_bound_check<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    map: &T,
    m: &M,
    omega: &Point,
    n_max: usize,
) -> Result<OrbitBound> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(
            "orbit length must be at least 2".into(),
        ));
    }
    check_space(map, m, omega.dim())?;
    let unbounded = |values| OrbitBound {
        sup: f64::INFINITY,
        stabilized: false,
        values,
    };

    let mut values = Vec::with_capacity(n_max);
    let mut running = Vec::with_capacity(n_max);
    let mut x = omega.clone();
    for _ in 0..n_max {
        x = match map.apply(&x) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => return Ok(unbounded(values)),
            Err(e) => return Err(e),
        };
        let v = eval_scaled(m, &x, 2.0)?;
        values.push(v);
        if v.is_infinite() {
            return Ok(unbounded(values));
        }
        let prev = running.last().copied().unwrap_or(0.0f64);
        running.push(prev.max(v));
    }
    let sup = running[n_max - 1];
    let before = running[n_max - n_max.div_ceil(2) - 1];
    Ok(OrbitBound {
        sup,
        stabilized: leq(sup, before),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: usize,
    pub point: Point,
    /// `rho(x_n - x_{n-1})`; absent at `n = 0`.
    pub step_mod: Option<f64>,
    /// `rho(T x_n - x_n)`
    pub residual: f64,
    /// `rho(2 x_n)`
    pub doubled_orbit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Number of applications of the base map per recorded step.
    pub power: usize,
    pub tol: f64,
    pub steps: Vec<TraceStep>,
    pub converged: bool,
    pub fixed_point: Option<Point>,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    pub fn iterations(&self) -> usize {
        self.steps.last().map_or(0, |s| s.n)
    }

    /// First `n >= 1` with `step_mod(n+1) > c step_mod(n)` beyond the numeric
    /// tolerance, if any.
    pub fn geometric_decay_violation(&self, c: f64) -> Option<usize> {
        self.steps
            .windows(2)
            .find_map(|w| match (w[0].step_mod, w[1].step_mod) {
                (Some(a), Some(b)) if !crate::tolerance::leq(b, c * a) => Some(w[0].n),
                _ => None,
            })
    }
}

/// Picard iteration `x_{n+1} = T x_n` from `x0`.
///
/// Stops at the first `n >= 1` where both `rho(x_n - x_{n-1}) <= tol` and
/// `rho(T x_n - x_n) <= tol`, or after `max_iter` applications. A non-finite
/// iterate aborts with [`Error::Divergence`] carrying the partial trace.
pub fn picard_solve<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    map: &T,
    m: &M,
    x0: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<IterationTrace> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    check_space(map, m, x0.dim())?;

    let mut trace = IterationTrace {
        power: 1,
        tol,
        steps: Vec::new(),
        converged: false,
        fixed_point: None,
    };

    let mut x = x0.clone();
    let mut step_mod = None;
    for n in 0..=max_iter {
        let doubled_orbit = eval_scaled(m, &x, 2.0)?;
        let next = match map.apply(&x) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => {
                trace.steps.push(TraceStep {
                    n,
                    point: x,
                    step_mod,
                    residual: f64::INFINITY,
                    doubled_orbit,
                });
                return Err(Error::Divergence {
                    step: n + 1,
                    trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        let residual = distance(m, &next, &x)?;
        let done = step_mod.is_some_and(|s| s <= tol) && residual <= tol;
        trace.steps.push(TraceStep {
            n,
            point: x.clone(),
            step_mod,
            residual,
            doubled_orbit,
        });
        if done {
            trace.converged = true;
            trace.fixed_point = Some(x);
            break;
        }
        // the residual at x_n is the step modular of x_{n+1}
        step_mod = Some(residual);
        x = next;
    }
    Ok(trace)
}

/// Smallest `n >= 1` with `c^n k < 1/2`.
pub fn power_index(c: f64, k: f64) -> Result<usize> {
    check_banach_constant(c)?;
    if k == f64::INFINITY {
        return Err(Error::NotApplicable(
            "the modular has no finite doubling constant".into(),
        ));
    }
    if k.is_nan() || k <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "doubling constant must be positive, got {k}"
        )));
    }
    let below = |n: usize| c.powf(n as f64) * k < 0.5;
    if c == 0.0 || below(1) {
        return Ok(1);
    }
    let guess = ((0.5 / k).ln() / c.ln()).ceil();
    let mut n = if guess.is_finite() && guess >= 1.0 {
        guess as usize
    } else {
        1
    };
    while n > 1 && below(n - 1) {
        n -= 1;
    }
    while !below(n) {
        n += 1;
    }
    Ok(n)
}

/// Where a doubling constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublingSource {
    Exact,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingConstant {
    pub k: f64,
    pub source: DoublingSource,
}

/// Exact `2^p` for homogeneous families, otherwise a sampled estimate.
/// Families whose estimate is flagged unbounded get `k = +inf`.
pub fn resolve_doubling_constant<M: Modular + ?Sized>(
    m: &M,
    sampler: &mut PointSampler,
    trials: usize,
) -> Result<DoublingConstant> {
    if let Some(k) = m.doubling_constant() {
        return Ok(DoublingConstant {
            k,
            source: DoublingSource::Exact,
        });
    }
    let est = delta2_type_estimate(m, sampler, trials)?;
    Ok(DoublingConstant {
        k: est.finite().unwrap_or(f64::INFINITY),
        source: DoublingSource::Estimated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    pub power: usize,
    pub k: f64,
    pub trace: IterationTrace,
    /// `rho(T x* - x*)` for the base map at the returned point.
    pub base_residual: Option<f64>,
}

/// Picard iteration on `T^n`, `n = power_index(c, k)`, followed by a check
/// that the limit is fixed for `T` itself.
#[allow(clippy::too_many_arguments)]
pub fn solve_via_power<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    map: &T,
    m: &M,
    c: f64,
    k: f64,
    x0: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<PowerSolution> {
    let power = power_index(c, k)?;
    let composed = Power { map, n: power };
    let mut trace = match picard_solve(&composed, m, x0, tol, max_iter) {
        Ok(trace) => trace,
        Err(Error::Divergence { step, mut trace }) => {
            trace.power = power;
            return Err(Error::Divergence { step, trace });
        }
        Err(e) => return Err(e),
    };
    trace.power = power;

    let base_residual = match &trace.fixed_point {
        Some(x) => {
            let residual = distance(m, &map.apply(x)?, x)?;
            if residual > tol {
                return Err(Error::Inconsistency { residual, tol });
            }
            Some(residual)
        }
        None => None,
    };
    Ok(PowerSolution {
        power,
        k,
        trace,
        base_residual,
    })
}

/// `rho(x - y)` exposed for callers comparing solver outputs.
pub fn modular_distance<M: Modular + ?Sized>(m: &M, x: &Point, y: &Point) -> Result<f64> {
    distance(m, x, y)
}

/// `rho(T x - x)`.
pub fn fixed_point_residual<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    map: &T,
    m: &M,
    x: &Point,
) -> Result<f64> {
    eval(m, &map.apply(x)?.sub(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{MapSpec, ScalarMap};
    use crate::modular::ModularSpec;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn half() -> MapSpec {
        MapSpec::scalarwise(ScalarMap::Half).unwrap()
    }

    fn pp(p: f64) -> ModularSpec {
        ModularSpec::p_power(p).unwrap()
    }

    #[test]
    fn verify_contraction_examples() {
        let mut s = PointSampler::new(1, 1);
        let r = verify_contraction(&half(), &pp(1.0), 0.5, &mut s, 2000).unwrap();
        assert!(r.passed());
        assert_eq!(r.max_ratio, 0.5);

        let r = verify_contraction(&half(), &pp(2.0), 0.25, &mut s, 2000).unwrap();
        assert!(r.passed());

        let a = MapSpec::affine_diagonal(0.9, vec![0.0, 0.0]).unwrap();
        let mut s = PointSampler::new(2, 1);
        let r = verify_contraction(&a, &pp(1.0), 0.5, &mut s, 500).unwrap();
        assert!(!r.passed());
        assert!((r.max_ratio - 0.9).abs() < 1e-9, "{}", r.max_ratio);
    }

    #[test]
    fn verify_contraction_rejects_bad_constant() {
        let mut s = PointSampler::new(1, 1);
        assert!(verify_contraction(&half(), &pp(1.0), 1.0, &mut s, 10).is_err());
        assert!(verify_contraction(&half(), &pp(1.0), 0.5, &mut s, 0).is_err());
    }

    #[test]
    fn verify_s_contraction_examples() {
        let mut s = PointSampler::new(1, 2);
        let r = verify_s_contraction(&half(), &pp(1.0), 1.5, 0.75, 1.0, &mut s, 2000).unwrap();
        assert!(r.passed());
        let r = verify_s_contraction(&half(), &pp(1.0), 3.0, 0.75, 1.0, &mut s, 200).unwrap();
        assert!(!r.passed());
        assert!((r.max_ratio - 1.5).abs() < 1e-12, "{}", r.max_ratio);
    }

    #[test]
    fn orbit_bound_examples() {
        let c = MapSpec::scalarwise(ScalarMap::Const { value: 1.5 }).unwrap();
        let m = pp(2.0);
        let ob = orbit_bound_check(&c, &m, &pt(&[7.0, -2.0]), 10).unwrap();
        assert_eq!(ob.sup, 2.0 * 9.0);
        assert!(ob.stabilized);

        let ob = orbit_bound_check(&half(), &pp(1.0), &pt(&[1.0]), 50).unwrap();
        assert_eq!(ob.sup, 1.0);
        assert_eq!(ob.values[0], 1.0);
        assert!(ob.stabilized);

        let a = MapSpec::affine_diagonal(0.5, vec![1.0, 1.0]).unwrap();
        let ob = orbit_bound_check(&a, &pp(1.0), &pt(&[0.0, 0.0]), 100).unwrap();
        assert!(ob.sup <= 8.0);
        assert!(ob.stabilized);

        let grow = MapSpec::affine_diagonal(1e10, vec![0.0]).unwrap();
        let ob = orbit_bound_check(&grow, &pp(1.0), &pt(&[1.0]), 100).unwrap();
        assert_eq!(ob.sup, f64::INFINITY);
        assert!(!ob.stabilized);

        assert!(orbit_bound_check(&half(), &pp(1.0), &pt(&[1.0]), 1).is_err());
    }

    #[test]
    fn picard_const_map() {
        let b = 1.5;
        let c = MapSpec::scalarwise(ScalarMap::Const { value: b }).unwrap();
        let trace = picard_solve(&c, &pp(2.0), &pt(&[9.0, -3.0]), 1e-10, 10).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.fixed_point.unwrap().coords(), &[b, b]);
        assert_eq!(trace.steps[1].point.coords(), &[b, b]);
    }

    #[test]
    fn picard_half_closed_form() {
        let trace = picard_solve(&half(), &pp(1.0), &pt(&[1.0]), 1e-10, 100).unwrap();
        assert!(trace.converged);
        assert!(trace.iterations() <= 35);
        for step in &trace.steps[1..] {
            assert_eq!(step.step_mod.unwrap(), 0.5f64.powi(step.n as i32));
        }
        assert!(trace.fixed_point.unwrap()[0].abs() <= 1e-10);
    }

    #[test]
    fn picard_affine_closed_form() {
        let t = MapSpec::affine_diagonal(0.5, vec![1.0]).unwrap();
        let trace = picard_solve(&t, &pp(1.0), &pt(&[0.0]), 1e-10, 100).unwrap();
        assert!(trace.converged);
        for step in &trace.steps {
            let err = 2.0 - step.point[0];
            assert_eq!(err, 2.0 * 0.5f64.powi(step.n as i32));
        }
        assert!((trace.fixed_point.unwrap()[0] - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn picard_zero_iterations_keeps_x0() {
        let trace = picard_solve(&half(), &pp(1.0), &pt(&[1.0]), 1e-10, 0).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].step_mod, None);
    }

    #[test]
    fn picard_divergence_keeps_partial_trace() {
        let t = MapSpec::affine_diagonal(1e100, vec![0.0]).unwrap();
        match picard_solve(&t, &pp(1.0), &pt(&[1.0]), 1e-10, 100) {
            Err(Error::Divergence { trace, .. }) => {
                assert_eq!(trace.steps.len(), 4);
                assert_eq!(trace.last().unwrap().residual, f64::INFINITY);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn power_index_examples() {
        assert_eq!(power_index(0.4, 1.0).unwrap(), 1);
        assert_eq!(power_index(0.9, 4.0).unwrap(), 20);
        assert_eq!(power_index(0.0, 1e6).unwrap(), 1);
        assert_eq!(power_index(0.5, 4.0).unwrap(), 4);
        assert_eq!(power_index(0.25, 4.0).unwrap(), 2);
        assert!(matches!(
            power_index(0.5, f64::INFINITY),
            Err(Error::NotApplicable(_))
        ));
        assert!(power_index(1.0, 2.0).is_err());
        assert!(power_index(0.5, 0.0).is_err());
    }

    #[test]
    fn power_path_examples() {
        let sol = solve_via_power(&half(), &pp(2.0), 0.5, 4.0, &pt(&[1.0]), 1e-10, 100).unwrap();
        assert_eq!(sol.power, 4);
        assert!(sol.trace.converged);
        assert!(sol.trace.fixed_point.unwrap()[0].abs() < 1e-4);

        let t = MapSpec::affine_diagonal(0.5, vec![1.0]).unwrap();
        let sol = solve_via_power(&t, &pp(2.0), 0.25, 4.0, &pt(&[0.0]), 1e-10, 100).unwrap();
        assert_eq!(sol.power, 2);
        assert!((sol.trace.fixed_point.unwrap()[0] - 2.0).abs() < 1e-5);

        // c k < 1/2 already: same as plain Picard
        let plain = picard_solve(&half(), &pp(1.0), &pt(&[1.0]), 1e-10, 100).unwrap();
        let sol = solve_via_power(&half(), &pp(1.0), 0.2, 2.0, &pt(&[1.0]), 1e-10, 100).unwrap();
        assert_eq!(sol.power, 1);
        assert_eq!(sol.trace, plain);
    }

    struct Swap;

    impl SelfMap for Swap {
        fn dim(&self) -> Option<usize> {
            Some(2)
        }
        fn apply(&self, x: &Point) -> Result<Point> {
            Point::new(vec![x[1], x[0]])
        }
    }

    #[test]
    fn power_path_detects_false_contraction_claim() {
        // T^2 is the identity, so every point is "fixed" for the composed map
        let err = solve_via_power(&Swap, &pp(1.0), 0.9, 4.0, &pt(&[1.0, 0.0]), 1e-10, 10);
        assert!(matches!(err, Err(Error::Inconsistency { .. })), "{err:?}");
    }

    #[test]
    fn doubling_constant_resolution() {
        let mut s = PointSampler::new(2, 0);
        let d = resolve_doubling_constant(&pp(2.0), &mut s, 100).unwrap();
        assert_eq!((d.k, d.source), (4.0, DoublingSource::Exact));
        let exp = ModularSpec::orlicz(crate::modular::Young::ExpMinusOne, 2).unwrap();
        let d = resolve_doubling_constant(&exp, &mut s, 500).unwrap();
        assert_eq!(d.k, f64::INFINITY);
    }
}
