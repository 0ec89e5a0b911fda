//! Randomized checkers for the modular axioms, s-convexity, the doubling
//! (Delta_2-type) constant and a finite surrogate of the Fatou property.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{distance, eval, eval_scaled, Modular};
use crate::point::Point;
use crate::sampler::PointSampler;
use crate::tolerance::excess;

/// Number of witnesses stored in a report; the count is always exact.
pub const MAX_WITNESSES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomId {
    /// `rho(x) = 0` iff `x = 0`
    Zero,
    /// `rho(x) = rho(-x)`
    Symmetry,
    /// `rho(a x + b y) <= rho(x) + rho(y)`, `a + b = 1`
    Convexity,
    /// `rho(a x + b y) <= a^s rho(x) + b^s rho(y)`, `a^s + b^s = 1`
    SConvexity,
    /// `rho(Tx - Ty) <= c rho(x - y)`
    Contraction,
    /// `rho(c (Tx - Ty)) <= k^s rho(x - y)`
    SContraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: AxiomId,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub scalars: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a sampled inequality check.
///
/// `max_slack_violation` is the largest amount by which any checked
/// left-hand side exceeded its tolerated bound, so it is positive exactly
/// when `violation_count > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    pub max_slack_violation: f64,
}

impl AxiomReport {
    pub fn new() -> Self {
        AxiomReport {
            trials: 0,
            violation_count: 0,
            violations: Vec::new(),
            max_slack_violation: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn violations_of(&self, axiom: AxiomId) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.axiom == axiom)
    }

    pub(crate) fn record(&mut self, amount: f64, violation: impl FnOnce() -> Violation) {
        if amount > 0.0 {
            self.violation_count += 1;
            self.max_slack_violation = self.max_slack_violation.max(amount);
            if self.violations.len() < MAX_WITNESSES {
                self.violations.push(violation());
            }
        }
    }

    /// Records `lhs <= rhs` up to the numeric tolerance.
    pub(crate) fn check_leq(
        &mut self,
        axiom: AxiomId,
        x: &Point,
        y: Option<&Point>,
        scalars: &[f64],
        lhs: f64,
        rhs: f64,
    ) {
        self.record(excess(lhs, rhs), || Violation {
            axiom,
            x: x.coords().to_vec(),
            y: y.map(|p| p.coords().to_vec()),
            scalars: scalars.to_vec(),
            lhs,
            rhs,
        });
    }

    /// Merges another report; every field is an order-independent reduction
    /// except the witness list, which keeps `self`'s witnesses first.
    pub fn merge(&mut self, other: AxiomReport) {
        self.trials += other.trials;
        self.violation_count += other.violation_count;
        self.max_slack_violation = self.max_slack_violation.max(other.max_slack_violation);
        let room = MAX_WITNESSES.saturating_sub(self.violations.len());
        self.violations
            .extend(other.violations.into_iter().take(room));
    }
}

impl Default for AxiomReport {
    fn default() -> Self {
        Self::new()
    }
}

fn check_zero<M: Modular + ?Sized>(m: &M, report: &mut AxiomReport, x: &Point) {
    let value = m.eval_raw(x.coords());
    if x.is_zero() {
        report.record(if value == 0.0 { 0.0 } else { value }, || Violation {
            axiom: AxiomId::Zero,
            x: x.coords().to_vec(),
            y: None,
            scalars: vec![],
            lhs: value,
            rhs: 0.0,
        });
    } else if value.is_nan() || value <= 0.0 {
        // the excess is how far the witness is from the origin
        report.record(x.max_abs(), || Violation {
            axiom: AxiomId::Zero,
            x: x.coords().to_vec(),
            y: None,
            scalars: vec![],
            lhs: value,
            rhs: 0.0,
        });
    }
}

fn check_symmetry<M: Modular + ?Sized>(m: &M, report: &mut AxiomReport, x: &Point) {
    let plus = m.eval_raw(x.coords());
    let minus = m.eval_raw(x.neg().coords());
    let amount = if plus == minus {
        0.0
    } else {
        (plus - minus).abs()
    };
    report.record(amount, || Violation {
        axiom: AxiomId::Symmetry,
        x: x.coords().to_vec(),
        y: None,
        scalars: vec![-1.0],
        lhs: plus,
        rhs: minus,
    });
}

/// Checks `rho(alpha x + (1 - alpha) y) <= rho(x) + rho(y)` at one triple.
pub fn check_convexity_at<M: Modular + ?Sized>(
    m: &M,
    x: &Point,
    y: &Point,
    alpha: f64,
) -> Result<Option<Violation>> {
    m.check_point(x)?;
    y.check_dim(x.dim())?;
    let beta = 1.0 - alpha;
    let mut report = AxiomReport::new();
    let lhs = m.eval_raw(x.combine(alpha, y, beta)?.coords());
    let rhs = m.eval_raw(x.coords()) + m.eval_raw(y.coords());
    report.check_leq(AxiomId::Convexity, x, Some(y), &[alpha, beta], lhs, rhs);
    Ok(report.violations.pop())
}

fn sampler_matches<M: Modular + ?Sized>(m: &M, sampler: &PointSampler) -> Result<()> {
    match m.dim() {
        Some(d) if d != sampler.dim() => Err(Error::DimensionMismatch {
            expected: d,
            found: sampler.dim(),
        }),
        _ => Ok(()),
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

/// Samples the three modular axioms over `trials` random draws.
///
/// Axiom (1) is checked at the origin once and at every nonzero sample;
/// axiom (2) is compared bit-exactly.
pub fn check_modular_axioms<M: Modular + ?Sized>(
    m: &M,
    sampler: &mut PointSampler,
    trials: usize,
) -> Result<AxiomReport> {
    check_trials(trials)?;
    sampler_matches(m, sampler)?;
    let mut report = AxiomReport::new();
    check_zero(m, &mut report, &Point::zeros(sampler.dim())?);

    for _ in 0..trials {
        let x = sampler.point();
        let y = sampler.point();
        let alpha = sampler.unit();
        let beta = 1.0 - alpha;

        check_zero(m, &mut report, &x);
        check_symmetry(m, &mut report, &x);

        let lhs = m.eval_raw(x.combine(alpha, &y, beta)?.coords());
        let rhs = m.eval_raw(x.coords()) + m.eval_raw(y.coords());
        report.check_leq(AxiomId::Convexity, &x, Some(&y), &[alpha, beta], lhs, rhs);
        report.trials += 1;
    }
    Ok(report)
}

/// Samples `rho(a x + b y) <= a^s rho(x) + b^s rho(y)` with `b = (1 - a^s)^(1/s)`.
pub fn check_s_convexity<M: Modular + ?Sized>(
    m: &M,
    s: f64,
    sampler: &mut PointSampler,
    trials: usize,
) -> Result<AxiomReport> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "s must lie in (0, 1], got {s}"
        )));
    }
    check_trials(trials)?;
    sampler_matches(m, sampler)?;
    let mut report = AxiomReport::new();
    for _ in 0..trials {
        let x = sampler.point();
        let y = sampler.point();
        let a = sampler.unit();
        let b = (1.0 - a.powf(s)).max(0.0).powf(1.0 / s);
        let lhs = m.eval_raw(x.combine(a, &y, b)?.coords());
        let rhs = a.powf(s) * m.eval_raw(x.coords()) + b.powf(s) * m.eval_raw(y.coords());
        report.check_leq(AxiomId::SConvexity, &x, Some(&y), &[a, b, s], lhs, rhs);
        report.trials += 1;
    }
    Ok(report)
}

/// Number of log-spaced magnitude scales probed by [`delta2_type_estimate`].
pub const DELTA2_SCALES: usize = 25;
/// Relative growth over the last decade of scales that marks the constant as unbounded.
pub const DELTA2_GROWTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Estimate {
    /// `max rho(2x) / rho(x)` over the samples; `+inf` when some ratio overflowed.
    pub constant: f64,
    pub unbounded: bool,
    /// `(scale, running max after that scale)`
    pub running_max: Vec<(f64, f64)>,
    pub samples: usize,
}

impl Delta2Estimate {
    /// The constant when it may be used as a finite bound.
    pub fn finite(&self) -> Option<f64> {
        (!self.unbounded && self.constant.is_finite()).then_some(self.constant)
    }
}

/// Estimates the smallest `k` with `rho(2x) <= k rho(x)`.
///
/// Samples are spread over magnitude scales `1e-3 ..= 1e3`; the estimate is
/// flagged unbounded when the running maximum still grows by more than 1 %
/// over the last decade, or when a ratio is infinite.
pub fn delta2_type_estimate<M: Modular + ?Sized>(
    m: &M,
    sampler: &mut PointSampler,
    trials: usize,
) -> Result<Delta2Estimate> {
    check_trials(trials)?;
    sampler_matches(m, sampler)?;
    let per_scale = trials.div_ceil(DELTA2_SCALES);
    let lo = crate::sampler::MIN_MAGNITUDE.log10();
    let hi = crate::sampler::MAX_MAGNITUDE.log10();
    let step = (hi - lo) / (DELTA2_SCALES - 1) as f64;

    let mut best = 0.0f64;
    let mut samples = 0;
    let mut running_max = Vec::with_capacity(DELTA2_SCALES);
    for i in 0..DELTA2_SCALES {
        let scale = 10f64.powf(lo + step * i as f64);
        for _ in 0..per_scale {
            let x = sampler.point_at_scale(scale);
            if x.is_zero() {
                continue;
            }
            let base = eval(m, &x)?;
            if base == 0.0 {
                return Err(Error::InvalidModular {
                    witness: x.into_coords(),
                });
            }
            if base.is_infinite() {
                continue;
            }
            let doubled = eval_scaled(m, &x, 2.0)?;
            best = best.max(doubled / base);
            samples += 1;
        }
        running_max.push((scale, best));
    }

    // running max at the start of the last decade
    let last_decade_start = hi - 1.0;
    let before = running_max
        .iter()
        .filter(|(scale, _)| scale.log10() <= last_decade_start + 1e-9)
        .map(|&(_, v)| v)
        .next_back()
        .unwrap_or(0.0);
    let unbounded = best.is_infinite() || best > before * (1.0 + DELTA2_GROWTH);

    Ok(Delta2Estimate {
        constant: best,
        unbounded,
        running_max,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatouReport {
    /// `rho(x - y)`
    pub lhs: f64,
    /// Minimum of `rho(x_n - y_n)` over the tail half of the sequence.
    pub liminf_proxy: f64,
    pub steps: usize,
    pub holds: bool,
}

/// Checks `rho(x - y) <= liminf rho(x_n - y_n)` along
/// `x_n = x + ratio^n u`, `y_n = y + ratio^n v`, `n = 1..=steps`.
///
/// The liminf is approximated by the minimum over the last `ceil(steps / 2)`
/// terms, so this is evidence, not a proof.
#[allow(clippy::too_many_arguments)]
pub fn check_fatou_along<M: Modular + ?Sized>(
    m: &M,
    x: &Point,
    y: &Point,
    u: &Point,
    v: &Point,
    ratio: f64,
    steps: usize,
) -> Result<FatouReport> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    m.check_point(x)?;
    for p in [y, u, v] {
        p.check_dim(x.dim())?;
    }
    let lhs = distance(m, x, y)?;
    let tail_start = steps - steps.div_ceil(2) + 1;
    let mut proxy = f64::INFINITY;
    for n in tail_start..=steps {
        let r = ratio.powi(n as i32);
        let xn = x.combine(1.0, u, r)?;
        let yn = y.combine(1.0, v, r)?;
        proxy = proxy.min(distance(m, &xn, &yn)?);
    }
    Ok(FatouReport {
        lhs,
        liminf_proxy: proxy,
        steps,
        holds: crate::tolerance::leq(lhs, proxy),
    })
}

/// [`check_fatou_along`] with perturbation directions drawn from `sampler`.
pub fn check_fatou_sampled<M: Modular + ?Sized>(
    m: &M,
    x: &Point,
    y: &Point,
    ratio: f64,
    steps: usize,
    sampler: &mut PointSampler,
) -> Result<FatouReport> {
    sampler_matches(m, sampler)?;
    let u = sampler.point();
    let v = sampler.point();
    check_fatou_along(m, x, y, &u, &v, ratio, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::{ModularSpec, Planted, Young};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn p2_has_no_axiom_violations() {
        let m = ModularSpec::p_power(2.0).unwrap();
        let mut s = PointSampler::new(3, 11);
        let report = check_modular_axioms(&m, &mut s, 10_000).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());
        assert_eq!(report.trials, 10_000);
        assert_eq!(report.max_slack_violation, 0.0);
    }

    #[test]
    fn sine_bump_witness() {
        let m = ModularSpec::planted(Planted::SineBump);
        let v = check_convexity_at(&m, &pt(&[0.0]), &pt(&[1.0]), 0.5)
            .unwrap()
            .expect("violation");
        assert_eq!(v.axiom, AxiomId::Convexity);
        assert!((v.lhs - 1.05).abs() < 1e-12);
        assert!((v.rhs - 0.1).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_fails_symmetry() {
        let m = ModularSpec::planted(Planted::Asymmetric);
        let mut report = AxiomReport::new();
        check_symmetry(&m, &mut report, &pt(&[1.0]));
        let v = &report.violations[0];
        assert_eq!((v.axiom, v.lhs, v.rhs), (AxiomId::Symmetry, 1.0, 2.0));
    }

    #[test]
    fn dead_zone_fails_zero_axiom() {
        let m = ModularSpec::planted(Planted::DeadZone);
        let mut s = PointSampler::new(1, 3);
        let report = check_modular_axioms(&m, &mut s, 1000).unwrap();
        assert!(report.violations_of(AxiomId::Zero).count() > 0);
        assert!(report.max_slack_violation > 0.0);
    }

    #[test]
    fn s_convexity_examples() {
        let p1 = ModularSpec::p_power(1.0).unwrap();
        let mut s = PointSampler::new(2, 5);
        assert!(check_s_convexity(&p1, 1.0, &mut s, 10_000)
            .unwrap()
            .passed());

        let half = ModularSpec::p_power(0.5).unwrap();
        let mut s = PointSampler::new(1, 5);
        let report = check_s_convexity(&half, 1.0, &mut s, 1000).unwrap();
        assert!(report.violation_count > 0);

        assert!(check_s_convexity(&p1, 0.0, &mut s, 1).is_err());
        assert!(check_s_convexity(&p1, 1.5, &mut s, 1).is_err());
    }

    #[test]
    fn delta2_examples() {
        for (p, k) in [(2.0, 4.0), (1.0, 2.0)] {
            let m = ModularSpec::p_power(p).unwrap();
            let mut s = PointSampler::new(2, 9);
            let est = delta2_type_estimate(&m, &mut s, 2000).unwrap();
            assert!((est.constant - k).abs() < 1e-6, "{}", est.constant);
            assert!(!est.unbounded);
        }
        let exp = ModularSpec::orlicz(Young::ExpMinusOne, 2).unwrap();
        let mut s = PointSampler::new(2, 9);
        assert!(delta2_type_estimate(&exp, &mut s, 2000).unwrap().unbounded);
    }

    #[test]
    fn delta2_rejects_non_modular() {
        let m = ModularSpec::planted(Planted::DeadZone);
        let mut s = PointSampler::new(1, 9);
        assert!(matches!(
            delta2_type_estimate(&m, &mut s, 100),
            Err(Error::InvalidModular { .. })
        ));
    }

    #[test]
    fn fatou_examples() {
        let p2 = ModularSpec::p_power(2.0).unwrap();
        let zero = pt(&[0.0]);
        let r = check_fatou_along(&p2, &pt(&[1.0]), &zero, &pt(&[1.0]), &zero, 0.5, 40).unwrap();
        assert!(r.holds);
        assert_eq!(r.lhs, 1.0);
        let tail = (1.0 + 0.5f64.powi(40)).powi(2);
        assert!((r.liminf_proxy - tail).abs() < 1e-15);

        let c = check_fatou_along(&p2, &pt(&[2.0]), &pt(&[-1.0]), &zero, &zero, 0.3, 5).unwrap();
        assert_eq!(c.lhs, c.liminf_proxy);
        assert!(c.holds);

        let p1 = ModularSpec::p_power(1.0).unwrap();
        let x = pt(&[0.7]);
        let u = pt(&[3.0]);
        let r = check_fatou_along(&p1, &x, &x, &u, &u, 0.9, 10).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn fatou_validates_inputs() {
        let p1 = ModularSpec::p_power(1.0).unwrap();
        let x = pt(&[1.0]);
        let mut s = PointSampler::new(1, 0);
        assert!(check_fatou_sampled(&p1, &x, &x, 1.0, 5, &mut s).is_err());
        assert!(check_fatou_sampled(&p1, &x, &x, 0.5, 0, &mut s).is_err());
        assert!(
            check_fatou_sampled(&p1, &x, &x, 0.5, 5, &mut s)
                .unwrap()
                .holds
        );
    }
}
