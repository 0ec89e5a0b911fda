//! Finite chain certificates for the order-theoretic fixed-point argument.
//!
//! For a contraction `T` with constant `c` and a base point `omega`, the pairs
//! `(T^n omega, c^n alpha)` form a chain under
//! `(x, a) <= (y, b)  iff  rho(x - y) <= a - b`
//! as soon as `rho(omega - T^n omega) <= alpha - c^n alpha` for every `n`.
//! A [`ChainCertificate`] stores a finite piece of that chain together with
//! the worst slack of every order inequality, and of the inequalities against
//! the surrogate maximum `(T^N omega, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{check_banach_constant, SelfMap};
use crate::modular::{distance, Modular};
use crate::point::Point;
use crate::tolerance::leq;

/// Relative safety margin applied to the minimal admissible `alpha`.
pub const ALPHA_MARGIN: f64 = 1e-6;

/// Decade grid used by [`cauchy_modulus`].
pub const CAUCHY_EPSILONS: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainNode {
    pub point: Point,
    pub alpha: f64,
}

/// Worst slack `(alpha_p - alpha_q) - rho(x_p - x_q)` over all pairs `p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    /// `+inf` when the chain has a single node.
    pub worst_slack: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Every pair satisfies its order inequality within tolerance.
    pub ordered: bool,
}

impl PairCheck {
    pub fn is_vacuous(&self) -> bool {
        self.worst_pair.is_none()
    }
}

/// Worst slack `alpha_n + tol - rho(x_n - limit)` over the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxCheck {
    pub worst_slack: f64,
    pub worst_index: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCertificate {
    pub omega: Point,
    pub c: f64,
    pub alpha: f64,
    pub nodes: Vec<ChainNode>,
    pub limit_candidate: Point,
    pub pair_check: PairCheck,
    pub max_check: MaxCheck,
    pub all_pass: bool,
}

impl ChainCertificate {
    /// Chain length `N` (the number of nodes is `N + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Recomputes both checks after nodes were edited.
    pub fn reverify<M: Modular + ?Sized>(&mut self, m: &M) -> Result<()> {
        self.pair_check = verify_order_pairs(self, m)?;
        self.max_check = verify_maximum_element(self, m, 0.0)?;
        self.all_pass = self.pair_check.ordered && self.max_check.holds;
        Ok(())
    }

    /// Per-node slacks: the worst pair slack with `n` as the earlier element
    /// (`None` for the last node) and the slack against the limit.
    pub fn node_slacks<M: Modular + ?Sized>(&self, m: &M) -> Result<Vec<(Option<f64>, f64)>> {
        let mut out = Vec::with_capacity(self.nodes.len());
        for (p, a) in self.nodes.iter().enumerate() {
            let mut worst: Option<f64> = None;
            for b in &self.nodes[p + 1..] {
                let slack = (a.alpha - b.alpha) - distance(m, &a.point, &b.point)?;
                worst = Some(worst.map_or(slack, |w| w.min(slack)));
            }
            let max_slack = a.alpha - distance(m, &a.point, &self.limit_candidate)?;
            out.push((worst, max_slack));
        }
        Ok(out)
    }
}

/// `alpha = (1 + margin) max_{1<=n<=N} rho(omega - T^n omega) / (1 - c^n)`,
/// the least value making `rho(omega - T^n omega) <= alpha - c^n alpha` hold
/// for `n = 1..=N`, inflated by [`ALPHA_MARGIN`]. `N = 0` gives `0`.
pub fn compute_alpha<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    m: &M,
    map: &T,
    omega: &Point,
    c: f64,
    n_max: usize,
) -> Result<f64> {
    check_banach_constant(c)?;
    m.check_point(omega)?;
    map.check_point(omega)?;
    let mut x = omega.clone();
    let mut best = 0.0f64;
    for n in 1..=n_max {
        x = match map.apply(&x) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => return Err(Error::UnboundedOrbit { step: n }),
            Err(e) => return Err(e),
        };
        let gap = distance(m, omega, &x)?;
        if gap.is_infinite() {
            return Err(Error::UnboundedOrbit { step: n });
        }
        best = best.max(gap / (1.0 - c.powi(n as i32)));
    }
    Ok((1.0 + ALPHA_MARGIN) * best)
}

/// Builds `(T^n omega, c^n alpha)` for `n = 0..=N` and verifies it.
pub fn build_chain<T: SelfMap + ?Sized, M: Modular + ?Sized>(
    m: &M,
    map: &T,
    omega: &Point,
    c: f64,
    alpha: f64,
    n_max: usize,
) -> Result<ChainCertificate> {
    check_banach_constant(c)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    m.check_point(omega)?;
    map.check_point(omega)?;

    let mut nodes = Vec::with_capacity(n_max + 1);
    let mut x = omega.clone();
    nodes.push(ChainNode {
        point: x.clone(),
        alpha,
    });
    for n in 1..=n_max {
        x = match map.apply(&x) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => return Err(Error::UnboundedOrbit { step: n }),
            Err(e) => return Err(e),
        };
        nodes.push(ChainNode {
            point: x.clone(),
            alpha: c.powi(n as i32) * alpha,
        });
    }

    let mut cert = ChainCertificate {
        omega: omega.clone(),
        c,
        alpha,
        nodes,
        limit_candidate: x,
        pair_check: PairCheck {
            worst_slack: f64::INFINITY,
            worst_pair: None,
            ordered: true,
        },
        max_check: MaxCheck {
            worst_slack: f64::INFINITY,
            worst_index: 0,
            holds: true,
        },
        all_pass: true,
    };
    cert.reverify(m)?;
    Ok(cert)
}

/// Checks `rho(x_p - x_q) <= alpha_p - alpha_q` for every `p < q`, i.e. that
/// the nodes are totally ordered with `alpha` decreasing along the chain.
pub fn verify_order_pairs<M: Modular + ?Sized>(
    cert: &ChainCertificate,
    m: &M,
) -> Result<PairCheck> {
    if cert.nodes.is_empty() {
        return Err(Error::InvalidParameter("certificate has no nodes".into()));
    }
    let mut check = PairCheck {
        worst_slack: f64::INFINITY,
        worst_pair: None,
        ordered: true,
    };
    for (p, a) in cert.nodes.iter().enumerate() {
        for (q, b) in cert.nodes.iter().enumerate().skip(p + 1) {
            let gap = distance(m, &a.point, &b.point)?;
            let budget = a.alpha - b.alpha;
            let slack = budget - gap;
            if !leq(gap, budget) {
                check.ordered = false;
            }
            if check.worst_pair.is_none() || slack < check.worst_slack {
                check.worst_slack = slack;
                check.worst_pair = Some((p, q));
            }
        }
    }
    Ok(check)
}

/// Treats `(limit_candidate, 0)` as the maximum of the chain and checks
/// `rho(x_n - limit) <= alpha_n + tol` for every node.
pub fn verify_maximum_element<M: Modular + ?Sized>(
    cert: &ChainCertificate,
    m: &M,
    tol: f64,
) -> Result<MaxCheck> {
    if cert.nodes.is_empty() {
        return Err(Error::InvalidParameter("certificate has no nodes".into()));
    }
    let mut check = MaxCheck {
        worst_slack: f64::INFINITY,
        worst_index: 0,
        holds: true,
    };
    for (n, node) in cert.nodes.iter().enumerate() {
        let gap = distance(m, &node.point, &cert.limit_candidate)?;
        let budget = node.alpha + tol;
        if !leq(gap, budget) {
            check.holds = false;
        }
        let slack = budget - gap;
        if slack < check.worst_slack {
            check.worst_slack = slack;
            check.worst_index = n;
        }
    }
    Ok(check)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub epsilon: f64,
    /// Least `N` with `alpha_N < epsilon`; `None` if the chain is too short.
    pub index: Option<usize>,
}

/// For each `epsilon` in [`CAUCHY_EPSILONS`], the first index whose `alpha`
/// drops below it. On a verified chain every pair beyond that index is
/// within `epsilon`.
pub fn cauchy_modulus(cert: &ChainCertificate) -> Vec<CauchyRow> {
    CAUCHY_EPSILONS
        .iter()
        .map(|&epsilon| CauchyRow {
            epsilon,
            index: cert.nodes.iter().position(|node| node.alpha < epsilon),
        })
        .collect()
}

/// Rechecks a modulus table on the stored nodes: every pair `m, n >= N_eps`
/// must satisfy `rho(x_m - x_n) < eps` up to tolerance.
pub fn recheck_cauchy_rows<M: Modular + ?Sized>(
    cert: &ChainCertificate,
    rows: &[CauchyRow],
    m: &M,
) -> Result<bool> {
    for row in rows {
        let Some(start) = row.index else { continue };
        let tail = &cert.nodes[start..];
        for (i, a) in tail.iter().enumerate() {
            for b in &tail[i + 1..] {
                if !leq(distance(m, &a.point, &b.point)?, row.epsilon) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
