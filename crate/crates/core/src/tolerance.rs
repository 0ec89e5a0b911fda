//! Numeric tolerances shared by every inequality check.
//!
//! An inequality `lhs <= rhs` is accepted when
//! `lhs <= rhs + EPS_REL * |rhs| + EPS_ABS`. Infinite right-hand sides accept
//! everything, infinite left-hand sides are only accepted against `+inf`.

/// Relative part of the numeric tolerance.
pub const EPS_REL: f64 = 1e-9;

/// Absolute part of the numeric tolerance.
pub const EPS_ABS: f64 = 1e-12;

/// Allowed excess over `rhs`.
#[inline]
pub fn allowance(rhs: f64) -> f64 {
    EPS_REL * rhs.abs() + EPS_ABS
}

/// `lhs <= rhs` up to the numeric tolerance.
#[inline]
pub fn leq(lhs: f64, rhs: f64) -> bool {
    if rhs == f64::INFINITY {
        return true;
    }
    lhs <= rhs + allowance(rhs)
}

/// How far `lhs` exceeds the tolerated bound, or 0 when the inequality holds.
#[inline]
pub fn excess(lhs: f64, rhs: f64) -> f64 {
    if leq(lhs, rhs) {
        0.0
    } else {
        lhs - rhs - allowance(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_relative_plus_absolute() {
        assert!(leq(1.0 + 5e-10, 1.0));
        assert!(!leq(1.0 + 2e-9, 1.0));
        assert!(leq(5e-13, 0.0));
        assert!(!leq(2e-12, 0.0));
    }

    #[test]
    fn infinities() {
        assert!(leq(f64::INFINITY, f64::INFINITY));
        assert!(leq(1e300, f64::INFINITY));
        assert!(!leq(f64::INFINITY, 1e300));
        assert_eq!(excess(f64::INFINITY, 1.0), f64::INFINITY);
        assert_eq!(excess(0.5, 1.0), 0.0);
    }
}
