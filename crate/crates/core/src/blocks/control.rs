//! Limiter, deadband and integrator primitives shared by the block models.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Dead zone: zero inside `[db1, db2]`, distance to the nearest edge outside.
#[inline]
pub fn deadband<T: Real>(x: T, db1: T, db2: T) -> T {
    if x < db1 {
        x - db1
    } else if x > db2 {
        x - db2
    } else {
        T::zero()
    }
}

#[inline]
pub fn clamp<T: Real>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// Derivative of a state held by a non-windup limit: zero while the state sits
/// at a bound and the raw derivative points further out.
#[inline]
pub fn nonwindup<T: Real>(x: T, dx: T, lo: T, hi: T) -> T {
    if (x >= hi && dx > T::zero()) || (x <= lo && dx < T::zero()) {
        T::zero()
    } else {
        dx
    }
}

/// Parallel-form PI with non-windup output limits.
///
/// Returns `(output, integrator derivative)`. The integrator freezes when the
/// unclamped output is at or beyond a limit and the error pushes outward.
#[inline]
pub fn pi_nonwindup<T: Real>(kp: T, ki: T, err: T, x: T, lo: T, hi: T) -> (T, T) {
    let raw = kp * err + x;
    let dx = ki * err;
    let frozen = (raw >= hi && dx > T::zero()) || (raw <= lo && dx < T::zero());
    (clamp(raw, lo, hi), if frozen { T::zero() } else { dx })
}

/// First-order lag `1/(1+sT)`; `t <= 0` is treated as a pass-through and the
/// state derivative is reported as zero.
#[inline]
pub fn lag<T: Real>(input: T, x: T, t: T) -> T {
    if t > T::zero() {
        (input - x) / t
    } else {
        T::zero()
    }
}

/// Output of a lead-lag `(1+sTa)/(1+sTb)` given its state.
#[inline]
pub fn lead_lag_output<T: Real>(input: T, x: T, ta: T, tb: T) -> T {
    if tb > T::zero() {
        x + ta / tb * (input - x)
    } else {
        input
    }
}

/// Piecewise-linear curve through `(x, y)` breakpoints sorted by `x`.
///
/// Outside the breakpoint range the end values are held and the evaluation is
/// flagged as out of domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PiecewiseLinear<T> {
    pub points: Vec<(T, T)>,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn new(points: Vec<(T, T)>) -> Self {
        PiecewiseLinear { points }
    }

    pub fn is_sorted(&self) -> bool {
        !self.points.is_empty() && self.points.windows(2).all(|w| w[0].0 < w[1].0)
    }

    /// Returns `(value, in_domain)`.
    pub fn eval(&self, x: T) -> (T, bool) {
        let pts = &self.points;
        match pts.len() {
            0 => (T::zero(), false),
            1 => (pts[0].1, x == pts[0].0),
            _ => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if x < first.0 {
                    return (first.1, false);
                }
                if x > last.0 {
                    return (last.1, false);
                }
                for w in pts.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if x <= x1 {
                        let f = if x1 > x0 { (x - x0) / (x1 - x0) } else { T::one() };
                        return (y0 + f * (y1 - y0), true);
                    }
                }
                (last.1, true)
            }
        }
    }

    pub fn value(&self, x: T) -> T {
        self.eval(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deadband_edges() {
        assert_eq!(deadband(0.01, -0.017, 0.017), 0.0);
        assert!((deadband(-0.2f64, -0.017, 0.017) - (-0.183)).abs() < 1e-15);
        assert!((deadband(0.3f32, -0.1, 0.1) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn pi_freezes_at_upper_limit_only_when_pushing_out() {
        let (y, dx) = pi_nonwindup(1.0, 2.0, 0.5, 1.0, -1.0, 1.0);
        assert_eq!(y, 1.0);
        assert_eq!(dx, 0.0);
        let (y, dx) = pi_nonwindup(1.0, 2.0, -0.5, 1.0, -1.0, 1.0);
        assert_eq!(y, 0.5);
        assert_eq!(dx, -1.0);
    }

    #[test]
    fn curve_holds_end_values_and_flags() {
        let c = PiecewiseLinear::new(vec![(0.2f64, 0.58), (0.4, 0.72), (0.6, 0.86), (0.8, 1.0)]);
        assert_eq!(c.eval(0.1), (0.58, false));
        assert_eq!(c.eval(0.9), (1.0, false));
        let (v, ok) = c.eval(0.5);
        assert!(ok);
        assert!((v - 0.79).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pi_output_always_within_limits(kp in 0.0f64..50.0, ki in 0.0f64..50.0,
                                          e in -10.0f64..10.0, x in -3.0f64..3.0) {
            let (y, _) = pi_nonwindup(kp, ki, e, x, -1.0, 1.0);
            prop_assert!((-1.0..=1.0).contains(&y));
        }

        #[test]
        fn nonwindup_never_pushes_outward(x in -2.0f64..2.0, dx in -5.0f64..5.0) {
            let d = nonwindup(x.clamp(-1.0, 1.0), dx, -1.0, 1.0);
            let xc = x.clamp(-1.0, 1.0);
            prop_assert!(!(xc >= 1.0 && d > 0.0) && !(xc <= -1.0 && d < 0.0));
        }
    }
}
