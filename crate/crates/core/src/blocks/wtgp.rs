//! Pitch controller (`wtgp_a`).
//!
//! Two PI branches act on the speed error (with power cross-coupling) and on
//! the power-order error. Their sum is the pitch command, followed by a lag
//! with rate and position limits.

use serde::{Deserialize, Serialize};

use super::control::{clamp, nonwindup, pi_nonwindup};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WtgpParams<T = f64> {
    pub tp: T,
    pub kpp: T,
    pub kip: T,
    pub kpc: T,
    pub kic: T,
    pub kcc: T,
    /// deg
    pub theta_min: T,
    pub theta_max: T,
    /// deg/s
    pub rtheta_min: T,
    pub rtheta_max: T,
}

impl<T: Real> Default for WtgpParams<T> {
    fn default() -> Self {
        WtgpParams {
            tp: T::lit(0.3),
            kpp: T::lit(150.0),
            kip: T::lit(25.0),
            kpc: T::lit(3.0),
            kic: T::lit(30.0),
            kcc: T::zero(),
            theta_min: T::zero(),
            theta_max: T::lit(27.0),
            rtheta_min: T::lit(-10.0),
            rtheta_max: T::lit(10.0),
        }
    }
}

impl<T: Real> WtgpParams<T> {
    pub fn check(&self) -> Result<()> {
        if !(self.theta_min < self.theta_max) {
            return Err(Error::Config("wtgp_a requires theta_min < theta_max".into()));
        }
        if !(self.rtheta_min < T::zero() && T::zero() < self.rtheta_max) {
            return Err(Error::Config("wtgp_a requires rtheta_min < 0 < rtheta_max".into()));
        }
        if !(self.tp > T::zero()) {
            return Err(Error::Config("wtgp_a requires tp > 0".into()));
        }
        Ok(())
    }
}

state_vector! {
    pub struct WtgpState {
        /// Pitch angle, deg.
        pub theta,
        /// Pitch-control integrator.
        pub x_pc,
        /// Compensator integrator.
        pub x_cmp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtgpInputs<T> {
    pub w_g: T,
    pub w_ref: T,
    pub p_ord: T,
    pub p_ref0: T,
}

pub fn wtgp_derivatives<T: Real>(p: &WtgpParams<T>, x: &WtgpState<T>, u: &WtgpInputs<T>) -> Result<(WtgpState<T>, T)> {
    super::ensure_finite("wtgp_a", &[u.w_g, u.w_ref, u.p_ord, u.p_ref0, x.theta, x.x_pc, x.x_cmp])?;
    let (lo, hi) = (p.theta_min, p.theta_max);
    let p_err = u.p_ord - u.p_ref0;
    let e_pc = u.w_g - u.w_ref + p.kcc * p_err;
    let (y_pc, mut d_pc) = pi_nonwindup(p.kpp, p.kip, e_pc, x.x_pc, lo, hi);
    let (y_cmp, mut d_cmp) = pi_nonwindup(p.kpc, p.kic, p_err, x.x_cmp, lo, hi);
    let cmd = clamp(y_pc + y_cmp, lo, hi);

    // pitch pinned at a limit: freeze integrators that push further out
    let at_hi = x.theta >= hi;
    let at_lo = x.theta <= lo;
    if (at_hi && d_pc > T::zero()) || (at_lo && d_pc < T::zero()) {
        d_pc = T::zero();
    }
    if (at_hi && d_cmp > T::zero()) || (at_lo && d_cmp < T::zero()) {
        d_cmp = T::zero();
    }

    let rate = clamp((cmd - x.theta) / p.tp, p.rtheta_min, p.rtheta_max);
    let d_theta = nonwindup(x.theta, rate, lo, hi);
    Ok((
        WtgpState {
            theta: d_theta,
            x_pc: d_pc,
            x_cmp: d_cmp,
        },
        x.theta,
    ))
}

/// Equilibrium with all errors zero and the pitch at `theta0`.
pub fn wtgp_initialize<T: Real>(p: &WtgpParams<T>, theta0: T) -> Result<WtgpState<T>> {
    p.check()?;
    if theta0 < p.theta_min || theta0 > p.theta_max {
        return Err(Error::Init {
            unit: "wtgp_a".into(),
            reason: "initial pitch outside [theta_min, theta_max]".into(),
        });
    }
    Ok(WtgpState {
        theta: theta0,
        x_pc: theta0,
        x_cmp: T::zero(),
    })
}

/// Clamp position-limited states after an integration stage.
pub fn wtgp_apply_limits<T: Real>(p: &WtgpParams<T>, x: &mut WtgpState<T>) {
    x.theta = clamp(x.theta, p.theta_min, p.theta_max);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steady() -> WtgpInputs<f64> {
        WtgpInputs {
            w_g: 1.0,
            w_ref: 1.0,
            p_ord: 0.8,
            p_ref0: 0.8,
        }
    }

    #[test]
    fn equilibrium_inside_limits() {
        let p = WtgpParams::default();
        let x = wtgp_initialize(&p, 5.0).unwrap();
        let (d, theta) = wtgp_derivatives(&p, &x, &steady()).unwrap();
        assert_eq!(d.max_abs(), 0.0);
        assert_eq!(theta, 5.0);
    }

    #[test]
    fn rate_limit_binds_exactly() {
        let p = WtgpParams {
            kpp: 180.0,
            ..WtgpParams::default()
        };
        let x = wtgp_initialize(&p, 2.0).unwrap();
        let u = WtgpInputs { w_g: 1.2, ..steady() };
        let (d, _) = wtgp_derivatives(&p, &x, &u).unwrap();
        assert_eq!(d.theta, 10.0);
        let u = WtgpInputs { w_g: 0.8, ..steady() };
        let x = wtgp_initialize(&p, 20.0).unwrap();
        let (d, _) = wtgp_derivatives(&p, &x, &u).unwrap();
        assert_eq!(d.theta, -10.0);
    }

    #[test]
    fn initial_pitch_outside_limits_is_rejected() {
        let p = WtgpParams::<f64>::default();
        assert!(wtgp_initialize(&p, -1.0).is_err());
    }

    /// Step simulation under a sustained outward error: once the pitch pins at
    /// theta_max the integrators stop, matching a reference conditional
    /// integrator written independently of the block code.
    #[test]
    fn integrators_freeze_while_pinned_at_theta_max() {
        let p = WtgpParams {
            theta_max: 27.0,
            kpp: 2.0,
            kip: 4.0,
            kpc: 0.0,
            kic: 0.0,
            ..WtgpParams::default()
        };
        let u = WtgpInputs { w_g: 1.5, ..steady() };
        let dt = 1e-3;
        let mut x = wtgp_initialize(&p, 0.0).unwrap();
        // reference: integrate x_pc while kpp·e + x_pc < 27 and pitch < 27
        let (mut r_int, mut r_theta) = (0.0f64, 0.0f64);
        let e: f64 = 1.5 - 1.0;
        for _ in 0..20_000 {
            let (d, _) = wtgp_derivatives(&p, &x, &u).unwrap();
            x = x.axpy(dt, &d);
            wtgp_apply_limits(&p, &mut x);

            let out = (2.0 * e + r_int).min(27.0);
            let int_rate = if 2.0 * e + r_int >= 27.0 || r_theta >= 27.0 { 0.0 } else { 4.0 * e };
            let th_rate = ((out - r_theta) / 0.3).clamp(-10.0, 10.0);
            let th_rate = if r_theta >= 27.0 && th_rate > 0.0 { 0.0 } else { th_rate };
            r_int += dt * int_rate;
            r_theta = (r_theta + dt * th_rate).min(27.0);
        }
        assert!((x.theta - 27.0).abs() < 1e-9);
        let (d, _) = wtgp_derivatives(&p, &x, &u).unwrap();
        assert_eq!(d.x_pc, 0.0);
        assert_eq!(d.x_cmp, 0.0);
        x.theta = 27.0;
        let (d, _) = wtgp_derivatives(&p, &x, &u).unwrap();
        assert_eq!(d.theta, 0.0);
        assert!((x.x_pc - r_int).abs() < 1e-9, "{} vs {}", x.x_pc, r_int);
        // reversing the error resumes integration
        let back = WtgpInputs { w_g: 0.9, ..steady() };
        let (d, _) = wtgp_derivatives(&p, &x, &back).unwrap();
        assert!(d.x_pc < 0.0);
    }
}
