//! Torque controller (`wtgq_a`).

use serde::{Deserialize, Serialize};

use super::control::{lag, pi_nonwindup, PiecewiseLinear};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TorqueFlag {
    /// PI on the torque error derived from the plant power reference.
    #[default]
    Torque,
    /// PI on the speed error against the speed-power curve.
    Speed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct WtgqParams<T = f64> {
    pub control_flag: TorqueFlag,
    pub kip: T,
    pub kpp: T,
    /// Electrical power measurement lag, s.
    pub tp: T,
    pub te_max: T,
    pub te_min: T,
    /// Speed-reference power filter, s.
    pub twref: T,
    /// Filtered electrical power (pu) → speed reference (pu).
    pub speed_power_curve: PiecewiseLinear<T>,
}

/// Four-point speed-power curve used when a template does not supply one.
pub fn default_speed_power_curve<T: Real>() -> PiecewiseLinear<T> {
    PiecewiseLinear::new(
        [(0.2, 0.58), (0.4, 0.72), (0.6, 0.86), (0.8, 1.0)]
            .into_iter()
            .map(|(p, w)| (T::lit(p), T::lit(w)))
            .collect(),
    )
}

impl<T: Real> Default for WtgqParams<T> {
    fn default() -> Self {
        WtgqParams {
            control_flag: TorqueFlag::Torque,
            kip: T::lit(0.6),
            kpp: T::lit(3.0),
            tp: T::lit(0.05),
            te_max: T::lit(1.2),
            te_min: T::lit(0.08),
            twref: T::lit(60.0),
            speed_power_curve: default_speed_power_curve(),
        }
    }
}

impl<T: Real> WtgqParams<T> {
    pub fn check(&self) -> Result<()> {
        if !(self.te_min < self.te_max) {
            return Err(Error::Config("wtgq_a requires te_min < te_max".into()));
        }
        if !(self.twref > T::zero() && self.tp > T::zero()) {
            return Err(Error::Config("wtgq_a requires positive tp and twref".into()));
        }
        if !self.speed_power_curve.is_sorted() {
            return Err(Error::Config("wtgq_a speed_power_curve must be sorted by power".into()));
        }
        Ok(())
    }
}

state_vector! {
    pub struct WtgqState {
        /// Power feeding the speed reference (twref filter).
        pub p_filt,
        /// Measured electrical power (tp filter).
        pub pe_meas,
        /// Torque PI integrator.
        pub x_pi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtgqOutput<T> {
    pub deriv: WtgqState<T>,
    /// Power reference handed to the electrical controls, pu.
    pub p_ref: T,
    pub t_cmd: T,
    pub w_ref: T,
    /// Speed-power curve was evaluated outside its breakpoints.
    pub curve_clamped: bool,
}

pub fn wtgq_derivatives<T: Real>(p: &WtgqParams<T>, x: &WtgqState<T>, p_e: T, w_g: T, p_ref0: T) -> Result<WtgqOutput<T>> {
    super::ensure_finite("wtgq_a", &[p_e, w_g, p_ref0, x.p_filt, x.pe_meas, x.x_pi])?;
    let w = w_g.max(T::lit(1e-3));
    let (w_ref, in_domain) = p.speed_power_curve.eval(x.p_filt);
    let err = match p.control_flag {
        TorqueFlag::Speed => w_g - w_ref,
        TorqueFlag::Torque => (p_ref0 - x.pe_meas) / w,
    };
    let (t_cmd, d_pi) = pi_nonwindup(p.kpp, p.kip, err, x.x_pi, p.te_min, p.te_max);
    Ok(WtgqOutput {
        deriv: WtgqState {
            p_filt: lag(p_e, x.p_filt, p.twref),
            pe_meas: lag(p_e, x.pe_meas, p.tp),
            x_pi: d_pi,
        },
        p_ref: t_cmd * w,
        t_cmd,
        w_ref,
        curve_clamped: !in_domain,
    })
}

/// Speed at which the turbine settles for electrical power `p_e`.
pub fn wtgq_equilibrium_speed<T: Real>(p: &WtgqParams<T>, p_e: T) -> T {
    p.speed_power_curve.value(p_e)
}

pub fn wtgq_initialize<T: Real>(p: &WtgqParams<T>, p_e: T, w_g: T) -> Result<WtgqState<T>> {
    p.check()?;
    let t_e = p_e / w_g;
    if t_e < p.te_min || t_e > p.te_max {
        return Err(Error::Init {
            unit: "wtgq_a".into(),
            reason: "electrical torque outside [te_min, te_max]".into(),
        });
    }
    Ok(WtgqState {
        p_filt: p_e,
        pe_meas: p_e,
        x_pi: t_e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_speed_flag() {
        let p = WtgqParams {
            control_flag: TorqueFlag::Speed,
            ..WtgqParams::default()
        };
        let pe: f64 = 0.5;
        let w = wtgq_equilibrium_speed(&p, pe);
        let x = wtgq_initialize(&p, pe, w).unwrap();
        let out = wtgq_derivatives(&p, &x, pe, w, pe).unwrap();
        assert!(out.deriv.max_abs() < 1e-15);
        assert!((out.p_ref - pe).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_torque_flag() {
        let p = WtgqParams::<f64>::default();
        let x = wtgq_initialize(&p, 0.7, 0.93).unwrap();
        let out = wtgq_derivatives(&p, &x, 0.7, 0.93, 0.7).unwrap();
        assert!(out.deriv.max_abs() < 1e-15);
    }

    #[test]
    fn twref_filter_reaches_63_percent_in_one_time_constant() {
        let p = WtgqParams::<f64>::default();
        assert_eq!(p.twref, 60.0);
        let mut x = wtgq_initialize(&p, 0.5, 0.79).unwrap();
        let dt = 1e-3;
        let n = (60.0 / dt) as usize;
        for _ in 0..n {
            let d = wtgq_derivatives(&p, &x, 0.6, 0.79, 0.5).unwrap().deriv;
            // Heun on the filter only
            let x1 = x.axpy(dt, &d);
            let d1 = wtgq_derivatives(&p, &x1, 0.6, 0.79, 0.5).unwrap().deriv;
            x.p_filt += 0.5 * dt * (d.p_filt + d1.p_filt);
        }
        let frac = (x.p_filt - 0.5) / 0.1;
        assert!((frac - 0.632).abs() < 0.01 * 0.632, "fraction {frac}");
    }

    /// Sustained speed error drives the torque command onto te_max; the power
    /// reference is then te_max·ω_g. Cross-checked with a brute-force Euler loop.
    #[test]
    fn torque_command_clamps_at_te_max() {
        let p = WtgqParams {
            control_flag: TorqueFlag::Speed,
            ..WtgqParams::default()
        };
        let w_g: f64 = 1.05;
        let mut x = wtgq_initialize(&p, 0.8, 1.0).unwrap();
        let mut brute_int: f64 = x.x_pi;
        let dt = 1e-3;
        for _ in 0..20_000 {
            let d = wtgq_derivatives(&p, &x, 0.8, w_g, 0.8).unwrap().deriv;
            x = x.axpy(dt, &d);
            let e = w_g - 1.0;
            if p.kpp * e + brute_int < p.te_max {
                brute_int += dt * p.kip * e;
            }
        }
        let out = wtgq_derivatives(&p, &x, 0.8, w_g, 0.8).unwrap();
        assert_eq!(out.t_cmd, 1.2);
        assert!((out.p_ref - 1.2 * w_g).abs() < 1e-12);
        assert_eq!(out.deriv.x_pi, 0.0);
        assert!((x.x_pi - brute_int).abs() < 1e-3);
    }

    #[test]
    fn curve_outside_domain_is_flagged() {
        let p = WtgqParams::<f64>::default();
        let x = WtgqState {
            p_filt: 1.1,
            pe_meas: 1.1,
            x_pi: 1.0,
        };
        let out = wtgq_derivatives(&p, &x, 1.1, 1.0, 1.1).unwrap();
        assert!(out.curve_clamped);
        assert_eq!(out.w_ref, 1.0);
    }
}
