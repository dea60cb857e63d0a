//! Generator/converter interface (`regc_a`): current-source injection with
//! low-voltage power logic and voltage-dependent current management.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::control::{clamp, lag};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegcParams<T = f64> {
    /// Current command lag, s.
    pub tg: T,
    /// Active-current up-ramp limit, pu/s.
    pub rrpwr: T,
    /// Voltage filter feeding the LVPL, s.
    pub tfltr: T,
    pub lvplsw: bool,
    pub zerox: T,
    pub brkpt: T,
    pub lvpl1: T,
    pub lvpnt0: T,
    pub lvpnt1: T,
    pub volim: T,
    pub iolim: T,
    pub khv: T,
}

impl<T: Real> Default for RegcParams<T> {
    fn default() -> Self {
        RegcParams {
            tg: T::lit(0.02),
            rrpwr: T::lit(10.0),
            tfltr: T::lit(0.02),
            lvplsw: true,
            zerox: T::lit(0.4),
            brkpt: T::lit(0.9),
            lvpl1: T::lit(1.22),
            lvpnt0: T::lit(0.4),
            lvpnt1: T::lit(0.8),
            volim: T::lit(1.2),
            iolim: T::lit(-1.3),
            khv: T::lit(0.7),
        }
    }
}

impl<T: Real> RegcParams<T> {
    pub fn check(&self) -> Result<()> {
        if !(self.zerox < self.brkpt) {
            return Err(Error::Config("regc_a requires zerox < brkpt".into()));
        }
        if !(self.lvpnt0 < self.lvpnt1) {
            return Err(Error::Config("regc_a requires lvpnt0 < lvpnt1".into()));
        }
        if !(self.tg > T::zero()) {
            return Err(Error::Config("regc_a requires tg > 0".into()));
        }
        Ok(())
    }

    /// Active-current ceiling from the low-voltage power logic.
    pub fn lvpl_ceiling(&self, v: T) -> T {
        if !self.lvplsw {
            return T::infinity();
        }
        if v <= self.zerox {
            T::zero()
        } else if v >= self.brkpt {
            T::infinity()
        } else {
            self.lvpl1 * (v - self.zerox) / (self.brkpt - self.zerox)
        }
    }

    /// Low-voltage current gain, 0 at or below lvpnt0 rising to 1 at lvpnt1.
    pub fn low_voltage_gain(&self, v: T) -> T {
        clamp((v - self.lvpnt0) / (self.lvpnt1 - self.lvpnt0), T::zero(), T::one())
    }
}

state_vector! {
    pub struct RegcState {
        pub i_p,
        pub i_q,
        /// Filtered terminal voltage for the LVPL.
        pub v_lvpl,
    }
}

/// Reactive current after the high-voltage clamp.
pub fn regc_reactive_current<T: Real>(p: &RegcParams<T>, i_q: T, v: T) -> T {
    if v > p.volim {
        (i_q - p.khv * (v - p.volim)).max(p.iolim)
    } else {
        i_q
    }
}

/// Network-frame current injection (generator convention) for terminal
/// voltage `v`. Positive `i_q` delivers reactive power.
pub fn regc_injection<T: Real>(p: &RegcParams<T>, x: &RegcState<T>, v: Complex<T>) -> Complex<T> {
    let vm = v.norm();
    let gain = p.low_voltage_gain(vm);
    if gain <= T::zero() || vm <= T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let iq = regc_reactive_current(p, x.i_q, vm);
    let unit = v / vm;
    Complex::new(x.i_p, -iq) * unit * gain
}

pub fn regc_derivatives<T: Real>(p: &RegcParams<T>, x: &RegcState<T>, ip_cmd: T, iq_cmd: T, v_mag: T) -> Result<RegcState<T>> {
    super::ensure_finite("regc_a", &[ip_cmd, iq_cmd, v_mag, x.i_p, x.i_q, x.v_lvpl])?;
    let target = ip_cmd.min(p.lvpl_ceiling(x.v_lvpl));
    let mut d_ip = lag(target, x.i_p, p.tg);
    if d_ip > p.rrpwr {
        d_ip = p.rrpwr;
    }
    Ok(RegcState {
        i_p: d_ip,
        i_q: lag(iq_cmd, x.i_q, p.tg),
        v_lvpl: lag(v_mag, x.v_lvpl, p.tfltr),
    })
}

/// Back-solve currents from the terminal power `s = p + jq` (pu on the unit base).
pub fn regc_initialize<T: Real>(p: &RegcParams<T>, s: Complex<T>, v_mag: T) -> Result<RegcState<T>> {
    p.check()?;
    if !(v_mag > p.lvpnt1) {
        return Err(Error::Init {
            unit: "regc_a".into(),
            reason: "terminal voltage inside the low-voltage current ramp".into(),
        });
    }
    let x = RegcState {
        i_p: s.re / v_mag,
        i_q: s.im / v_mag,
        v_lvpl: v_mag,
    };
    if x.i_p > p.lvpl_ceiling(v_mag) {
        return Err(Error::Init {
            unit: "regc_a".into(),
            reason: "active current above the LVPL ceiling".into(),
        });
    }
    if v_mag > p.volim {
        return Err(Error::Init {
            unit: "regc_a".into(),
            reason: "terminal voltage above volim".into(),
        });
    }
    Ok(x)
}
