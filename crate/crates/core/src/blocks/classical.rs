//! Classical synchronous machine (constant EMF behind transient reactance)
//! and an ideal voltage source whose frequency can be scheduled.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{omega_base, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalParams<T = f64> {
    /// Inertia constant on the machine base, s.
    pub h: T,
    /// Damping, pu power per pu speed.
    pub d: T,
    pub xdp: T,
}

impl<T: Real> Default for ClassicalParams<T> {
    fn default() -> Self {
        ClassicalParams {
            h: T::lit(5.0),
            d: T::lit(2.0),
            xdp: T::lit(0.25),
        }
    }
}

impl<T: Real> ClassicalParams<T> {
    pub fn check(&self) -> Result<()> {
        if !(self.h > T::zero() && self.xdp > T::zero()) {
            return Err(Error::Config("classical machine requires h > 0 and xdp > 0".into()));
        }
        if self.d < T::zero() {
            return Err(Error::Config("classical machine requires d >= 0".into()));
        }
        Ok(())
    }
}

state_vector! {
    pub struct ClassicalState {
        /// Rotor angle, electrical rad.
        pub delta,
        /// Speed deviation, pu.
        pub dw,
    }
}

pub fn classical_derivatives<T: Real>(p: &ClassicalParams<T>, x: &ClassicalState<T>, p_m: T, p_e: T) -> Result<ClassicalState<T>> {
    super::ensure_finite("classical", &[x.delta, x.dw, p_m, p_e])?;
    Ok(ClassicalState {
        delta: omega_base::<T>() * x.dw,
        dw: (p_m - p_e - p.d * x.dw) / (T::lit(2.0) * p.h),
    })
}

/// Internal EMF phasor for a given EMF magnitude.
#[inline]
pub fn classical_emf<T: Real>(e_mag: T, x: &ClassicalState<T>) -> Complex<T> {
    Complex::from_polar(e_mag, x.delta)
}

/// `E' = V + jX'd·I` from terminal voltage and power (pu on machine base).
/// Returns the state, the EMF magnitude and the mechanical power.
pub fn classical_initialize<T: Real>(p: &ClassicalParams<T>, v: Complex<T>, s: Complex<T>) -> Result<(ClassicalState<T>, T, T)> {
    p.check()?;
    if !(v.norm() > T::zero()) {
        return Err(Error::Init {
            unit: "classical".into(),
            reason: "zero terminal voltage".into(),
        });
    }
    let i = (s / v).conj();
    let e = v + Complex::new(T::zero(), p.xdp) * i;
    Ok((
        ClassicalState {
            delta: e.arg(),
            dw: T::zero(),
        },
        e.norm(),
        s.re,
    ))
}

/// Ideal source behind a reactance; its frequency is set by schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfiniteSourceParams<T = f64> {
    pub xdp: T,
}

impl<T: Real> Default for InfiniteSourceParams<T> {
    fn default() -> Self {
        InfiniteSourceParams { xdp: T::lit(0.01) }
    }
}

/// Source angle derivative for a frequency offset in Hz.
#[inline]
pub fn source_angle_rate<T: Real>(df_hz: T) -> T {
    T::lit(2.0) * T::PI() * df_hz
}

#[cfg(test)]
mod tests {
    use super::*;
    type C = Complex<f64>;

    #[test]
    fn equilibrium_from_terminal_point() {
        let p = ClassicalParams::default();
        let v = C::from_polar(1.03, 0.2);
        let (x, e, pm) = classical_initialize(&p, v, C::new(0.8, 0.3)).unwrap();
        assert_eq!(pm, 0.8);
        // electrical power from E, V behind xdp equals P
        let pe = e * v.norm() * (x.delta - v.arg()).sin() / p.xdp;
        assert!((pe - 0.8).abs() < 1e-12);
        let d = classical_derivatives(&p, &x, pm, pe).unwrap();
        assert!(d.max_abs() < 1e-12);
    }

    /// Linearized SMIB: ω = sqrt(ω_b·Ks/(2h)), Ks = E·V·cos δ0 / X.
    #[test]
    fn smib_small_signal_frequency() {
        let p = ClassicalParams { h: 4.0, d: 0.0, xdp: 0.3 };
        let (e, vinf, xt, pm): (f64, f64, f64, f64) = (1.1, 1.0, 0.5, 0.6);
        let d0 = (pm * xt / (e * vinf)).asin();
        let ks = e * vinf * d0.cos() / xt;
        let f_expect = (omega_base::<f64>() * ks / (2.0 * p.h)).sqrt() / (2.0 * std::f64::consts::PI);
        let mut x = ClassicalState { delta: d0 + 1e-3, dw: 0.0 };
        let dt = 1e-4;
        let mut crossings = vec![];
        let mut prev = x.delta - d0;
        let pe = |d: f64| e * vinf * d.sin() / xt;
        for k in 0..200_000 {
            let k1 = classical_derivatives(&p, &x, pm, pe(x.delta)).unwrap();
            let x1 = x.axpy(dt, &k1);
            let k2 = classical_derivatives(&p, &x1, pm, pe(x1.delta)).unwrap();
            x = x.axpy(0.5 * dt, &k1).axpy(0.5 * dt, &k2);
            let cur = x.delta - d0;
            if prev < 0.0 && cur >= 0.0 {
                crossings.push(k as f64 * dt);
            }
            prev = cur;
        }
        let n = crossings.len() - 1;
        let f = n as f64 / (crossings[n] - crossings[0]);
        assert!((f - f_expect).abs() < 2e-3 * f_expect, "{f} vs {f_expect}");
    }
}
