//! Plant controller (`repc_a` / `repc_b`).
//!
//! Measurements and commands are on the plant base (sum of the controlled
//! units' MVA bases). The controller produces a plant reactive command
//! `q_ext` and a plant active command `p_cmd`; [`repc_dispatch`] splits the
//! deviation from their initial values over the controlled units.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::control::{clamp, deadband, lag, lead_lag_output, nonwindup, pi_nonwindup};
use crate::error::{Error, Result};
use crate::scalar::{Real, F_NOMINAL_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RepcVariant {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepcParams<T = f64> {
    pub variant: RepcVariant,
    /// 1 regulates (compensated) voltage, 0 regulates plant Q.
    pub ref_flag: u8,
    pub freq_flag: u8,
    pub kp: T,
    pub ki: T,
    /// Reactive droop used when `rc` and `xc` are both zero.
    pub kc: T,
    pub rc: T,
    pub xc: T,
    pub tfltr: T,
    pub tft: T,
    pub tfv: T,
    pub tp: T,
    pub tlag: T,
    pub dbd1: T,
    pub dbd2: T,
    pub emax: T,
    pub emin: T,
    pub qmax: T,
    pub qmin: T,
    /// Voltage below which the volt/var integrator is frozen.
    pub vfrz: T,
    pub ddn: T,
    pub dup: T,
    /// Hz
    pub fdbd1: T,
    pub fdbd2: T,
    pub femax: T,
    pub femin: T,
    pub kpg: T,
    pub kig: T,
    pub pmax: T,
    pub pmin: T,
}

impl<T: Real> Default for RepcParams<T> {
    fn default() -> Self {
        RepcParams {
            variant: RepcVariant::A,
            ref_flag: 1,
            freq_flag: 0,
            kp: T::lit(0.5),
            ki: T::lit(5.0),
            kc: T::lit(0.02),
            rc: T::zero(),
            xc: T::zero(),
            tfltr: T::lit(0.02),
            tft: T::zero(),
            tfv: T::lit(0.05),
            tp: T::lit(0.25),
            tlag: T::lit(0.1),
            dbd1: T::zero(),
            dbd2: T::zero(),
            emax: T::lit(0.1),
            emin: T::lit(-0.1),
            qmax: T::lit(0.6),
            qmin: T::lit(-0.6),
            vfrz: T::lit(0.7),
            ddn: T::zero(),
            dup: T::zero(),
            fdbd1: T::lit(-0.017),
            fdbd2: T::lit(0.017),
            femax: T::lit(0.5),
            femin: T::lit(-0.5),
            kpg: T::lit(0.25),
            kig: T::one(),
            pmax: T::lit(1.5),
            pmin: T::zero(),
        }
    }
}

impl<T: Real> RepcParams<T> {
    pub fn check(&self, n_units: usize) -> Result<()> {
        if self.ref_flag > 1 || self.freq_flag > 1 {
            return Err(Error::Config("repc ref_flag and freq_flag must be 0 or 1".into()));
        }
        match (self.variant, n_units) {
            (_, 0) => return Err(Error::Config("plant controller has no controlled units".into())),
            (RepcVariant::A, n) if n > 1 => {
                return Err(Error::Config(format!("repc_a controls exactly one unit, got {n}; use repc_b")))
            }
            _ => {}
        }
        if self.ddn < T::zero() || self.dup < T::zero() {
            return Err(Error::Config("repc requires ddn >= 0 and dup >= 0".into()));
        }
        if self.freq_flag == 0 && (self.ddn > T::zero() || self.dup > T::zero()) {
            return Err(Error::Config("repc droop gains set with freq_flag = 0".into()));
        }
        if !(self.fdbd1 <= T::zero() && T::zero() <= self.fdbd2) {
            return Err(Error::Config("repc requires fdbd1 <= 0 <= fdbd2".into()));
        }
        if !(self.pmin <= self.pmax) || !(self.qmin <= self.qmax) {
            return Err(Error::Config("repc limits are inverted".into()));
        }
        Ok(())
    }

    fn line_drop(&self) -> bool {
        self.rc != T::zero() || self.xc != T::zero()
    }
}

/// Setpoints captured at initialization, on plant base.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RepcRefs<T = f64> {
    /// Voltage or Q reference depending on `ref_flag`.
    pub y_ref: T,
    pub p_ref: T,
    /// Hz
    pub f_ref: T,
    pub q_ext0: T,
    pub p_cmd0: T,
}

state_vector! {
    pub struct RepcState {
        /// Filtered regulated quantity.
        pub y_filt,
        pub q_int,
        /// Lead-lag state on the reactive command.
        pub q_ll,
        /// Filtered plant active power.
        pub p_filt,
        pub p_int,
        /// Output lag on the active command.
        pub p_lag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepcInputs<T> {
    /// Regulated bus voltage phasor.
    pub v_reg: Complex<T>,
    /// Plant current (generator convention, plant base).
    pub i_plant: Complex<T>,
    pub p_plant: T,
    pub q_plant: T,
    /// Hz
    pub f_bus: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepcOutput<T> {
    pub deriv: RepcState<T>,
    pub q_ext: T,
    pub p_cmd: T,
    /// Droop contribution after deadband, pu on plant base.
    pub droop: T,
}

fn regulated<T: Real>(p: &RepcParams<T>, u: &RepcInputs<T>) -> T {
    if p.ref_flag == 0 {
        u.q_plant
    } else if p.line_drop() {
        (u.v_reg - Complex::new(p.rc, p.xc) * u.i_plant).norm()
    } else {
        u.v_reg.norm() + p.kc * u.q_plant
    }
}

/// Droop power for a bus frequency deviation; `fe_hz = f_ref - f_bus`.
pub fn droop_power<T: Real>(p: &RepcParams<T>, fe_hz: T) -> T {
    if p.freq_flag == 0 {
        return T::zero();
    }
    let fe = deadband(fe_hz, p.fdbd1, p.fdbd2) / T::lit(F_NOMINAL_HZ);
    if fe < T::zero() {
        p.ddn * fe
    } else {
        p.dup * fe
    }
}

pub fn repc_update<T: Real>(p: &RepcParams<T>, r: &RepcRefs<T>, x: &RepcState<T>, u: &RepcInputs<T>) -> Result<RepcOutput<T>> {
    super::ensure_finite(
        "repc",
        &[
            u.v_reg.re, u.v_reg.im, u.i_plant.re, u.i_plant.im, u.p_plant, u.q_plant, u.f_bus, x.y_filt, x.q_int, x.q_ll,
            x.p_filt, x.p_int, x.p_lag,
        ],
    )?;
    let y = regulated(p, u);
    let err = clamp(deadband(r.y_ref - x.y_filt, p.dbd1, p.dbd2), p.emin, p.emax);
    let (q_pi, mut d_qint) = pi_nonwindup(p.kp, p.ki, err, x.q_int, p.qmin, p.qmax);
    if u.v_reg.norm() < p.vfrz {
        d_qint = T::zero();
    }
    let q_ext = lead_lag_output(q_pi, x.q_ll, p.tft, p.tfv);

    let droop = droop_power(p, r.f_ref - u.f_bus);
    let (p_pi, d_pint) = if p.freq_flag == 1 {
        let pe = clamp(r.p_ref - x.p_filt + droop, p.femin, p.femax);
        pi_nonwindup(p.kpg, p.kig, pe, x.p_int, p.pmin, p.pmax)
    } else {
        (r.p_cmd0, T::zero())
    };
    let d_lag = nonwindup(x.p_lag, lag(p_pi, x.p_lag, p.tlag), p.pmin, p.pmax);
    let p_cmd = if p.tlag > T::zero() { x.p_lag } else { p_pi };

    Ok(RepcOutput {
        deriv: RepcState {
            y_filt: lag(y, x.y_filt, p.tfltr),
            q_int: d_qint,
            q_ll: lag(q_pi, x.q_ll, p.tfv),
            p_filt: lag(u.p_plant, x.p_filt, p.tp),
            p_int: d_pint,
            p_lag: d_lag,
        },
        q_ext,
        p_cmd,
        droop,
    })
}

/// Initialize with the plant at its measured operating point: the reference
/// equals the measurement and the commands equal the plant P and Q.
pub fn repc_initialize<T: Real>(p: &RepcParams<T>, n_units: usize, u: &RepcInputs<T>) -> Result<(RepcState<T>, RepcRefs<T>)> {
    p.check(n_units)?;
    let fail = |reason: &str| Error::Init {
        unit: "repc".into(),
        reason: reason.into(),
    };
    if u.q_plant < p.qmin || u.q_plant > p.qmax {
        return Err(fail("plant reactive power outside [qmin, qmax]"));
    }
    if u.p_plant < p.pmin || u.p_plant > p.pmax {
        return Err(fail("plant active power outside [pmin, pmax]"));
    }
    if u.v_reg.norm() < p.vfrz {
        return Err(fail("regulated voltage below vfrz"));
    }
    let y = regulated(p, u);
    let state = RepcState {
        y_filt: y,
        q_int: u.q_plant,
        q_ll: u.q_plant,
        p_filt: u.p_plant,
        p_int: u.p_plant,
        p_lag: u.p_plant,
    };
    let refs = RepcRefs {
        y_ref: y,
        p_ref: u.p_plant,
        f_ref: u.f_bus,
        q_ext0: u.q_plant,
        p_cmd0: u.p_plant,
    };
    Ok((state, refs))
}

/// Per-unit share of a plant command change for one unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispatchShare<T = f64> {
    /// MVA base of the unit.
    pub mbase: T,
    /// Fraction of plant active-power deviation, sums to 1 over the plant.
    pub p_share: T,
    pub q_share: T,
}

/// Compute shares: active by initial output (falling back to MVA base when
/// the plant is idle), reactive by MVA base.
pub fn dispatch_shares<T: Real>(mbase: &[T], p0: &[T]) -> Vec<DispatchShare<T>> {
    let sm = mbase.iter().fold(T::zero(), |a, &b| a + b);
    let sp = p0.iter().fold(T::zero(), |a, &b| a + b.max(T::zero()));
    mbase
        .iter()
        .zip(p0)
        .map(|(&m, &p)| DispatchShare {
            mbase: m,
            p_share: if sp > T::zero() { p.max(T::zero()) / sp } else { m / sm },
            q_share: m / sm,
        })
        .collect()
}

/// Unit references `(p_ref, q_ref)` on the unit base from plant commands.
pub fn repc_dispatch<T: Real>(r: &RepcRefs<T>, plant_base: T, share: &DispatchShare<T>, p0_unit: T, q0_unit: T, p_cmd: T, q_ext: T) -> (T, T) {
    let k = plant_base / share.mbase;
    (
        p0_unit + share.p_share * (p_cmd - r.p_cmd0) * k,
        q0_unit + share.q_share * (q_ext - r.q_ext0) * k,
    )
}
