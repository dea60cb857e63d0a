//! Electrical controls (`reec_a`).
//!
//! Reactive path selected by `q_flag`/`v_flag`:
//! * `q_flag = 0`: reactive current from the external Q command divided by the
//!   filtered voltage, through a `tiq` lag.
//! * `q_flag = 1, v_flag = 1`: Q PI produces a voltage command for the inner
//!   voltage PI, which produces the reactive current.
//! * `q_flag = 1, v_flag = 0`: the inner voltage PI regulates to `vref1`.
//!
//! During a voltage dip (`V_t < vdip` or `V_t > vup`) the reactive and active
//! path states are frozen and a proportional reactive current is injected.

use serde::{Deserialize, Serialize};

use super::control::{clamp, deadband, lag, nonwindup, pi_nonwindup, PiecewiseLinear};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ReecParams<T = f64> {
    pub pf_flag: u8,
    pub v_flag: u8,
    pub q_flag: u8,
    pub p_flag: u8,
    /// 1 = active-current priority, 0 = reactive-current priority.
    pub pq_flag: u8,
    pub vdip: T,
    pub vup: T,
    /// Terminal voltage filter, s.
    pub trv: T,
    pub dbd1: T,
    pub dbd2: T,
    pub kqv: T,
    pub iqh1: T,
    pub iql1: T,
    /// Dip-injection voltage reference; 0 means "initial terminal voltage".
    pub vref0: T,
    /// Local voltage setpoint for `v_flag = 0`; 0 means "initial terminal voltage".
    pub vref1: T,
    pub qmax: T,
    pub qmin: T,
    pub vmax: T,
    pub vmin: T,
    pub kqp: T,
    pub kqi: T,
    pub kvp: T,
    pub kvi: T,
    pub tiq: T,
    pub tpord: T,
    pub dpmax: T,
    pub dpmin: T,
    pub pmax: T,
    pub pmin: T,
    pub imax: T,
    /// Reactive-current limit vs voltage.
    pub vdl1: PiecewiseLinear<T>,
    /// Active-current limit vs voltage.
    pub vdl2: PiecewiseLinear<T>,
}

impl<T: Real> Default for ReecParams<T> {
    fn default() -> Self {
        let flat = |v: f64| PiecewiseLinear::new(vec![(T::zero(), T::lit(v)), (T::lit(1.5), T::lit(v))]);
        ReecParams {
            pf_flag: 0,
            v_flag: 1,
            q_flag: 1,
            p_flag: 0,
            pq_flag: 0,
            vdip: T::lit(0.9),
            vup: T::lit(1.1),
            trv: T::lit(0.02),
            dbd1: T::lit(-0.05),
            dbd2: T::lit(0.05),
            kqv: T::lit(2.0),
            iqh1: T::lit(1.05),
            iql1: T::lit(-1.05),
            vref0: T::zero(),
            vref1: T::zero(),
            qmax: T::lit(0.6),
            qmin: T::lit(-0.6),
            vmax: T::lit(1.1),
            vmin: T::lit(0.9),
            kqp: T::zero(),
            kqi: T::lit(1.0),
            kvp: T::zero(),
            kvi: T::lit(40.0),
            tiq: T::lit(0.02),
            tpord: T::lit(0.02),
            dpmax: T::lit(99.0),
            dpmin: T::lit(-99.0),
            pmax: T::one(),
            pmin: T::zero(),
            imax: T::lit(1.3),
            vdl1: flat(1.1),
            vdl2: flat(1.1),
        }
    }
}

impl<T: Real> ReecParams<T> {
    /// Flag combinations are checked once, when a model is built.
    pub fn check(&self) -> Result<()> {
        for (name, f) in [
            ("pf_flag", self.pf_flag),
            ("v_flag", self.v_flag),
            ("q_flag", self.q_flag),
            ("p_flag", self.p_flag),
            ("pq_flag", self.pq_flag),
        ] {
            if f > 1 {
                return Err(Error::Config(format!("reec_a {name} must be 0 or 1")));
            }
        }
        if self.pf_flag == 1 && self.q_flag == 1 && self.v_flag == 0 {
            return Err(Error::Config(
                "reec_a: pf_flag=1 with q_flag=1, v_flag=0 is not a supported control option".into(),
            ));
        }
        if !(self.vdip < self.vup) {
            return Err(Error::Config("reec_a requires vdip < vup".into()));
        }
        if !(self.pmin <= self.pmax) || !(self.imax > T::zero()) {
            return Err(Error::Config("reec_a requires pmin <= pmax and imax > 0".into()));
        }
        if !self.vdl1.is_sorted() || !self.vdl2.is_sorted() {
            return Err(Error::Config("reec_a vdl tables must be sorted".into()));
        }
        Ok(())
    }
}

/// Setpoints fixed at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReecRefs<T = f64> {
    pub vref0: T,
    pub vref1: T,
    /// Power-factor angle for `pf_flag = 1`, rad.
    pub pfaref: T,
}

state_vector! {
    pub struct ReecState {
        pub v_filt,
        /// Q PI integrator (voltage command).
        pub q_int,
        /// Voltage PI integrator (reactive current).
        pub v_int,
        /// Reactive current lag for `q_flag = 0`.
        pub iq_lag,
        /// Active power order.
        pub p_ord,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReecInputs<T> {
    pub v_t: T,
    pub q_gen: T,
    pub p_gen: T,
    pub q_ext: T,
    pub p_ref: T,
    pub w_g: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReecOutput<T> {
    pub deriv: ReecState<T>,
    pub ip_cmd: T,
    pub iq_cmd: T,
    pub dip: bool,
    pub iq_inj: T,
}

/// Apply the current limiter with `pq_flag` priority. Returns `(ip, iq)`.
pub fn current_limit<T: Real>(p: &ReecParams<T>, ip: T, iq: T, v: T) -> (T, T) {
    let imax = p.imax;
    let rem = |i: T| (imax * imax - i * i).max(T::zero()).sqrt();
    if p.pq_flag == 1 {
        let ip_max = p.vdl2.value(v).min(imax);
        let ip = clamp(ip, T::zero(), ip_max);
        let iq_max = p.vdl1.value(v).min(rem(ip));
        (ip, clamp(iq, -iq_max, iq_max))
    } else {
        let iq_max = p.vdl1.value(v).min(imax);
        let iq = clamp(iq, -iq_max, iq_max);
        let ip_max = p.vdl2.value(v).min(rem(iq));
        (clamp(ip, T::zero(), ip_max), iq)
    }
}

/// Distance of `v` from the dip thresholds, negative inside a dip.
pub fn reec_dip_margin<T: Real>(p: &ReecParams<T>, v: T) -> T {
    (v - p.vdip).min(p.vup - v)
}

pub fn reec_update<T: Real>(p: &ReecParams<T>, r: &ReecRefs<T>, x: &ReecState<T>, u: &ReecInputs<T>) -> Result<ReecOutput<T>> {
    reec_update_in_mode(p, r, x, u, None)
}

/// As [`reec_update`], with the dip mode optionally imposed by the caller
/// (an integrator holding the mode fixed across a step).
pub fn reec_update_in_mode<T: Real>(
    p: &ReecParams<T>,
    r: &ReecRefs<T>,
    x: &ReecState<T>,
    u: &ReecInputs<T>,
    dip_mode: Option<bool>,
) -> Result<ReecOutput<T>> {
    super::ensure_finite(
        "reec_a",
        &[u.v_t, u.q_gen, u.p_gen, u.q_ext, u.p_ref, u.w_g, x.v_filt, x.q_int, x.v_int, x.iq_lag, x.p_ord],
    )?;
    let zero = T::zero();
    let v_floor = x.v_filt.max(T::lit(0.01));
    let dip = dip_mode.unwrap_or(u.v_t < p.vdip || u.v_t > p.vup);

    // reactive path
    let q_cmd = if p.pf_flag == 1 {
        u.p_gen * r.pfaref.tan()
    } else {
        u.q_ext
    };
    let q_cmd = clamp(q_cmd, p.qmin, p.qmax);
    let (iq_base, mut d_q, mut d_v, mut d_lag) = if p.q_flag == 0 {
        let d = lag(q_cmd / v_floor, x.iq_lag, p.tiq);
        (x.iq_lag, zero, zero, d)
    } else {
        let (v_cmd, d_q) = if p.v_flag == 1 {
            pi_nonwindup(p.kqp, p.kqi, q_cmd - u.q_gen, x.q_int, p.vmin, p.vmax)
        } else {
            (r.vref1, zero)
        };
        let (iq, d_v) = pi_nonwindup(p.kvp, p.kvi, v_cmd - x.v_filt, x.v_int, p.iql1, p.iqh1);
        (iq, d_q, d_v, zero)
    };
    let iq_inj = if dip {
        clamp(p.kqv * deadband(r.vref0 - x.v_filt, p.dbd1, p.dbd2), p.iql1, p.iqh1)
    } else {
        zero
    };

    // active path
    let p_in = if p.p_flag == 1 { u.p_ref * u.w_g } else { u.p_ref };
    let mut d_p = clamp(lag(p_in, x.p_ord, p.tpord), p.dpmin, p.dpmax);
    d_p = nonwindup(x.p_ord, d_p, p.pmin, p.pmax);

    if dip {
        d_q = zero;
        d_v = zero;
        d_lag = zero;
        d_p = zero;
    }

    let ip_raw = clamp(x.p_ord, p.pmin, p.pmax) / v_floor;
    let iq_raw = clamp(iq_base + iq_inj, p.iql1, p.iqh1);
    let (ip_cmd, iq_cmd) = current_limit(p, ip_raw, iq_raw, x.v_filt);

    Ok(ReecOutput {
        deriv: ReecState {
            v_filt: lag(u.v_t, x.v_filt, p.trv),
            q_int: d_q,
            v_int: d_v,
            iq_lag: d_lag,
            p_ord: d_p,
        },
        ip_cmd,
        iq_cmd,
        dip,
        iq_inj,
    })
}

fn init_err(reason: impl Into<String>) -> Error {
    Error::Init {
        unit: "reec_a".into(),
        reason: reason.into(),
    }
}

/// Initialize from terminal voltage magnitude and power (pu on unit base).
/// Returns the state, fixed setpoints, and the power reference the upstream
/// block must supply.
pub fn reec_initialize<T: Real>(p: &ReecParams<T>, v: T, p0: T, q0: T, w_g: T) -> Result<(ReecState<T>, ReecRefs<T>, T)> {
    p.check()?;
    if !(v > p.vdip && v < p.vup) {
        return Err(init_err("terminal voltage outside the dip window"));
    }
    if p0 < p.pmin || p0 > p.pmax {
        return Err(init_err("active power outside [pmin, pmax]"));
    }
    if p.pf_flag == 0 && (q0 < p.qmin || q0 > p.qmax) {
        return Err(init_err("reactive power outside [qmin, qmax]"));
    }
    let ip = p0 / v;
    let iq = q0 / v;
    if iq > p.iqh1 || iq < p.iql1 {
        return Err(init_err("reactive current outside [iql1, iqh1]"));
    }
    let (ipl, iql) = current_limit(p, ip, iq, v);
    if (ipl - ip).abs() > T::lit(1e-12) || (iql - iq).abs() > T::lit(1e-12) {
        return Err(init_err("initial currents exceed the current limiter (imax)"));
    }
    if p.q_flag == 1 && p.v_flag == 1 && (v < p.vmin || v > p.vmax) {
        return Err(init_err("terminal voltage outside [vmin, vmax]"));
    }
    let refs = ReecRefs {
        vref0: if p.vref0 > T::zero() { p.vref0 } else { v },
        vref1: if p.vref1 > T::zero() { p.vref1 } else { v },
        pfaref: q0.atan2(p0),
    };
    if p.q_flag == 1 && p.v_flag == 0 && (refs.vref1 - v).abs() > T::lit(1e-9) && p.kvi > T::zero() {
        return Err(init_err("vref1 differs from the initial terminal voltage"));
    }
    let state = ReecState {
        v_filt: v,
        q_int: v,
        v_int: iq,
        iq_lag: iq,
        p_ord: p0,
    };
    let p_ref = if p.p_flag == 1 { p0 / w_g } else { p0 };
    Ok((state, refs, p_ref))
}

/// Clamp position-limited states after an integration stage.
pub fn reec_apply_limits<T: Real>(p: &ReecParams<T>, x: &mut ReecState<T>) {
    x.p_ord = clamp(x.p_ord, p.pmin, p.pmax);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(v: f64, p: f64, q: f64) -> ReecInputs<f64> {
        ReecInputs {
            v_t: v,
            q_gen: q,
            p_gen: p,
            q_ext: q,
            p_ref: p,
            w_g: 1.0,
        }
    }

    #[test]
    fn equilibrium_for_every_reactive_mode() {
        for (qf, vf) in [(0u8, 0u8), (0, 1), (1, 1), (1, 0)] {
            let p = ReecParams {
                q_flag: qf,
                v_flag: vf,
                ..ReecParams::default()
            };
            let (x, r, pref) = reec_initialize(&p, 1.01, 0.7, 0.1, 1.0).unwrap();
            let out = reec_update(&p, &r, &x, &inputs(1.01, 0.7, 0.1)).unwrap();
            assert!(out.deriv.max_abs() < 1e-12, "flags {qf}/{vf}: {:?}", out.deriv);
            assert!((out.ip_cmd - 0.7 / 1.01).abs() < 1e-12);
            assert!((out.iq_cmd - 0.1 / 1.01).abs() < 1e-12);
            assert_eq!(pref, 0.7);
        }
    }

    #[test]
    fn dip_injects_kqv_times_voltage_error() {
        let p = ReecParams {
            kqv: 2.0,
            dbd1: 0.0,
            dbd2: 0.0,
            q_flag: 0,
            imax: 2.0,
            ..ReecParams::default()
        };
        let (mut x, r, _) = reec_initialize(&p, 1.0, 0.5, 0.0, 1.0).unwrap();
        x.v_filt = 0.7;
        let out = reec_update(&p, &r, &x, &inputs(0.7, 0.5, 0.0)).unwrap();
        assert!(out.dip);
        assert!((out.iq_inj - 0.6).abs() < 1e-12);
        assert!((out.iq_cmd - 0.6).abs() < 1e-12);
        assert_eq!(out.deriv.p_ord, 0.0);
        assert_eq!(out.deriv.iq_lag, 0.0);
    }

    #[test]
    fn dip_injection_clamped_by_iqh1() {
        let p = ReecParams {
            kqv: 5.0,
            dbd1: 0.0,
            dbd2: 0.0,
            ..ReecParams::default()
        };
        let (mut x, r, _) = reec_initialize(&p, 1.0, 0.5, 0.0, 1.0).unwrap();
        x.v_filt = 0.5;
        let out = reec_update(&p, &r, &x, &inputs(0.5, 0.5, 0.0)).unwrap();
        assert_eq!(out.iq_inj, 1.05);
    }

    #[test]
    fn reactive_priority_circle_limit() {
        let p = ReecParams {
            pq_flag: 0,
            imax: 1.2,
            ..ReecParams::default()
        };
        let (ip, iq) = current_limit(&p, 1.0, 1.0, 1.0);
        assert_eq!(iq, 1.0);
        assert!((ip - (1.2f64 * 1.2 - 1.0).sqrt()).abs() < 1e-12);
        assert!((ip - 0.6633).abs() < 1e-4);
    }

    #[test]
    fn unsupported_flags_rejected_at_build_time() {
        let p = ReecParams::<f64> {
            pf_flag: 1,
            q_flag: 1,
            v_flag: 0,
            ..ReecParams::default()
        };
        assert!(matches!(p.check(), Err(Error::Config(_))));
        let p = ReecParams::<f64> {
            q_flag: 2,
            ..ReecParams::default()
        };
        assert!(p.check().is_err());
    }

    #[test]
    fn frozen_states_bit_identical_through_dip() {
        let p = ReecParams::default();
        let (x0, r, _) = reec_initialize(&p, 1.0, 0.6, 0.05, 1.0).unwrap();
        let mut x = x0;
        for k in 0..200 {
            let v = 0.5 + 0.001 * k as f64;
            let out = reec_update(&p, &r, &x, &inputs(v, 0.3, 0.4)).unwrap();
            x = x.axpy(0.001, &out.deriv);
        }
        assert_eq!(x.q_int.to_bits(), x0.q_int.to_bits());
        assert_eq!(x.v_int.to_bits(), x0.v_int.to_bits());
        assert_eq!(x.iq_lag.to_bits(), x0.iq_lag.to_bits());
        assert_eq!(x.p_ord.to_bits(), x0.p_ord.to_bits());
    }

    proptest! {
        #[test]
        fn limiter_stays_inside_circle(ip in -2.0f64..3.0, iq in -3.0f64..3.0,
                                       imax in 0.1f64..2.0, pq in 0u8..2, v in 0.0f64..1.3) {
            let p = ReecParams { pq_flag: pq, imax, ..ReecParams::default() };
            let (a, b) = current_limit(&p, ip, iq, v);
            prop_assert!(a * a + b * b <= imax * imax + 1e-12);
        }

        #[test]
        fn limiter_priority_ordering(ip in 0.0f64..2.0, iq in 0.0f64..2.0, imax in 0.2f64..1.5) {
            // with active priority the active current is only cut once the
            // reactive current has been driven to zero, and vice versa
            let pp = ReecParams { pq_flag: 1, imax, ..ReecParams::default() };
            let (a, b) = current_limit(&pp, ip, iq, 1.0);
            if a < ip.min(1.1) - 1e-12 { prop_assert!(b.abs() < 1e-9); }
            let qp = ReecParams { pq_flag: 0, imax, ..ReecParams::default() };
            let (a, b) = current_limit(&qp, ip, iq, 1.0);
            if b < iq.min(1.1) - 1e-12 { prop_assert!(a.abs() < 1e-9); }
        }
    }
}
