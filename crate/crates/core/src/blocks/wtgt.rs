//! Two-mass drive train (`wtgt_a`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{omega_base, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResponseLimits {
    Fixed,
    #[default]
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WtgtParams<T = f64> {
    /// Turbine inertia, s.
    pub ht: T,
    /// Generator inertia, s. Zero collapses the model to a single mass.
    pub hg: T,
    pub dshaft: T,
    /// Shaft stiffness, pu torque per electrical rad.
    pub kshaft: T,
    pub response_limit_kind: ResponseLimits,
}

impl<T: Real> Default for WtgtParams<T> {
    fn default() -> Self {
        WtgtParams {
            ht: T::lit(5.0),
            hg: T::lit(0.5),
            dshaft: T::lit(1.0),
            kshaft: T::lit(50.0),
            response_limit_kind: ResponseLimits::Normal,
        }
    }
}

impl<T: Real> WtgtParams<T> {
    pub fn single_mass(&self) -> bool {
        self.hg <= T::zero()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.ht > T::zero()) || self.hg < T::zero() || self.kshaft < T::zero() {
            return Err(Error::Config("wtgt_a requires ht > 0, hg >= 0, kshaft >= 0".into()));
        }
        Ok(())
    }

    /// Undamped shaft torsional-mode frequency in Hz.
    pub fn shaft_mode_hz(&self) -> T {
        let two = T::lit(2.0);
        (self.kshaft * omega_base::<T>() * (self.ht + self.hg) / (two * self.ht * self.hg)).sqrt()
            / (two * T::PI())
    }
}

state_vector! {
    pub struct WtgtState {
        /// Turbine speed, pu.
        pub w_t,
        /// Generator speed, pu.
        pub w_g,
        /// Shaft twist, electrical rad.
        pub twist,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtgtOutput<T> {
    pub deriv: WtgtState<T>,
    pub t_shaft: T,
    pub t_e: T,
}

/// Drive-train derivatives for mechanical torque `t_m` and electrical power `p_e` (pu).
pub fn wtgt_derivatives<T: Real>(p: &WtgtParams<T>, x: &WtgtState<T>, t_m: T, p_e: T) -> Result<WtgtOutput<T>> {
    super::ensure_finite("wtgt_a", &[x.w_t, x.w_g, x.twist, t_m, p_e])?;
    let two = T::lit(2.0);
    if p.single_mass() {
        let t_e = p_e / x.w_t.max(T::lit(1e-3));
        let dw = (t_m - t_e) / (two * p.ht);
        return Ok(WtgtOutput {
            deriv: WtgtState {
                w_t: dw,
                w_g: dw,
                twist: T::zero(),
            },
            t_shaft: t_e,
            t_e,
        });
    }
    let t_e = p_e / x.w_g.max(T::lit(1e-3));
    let slip = x.w_t - x.w_g;
    let t_shaft = p.kshaft * x.twist + p.dshaft * slip;
    Ok(WtgtOutput {
        deriv: WtgtState {
            w_t: (t_m - t_shaft) / (two * p.ht),
            w_g: (t_shaft - t_e) / (two * p.hg),
            twist: omega_base::<T>() * slip,
        },
        t_shaft,
        t_e,
    })
}

/// Equilibrium at speed `w` transmitting electrical power `p_e`.
/// Returns the state and the balancing mechanical torque.
pub fn wtgt_initialize<T: Real>(p: &WtgtParams<T>, w: T, p_e: T) -> Result<(WtgtState<T>, T)> {
    p.check()?;
    let t_e = p_e / w;
    let twist = if p.single_mass() || p.kshaft <= T::zero() {
        T::zero()
    } else {
        t_e / p.kshaft
    };
    Ok((WtgtState { w_t: w, w_g: w, twist }, t_e))
}

/// One trapezoidal step of the two-mass shaft with torques `(t_m, t_e)`
/// given at the start (`u0`) and end (`u1`) of the step.
///
/// The torsional mode sits at tens of Hz, far outside the stability region of
/// an explicit step at simulation step sizes, so the simulator advances the
/// shaft with this A-stable rule. Single-mass shafts are stepped the same way
/// (the update is then explicit).
pub fn wtgt_trapezoid_step<T: Real>(p: &WtgtParams<T>, x: &WtgtState<T>, dt: T, u0: (T, T), u1: (T, T)) -> WtgtState<T> {
    let two = T::lit(2.0);
    let h = dt / two;
    if p.single_mass() {
        let w = x.w_t + h * ((u0.0 - u0.1) + (u1.0 - u1.1)) / (two * p.ht);
        return WtgtState {
            w_t: w,
            w_g: w,
            twist: x.twist,
        };
    }
    let (at, ag) = (two * p.ht, two * p.hg);
    let wb = omega_base::<T>();
    let a = [
        [-p.dshaft / at, p.dshaft / at, -p.kshaft / at],
        [p.dshaft / ag, -p.dshaft / ag, p.kshaft / ag],
        [wb, -wb, T::zero()],
    ];
    let xv = [x.w_t, x.w_g, x.twist];
    let b = |u: (T, T)| [u.0 / at, -u.1 / ag, T::zero()];
    let (b0, b1) = (b(u0), b(u1));
    let mut m = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for i in 0..3 {
        let mut ax = T::zero();
        for j in 0..3 {
            ax = ax + a[i][j] * xv[j];
            m[i][j] = if i == j { T::one() } else { T::zero() } - h * a[i][j];
        }
        rhs[i] = xv[i] + h * (ax + b0[i] + b1[i]);
    }
    let s = solve3(m, rhs);
    WtgtState {
        w_t: s[0],
        w_g: s[1],
        twist: s[2],
    }
}

fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3<T: Real>(m: [[T; 3]; 3], r: [T; 3]) -> [T; 3] {
    let d = det3(&m);
    let mut out = [T::zero(); 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det3(&mk) / d;
    }
    out
}
