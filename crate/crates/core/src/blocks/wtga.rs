//! Simplified aerodynamics (`wtga_a`): mechanical power as a quadratic in pitch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WtgaParams<T = f64> {
    /// Aerodynamic gain, pu power per deg².
    pub ka: T,
    /// Initial pitch angle, deg.
    pub theta0: T,
}

impl<T: Real> Default for WtgaParams<T> {
    fn default() -> Self {
        WtgaParams {
            ka: T::lit(0.007),
            theta0: T::zero(),
        }
    }
}

impl<T: Real> WtgaParams<T> {
    pub fn check(&self) -> Result<()> {
        if self.ka < T::zero() {
            return Err(Error::Config("wtga_a requires ka >= 0".into()));
        }
        Ok(())
    }
}

/// `P_m = P_m0 − ka·θ·(θ − θ0)`
#[inline]
pub fn wtga_power<T: Real>(p: &WtgaParams<T>, theta_deg: T, p_m0: T) -> T {
    p_m0 - p.ka * theta_deg * (theta_deg - p.theta0)
}
