//! Bus frequency from the filtered derivative of the unwrapped voltage angle.

use std::f64::consts::PI;

use crate::scalar::F_NOMINAL_HZ;

/// Below this magnitude a bus is treated as de-energized.
pub const DEENERGIZED_PU: f64 = 0.01;

/// Bring `angle` onto the branch closest to `reference`.
#[inline]
pub fn unwrap_near(angle: f64, reference: f64) -> f64 {
    let d = angle - reference;
    angle - 2.0 * PI * (d / (2.0 * PI)).round()
}

pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    for &a in angles {
        let v = match out.last() {
            Some(&prev) => unwrap_near(a, prev),
            None => a,
        };
        out.push(v);
    }
    out
}

/// Frequency in Hz of the washout filter state `x` tracking angle `theta`.
#[inline]
pub fn washout_hz(theta: f64, x: f64, tc: f64) -> f64 {
    F_NOMINAL_HZ + (theta - x) / tc / (2.0 * PI)
}

/// Frequency series for a uniformly sampled angle series.
///
/// The filter starts in steady state with the initial slope. Samples where
/// `v_mag` is below [`DEENERGIZED_PU`] hold the previous value and are
/// reported in the returned flag vector.
pub fn bus_frequency(dt: f64, angles: &[f64], v_mag: Option<&[f64]>, tc: f64) -> (Vec<f64>, Vec<bool>) {
    let n = angles.len();
    let th = unwrap_angles(angles);
    let mut f = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    if n == 0 {
        return (f, flags);
    }
    let dead = |k: usize| v_mag.is_some_and(|v| v[k] < DEENERGIZED_PU);
    let slope0 = if n > 1 { (th[1] - th[0]) / dt } else { 0.0 };
    let mut x = th[0] - tc * slope0;
    let mut y_held = th[0] - x;
    f.push(washout_hz(th[0], x, tc));
    flags.push(dead(0));
    let mut prev_dead = dead(0);
    for k in 1..n {
        if dead(k) || prev_dead {
            prev_dead = dead(k);
            // keep the filter output frozen while the angle is meaningless
            x = th[k] - y_held;
            f.push(washout_hz(th[k], x, tc));
            flags.push(prev_dead);
            continue;
        }
        // Heun with the angle interpolated linearly over the sample interval
        let d0 = (th[k - 1] - x) / tc;
        let x1 = x + dt * d0;
        let d1 = (th[k] - x1) / tc;
        x += 0.5 * dt * (d0 + d1);
        y_held = th[k] - x;
        f.push(washout_hz(th[k], x, tc));
        flags.push(false);
    }
    (f, flags)
}
