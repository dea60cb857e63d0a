//! Transient-stability metrics: minimum rotor-angle damping ratio (Mr),
//! post-event frequency extremes (Mf) and voltage nadir ratio (Mv).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, F_NOMINAL_HZ};
use crate::sim::result::SimulationResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsThresholds {
    pub mr_min: f64,
    pub mf_low: f64,
    pub mf_high: f64,
    pub mv_min: f64,
}

impl Default for MetricsThresholds {
    fn default() -> Self {
        MetricsThresholds {
            mr_min: 0.03,
            mf_low: 59.5,
            mf_high: 60.5,
            mv_min: 0.75,
        }
    }
}

impl MetricsThresholds {
    pub fn check(&self) -> Result<()> {
        if !(self.mf_low < F_NOMINAL_HZ && F_NOMINAL_HZ < self.mf_high) {
            return Err(Error::Config("frequency band must contain 60 Hz".into()));
        }
        if !(self.mv_min > 0.0 && self.mv_min < 1.0) {
            return Err(Error::Config("mv_min must be in (0, 1)".into()));
        }
        Ok(())
    }

    /// A non-positive `mr_min` disables the damping check.
    pub fn mr_passes(&self, zeta: f64) -> bool {
        self.mr_min <= 0.0 || zeta > self.mr_min
    }

    pub fn mf_passes(&self, lo: f64, hi: f64) -> bool {
        lo >= self.mf_low && hi <= self.mf_high
    }

    pub fn mv_passes(&self, ratio: f64) -> bool {
        ratio > self.mv_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsOptions {
    /// Start of the post-event window; `None` means last event + `settle_s`.
    pub window_start: Option<f64>,
    pub settle_s: f64,
    /// Oscillations below this (degrees) count as no oscillation.
    pub amplitude_floor_deg: f64,
    /// Shortest window accepted by the damping estimator, s.
    pub min_window_s: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            window_start: None,
            settle_s: 0.5,
            amplitude_floor_deg: 0.1,
            min_window_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingStatus {
    /// From at least one full-period peak pair.
    Estimated,
    /// Oscillation fell below the floor within one period; value is a lower bound.
    Bounded,
    /// No oscillation above the amplitude floor.
    FullyDamped,
    /// Window too short to see a full period of a visible oscillation.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingEstimate<T> {
    pub zeta: Option<T>,
    pub status: DampingStatus,
    pub peak_pairs: usize,
}

/// Damping ratio from a logarithmic decrement over one period.
pub fn zeta_from_decrement<T: Real>(delta: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    delta / (two_pi * two_pi + delta * delta).sqrt()
}

/// Turning points of `y` ignoring reversals smaller than `delta`; each is
/// refined by a parabola through the neighbouring samples.
pub fn turning_points<T: Real>(t: &[T], y: &[T], delta: T) -> Vec<(T, T)> {
    let n = y.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    // direction: None until the signal has moved by `delta` from the start
    let mut rising: Option<bool> = None;
    let (mut lo, mut hi) = (0usize, 0usize);
    for k in 1..n {
        if y[k] > y[hi] {
            hi = k;
        }
        if y[k] < y[lo] {
            lo = k;
        }
        match rising {
            None => {
                if y[hi] - y[lo] > delta {
                    rising = Some(hi > lo);
                    if hi > lo {
                        lo = k;
                    } else {
                        hi = k;
                    }
                }
            }
            Some(true) => {
                if y[hi] - y[k] > delta {
                    if hi > 0 {
                        out.push(refine(t, y, hi));
                    }
                    rising = Some(false);
                    lo = k;
                }
            }
            Some(false) => {
                if y[k] - y[lo] > delta {
                    if lo > 0 {
                        out.push(refine(t, y, lo));
                    }
                    rising = Some(true);
                    hi = k;
                }
            }
        }
        if rising == Some(true) && y[k] < y[lo] {
            lo = k;
        }
        if rising == Some(false) && y[k] > y[hi] {
            hi = k;
        }
    }
    out
}

fn refine<T: Real>(t: &[T], y: &[T], k: usize) -> (T, T) {
    if k == 0 || k + 1 >= y.len() {
        return (t[k], y[k]);
    }
    let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
    let den = a - T::lit(2.0) * b + c;
    if den == T::zero() {
        return (t[k], b);
    }
    let p = T::lit(0.5) * (a - c) / den;
    let h = t[k + 1] - t[k];
    (t[k] + p * h, b - T::lit(0.25) * (a - c) * p)
}

/// Turning points closer than this fraction of the floor are treated as noise.
pub const HYSTERESIS_FRACTION: f64 = 0.1;

/// Log-decrement damping of one channel.
///
/// The channel is detrended by its final value. Successive turning points
/// alternate in sign, so swings `|e[k+1] - e[k]|` two apart are one period
/// apart and their ratio is the same-sign peak decrement, free of any
/// residual offset. A pair is used when its first swing reaches twice the
/// floor (peak amplitude at the floor or above).
pub fn log_decrement_damping<T: Real>(t: &[T], y: &[T], floor: T) -> DampingEstimate<T> {
    let n = y.len();
    let done = |status| DampingEstimate {
        zeta: Some(T::one()),
        status,
        peak_pairs: 0,
    };
    if n < 3 {
        return done(DampingStatus::FullyDamped);
    }
    let last = y[n - 1];
    let amp = y.iter().fold(T::zero(), |m, &v| m.max((v - last).abs()));
    if amp < floor {
        return done(DampingStatus::FullyDamped);
    }
    let hyst = floor * T::lit(HYSTERESIS_FRACTION);
    let tp = turning_points(t, y, hyst);
    let swings: Vec<T> = tp.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let min_swing = T::lit(2.0) * floor;
    let Some(first) = swings.iter().position(|&s| s >= min_swing) else {
        return done(DampingStatus::FullyDamped);
    };
    let mut sum = T::zero();
    let mut pairs = 0;
    for k in first..swings.len().saturating_sub(2) {
        if swings[k] < min_swing {
            break;
        }
        sum = sum + zeta_from_decrement((swings[k] / swings[k + 2]).ln());
        pairs += 1;
    }
    if pairs > 0 {
        return DampingEstimate {
            zeta: Some(sum / T::from_usize(pairs).expect("small count")),
            status: DampingStatus::Estimated,
            peak_pairs: pairs,
        };
    }
    // a visible swing with no turning point a period later: the reversal
    // stayed under the hysteresis, which bounds the decrement from below,
    // provided the window actually covers that period
    let period = T::lit(2.0) * (tp[first + 1].0 - tp[first].0);
    if t[n - 1] - tp[first].0 >= period {
        let bound = zeta_from_decrement((swings[first] / hyst).ln().max(T::zero()));
        return DampingEstimate {
            zeta: Some(bound),
            status: DampingStatus::Bounded,
            peak_pairs: 0,
        };
    }
    DampingEstimate {
        zeta: None,
        status: DampingStatus::Indeterminate,
        peak_pairs: 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDamping {
    pub channel: String,
    pub zeta: Option<f64>,
    pub status: DampingStatus,
    pub peak_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingReport {
    /// `None` when the worst channel is indeterminate.
    pub value: Option<f64>,
    pub status: DampingStatus,
    pub worst: Option<String>,
    pub channels: Vec<ChannelDamping>,
}

fn window_range(result: &SimulationResult, start: f64) -> Result<std::ops::Range<usize>> {
    let t_end = result.time.last().copied().unwrap_or(0.0);
    if start > t_end || !start.is_finite() {
        return Err(Error::Metrics(format!("window start {start} s is beyond the end of the run ({t_end} s)")));
    }
    let i0 = result.time.partition_point(|&t| t < start - 1e-9);
    Ok(i0..result.time.len())
}

fn generator_of(channel: &str) -> String {
    channel.rsplit_once('.').map(|(g, _)| g.to_string()).unwrap_or_default()
}

/// Minimum damping ratio over all `*.rotor_angle_deg` channels. Channels
/// with missing samples in the window (unit offline) are skipped.
pub fn damping_ratio_min(result: &SimulationResult, window_start: f64, opts: &MetricsOptions) -> Result<DampingReport> {
    let r = window_range(result, window_start)?;
    let len = result.time[r.end - 1] - result.time[r.start];
    if len + 1e-9 < opts.min_window_s {
        return Err(Error::Metrics(format!(
            "damping window is {len:.3} s, shorter than {} s",
            opts.min_window_s
        )));
    }
    let t = &result.time[r.clone()];
    let mut channels = Vec::new();
    for (name, d) in result.channels_matching("*.rotor_angle_deg") {
        let y = &d[r.clone()];
        if y.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let e = log_decrement_damping(t, y, opts.amplitude_floor_deg);
        channels.push(ChannelDamping {
            channel: generator_of(name),
            zeta: e.zeta,
            status: e.status,
            peak_pairs: e.peak_pairs,
        });
    }
    if channels.is_empty() {
        return Err(Error::Metrics("no rotor-angle channels (pattern *.rotor_angle_deg)".into()));
    }
    let worst = channels
        .iter()
        .min_by(|a, b| match (a.zeta, b.zeta) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, _) => std::cmp::Ordering::Less,
            (_, None) => std::cmp::Ordering::Greater,
            (Some(x), Some(y)) => x.total_cmp(&y),
        })
        .expect("non-empty");
    Ok(DampingReport {
        value: worst.zeta,
        status: worst.status,
        worst: Some(worst.channel.clone()),
        channels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyExtremes {
    pub min_hz: f64,
    pub max_hz: f64,
    /// Bus with the largest deviation from nominal.
    pub worst: String,
    pub min_bus: String,
    pub max_bus: String,
}

fn bus_of(channel: &str) -> String {
    channel.split('.').take(2).collect::<Vec<_>>().join(".")
}

/// Extremes of all `bus.*.f_hz` channels in `[window_start, t_end]`,
/// skipping flagged samples.
pub fn frequency_extremes(result: &SimulationResult, window_start: f64) -> Result<FrequencyExtremes> {
    let r = window_range(result, window_start)?;
    let mut lo = (f64::INFINITY, String::new());
    let mut hi = (f64::NEG_INFINITY, String::new());
    let mut seen = false;
    for (name, d) in result.channels_matching("bus.*.f_hz") {
        let mask = result.flag_mask(name);
        for k in r.clone() {
            if mask[k] || !d[k].is_finite() {
                continue;
            }
            seen = true;
            if d[k] < lo.0 {
                lo = (d[k], bus_of(name));
            }
            if d[k] > hi.0 {
                hi = (d[k], bus_of(name));
            }
        }
    }
    if !seen {
        return Err(Error::Metrics(
            "no usable bus-frequency samples (pattern bus.*.f_hz) in the window".into(),
        ));
    }
    let worst = if F_NOMINAL_HZ - lo.0 >= hi.0 - F_NOMINAL_HZ { lo.1.clone() } else { hi.1.clone() };
    Ok(FrequencyExtremes {
        min_hz: lo.0,
        max_hz: hi.0,
        worst,
        min_bus: lo.1,
        max_bus: hi.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NadirReport {
    pub ratio: f64,
    pub worst: Option<String>,
    pub warnings: Vec<String>,
}

/// Minimum over buses of (post-event voltage nadir) / V(0). Samples taken
/// while any fault is applied are skipped.
pub fn voltage_nadir_ratio(result: &SimulationResult) -> Result<NadirReport> {
    let mut rep = NadirReport {
        ratio: 1.0,
        worst: None,
        warnings: vec![],
    };
    let Some(t0) = result.meta.first_event_time() else {
        return Ok(rep);
    };
    let faulted = |t: f64| {
        result
            .meta
            .fault_intervals
            .iter()
            .any(|i| t >= i.start - 1e-9 && t < i.end - 1e-9)
    };
    let mut any = false;
    for (name, d) in result.channels_matching("bus.*.v_pu") {
        any = true;
        let Some(&v0) = d.first() else { continue };
        if !(v0 >= 0.01) {
            rep.warnings.push(format!("{}: pre-event voltage {v0} pu, bus excluded", bus_of(name)));
            continue;
        }
        for (k, &t) in result.time.iter().enumerate() {
            if t < t0 - 1e-9 || faulted(t) || !d[k].is_finite() {
                continue;
            }
            let ratio = d[k] / v0;
            if ratio < rep.ratio {
                rep.ratio = ratio;
                rep.worst = Some(bus_of(name));
            }
        }
    }
    if !any {
        return Err(Error::Metrics("no bus-voltage channels (pattern bus.*.v_pu)".into()));
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrEntry {
    pub value: Option<f64>,
    pub status: DampingStatus,
    pub worst: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfEntry {
    pub min: f64,
    pub max: f64,
    pub worst: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvEntry {
    pub value: f64,
    pub worst: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mr: MrEntry,
    pub mf: MfEntry,
    pub mv: MvEntry,
    pub pass: bool,
    pub window: (f64, f64),
    pub thresholds: MetricsThresholds,
    /// Estimator choices, recorded so reports are self-describing.
    pub method: serde_json::Value,
    pub damping: Vec<ChannelDamping>,
    pub warnings: Vec<String>,
}

/// Post-event window start used when none is given.
pub fn default_window_start(result: &SimulationResult, opts: &MetricsOptions) -> f64 {
    match opts.window_start {
        Some(s) => s,
        None => result.meta.last_event_time().map_or(0.0, |t| t + opts.settle_s),
    }
}

pub fn evaluate(result: &SimulationResult, thresholds: &MetricsThresholds, opts: &MetricsOptions) -> Result<MetricsReport> {
    thresholds.check()?;
    let start = default_window_start(result, opts);
    if let Some(last) = result.meta.last_event_time() {
        if start < last - 1e-9 {
            return Err(Error::Metrics(format!("window start {start} s precedes the last event at {last} s")));
        }
    }
    let t_end = result.time.last().copied().unwrap_or(0.0);
    let d = damping_ratio_min(result, start, opts)?;
    let f = frequency_extremes(result, start)?;
    let v = voltage_nadir_ratio(result)?;
    let mr_pass = thresholds.mr_min <= 0.0 || d.value.is_some_and(|z| thresholds.mr_passes(z));
    let mf_pass = thresholds.mf_passes(f.min_hz, f.max_hz);
    let mv_pass = thresholds.mv_passes(v.ratio);
    Ok(MetricsReport {
        mr: MrEntry {
            value: d.value,
            status: d.status,
            worst: d.worst,
            pass: mr_pass,
        },
        mf: MfEntry {
            min: f.min_hz,
            max: f.max_hz,
            worst: f.worst,
            pass: mf_pass,
        },
        mv: MvEntry {
            value: v.ratio,
            worst: v.worst,
            pass: mv_pass,
        },
        pass: mr_pass && mf_pass && mv_pass,
        window: (start, t_end),
        thresholds: *thresholds,
        method: serde_json::json!({
            "damping": "log decrement over one-period swing pairs, parabolic peak refinement",
            "amplitude_floor_deg": opts.amplitude_floor_deg,
            "settle_s": opts.settle_s,
            "voltage_window": "from first event, fault-on samples skipped",
        }),
        damping: d.channels,
        warnings: v.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::result::{EventLogEntry, Interval, SimMeta, SolverStats};
    use proptest::prelude::*;

    fn ringdown(zeta: f64, fd: f64, amp: f64, dt: f64, t_end: f64) -> (Vec<f64>, Vec<f64>) {
        let wd = 2.0 * std::f64::consts::PI * fd;
        let wn = wd / (1.0 - zeta * zeta).sqrt();
        let t: Vec<f64> = (0..=(t_end / dt).round() as usize).map(|k| k as f64 * dt).collect();
        let y = t.iter().map(|&t| amp * (-zeta * wn * t).exp() * (wd * t).cos()).collect();
        (t, y)
    }

    fn meta(events: &[f64]) -> SimMeta {
        SimMeta {
            dt: 0.005,
            t_end: 0.0,
            freq_filter_tc: 0.04,
            integrator: "heun".into(),
            load_model: "constant_impedance".into(),
            events: events
                .iter()
                .map(|&t| EventLogEntry {
                    time: t,
                    requested_time: t,
                    description: "test".into(),
                })
                .collect(),
            fault_intervals: vec![],
            flagged: vec![],
            warnings: vec![],
            stats: SolverStats::default(),
            aborted_at: None,
            error: None,
        }
    }

    fn result(time: Vec<f64>, chans: Vec<(&str, Vec<f64>)>, events: &[f64]) -> SimulationResult {
        let mut m = meta(events);
        m.t_end = *time.last().unwrap();
        SimulationResult {
            time,
            names: chans.iter().map(|c| c.0.to_string()).collect(),
            data: chans.into_iter().map(|c| c.1).collect(),
            meta: m,
        }
    }

    #[test]
    fn decrement_formula_inverts_known_damping() {
        for z in [0.02, 0.05, 0.1, 0.2, 0.5] {
            let delta = 2.0 * std::f64::consts::PI * z / (1.0f64 - z * z).sqrt();
            assert!((zeta_from_decrement(delta) - z).abs() < 1e-12);
        }
    }

    #[test]
    fn constructed_ringdowns_recover_damping() {
        for z in [0.02, 0.05, 0.1, 0.2] {
            let (t, y) = ringdown(z, 1.0, 10.0, 0.005, 10.0);
            let e = log_decrement_damping(&t, &y, 0.1);
            assert_eq!(e.status, DampingStatus::Estimated);
            let got = e.zeta.unwrap();
            assert!((got - z).abs() < 0.005, "{z}: {got}");
        }
    }

    #[test]
    fn estimator_works_in_single_precision() {
        let (t, y) = ringdown(0.05, 1.0, 10.0, 0.005, 10.0);
        let t: Vec<f32> = t.iter().map(|&v| v as f32).collect();
        let y: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let z = log_decrement_damping(&t, &y, 0.1f32).zeta.unwrap();
        assert!((z - 0.05).abs() < 0.005, "{z}");
    }

    #[test]
    fn undamped_sinusoid_fails_threshold() {
        let (t, y) = ringdown(0.0, 1.0, 5.0, 0.005, 10.0);
        let z = log_decrement_damping(&t, &y, 0.1).zeta.unwrap();
        assert!(z.abs() < 0.005, "{z}");
        assert!(!MetricsThresholds::default().mr_passes(z));
    }

    #[test]
    fn flat_and_tiny_channels_are_fully_damped() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 0.005).collect();
        let flat = vec![12.0; t.len()];
        let e = log_decrement_damping(&t, &flat, 0.1);
        assert_eq!((e.zeta, e.status), (Some(1.0), DampingStatus::FullyDamped));
        let (t, y) = ringdown(0.0, 1.0, 0.04, 0.005, 10.0);
        assert_eq!(log_decrement_damping(&t, &y, 0.1).status, DampingStatus::FullyDamped);
    }

    #[test]
    fn short_window_with_visible_swing_is_indeterminate() {
        // one half-period of a slow 0.2 Hz swing
        let (t, y) = ringdown(0.0, 0.2, 5.0, 0.005, 3.0);
        let y: Vec<f64> = y.iter().map(|v| -v).collect();
        let e = log_decrement_damping(&t, &y, 0.1);
        assert!(e.status == DampingStatus::FullyDamped || e.status == DampingStatus::Indeterminate);
        let (t, y) = ringdown(0.0, 0.4, 5.0, 0.005, 3.0);
        assert_eq!(log_decrement_damping(&t, &y, 0.1).status, DampingStatus::Indeterminate);
    }

    #[test]
    fn single_cycle_then_flat_gives_a_lower_bound() {
        let t: Vec<f64> = (0..1200).map(|k| k as f64 * 0.005).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| if t < 1.0 { (2.0 * std::f64::consts::PI * t).sin() } else { 0.0 })
            .collect();
        let e = log_decrement_damping(&t, &y, 0.1);
        assert_eq!(e.status, DampingStatus::Bounded);
        let want = zeta_from_decrement((2.0f64 / 0.01).ln());
        assert!((e.zeta.unwrap() - want).abs() < 1e-3, "{:?}", e.zeta);
    }

    #[test]
    fn heavy_damping_is_still_estimated() {
        let (t, y) = ringdown(0.4, 1.0, 5.0, 0.005, 6.0);
        let e = log_decrement_damping(&t, &y, 0.1);
        assert_eq!(e.status, DampingStatus::Estimated);
        assert!((e.zeta.unwrap() - 0.4).abs() < 0.01, "{:?}", e.zeta);
    }

    #[test]
    fn offset_does_not_bias_the_estimate() {
        let (t, y) = ringdown(0.02, 1.0, 10.0, 0.005, 10.0);
        let y: Vec<f64> = y.iter().map(|v| v + 3.7).collect();
        let z = log_decrement_damping(&t, &y, 0.1).zeta.unwrap();
        assert!((z - 0.02).abs() < 0.005);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn estimator_is_scale_invariant(z in 0.02f64..0.2, c in 0.05f64..50.0, fd in 0.5f64..2.0) {
            let (t, y) = ringdown(z, fd, 20.0, 0.005, 10.0);
            let a = log_decrement_damping(&t, &y, 0.1).zeta.unwrap();
            let y2: Vec<f64> = y.iter().map(|v| v * c).collect();
            // compare on pairs that both see: rescale the floor with the signal
            let b = log_decrement_damping(&t, &y2, 0.1 * c).zeta.unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            prop_assert!((a - z).abs() <= 0.01);
        }

        #[test]
        fn frequency_extremes_ignore_time_order(v in proptest::collection::vec(59.0f64..61.0, 10..60)) {
            let n = v.len();
            let t: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
            let a = frequency_extremes(&result(t.clone(), vec![("bus.1.f_hz", v.clone())], &[]), 0.0).unwrap();
            let mut r = v.clone();
            r.reverse();
            let b = frequency_extremes(&result(t, vec![("bus.1.f_hz", r)], &[]), 0.0).unwrap();
            prop_assert_eq!((a.min_hz, a.max_hz), (b.min_hz, b.max_hz));
        }

        #[test]
        fn nadir_ratio_at_most_one_when_start_is_max(v in proptest::collection::vec(0.2f64..1.0, 5..50)) {
            let mut v = v;
            v[0] = 1.0;
            let t: Vec<f64> = (0..v.len()).map(|k| k as f64 * 0.01).collect();
            let r = voltage_nadir_ratio(&result(t, vec![("bus.1.v_pu", v)], &[0.0])).unwrap();
            prop_assert!(r.ratio <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn event_free_frequency_is_nominal() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let f = frequency_extremes(&result(t.clone(), vec![("bus.1.f_hz", vec![60.0; 100])], &[]), 0.0).unwrap();
        assert!((f.min_hz - 60.0).abs() < 1e-4 && (f.max_hz - 60.0).abs() < 1e-4);
        assert!(MetricsThresholds::default().mf_passes(f.min_hz, f.max_hz));
    }

    #[test]
    fn frequency_dip_to_59_4_fails() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let mut dip = vec![60.0; 100];
        dip[50] = 59.4;
        let r = result(t, vec![("bus.1.f_hz", vec![60.0; 100]), ("bus.2.f_hz", dip)], &[]);
        let f = frequency_extremes(&r, 0.0).unwrap();
        assert_eq!((f.min_hz, f.worst.as_str()), (59.4, "bus.2"));
        assert!(!MetricsThresholds::default().mf_passes(f.min_hz, f.max_hz));
        assert!(MetricsThresholds::default().mf_passes(59.5, 60.5));
    }

    #[test]
    fn flagged_frequency_samples_are_skipped() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let mut spike = vec![60.0; 100];
        spike[40] = 75.0;
        spike[41] = 40.0;
        let mut r = result(t, vec![("bus.3.f_hz", spike)], &[]);
        r.meta.flagged.push(Interval {
            what: "bus.3.f_hz".into(),
            start: 0.40,
            end: 0.41,
        });
        let f = frequency_extremes(&r, 0.0).unwrap();
        assert_eq!((f.min_hz, f.max_hz), (60.0, 60.0));
        r.meta.flagged[0] = Interval {
            what: "bus.3.f_hz".into(),
            start: 0.0,
            end: 1.0,
        };
        assert!(frequency_extremes(&r, 0.0).is_err());
    }

    #[test]
    fn nadir_cases() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let r = result(t.clone(), vec![("bus.1.v_pu", vec![1.0; 100])], &[]);
        assert_eq!(voltage_nadir_ratio(&r).unwrap().ratio, 1.0);

        let mut v = vec![1.0; 100];
        v[60] = 0.70;
        let r = result(t.clone(), vec![("bus.1.v_pu", v)], &[0.5]);
        let n = voltage_nadir_ratio(&r).unwrap();
        assert!((n.ratio - 0.70).abs() < 1e-12);
        assert!(!MetricsThresholds::default().mv_passes(n.ratio));

        // bolted fault 0.5..0.55 then recovery through 0.9
        let v: Vec<f64> = t
            .iter()
            .map(|&t| if (0.5..0.55).contains(&t) { 0.0 } else if t < 0.5 { 1.0 } else { 0.9 + 0.1 * (t - 0.55) })
            .collect();
        let mut r = result(t.clone(), vec![("bus.4.v_pu", v)], &[0.5, 0.55]);
        r.meta.fault_intervals.push(Interval {
            what: "bus.4".into(),
            start: 0.5,
            end: 0.55,
        });
        let n = voltage_nadir_ratio(&r).unwrap();
        assert!((n.ratio - 0.9).abs() < 1e-9, "{}", n.ratio);
        assert!(MetricsThresholds::default().mv_passes(n.ratio));

        let r = result(t, vec![("bus.1.v_pu", vec![0.0; 100]), ("bus.2.v_pu", vec![1.0; 100])], &[0.5]);
        let n = voltage_nadir_ratio(&r).unwrap();
        assert_eq!(n.warnings.len(), 1);
        assert_eq!(n.ratio, 1.0);
    }

    fn full(zeta: f64) -> SimulationResult {
        let (t, y) = ringdown(zeta, 1.0, 10.0, 0.005, 10.0);
        let t: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        let n = t.len();
        let mut tt = vec![0.0];
        tt.extend(t);
        let mut y2 = vec![y[0]];
        y2.extend(y);
        result(
            tt,
            vec![
                ("bus.1.v_pu", vec![1.0; n + 1]),
                ("bus.1.f_hz", vec![60.0; n + 1]),
                ("gen.1.1.rotor_angle_deg", vec![0.0; n + 1]),
                ("gen.2.1.rotor_angle_deg", y2),
            ],
            &[0.5],
        )
    }

    #[test]
    fn evaluate_names_undamped_generator() {
        let th = MetricsThresholds::default();
        let opts = MetricsOptions {
            window_start: Some(1.0),
            ..Default::default()
        };
        let rep = evaluate(&full(0.0), &th, &opts).unwrap();
        assert!(!rep.mr.pass && !rep.pass);
        assert_eq!(rep.mr.worst.as_deref(), Some("gen.2.1"));
        assert!(rep.mf.pass && rep.mv.pass);
        let rep = evaluate(&full(0.1), &th, &opts).unwrap();
        assert!(rep.pass);
        let zero = MetricsThresholds { mr_min: 0.0, ..th };
        assert!(evaluate(&full(0.0), &zero, &opts).unwrap().mr.pass);
    }

    #[test]
    fn thresholds_are_strict_where_published() {
        let th = MetricsThresholds::default();
        assert!(!th.mr_passes(0.03) && th.mr_passes(0.0301));
        assert!(!th.mv_passes(0.75) && th.mv_passes(0.7501));
        assert!(th.mf_passes(59.5, 60.5) && !th.mf_passes(59.4999, 60.0) && !th.mf_passes(60.0, 60.5001));
        assert!(MetricsThresholds { mf_low: 60.1, ..th }.check().is_err());
    }

    #[test]
    fn window_errors() {
        let r = full(0.05);
        let late = MetricsOptions {
            window_start: Some(100.0),
            ..Default::default()
        };
        assert!(evaluate(&r, &MetricsThresholds::default(), &late).is_err());
        let early = MetricsOptions {
            window_start: Some(0.1),
            ..Default::default()
        };
        assert!(evaluate(&r, &MetricsThresholds::default(), &early).is_err());
        let short = MetricsOptions {
            window_start: Some(8.0),
            ..Default::default()
        };
        assert!(evaluate(&r, &MetricsThresholds::default(), &short).is_err());
    }
}
