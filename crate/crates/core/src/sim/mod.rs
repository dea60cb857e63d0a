//! Fixed-step time-domain simulation.
//!
//! Device states are integrated with Heun's method. At every stage the
//! network is solved for bus voltages: machines enter as Norton sources
//! behind their transient reactance, loads as constant admittances, and
//! converters as voltage-dependent current injections resolved by fixed-point
//! iteration against the factorized admittance matrix.

pub mod events;
pub mod flat_start;
pub mod frequency;
pub mod network;
pub mod result;
mod unit;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::case::{validate_case, BusKind, GenKey, PowerFlowCase};
use crate::error::{Error, Result};
use crate::powerflow::{solve_powerflow_with, PowerFlowOptions};
use events::{Event, EventKind, EventSchedule};
use frequency::{unwrap_near, washout_hz, DEENERGIZED_PU};
use network::Network;
use result::{EventLogEntry, Interval, SimMeta, SimulationResult, SolverStats};
use unit::{Model, Plant, Unit};

pub use crate::blocks::record::ResourceType;

const NETWORK_TOL: f64 = 1e-11;
const NETWORK_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Channel name patterns (`*` wildcard) to record.
    pub record_channels: Vec<String>,
    /// Bus-frequency filter time constant, s.
    pub freq_filter_tc: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: 0.005,
            t_end: 10.0,
            record_channels: vec!["*".into()],
            freq_filter_tc: 0.04,
        }
    }
}

impl SimOptions {
    pub fn with_t_end(t_end: f64) -> Self {
        SimOptions {
            t_end,
            ..SimOptions::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(Error::Config(format!("dt must be in (0, 0.01] s, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.freq_filter_tc > 0.0) {
            return Err(Error::Config("freq_filter_tc must be positive".into()));
        }
        Ok(())
    }
}

/// Network solution and state derivative at one evaluation point.
#[derive(Debug, Clone)]
struct Eval {
    v: Vec<Complex64>,
    dx: Vec<f64>,
    /// Shaft torques per unit, for units with a two-mass drive train.
    drive: Vec<Option<(f64, f64)>>,
    /// Dip-threshold margins per converter unit.
    margins: Vec<Option<f64>>,
}

impl Eval {
    fn modes(&self) -> Vec<Option<bool>> {
        self.margins.iter().map(|m| m.map(|g| g < 0.0)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Chan {
    BusV(usize),
    BusF(usize),
    P(usize),
    Q(usize),
    Angle(usize),
    State(usize),
}

/// An initialized dynamic case ready to be stepped.
#[derive(Debug, Clone)]
pub struct Simulation {
    opts: SimOptions,
    sbase: f64,
    net: Network,
    units: Vec<Unit>,
    plants: Vec<Plant>,
    state_names: Vec<String>,
    x: Vec<f64>,
    freq_off: usize,
    theta_ref: Vec<f64>,
    y_held: Vec<f64>,
    dead: Vec<bool>,
    slack_buses: Vec<usize>,
    v: Vec<Complex64>,
    stats: SolverStats,
    warnings: Vec<String>,
}

/// Solve the power flow, build all units and factor the augmented network.
pub fn initialize_simulation(case: &PowerFlowCase, opts: &SimOptions) -> Result<Simulation> {
    opts.check()?;
    let report = validate_case(case);
    if !report.is_ok() {
        return Err(Error::InvalidCase(report.render_text()));
    }
    let pf = solve_powerflow_with(
        case,
        PowerFlowOptions {
            tol_mva: Some(1e-10 * case.sbase_mva),
            max_iter: 50,
            enforce_q_limits: true,
        },
    )?;
    if !pf.converged {
        return Err(Error::PowerFlowNotConverged {
            iterations: pf.iterations,
            max_mismatch: pf.max_mismatch,
        });
    }
    let v0 = pf.voltages();
    let mut net = Network::new(case, &v0)?;
    let asm = unit::assemble(case, &v0, &pf.p_gen, &pf.q_gen, |b, y| net.add_norton(b, y))?;
    let n = net.dim();
    let mut x = asm.x0;
    let freq_off = x.len();
    x.extend(v0.iter().map(|v| v.arg()));
    let slack_buses = case
        .buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.kind == BusKind::Slack)
        .map(|(i, _)| i)
        .collect();
    let mut warnings = report.warnings.iter().map(|f| format!("{}: {}", f.object, f.message)).collect::<Vec<_>>();
    if !pf.q_limited_buses.is_empty() {
        warnings.push(format!("reactive limits bind at buses {:?}", pf.q_limited_buses));
    }
    let mut sim = Simulation {
        opts: opts.clone(),
        sbase: case.sbase_mva,
        net,
        units: asm.units,
        plants: asm.plants,
        state_names: asm.names,
        theta_ref: v0.iter().map(|v| v.arg()).collect(),
        y_held: vec![0.0; n],
        dead: vec![false; n],
        x,
        freq_off,
        slack_buses,
        v: v0,
        stats: SolverStats::default(),
        warnings,
    };
    let x = sim.x.clone();
    let v = sim.v.clone();
    let e = sim.eval(&x, &v, 0.0, None)?;
    sim.stats.init_max_derivative = e.dx.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    sim.v = e.v;
    Ok(sim)
}

impl Simulation {
    pub fn options(&self) -> &SimOptions {
        &self.opts
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    /// Names of all integrated states except the bus-frequency filters.
    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state(&self) -> &[f64] {
        &self.x[..self.freq_off]
    }

    /// Overwrite one named state (used for perturbation studies).
    pub fn set_state(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self
            .state_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("unknown state {name}")))?;
        self.x[i] = value;
        Ok(())
    }

    pub fn voltages(&self) -> &[Complex64] {
        &self.v
    }

    pub fn unit_keys(&self) -> Vec<GenKey> {
        self.units.iter().map(|u| u.key.clone()).collect()
    }

    pub fn resource_type(&self, key: &GenKey) -> Option<ResourceType> {
        self.units.iter().find(|u| &u.key == key).and_then(|u| u.resource())
    }

    /// Machine keys (classical and sources), in case order.
    pub fn machine_keys(&self) -> Vec<GenKey> {
        self.units.iter().filter(|u| !u.is_converter()).map(|u| u.key.clone()).collect()
    }

    pub fn bus_ids(&self) -> &[u32] {
        &self.net.bus_ids
    }

    /// Max-norm of the state derivative at the current state.
    pub fn max_derivative(&mut self) -> Result<f64> {
        let x = self.x.clone();
        let v = self.v.clone();
        let e = self.eval(&x, &v, 0.0, None)?;
        Ok(e.dx.iter().fold(0.0f64, |m, d| m.max(d.abs())))
    }

    /// Total current injected by all devices (system base), for bookkeeping.
    pub fn total_injection(&self) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for u in &self.units {
            s += u.terminal_power(&self.x, self.v[u.bus], self.sbase) * u.mbase / self.sbase;
        }
        s
    }

    fn network_solution(&mut self, x: &[f64], guess: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let n = self.net.dim();
        let mut i_src = vec![Complex64::new(0.0, 0.0); n];
        for u in self.units.iter().filter(|u| !u.is_converter()) {
            i_src[u.bus] += u.current(x, guess[u.bus], self.sbase);
        }
        let conv: Vec<&Unit> = self.units.iter().filter(|u| u.is_converter() && u.online).collect();
        let mut v = guess.to_vec();
        let mut iters = 0;
        loop {
            let mut i = i_src.clone();
            for u in &conv {
                i[u.bus] += u.current(x, v[u.bus], self.sbase);
            }
            let vn = self.net.solve(&i).map_err(|e| match e {
                Error::VoltageCollapse { bus, .. } => Error::VoltageCollapse { bus, time: t },
                other => other,
            })?;
            self.stats.network_solves += 1;
            iters += 1;
            let (worst, diff) = vn
                .iter()
                .zip(&v)
                .enumerate()
                .map(|(k, (a, b))| (k, (a - b).norm()))
                .fold((0, 0.0f64), |m, c| if c.1 > m.1 { c } else { m });
            if conv.is_empty() || diff < NETWORK_TOL {
                self.stats.max_network_iterations = self.stats.max_network_iterations.max(iters);
                return Ok(vn);
            }
            if !vn.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || iters >= NETWORK_MAX_ITER {
                return Err(Error::VoltageCollapse {
                    bus: self.net.bus_ids[worst],
                    time: t,
                });
            }
            if iters > 30 {
                for (a, b) in v.iter_mut().zip(&vn) {
                    *a += 0.5 * (b - *a);
                }
            } else {
                v = vn;
            }
        }
    }

    fn bus_frequency_hz(&self, x: &[f64], v: &[Complex64], bus: usize) -> f64 {
        let tc = self.opts.freq_filter_tc;
        if self.dead[bus] || v[bus].norm() < DEENERGIZED_PU {
            return washout_hz(self.y_held[bus], 0.0, tc);
        }
        let th = unwrap_near(v[bus].arg(), self.theta_ref[bus]);
        washout_hz(th, x[self.freq_off + bus], tc)
    }

    /// Network solution and derivatives at `x`. `modes` imposes converter
    /// dip modes; `None` lets each converter decide from its voltage.
    fn eval(&mut self, x: &[f64], guess: &[Complex64], t: f64, modes: Option<&[Option<bool>]>) -> Result<Eval> {
        let v = self.network_solution(x, guess, t)?;
        let mut dx = vec![0.0; x.len()];
        let mut refs: Vec<Option<(f64, f64)>> = vec![None; self.units.len()];
        for p in &self.plants {
            let f = self.bus_frequency_hz(x, &v, p.reg_bus);
            let out = p.evaluate(&self.units, x, &v, f, self.sbase, &mut dx).map_err(|e| match e {
                Error::NonFiniteInput(what) => Error::NonFinite {
                    channel: format!("{}.{what}", p.key),
                    time: t,
                },
                other => other,
            })?;
            for (u, r) in out {
                refs[u] = Some(r);
            }
        }
        let mut drive = vec![None; self.units.len()];
        let mut margins = vec![None; self.units.len()];
        for (k, u) in self.units.iter().enumerate() {
            let mode = modes.and_then(|m| m[k]);
            let ce = u
                .derivatives(x, v[u.bus], self.sbase, refs[k], mode, &mut dx)
                .map_err(|e| match e {
                Error::NonFiniteInput(what) => Error::NonFinite {
                    channel: format!("{}.{what}", u.key),
                    time: t,
                },
                    other => other,
                })?;
            drive[k] = ce.drive;
            margins[k] = ce.dip_margin;
        }
        let tc = self.opts.freq_filter_tc;
        for (i, vi) in v.iter().enumerate() {
            dx[self.freq_off + i] = if vi.norm() < DEENERGIZED_PU {
                0.0
            } else {
                (unwrap_near(vi.arg(), self.theta_ref[i]) - x[self.freq_off + i]) / tc
            };
        }
        Ok(Eval { v, dx, drive, margins })
    }

    fn step_drives(&self, x_old: &[f64], x_new: &mut [f64], h: f64, u0: &[Option<(f64, f64)>], u1: &[Option<(f64, f64)>]) {
        for (k, u) in self.units.iter().enumerate() {
            if let (Some(a), Some(b)) = (u0[k], u1[k]) {
                u.step_drive(x_old, x_new, h, a, b);
            }
        }
    }

    /// One Heun step of length `h` from `x0` with converter dip modes held
    /// fixed. Returns the new state and the predictor-stage evaluation.
    fn heun(&mut self, x0: &[f64], e0: &Eval, h: f64, t: f64, modes: &[Option<bool>]) -> Result<(Vec<f64>, Eval)> {
        let mut x1 = x0.to_vec();
        for (a, d) in x1.iter_mut().zip(&e0.dx) {
            *a += h * d;
        }
        self.step_drives(x0, &mut x1, h, &e0.drive, &e0.drive);
        self.apply_limits(&mut x1);
        let e1 = self.eval(&x1, &e0.v, t + h, Some(modes))?;
        let mut xn = x0.to_vec();
        for ((a, d0), d1) in xn.iter_mut().zip(&e0.dx).zip(&e1.dx) {
            *a += 0.5 * h * (d0 + d1);
        }
        self.step_drives(x0, &mut xn, h, &e0.drive, &e1.drive);
        self.apply_limits(&mut xn);
        if let Some(i) = xn.iter().position(|v| !v.is_finite()) {
            let channel = self
                .state_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("bus.{}.freq_filter", self.net.bus_ids[i - self.freq_off]));
            return Err(Error::NonFinite { channel, time: t + h });
        }
        Ok((xn, e1))
    }

    /// Advance the accepted state by one step. A converter entering or
    /// leaving its voltage-dip mode inside the step splits the step at the
    /// interpolated crossing, so the mode switch does not cost accuracy.
    fn advance(&mut self, cur: &Eval, t: f64) -> Result<Eval> {
        let dt = self.opts.dt;
        let x0 = self.x.clone();
        let m0 = cur.modes();
        let (xn, e1) = self.heun(&x0, cur, dt, t, &m0)?;
        let en = self.eval(&xn, &e1.v, t + dt, None)?;
        let mn = en.modes();
        if mn == m0 {
            self.x = xn;
            return Ok(en);
        }
        let mut s = 1.0f64;
        for k in 0..m0.len() {
            if let (true, Some(g0), Some(g1)) = (m0[k] != mn[k], cur.margins[k], en.margins[k]) {
                if g0 != g1 {
                    s = s.min((g0 / (g0 - g1)).clamp(0.0, 1.0));
                }
            }
        }
        let h1 = s * dt;
        let (xm, vm) = if h1 > 1e-9 * dt {
            let (xm, em) = self.heun(&x0, cur, h1, t, &m0)?;
            (xm, em.v)
        } else {
            (x0, cur.v.clone())
        };
        if dt - h1 <= 1e-9 * dt {
            self.x = xm;
            return self.eval(&self.x.clone(), &vm, t + dt, None);
        }
        let em = self.eval(&xm, &vm, t + h1, Some(&mn))?;
        let (xn, e1) = self.heun(&xm, &em, dt - h1, t + h1, &mn)?;
        self.stats.mode_switch_splits += 1;
        self.x = xn;
        let x = self.x.clone();
        self.eval(&x, &e1.v, t + dt, None)
    }

    fn apply_limits(&self, x: &mut [f64]) {
        for u in &self.units {
            u.apply_limits(x);
        }
        for p in &self.plants {
            p.apply_limits(x);
        }
    }

    /// Accept voltages at the current state: advance angle references and
    /// hold the frequency filters of de-energized buses. Returns whether any
    /// filter state was re-anchored.
    fn accept(&mut self, v: &[Complex64]) -> bool {
        let mut changed = false;
        for (i, vi) in v.iter().enumerate() {
            let th = unwrap_near(vi.arg(), self.theta_ref[i]);
            let dead = vi.norm() < DEENERGIZED_PU;
            let xf = &mut self.x[self.freq_off + i];
            if dead || self.dead[i] {
                *xf = th - self.y_held[i];
                changed = true;
            } else {
                self.y_held[i] = th - *xf;
            }
            self.theta_ref[i] = th;
            self.dead[i] = dead;
        }
        changed
    }

    fn apply_event(&mut self, e: &Event) -> Result<()> {
        match &e.kind {
            EventKind::BusFault { bus, .. } => {
                let i = self.net.bus(*bus)?;
                self.net.set_fault(i, e.fault_admittance().expect("bus fault"));
            }
            EventKind::ClearFault { bus } => {
                let i = self.net.bus(*bus)?;
                self.net.clear_fault(i);
            }
            EventKind::GeneratorOutage { bus, unit_id } => {
                let k = self.unit_index(*bus, unit_id)?;
                let u = &mut self.units[k];
                u.online = false;
                if let Some(slot) = u.norton_slot() {
                    self.net.remove_norton(slot);
                }
            }
            EventKind::FrequencyStep { bus, unit_id, df_hz } => {
                let k = self.unit_index(*bus, unit_id)?;
                match &mut self.units[k].model {
                    Model::Source { df_hz: d, .. } => *d = *df_hz,
                    _ => {
                        return Err(Error::Config(format!(
                            "frequency_step targets gen.{bus}.{unit_id}, which is not an infinite_source"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    fn unit_index(&self, bus: u32, unit_id: &str) -> Result<usize> {
        self.units
            .iter()
            .position(|u| u.key.bus == bus && u.key.unit_id == unit_id)
            .ok_or_else(|| Error::UnknownGenerator {
                bus,
                unit_id: unit_id.to_string(),
            })
    }

    fn check_events(&self, events: &EventSchedule) -> Result<()> {
        for e in &events.0 {
            match &e.kind {
                EventKind::BusFault { bus, .. } | EventKind::ClearFault { bus } => {
                    self.net.bus(*bus)?;
                }
                EventKind::GeneratorOutage { bus, unit_id } | EventKind::FrequencyStep { bus, unit_id, .. } => {
                    self.unit_index(*bus, unit_id)?;
                }
            }
        }
        Ok(())
    }

    fn channels(&self) -> Vec<(String, Chan)> {
        let mut all = Vec::new();
        for (i, id) in self.net.bus_ids.iter().enumerate() {
            all.push((format!("bus.{id}.v_pu"), Chan::BusV(i)));
            all.push((format!("bus.{id}.f_hz"), Chan::BusF(i)));
        }
        for (k, u) in self.units.iter().enumerate() {
            all.push((format!("{}.p_mw", u.key), Chan::P(k)));
            all.push((format!("{}.q_mvar", u.key), Chan::Q(k)));
            if !u.is_converter() {
                all.push((format!("{}.rotor_angle_deg", u.key), Chan::Angle(k)));
            }
        }
        for (i, n) in self.state_names.iter().enumerate() {
            all.push((n.clone(), Chan::State(i)));
        }
        all.into_iter()
            .filter(|(n, _)| self.opts.record_channels.iter().any(|p| result::glob_match(p, n)))
            .collect()
    }

    fn reference_angle(&self) -> Option<f64> {
        let online_machine = |u: &&Unit| u.online && !u.is_converter();
        self.units
            .iter()
            .filter(online_machine)
            .find(|u| self.slack_buses.contains(&u.bus))
            .or_else(|| self.units.iter().find(online_machine))
            .and_then(|u| u.rotor_angle(&self.x))
    }

    fn sample(&self, c: Chan, v: &[Complex64], ref_angle: Option<f64>) -> f64 {
        match c {
            Chan::BusV(i) => v[i].norm(),
            Chan::BusF(i) => self.bus_frequency_hz(&self.x, v, i),
            Chan::P(k) | Chan::Q(k) => {
                let u = &self.units[k];
                let s = u.terminal_power(&self.x, v[u.bus], self.sbase) * u.mbase;
                if matches!(c, Chan::P(_)) {
                    s.re
                } else {
                    s.im
                }
            }
            Chan::Angle(k) => {
                let u = &self.units[k];
                if !u.online {
                    return f64::NAN;
                }
                let a = u.rotor_angle(&self.x).unwrap_or(0.0) - ref_angle.unwrap_or(0.0);
                a * 180.0 / PI
            }
            Chan::State(i) => self.x[i],
        }
    }

    /// Run to `t_end`; any failure is an error.
    pub fn run(&mut self, events: &EventSchedule) -> Result<SimulationResult> {
        match self.run_partial(events)? {
            (r, None) => Ok(r),
            (_, Some(e)) => Err(e),
        }
    }

    /// Run to `t_end` applying `events`. A failure during stepping ends the
    /// run early: the samples so far are returned together with the error,
    /// which is also noted in `meta.aborted_at` / `meta.error`. Invalid event
    /// references are returned as errors before stepping.
    pub fn run_partial(&mut self, events: &EventSchedule) -> Result<(SimulationResult, Option<Error>)> {
        self.check_events(events)?;
        let dt = self.opts.dt;
        let n_steps = (self.opts.t_end / dt).round() as usize;
        let chans = self.channels();
        let mut time = Vec::with_capacity(n_steps + 1);
        let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps + 1); chans.len()];
        let mut log = Vec::new();
        let mut faults_open: Vec<(u32, f64)> = Vec::new();
        let mut fault_intervals = Vec::new();
        let mut dead_since: Vec<Option<f64>> = vec![None; self.net.dim()];
        let mut flagged = Vec::new();
        let mut warnings = self.warnings.clone();
        let mut pending: Vec<(usize, &Event)> = events
            .0
            .iter()
            .map(|e| ((e.time / dt).round() as usize, e))
            .collect();
        pending.sort_by_key(|p| p.0);
        for (k, e) in &pending {
            if *k > n_steps {
                warnings.push(format!("event at {} s is beyond t_end and was not applied", e.time));
            }
        }
        let mut next_event = 0;
        let mut aborted = None;

        let x = self.x.clone();
        let v = self.v.clone();
        let mut cur = self.eval(&x, &v, 0.0, None)?;
        self.accept(&cur.v.clone());

        for k in 0..=n_steps {
            let t = k as f64 * dt;
            let result: Result<()> = (|| {
                let mut applied = false;
                while next_event < pending.len() && pending[next_event].0 == k {
                    let e = pending[next_event].1;
                    self.apply_event(e)?;
                    log.push(EventLogEntry {
                        time: t,
                        requested_time: e.time,
                        description: e.describe(),
                    });
                    match &e.kind {
                        EventKind::BusFault { bus, .. } => faults_open.push((*bus, t)),
                        EventKind::ClearFault { bus } => {
                            if let Some(p) = faults_open.iter().position(|f| f.0 == *bus) {
                                let (b, s) = faults_open.remove(p);
                                fault_intervals.push(Interval {
                                    what: format!("bus.{b}"),
                                    start: s,
                                    end: t,
                                });
                            }
                        }
                        _ => {}
                    }
                    next_event += 1;
                    applied = true;
                }
                if applied {
                    let x = self.x.clone();
                    cur = self.eval(&x, &cur.v, t, None)?;
                    if self.accept(&cur.v.clone()) {
                        let x = self.x.clone();
                        cur = self.eval(&x, &cur.v, t, None)?;
                    }
                }
                Ok(())
            })();
            if let Err(e) = result {
                aborted = Some((t, e));
                break;
            }

            // record
            let ref_angle = self.reference_angle();
            time.push(t);
            for (j, (_, c)) in chans.iter().enumerate() {
                data[j].push(self.sample(*c, &cur.v, ref_angle));
            }
            for (i, d) in self.dead.iter().enumerate() {
                match (d, dead_since[i]) {
                    (true, None) => dead_since[i] = Some(t),
                    (false, Some(s)) => {
                        flagged.push(Interval {
                            what: format!("bus.{}.f_hz", self.net.bus_ids[i]),
                            start: s,
                            end: t - dt,
                        });
                        dead_since[i] = None;
                    }
                    _ => {}
                }
            }
            if k == n_steps {
                break;
            }

            let step = self.advance(&cur, t).and_then(|mut next| {
                if self.accept(&next.v.clone()) {
                    let x = self.x.clone();
                    next = self.eval(&x, &next.v, t + dt, None)?;
                }
                Ok(next)
            });
            match step {
                Ok(next) => {
                    self.stats.steps += 1;
                    cur = next;
                }
                Err(e) => {
                    aborted = Some((t + dt, e));
                    break;
                }
            }
        }
        self.v = cur.v.clone();

        let t_last = time.last().copied().unwrap_or(0.0);
        for (b, s) in faults_open {
            fault_intervals.push(Interval {
                what: format!("bus.{b}"),
                start: s,
                end: t_last,
            });
        }
        for (i, s) in dead_since.iter().enumerate() {
            if let Some(s) = s {
                flagged.push(Interval {
                    what: format!("bus.{}.f_hz", self.net.bus_ids[i]),
                    start: *s,
                    end: t_last,
                });
            }
        }
        flagged.sort_by(|a, b| a.what.cmp(&b.what).then(a.start.total_cmp(&b.start)));
        let mut stats = self.stats.clone();
        stats.factorizations = self.net.factorizations;
        let (aborted_at, error) = match aborted {
            Some((t, e)) => (Some(t), Some(e)),
            None => (None, None),
        };
        let r = SimulationResult {
            time,
            names: chans.into_iter().map(|(n, _)| n).collect(),
            data,
            meta: SimMeta {
                dt,
                t_end: self.opts.t_end,
                freq_filter_tc: self.opts.freq_filter_tc,
                integrator: "heun".into(),
                load_model: "constant_impedance".into(),
                events: log,
                fault_intervals,
                flagged,
                warnings,
                stats,
                aborted_at,
                error: error.as_ref().map(|e| e.to_string()),
            },
        };
        Ok((r, error))
    }
}

/// Initialize and run; an aborted run is returned as an error.
pub fn simulate(case: &PowerFlowCase, events: &EventSchedule, opts: &SimOptions) -> Result<SimulationResult> {
    initialize_simulation(case, opts)?.run(events)
}
