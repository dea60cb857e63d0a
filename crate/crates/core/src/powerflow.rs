//! Polar Newton-Raphson AC power flow with PV→PQ switching on reactive limits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::case::{build_ybus, BusKind, PowerFlowCase, SparseYbus};
use crate::error::{Error, Result};
use crate::linalg::Lu;

pub use crate::sim::flat_start::{check_flat_start, FlatStartReport};

#[derive(Debug, Clone, Copy)]
pub struct PowerFlowOptions {
    /// Mismatch tolerance in MVA.
    pub tol_mva: Option<f64>,
    pub max_iter: usize,
    pub enforce_q_limits: bool,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            tol_mva: None,
            max_iter: 30,
            enforce_q_limits: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub bus_ids: Vec<u32>,
    pub v_mag: Vec<f64>,
    pub v_angle: Vec<f64>,
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Buses switched from PV to PQ at a reactive limit.
    pub q_limited_buses: Vec<u32>,
}

impl PowerFlowSolution {
    pub fn voltages(&self) -> Vec<Complex64> {
        self.v_mag
            .iter()
            .zip(&self.v_angle)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    /// Write the operating point into the case's bus and generator records.
    pub fn apply_to(&self, case: &mut PowerFlowCase) {
        for (i, b) in case.buses.iter_mut().enumerate() {
            b.v_mag = self.v_mag[i];
            b.v_angle = self.v_angle[i];
        }
        for (k, g) in case.generators.iter_mut().enumerate() {
            g.p_mw = self.p_gen[k];
            g.q_mvar = self.q_gen[k];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Slack,
    Pv,
    Pq,
    /// PV bus held at a reactive limit; `true` for the upper limit.
    QLimited(bool),
}

/// Complex power injections `V ∘ conj(Y V)` in pu.
pub fn injections(y: &SparseYbus, v: &[Complex64]) -> Vec<Complex64> {
    y.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(i, v)| v * i.conj())
        .collect()
}

pub fn solve_powerflow(case: &PowerFlowCase) -> Result<PowerFlowSolution> {
    solve_powerflow_with(case, PowerFlowOptions::default())
}

pub fn solve_powerflow_with(case: &PowerFlowCase, opts: PowerFlowOptions) -> Result<PowerFlowSolution> {
    let n = case.buses.len();
    let sb = case.sbase_mva;
    let tol = opts.tol_mva.unwrap_or(1e-8 * sb) / sb;
    let y = build_ybus(case)?;
    let index = case.bus_index();
    let bus_of = |id: u32| index.get(&id).copied().ok_or(Error::UnknownBus(id));

    // scheduled injections and reactive capability per bus, pu
    let mut p_sched = vec![0.0; n];
    let mut q_sched = vec![0.0; n];
    let mut q_max = vec![0.0; n];
    let mut q_min = vec![0.0; n];
    let mut n_on = vec![0usize; n];
    let mut v_set: Vec<Option<f64>> = vec![None; n];
    for g in case.generators.iter().filter(|g| g.is_on()) {
        let i = bus_of(g.bus)?;
        p_sched[i] += g.p_mw / sb;
        q_sched[i] += g.q_mvar / sb;
        q_max[i] += g.q_max / sb;
        q_min[i] += g.q_min / sb;
        n_on[i] += 1;
        v_set[i].get_or_insert(g.v_setpoint);
    }
    let mut p_load = vec![0.0; n];
    let mut q_load = vec![0.0; n];
    for l in &case.loads {
        let i = bus_of(l.bus)?;
        p_load[i] += l.p_mw / sb;
        q_load[i] += l.q_mvar / sb;
    }

    let mut roles: Vec<Role> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| match b.kind {
            BusKind::Slack => Role::Slack,
            BusKind::Pv if n_on[i] > 0 => Role::Pv,
            _ => Role::Pq,
        })
        .collect();
    if !roles.contains(&Role::Slack) && n > 0 {
        return Err(Error::InvalidCase("no slack bus".into()));
    }

    let mut vm: Vec<f64> = case.buses.iter().map(|b| b.v_mag).collect();
    let mut va: Vec<f64> = case.buses.iter().map(|b| b.v_angle).collect();
    for i in 0..n {
        if matches!(roles[i], Role::Slack | Role::Pv) {
            if let Some(vs) = v_set[i] {
                vm[i] = vs;
            }
        }
    }

    let spec_q = |i: usize, role: Role| -> f64 {
        match role {
            Role::QLimited(true) => q_max[i] - q_load[i],
            Role::QLimited(false) => q_min[i] - q_load[i],
            _ => q_sched[i] - q_load[i],
        }
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut max_mis;
    loop {
        let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
        let s = injections(&y, &v);
        let ang: Vec<usize> = (0..n).filter(|&i| roles[i] != Role::Slack).collect();
        let mag: Vec<usize> = (0..n)
            .filter(|&i| matches!(roles[i], Role::Pq | Role::QLimited(_)))
            .collect();
        let mut f = Vec::with_capacity(ang.len() + mag.len());
        for &i in &ang {
            f.push(s[i].re - (p_sched[i] - p_load[i]));
        }
        for &i in &mag {
            f.push(s[i].im - spec_q(i, roles[i]));
        }
        max_mis = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        // reactive-limit switching once the solution is near
        let mut switched = false;
        if opts.enforce_q_limits && max_mis < 1e-3 {
            for i in 0..n {
                let q_gen = s[i].im + q_load[i];
                match roles[i] {
                    Role::Pv if q_gen > q_max[i] + tol => {
                        roles[i] = Role::QLimited(true);
                        switched = true;
                    }
                    Role::Pv if q_gen < q_min[i] - tol => {
                        roles[i] = Role::QLimited(false);
                        switched = true;
                    }
                    Role::QLimited(true) if vm[i] > v_set[i].unwrap_or(vm[i]) + 1e-12 => {
                        roles[i] = Role::Pv;
                        vm[i] = v_set[i].unwrap_or(vm[i]);
                        switched = true;
                    }
                    Role::QLimited(false) if vm[i] < v_set[i].unwrap_or(vm[i]) - 1e-12 => {
                        roles[i] = Role::Pv;
                        vm[i] = v_set[i].unwrap_or(vm[i]);
                        switched = true;
                    }
                    _ => {}
                }
            }
        }
        if switched {
            if iterations >= opts.max_iter {
                break;
            }
            continue;
        }
        if max_mis <= tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        let jac = jacobian(&y, &vm, &va, &s, &ang, &mag);
        let dim = ang.len() + mag.len();
        let lu = Lu::factor(dim, jac).map_err(|p| {
            let col = p.0;
            let bus = if col < ang.len() { ang[col] } else { mag[col - ang.len()] };
            Error::SingularJacobian {
                bus: case.buses[bus].id,
            }
        })?;
        let dx = lu.solve(&f);
        for (k, &i) in ang.iter().enumerate() {
            va[i] -= dx[k];
        }
        for (k, &i) in mag.iter().enumerate() {
            vm[i] -= dx[ang.len() + k];
        }
        iterations += 1;
    }

    // generator outputs
    let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
    let s = injections(&y, &v);
    let mut p_gen = vec![0.0; case.generators.len()];
    let mut q_gen = vec![0.0; case.generators.len()];
    for i in 0..n {
        let on: Vec<usize> = case
            .generators
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_on() && index[&g.bus] == i)
            .map(|(k, _)| k)
            .collect();
        if on.is_empty() {
            continue;
        }
        let mb: f64 = on.iter().map(|&k| case.generators[k].mbase).sum();
        let p_tot = (s[i].re + p_load[i]) * sb;
        let q_tot = (s[i].im + q_load[i]) * sb;
        for &k in &on {
            let g = &case.generators[k];
            let share = g.mbase / mb;
            p_gen[k] = if roles[i] == Role::Slack { p_tot * share } else { g.p_mw };
            q_gen[k] = if roles[i] == Role::Pq { g.q_mvar } else { q_tot * share };
        }
    }
    let q_limited_buses = (0..n)
        .filter(|&i| matches!(roles[i], Role::QLimited(_)))
        .map(|i| case.buses[i].id)
        .collect();

    Ok(PowerFlowSolution {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        v_mag: vm,
        v_angle: va,
        p_gen,
        q_gen,
        converged,
        iterations,
        max_mismatch: max_mis * sb,
        q_limited_buses,
    })
}

fn jacobian(
    y: &SparseYbus,
    vm: &[f64],
    va: &[f64],
    s: &[Complex64],
    ang: &[usize],
    mag: &[usize],
) -> Vec<f64> {
    let n = vm.len();
    let na = ang.len();
    let dim = na + mag.len();
    let mut col_ang = vec![usize::MAX; n];
    let mut col_mag = vec![usize::MAX; n];
    for (k, &i) in ang.iter().enumerate() {
        col_ang[i] = k;
    }
    for (k, &i) in mag.iter().enumerate() {
        col_mag[i] = na + k;
    }
    let mut row_p = vec![usize::MAX; n];
    let mut row_q = vec![usize::MAX; n];
    for (k, &i) in ang.iter().enumerate() {
        row_p[i] = k;
    }
    for (k, &i) in mag.iter().enumerate() {
        row_q[i] = na + k;
    }
    let mut j = vec![0.0; dim * dim];
    let mut set = |r: usize, c: usize, v: f64| {
        if r != usize::MAX && c != usize::MAX {
            j[r * dim + c] += v;
        }
    };
    for (i, k, yik) in y.iter() {
        let (g, b) = (yik.re, yik.im);
        if i == k {
            let (p, q) = (s[i].re, s[i].im);
            let v2 = vm[i] * vm[i];
            set(row_p[i], col_ang[i], -q - b * v2);
            set(row_p[i], col_mag[i], p / vm[i] + g * vm[i]);
            set(row_q[i], col_ang[i], p - g * v2);
            set(row_q[i], col_mag[i], q / vm[i] - b * vm[i]);
        } else {
            let th = va[i] - va[k];
            let (sn, cs) = th.sin_cos();
            let a = g * cs + b * sn;
            let c = g * sn - b * cs;
            set(row_p[i], col_ang[k], vm[i] * vm[k] * c);
            set(row_p[i], col_mag[k], vm[i] * a);
            set(row_q[i], col_ang[k], -vm[i] * vm[k] * a);
            set(row_q[i], col_mag[k], vm[i] * c);
        }
    }
    j
}
