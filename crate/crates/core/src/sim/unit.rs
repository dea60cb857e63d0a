//! Dynamic units bound to generators: model-set checks, equilibrium
//! initialization and per-unit derivative evaluation over a flat state vector.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::blocks::classical::{
    classical_derivatives, classical_initialize, source_angle_rate, ClassicalParams, ClassicalState,
    InfiniteSourceParams,
};
use crate::blocks::record::{DynamicRecord, ModelName, ModelParams, ResourceType};
use crate::blocks::reec::{reec_apply_limits, reec_dip_margin, reec_initialize, reec_update_in_mode, ReecInputs, ReecParams, ReecRefs, ReecState};
use crate::blocks::regc::{regc_derivatives, regc_initialize, regc_injection, RegcParams, RegcState};
use crate::blocks::repc::{
    dispatch_shares, repc_dispatch, repc_initialize, repc_update, DispatchShare, RepcInputs, RepcParams, RepcRefs,
    RepcState,
};
use crate::blocks::wtga::{wtga_power, WtgaParams};
use crate::blocks::wtgp::{wtgp_apply_limits, wtgp_derivatives, wtgp_initialize, WtgpInputs, WtgpParams, WtgpState};
use crate::blocks::wtgq::{wtgq_derivatives, wtgq_equilibrium_speed, wtgq_initialize, WtgqParams, WtgqState};
use crate::blocks::wtgt::{wtgt_derivatives, wtgt_initialize, wtgt_trapezoid_step, WtgtParams, WtgtState};
use crate::case::{Fuel, GenKey, PowerFlowCase};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct WindControls {
    pub wtga: WtgaParams,
    pub wtgp: WtgpParams,
    pub wtgq: WtgqParams,
    pub p_m0: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Converter {
    pub regc: RegcParams,
    pub reec: ReecParams,
    pub reec_refs: ReecRefs,
    pub drive: Option<WtgtParams>,
    pub wind: Option<WindControls>,
    /// Initial terminal power, pu on the unit base.
    pub p0: f64,
    pub q0: f64,
}

impl Converter {
    pub fn resource(&self) -> ResourceType {
        match (&self.wind, &self.drive) {
            (Some(_), _) => ResourceType::Type3,
            (None, Some(_)) => ResourceType::Type4,
            _ => ResourceType::Pv,
        }
    }

    // offsets relative to the unit's block of states
    const REGC: usize = 0;
    const REEC: usize = RegcState::<f64>::LEN;
    const WTGT: usize = Self::REEC + ReecState::<f64>::LEN;
    const WTGP: usize = Self::WTGT + WtgtState::<f64>::LEN;
    const WTGQ: usize = Self::WTGP + WtgpState::<f64>::LEN;

    fn len(&self) -> usize {
        match self.resource() {
            ResourceType::Pv => Self::WTGT,
            ResourceType::Type4 => Self::WTGP,
            ResourceType::Type3 => Self::WTGQ + WtgqState::<f64>::LEN,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Model {
    Machine {
        params: ClassicalParams,
        e_mag: f64,
        p_m: f64,
        y_sys: Complex64,
        slot: usize,
    },
    Source {
        e_mag: f64,
        y_sys: Complex64,
        slot: usize,
        df_hz: f64,
    },
    Converter(Box<Converter>),
}

#[derive(Debug, Clone)]
pub(crate) struct Unit {
    pub key: GenKey,
    pub bus: usize,
    pub mbase: f64,
    pub model: Model,
    pub online: bool,
    pub plant: Option<usize>,
    pub off: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Plant {
    pub key: GenKey,
    pub params: RepcParams,
    pub refs: RepcRefs,
    pub members: Vec<usize>,
    pub shares: Vec<DispatchShare>,
    pub plant_base: f64,
    pub reg_bus: usize,
    pub off: usize,
}

/// Converter outputs at one evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ConverterEval {
    /// Signed distance from the electrical-control dip thresholds.
    pub dip_margin: Option<f64>,
    pub curve_clamped: bool,
    /// Mechanical and electrical torque on a two-mass shaft.
    pub drive: Option<(f64, f64)>,
}

pub(crate) struct Assembly {
    pub units: Vec<Unit>,
    pub plants: Vec<Plant>,
    pub x0: Vec<f64>,
    pub names: Vec<String>,
}

fn config(msg: String) -> Error {
    Error::Config(msg)
}

fn init_err(key: &GenKey, model: ModelName, e: Error) -> Error {
    match e {
        Error::Init { unit, reason } => Error::Init {
            unit: format!("{key} ({unit})"),
            reason,
        },
        Error::Config(m) => Error::Config(format!("{key} {model}: {m}")),
        other => other,
    }
}

/// Build units and plant controllers from the case's dynamics records and a
/// solved operating point. `v` holds bus voltages, `p_gen`/`q_gen` MW/MVAr per
/// generator in case order. `add_norton` registers a Norton admittance with
/// the network and returns its slot.
pub(crate) fn assemble(
    case: &PowerFlowCase,
    v: &[Complex64],
    p_gen: &[f64],
    q_gen: &[f64],
    mut add_norton: impl FnMut(usize, Complex64) -> usize,
) -> Result<Assembly> {
    let index = case.bus_index();
    let sb = case.sbase_mva;
    let mut by_unit: BTreeMap<GenKey, BTreeMap<ModelName, (ModelParams, &DynamicRecord)>> = BTreeMap::new();
    let mut plant_records = Vec::new();
    for r in &case.dynamics {
        if case.generator_index(&r.key()).is_none() {
            return Err(Error::UnknownGenerator {
                bus: r.bus,
                unit_id: r.unit_id.clone(),
            });
        }
        if r.model.is_plant_controller() {
            plant_records.push(r);
            continue;
        }
        let typed = r.typed()?;
        if by_unit.entry(r.key()).or_default().insert(r.model, (typed, r)).is_some() {
            return Err(config(format!("{} has two {} records", r.key(), r.model)));
        }
    }

    let mut units = Vec::new();
    let mut x0 = Vec::new();
    let mut names = Vec::new();
    let push_states = |x0: &mut Vec<f64>, names: &mut Vec<String>, prefix: String, model: &str, vals: Vec<f64>, fields: &[&str]| {
        for (v, f) in vals.into_iter().zip(fields) {
            x0.push(v);
            names.push(format!("{prefix}.{model}.{f}"));
        }
    };

    for (k, g) in case.generators.iter().enumerate() {
        if !g.is_on() {
            continue;
        }
        let key = g.key();
        let bus = index[&g.bus];
        let vt = v[bus];
        let s_unit = Complex64::new(p_gen[k], q_gen[k]) / g.mbase;
        let Some(models) = by_unit.remove(&key) else {
            return Err(config(format!("{key} is in service but has no dynamic model")));
        };
        let prefix = key.to_string();
        let off = x0.len();
        let get = |m: ModelName| models.get(&m).map(|(p, _)| p.clone());
        let model = if let Some(ModelParams::Classical(p)) = get(ModelName::Classical) {
            if models.len() > 1 {
                return Err(config(format!("{key}: classical machine combined with other models")));
            }
            let (st, e_mag, p_m) =
                classical_initialize(&p, vt, s_unit).map_err(|e| init_err(&key, ModelName::Classical, e))?;
            let y_sys = Complex64::new(0.0, -1.0) / (p.xdp * sb / g.mbase);
            let slot = add_norton(bus, y_sys);
            push_states(&mut x0, &mut names, prefix, "classical", st.values(), ClassicalState::<f64>::NAMES);
            Model::Machine {
                params: p,
                e_mag,
                p_m,
                y_sys,
                slot,
            }
        } else if let Some(ModelParams::InfiniteSource(p)) = get(ModelName::InfiniteSource) {
            let p: InfiniteSourceParams = p;
            if models.len() > 1 || p.xdp <= 0.0 {
                return Err(config(format!("{key}: infinite_source must stand alone with xdp > 0")));
            }
            let cp = ClassicalParams {
                h: 1.0,
                d: 0.0,
                xdp: p.xdp,
            };
            let (st, e_mag, _) = classical_initialize(&cp, vt, s_unit).map_err(|e| init_err(&key, ModelName::InfiniteSource, e))?;
            let y_sys = Complex64::new(0.0, -1.0) / (p.xdp * sb / g.mbase);
            let slot = add_norton(bus, y_sys);
            push_states(&mut x0, &mut names, prefix, "infinite_source", vec![st.delta], &["delta"]);
            Model::Source {
                e_mag,
                y_sys,
                slot,
                df_hz: 0.0,
            }
        } else {
            let (Some(ModelParams::Regc(regc)), Some(ModelParams::Reec(reec))) = (get(ModelName::RegcA), get(ModelName::ReecA)) else {
                return Err(config(format!("{key}: converter units need regc_a and reec_a")));
            };
            let wtgt = match get(ModelName::WtgtA) {
                Some(ModelParams::Wtgt(p)) => Some(p),
                _ => None,
            };
            let wind = match (get(ModelName::WtgaA), get(ModelName::WtgpA), get(ModelName::WtgqA)) {
                (Some(ModelParams::Wtga(a)), Some(ModelParams::Wtgp(p)), Some(ModelParams::Wtgq(q))) => Some((a, p, q)),
                (None, None, None) => None,
                _ => return Err(config(format!("{key}: wtga_a, wtgp_a and wtgq_a must be used together"))),
            };
            if wind.is_some() && wtgt.is_none() {
                return Err(config(format!("{key}: Type 3 blocks require wtgt_a")));
            }
            if g.fuel == Fuel::Solar && wtgt.is_some() {
                return Err(config(format!("{key}: solar unit cannot carry wind-turbine blocks")));
            }
            if wind.is_some() && reec.p_flag == 1 {
                return Err(config(format!("{key}: reec_a p_flag=1 is not supported together with wtgq_a")));
            }
            let vm = vt.norm();
            let (p0, q0) = (s_unit.re, s_unit.im);
            let regc_x = regc_initialize(&regc, s_unit, vm).map_err(|e| init_err(&key, ModelName::RegcA, e))?;
            let mut w0 = 1.0;
            let mut wind_ctl = None;
            let mut drive_state = None;
            let mut wind_states = None;
            if let Some((wtga, wtgp, wtgq)) = wind {
                wtgq.check().map_err(|e| init_err(&key, ModelName::WtgqA, e))?;
                w0 = wtgq_equilibrium_speed(&wtgq, p0);
                let t = wtgt.as_ref().expect("checked");
                let (dx, t_m0) = wtgt_initialize(t, w0, p0).map_err(|e| init_err(&key, ModelName::WtgtA, e))?;
                drive_state = Some(dx);
                let p_m0 = t_m0 * w0;
                wtga.check()?;
                let px = wtgp_initialize(&wtgp, wtga.theta0).map_err(|e| init_err(&key, ModelName::WtgpA, e))?;
                let qx = wtgq_initialize(&wtgq, p0, w0).map_err(|e| init_err(&key, ModelName::WtgqA, e))?;
                wind_states = Some((px, qx));
                wind_ctl = Some(WindControls { wtga, wtgp, wtgq, p_m0 });
            } else if let Some(t) = &wtgt {
                let (dx, _) = wtgt_initialize(t, w0, p0).map_err(|e| init_err(&key, ModelName::WtgtA, e))?;
                drive_state = Some(dx);
            }
            let (reec_x, reec_refs, _) =
                reec_initialize(&reec, vm, p0, q0, w0).map_err(|e| init_err(&key, ModelName::ReecA, e))?;
            push_states(&mut x0, &mut names, prefix.clone(), "regc_a", regc_x.values(), RegcState::<f64>::NAMES);
            push_states(&mut x0, &mut names, prefix.clone(), "reec_a", reec_x.values(), ReecState::<f64>::NAMES);
            if let Some(dx) = drive_state {
                push_states(&mut x0, &mut names, prefix.clone(), "wtgt_a", dx.values(), WtgtState::<f64>::NAMES);
            }
            if let Some((px, qx)) = wind_states {
                push_states(&mut x0, &mut names, prefix.clone(), "wtgp_a", px.values(), WtgpState::<f64>::NAMES);
                push_states(&mut x0, &mut names, prefix, "wtgq_a", qx.values(), WtgqState::<f64>::NAMES);
            }
            Model::Converter(Box::new(Converter {
                regc,
                reec,
                reec_refs,
                drive: wtgt,
                wind: wind_ctl,
                p0,
                q0,
            }))
        };
        let len = x0.len() - off;
        if let Model::Converter(c) = &model {
            debug_assert_eq!(c.len(), len);
        }
        units.push(Unit {
            key,
            bus,
            mbase: g.mbase,
            model,
            online: true,
            plant: None,
            off,
            len,
        });
    }
    if let Some((key, _)) = by_unit.into_iter().next() {
        return Err(config(format!("dynamic records attached to out-of-service unit {key}")));
    }

    // plant controllers
    let mut plants = Vec::new();
    for r in plant_records {
        let ModelParams::Repc(params) = r.typed()? else {
            unreachable!("plant records parse as repc")
        };
        let mut members = Vec::new();
        for m in r.members() {
            let Some(u) = units.iter().position(|u| u.key == m) else {
                return Err(config(format!("{} controls {m}, which is not an in-service unit", r.key())));
            };
            if !matches!(units[u].model, Model::Converter(_)) {
                return Err(config(format!("{} controls {m}, which is not a converter unit", r.key())));
            }
            if units[u].plant.is_some() {
                return Err(config(format!("{m} belongs to two plant controllers")));
            }
            units[u].plant = Some(plants.len());
            members.push(u);
        }
        let reg_id = r.reg_bus.unwrap_or(r.bus);
        let reg_bus = *index.get(&reg_id).ok_or(Error::UnknownBus(reg_id))?;
        let plant_base: f64 = members.iter().map(|&u| units[u].mbase).sum();
        let mut p_mw = Vec::new();
        let (mut p_sum, mut q_sum, mut i_sum) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for &u in &members {
            let Model::Converter(c) = &units[u].model else { unreachable!() };
            let mb = units[u].mbase;
            p_mw.push(c.p0 * mb);
            p_sum += c.p0 * mb;
            q_sum += c.q0 * mb;
            let vt = v[units[u].bus];
            i_sum += (Complex64::new(c.p0, c.q0) / vt).conj() * mb;
        }
        let inputs = RepcInputs {
            v_reg: v[reg_bus],
            i_plant: i_sum / plant_base,
            p_plant: p_sum / plant_base,
            q_plant: q_sum / plant_base,
            f_bus: crate::scalar::F_NOMINAL_HZ,
        };
        let (st, refs) = repc_initialize(&params, members.len(), &inputs).map_err(|e| init_err(&r.key(), r.model, e))?;
        let off = x0.len();
        push_states(&mut x0, &mut names, r.key().to_string(), r.model.as_str(), st.values(), RepcState::<f64>::NAMES);
        let mbases: Vec<f64> = members.iter().map(|&u| units[u].mbase).collect();
        plants.push(Plant {
            key: r.key(),
            params,
            refs,
            shares: dispatch_shares(&mbases, &p_mw),
            members,
            plant_base,
            reg_bus,
            off,
        });
    }

    Ok(Assembly { units, plants, x0, names })
}

impl Unit {
    /// Network current injection on the system base (generator convention).
    pub fn current(&self, x: &[f64], v: Complex64, sbase: f64) -> Complex64 {
        if !self.online {
            return Complex64::new(0.0, 0.0);
        }
        let xs = &x[self.off..self.off + self.len];
        match &self.model {
            Model::Machine { e_mag, y_sys, .. } | Model::Source { e_mag, y_sys, .. } => {
                Complex64::from_polar(*e_mag, xs[0]) * y_sys
            }
            Model::Converter(c) => {
                let rx = RegcState::from_slice(&xs[Converter::REGC..]);
                regc_injection(&c.regc, &rx, v) * (self.mbase / sbase)
            }
        }
    }

    /// Terminal power in pu on the unit base.
    pub fn terminal_power(&self, x: &[f64], v: Complex64, sbase: f64) -> Complex64 {
        if !self.online {
            return Complex64::new(0.0, 0.0);
        }
        let i = match &self.model {
            Model::Machine { y_sys, .. } | Model::Source { y_sys, .. } => self.current(x, v, sbase) - v * y_sys,
            Model::Converter(_) => self.current(x, v, sbase),
        };
        v * i.conj() * (sbase / self.mbase)
    }

    pub fn is_converter(&self) -> bool {
        matches!(self.model, Model::Converter(_))
    }

    /// Write derivatives of this unit's states. `refs` are the unit-base
    /// `(p_ref, q_ext)` commands when a plant controller is attached.
    pub fn derivatives(
        &self,
        x: &[f64],
        v: Complex64,
        sbase: f64,
        refs: Option<(f64, f64)>,
        dip_mode: Option<bool>,
        dx: &mut [f64],
    ) -> Result<ConverterEval> {
        let out = &mut dx[self.off..self.off + self.len];
        if !self.online {
            out.iter_mut().for_each(|d| *d = 0.0);
            return Ok(ConverterEval::default());
        }
        let xs = &x[self.off..self.off + self.len];
        let s = self.terminal_power(x, v, sbase);
        match &self.model {
            Model::Machine { params, p_m, .. } => {
                let st = ClassicalState::from_slice(xs);
                classical_derivatives(params, &st, *p_m, s.re)?.write_slice(out);
                Ok(ConverterEval::default())
            }
            Model::Source { df_hz, .. } => {
                out[0] = source_angle_rate(*df_hz);
                Ok(ConverterEval::default())
            }
            Model::Converter(c) => converter_derivatives(c, xs, v, s, refs, dip_mode, out),
        }
    }

    /// Replace the shaft states in `x_new` with a trapezoidal step from
    /// `x_old`, using torques at the start and end of the step.
    pub fn step_drive(&self, x_old: &[f64], x_new: &mut [f64], dt: f64, u0: (f64, f64), u1: (f64, f64)) {
        let Model::Converter(c) = &self.model else { return };
        let Some(t) = &c.drive else { return };
        let k = self.off + Converter::WTGT;
        let s = wtgt_trapezoid_step(t, &WtgtState::from_slice(&x_old[k..]), dt, u0, u1);
        s.write_slice(&mut x_new[k..]);
    }

    pub fn apply_limits(&self, x: &mut [f64]) {
        let Model::Converter(c) = &self.model else { return };
        let xs = &mut x[self.off..self.off + self.len];
        let mut r = ReecState::from_slice(&xs[Converter::REEC..]);
        reec_apply_limits(&c.reec, &mut r);
        r.write_slice(&mut xs[Converter::REEC..]);
        if let Some(w) = &c.wind {
            let mut p = WtgpState::from_slice(&xs[Converter::WTGP..]);
            wtgp_apply_limits(&w.wtgp, &mut p);
            p.write_slice(&mut xs[Converter::WTGP..]);
        }
    }

    /// Rotor angle in rad for machines and sources.
    pub fn rotor_angle(&self, x: &[f64]) -> Option<f64> {
        match self.model {
            Model::Machine { .. } | Model::Source { .. } => Some(x[self.off]),
            Model::Converter(_) => None,
        }
    }

    pub fn norton_slot(&self) -> Option<usize> {
        match self.model {
            Model::Machine { slot, .. } | Model::Source { slot, .. } => Some(slot),
            Model::Converter(_) => None,
        }
    }

    pub fn resource(&self) -> Option<ResourceType> {
        match &self.model {
            Model::Converter(c) => Some(c.resource()),
            _ => None,
        }
    }
}

fn converter_derivatives(
    c: &Converter,
    xs: &[f64],
    v: Complex64,
    s: Complex64,
    refs: Option<(f64, f64)>,
    dip_mode: Option<bool>,
    out: &mut [f64],
) -> Result<ConverterEval> {
    let (p_ref_unit, q_ext) = refs.unwrap_or((c.p0, c.q0));
    let rx = RegcState::from_slice(&xs[Converter::REGC..]);
    let ex = ReecState::from_slice(&xs[Converter::REEC..]);
    let vm = v.norm();
    let mut eval = ConverterEval::default();

    let w_g = if c.drive.is_some() {
        WtgtState::from_slice(&xs[Converter::WTGT..]).w_g
    } else {
        1.0
    };

    // torque controller feeds the electrical controls for Type 3
    let mut p_ref_reec = p_ref_unit;
    let mut wind_out = None;
    if let Some(w) = &c.wind {
        let qx = WtgqState::from_slice(&xs[Converter::WTGQ..]);
        let q = wtgq_derivatives(&w.wtgq, &qx, s.re, w_g, p_ref_unit)?;
        eval.curve_clamped = q.curve_clamped;
        p_ref_reec = q.p_ref;
        wind_out = Some(q);
    }

    let e = reec_update_in_mode(
        &c.reec,
        &c.reec_refs,
        &ex,
        &ReecInputs {
            v_t: vm,
            q_gen: s.im,
            p_gen: s.re,
            q_ext,
            p_ref: p_ref_reec,
            w_g,
        },
        dip_mode,
    )?;
    eval.dip_margin = Some(reec_dip_margin(&c.reec, vm));
    let rd = regc_derivatives(&c.regc, &rx, e.ip_cmd, e.iq_cmd, vm)?;
    rd.write_slice(&mut out[Converter::REGC..]);
    e.deriv.write_slice(&mut out[Converter::REEC..]);

    if let Some(t) = &c.drive {
        let tx = WtgtState::from_slice(&xs[Converter::WTGT..]);
        let t_m = if let Some(w) = &c.wind {
            let px = WtgpState::from_slice(&xs[Converter::WTGP..]);
            let q = wind_out.expect("set for Type 3");
            let (pd, theta) = wtgp_derivatives(
                &w.wtgp,
                &px,
                &WtgpInputs {
                    w_g,
                    w_ref: q.w_ref,
                    p_ord: ex.p_ord,
                    p_ref0: p_ref_unit,
                },
            )?;
            pd.write_slice(&mut out[Converter::WTGP..]);
            q.deriv.write_slice(&mut out[Converter::WTGQ..]);
            wtga_power(&w.wtga, theta, w.p_m0) / tx.w_t.max(1e-3)
        } else {
            // full converter: the turbine follows the power order
            ex.p_ord / tx.w_t.max(1e-3)
        };
        let d = wtgt_derivatives(t, &tx, t_m, s.re)?;
        d.deriv.write_slice(&mut out[Converter::WTGT..]);
        eval.drive = Some((t_m, d.t_e));
    }
    Ok(eval)
}

/// Plant measurements on the plant base from member terminal quantities.
pub(crate) struct PlantMeasure {
    pub p: f64,
    pub q: f64,
    pub i: Complex64,
}

impl Plant {
    pub fn measure(&self, units: &[Unit], x: &[f64], v: &[Complex64], sbase: f64) -> PlantMeasure {
        let mut m = PlantMeasure {
            p: 0.0,
            q: 0.0,
            i: Complex64::new(0.0, 0.0),
        };
        for &u in &self.members {
            let unit = &units[u];
            let vt = v[unit.bus];
            let s = unit.terminal_power(x, vt, sbase) * unit.mbase;
            m.p += s.re;
            m.q += s.im;
            m.i += unit.current(x, vt, sbase) * sbase;
        }
        m.p /= self.plant_base;
        m.q /= self.plant_base;
        m.i /= self.plant_base;
        m
    }

    /// Derivatives of the plant states and unit-base commands per member.
    pub fn evaluate(
        &self,
        units: &[Unit],
        x: &[f64],
        v: &[Complex64],
        f_bus: f64,
        sbase: f64,
        dx: &mut [f64],
    ) -> Result<Vec<(usize, (f64, f64))>> {
        let n = RepcState::<f64>::LEN;
        let st = RepcState::from_slice(&x[self.off..self.off + n]);
        let m = self.measure(units, x, v, sbase);
        let out = repc_update(
            &self.params,
            &self.refs,
            &st,
            &RepcInputs {
                v_reg: v[self.reg_bus],
                i_plant: m.i,
                p_plant: m.p,
                q_plant: m.q,
                f_bus,
            },
        )?;
        out.deriv.write_slice(&mut dx[self.off..self.off + n]);
        Ok(self
            .members
            .iter()
            .zip(&self.shares)
            .map(|(&u, share)| {
                let Model::Converter(c) = &units[u].model else { unreachable!() };
                (u, repc_dispatch(&self.refs, self.plant_base, share, c.p0, c.q0, out.p_cmd, out.q_ext))
            })
            .collect())
    }

    pub fn apply_limits(&self, x: &mut [f64]) {
        let i = self.off + 5;
        x[i] = x[i].clamp(self.params.pmin, self.params.pmax);
    }
}
