//! Bundled test systems.
//!
//! The main case is the WSCC 9-bus system with three renewable sites added:
//! a Type 3 WTG at bus 10 (tied to bus 5), a Type 4 WTG at bus 11 (tied to
//! bus 8) and a five-unit PV plant on collector bus 12, stepped up to the
//! POI at bus 13 and connected to bus 9. Loads are raised so the original
//! machines keep roughly their classic dispatch.

use serde_json::json;

use crate::blocks::record::{DynamicRecord, ModelName};
use crate::case::{Branch, BranchStatus, Bus, BusKind, Fuel, GenKey, GenStatus, Generator, Load, PowerFlowCase};

pub const POI_BUS: u32 = 13;
pub const PV_COLLECTOR_BUS: u32 = 12;
pub const TYPE3_BUS: u32 = 10;
pub const TYPE4_BUS: u32 = 11;
pub const PV_UNITS: usize = 5;

fn bus(id: u32, kind: BusKind, kv: f64, v: f64) -> Bus {
    Bus {
        id,
        kind,
        nominal_kv: kv,
        v_mag: v,
        v_angle: 0.0,
        area: 1,
    }
}

fn line(from_bus: u32, to_bus: u32, r: f64, x: f64, b: f64) -> Branch {
    Branch {
        from_bus,
        to_bus,
        r,
        x,
        b_charging: b,
        tap: 1.0,
        status: BranchStatus::Closed,
    }
}

#[allow(clippy::too_many_arguments)]
fn gen(bus: u32, id: &str, fuel: Fuel, p: f64, p_max: f64, q_lim: f64, mbase: f64, v: f64) -> Generator {
    Generator {
        bus,
        unit_id: id.into(),
        fuel,
        p_mw: p,
        q_mvar: 0.0,
        p_max,
        p_min: 0.0,
        q_max: q_lim,
        q_min: -q_lim,
        mbase,
        status: GenStatus::On,
        v_setpoint: v,
    }
}

/// Power-flow data only (no dynamics records).
pub fn wscc9_renewable() -> PowerFlowCase {
    let mut buses = vec![
        bus(1, BusKind::Slack, 16.5, 1.04),
        bus(2, BusKind::Pv, 18.0, 1.025),
        bus(3, BusKind::Pv, 13.8, 1.025),
    ];
    for id in 4..=9 {
        buses.push(bus(id, BusKind::Pq, 230.0, 1.0));
    }
    buses.push(bus(TYPE3_BUS, BusKind::Pv, 34.5, 1.02));
    buses.push(bus(TYPE4_BUS, BusKind::Pv, 34.5, 1.02));
    buses.push(bus(PV_COLLECTOR_BUS, BusKind::Pv, 34.5, 1.02));
    buses.push(bus(POI_BUS, BusKind::Pq, 230.0, 1.0));
    let branches = vec![
        line(1, 4, 0.0, 0.0576, 0.0),
        line(4, 5, 0.010, 0.085, 0.176),
        line(4, 6, 0.017, 0.092, 0.158),
        line(5, 7, 0.032, 0.161, 0.306),
        line(6, 9, 0.039, 0.170, 0.358),
        line(7, 8, 0.0085, 0.072, 0.149),
        line(8, 9, 0.0119, 0.1008, 0.209),
        line(2, 7, 0.0, 0.0625, 0.0),
        line(3, 9, 0.0, 0.0586, 0.0),
        line(TYPE3_BUS, 5, 0.005, 0.10, 0.0),
        line(TYPE4_BUS, 8, 0.005, 0.12, 0.0),
        line(PV_COLLECTOR_BUS, POI_BUS, 0.0, 0.08, 0.0),
        line(POI_BUS, 9, 0.01, 0.06, 0.02),
    ];
    let mut generators = vec![
        gen(1, "1", Fuel::Coal, 72.0, 250.0, 150.0, 250.0, 1.04),
        gen(2, "1", Fuel::Gas, 163.0, 200.0, 120.0, 200.0, 1.025),
        gen(3, "1", Fuel::Hydro, 85.0, 150.0, 90.0, 150.0, 1.025),
        gen(TYPE3_BUS, "1", Fuel::Wind, 40.0, 40.0, 18.0, 45.0, 1.02),
        gen(TYPE4_BUS, "1", Fuel::Wind, 30.0, 30.0, 14.0, 35.0, 1.02),
    ];
    for k in 1..=PV_UNITS {
        generators.push(gen(PV_COLLECTOR_BUS, &k.to_string(), Fuel::Solar, 10.0, 10.0, 5.0, 12.0, 1.02));
    }
    PowerFlowCase {
        sbase_mva: 100.0,
        buses,
        branches,
        generators,
        loads: vec![
            Load { bus: 5, p_mw: 165.0, q_mvar: 50.0 },
            Load { bus: 6, p_mw: 120.0, q_mvar: 30.0 },
            Load { bus: 8, p_mw: 150.0, q_mvar: 35.0 },
        ],
        shunts: vec![],
        dynamics: vec![],
    }
}

/// Classical-machine data for the three WSCC units on their own bases.
pub fn wscc9_machine_params(bus: u32) -> serde_json::Value {
    match bus {
        1 => json!({"h": 9.46, "d": 50.0, "xdp": 0.15}),
        2 => json!({"h": 3.2, "d": 50.0, "xdp": 0.24}),
        _ => json!({"h": 2.0, "d": 50.0, "xdp": 0.27}),
    }
}

fn rec(model: ModelName, key: &GenKey, params: serde_json::Value) -> DynamicRecord {
    DynamicRecord::new(model, key, params)
}

/// The bundled case with hand-set dynamics: default block parameters, a
/// repc_a per wind unit and one repc_b regulating the POI for the PV plant.
pub fn wscc9_renewable_dynamic() -> PowerFlowCase {
    let mut case = wscc9_renewable();
    let mut dyn_recs = Vec::new();
    for bus in 1..=3 {
        dyn_recs.push(rec(ModelName::Classical, &GenKey::new(bus, "1"), wscc9_machine_params(bus)));
    }
    let t3 = GenKey::new(TYPE3_BUS, "1");
    for m in [
        ModelName::RegcA,
        ModelName::ReecA,
        ModelName::WtgtA,
        ModelName::WtgaA,
        ModelName::WtgpA,
        ModelName::WtgqA,
    ] {
        dyn_recs.push(rec(m, &t3, json!({})));
    }
    let mut r = rec(ModelName::RepcA, &t3, json!({}));
    r.reg_bus = Some(5);
    dyn_recs.push(r);
    let t4 = GenKey::new(TYPE4_BUS, "1");
    for m in [ModelName::RegcA, ModelName::ReecA, ModelName::WtgtA] {
        dyn_recs.push(rec(m, &t4, json!({})));
    }
    let mut r = rec(ModelName::RepcA, &t4, json!({}));
    r.reg_bus = Some(8);
    dyn_recs.push(r);
    let pv: Vec<GenKey> = (1..=PV_UNITS).map(|k| GenKey::new(PV_COLLECTOR_BUS, &k.to_string())).collect();
    for k in &pv {
        dyn_recs.push(rec(ModelName::RegcA, k, json!({})));
        dyn_recs.push(rec(ModelName::ReecA, k, json!({})));
    }
    let mut r = rec(ModelName::RepcB, &pv[0], json!({}));
    r.controlled_units = Some(pv);
    r.reg_bus = Some(POI_BUS);
    dyn_recs.push(r);
    case.dynamics = dyn_recs;
    case
}

/// Seed used for the bundled case's model assignment.
pub const BUNDLED_SEED: u64 = 42;

/// The bundled case with dynamics drawn by the assignment engine.
pub fn bundled_case() -> PowerFlowCase {
    let cfg = crate::assign::AssignmentConfig::with_seed(BUNDLED_SEED);
    crate::assign::build_dynamic_case(&wscc9_renewable(), &cfg)
        .expect("bundled case assigns")
        .0
}

/// Stiff source at bus 1 feeding a single Type 4 wind plant through a POI
/// (bus 2) and collector (bus 3). The source's frequency can be stepped to
/// exercise plant droop. `pmax_mw` sets the unit's available power.
pub fn droop_case(p_mw: f64, pmax_mw: f64, repc: serde_json::Value) -> PowerFlowCase {
    let key = GenKey::new(3, "1");
    let src = GenKey::new(1, "1");
    let mut case = PowerFlowCase {
        sbase_mva: 100.0,
        buses: vec![
            bus(1, BusKind::Slack, 230.0, 1.0),
            bus(2, BusKind::Pq, 230.0, 1.0),
            bus(3, BusKind::Pv, 34.5, 1.0),
        ],
        branches: vec![line(1, 2, 0.002, 0.02, 0.0), line(2, 3, 0.0, 0.05, 0.0)],
        generators: vec![
            gen(1, "1", Fuel::Gas, 0.0, 5000.0, 5000.0, 5000.0, 1.0),
            gen(3, "1", Fuel::Wind, p_mw, pmax_mw, 0.4 * pmax_mw, 100.0, 1.0),
        ],
        loads: vec![Load { bus: 1, p_mw: 300.0, q_mvar: 0.0 }],
        shunts: vec![],
        dynamics: vec![],
    };
    let pmax_pu = pmax_mw / 100.0;
    case.dynamics = vec![
        rec(ModelName::InfiniteSource, &src, json!({"xdp": 0.001})),
        rec(ModelName::RegcA, &key, json!({})),
        rec(ModelName::ReecA, &key, json!({"pmax": pmax_pu})),
        rec(ModelName::WtgtA, &key, json!({})),
        {
            let mut r = rec(ModelName::RepcA, &key, repc);
            r.reg_bus = Some(2);
            r
        },
    ];
    case
}

/// Lossless single machine against a stiff source.
pub fn smib_case(h: f64, d: f64, p_mw: f64) -> PowerFlowCase {
    let mut case = PowerFlowCase {
        sbase_mva: 100.0,
        buses: vec![bus(1, BusKind::Slack, 230.0, 1.0), bus(2, BusKind::Pv, 230.0, 1.0)],
        branches: vec![line(1, 2, 0.0, 0.2, 0.0)],
        generators: vec![
            gen(1, "1", Fuel::Gas, 0.0, 5000.0, 5000.0, 5000.0, 1.0),
            gen(2, "1", Fuel::Coal, p_mw, 200.0, 200.0, 100.0, 1.0),
        ],
        loads: vec![],
        shunts: vec![],
        dynamics: vec![],
    };
    case.dynamics = vec![
        rec(ModelName::InfiniteSource, &GenKey::new(1, "1"), json!({"xdp": 0.001})),
        rec(ModelName::Classical, &GenKey::new(2, "1"), json!({"h": h, "d": d, "xdp": 0.3})),
    ];
    case
}
