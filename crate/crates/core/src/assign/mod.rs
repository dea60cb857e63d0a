//! Seeded statistical assignment of renewable dynamic models.
//!
//! Every draw comes from its own ChaCha8 stream keyed by
//! `(seed, bus, unit_id, purpose)`, so a unit's outcome does not depend on
//! which other units are present or in what order they are visited.

pub mod library;

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blocks::record::{DynamicRecord, ModelName, ResourceType};
use crate::case::{Fuel, GenKey, Generator, PowerFlowCase};
use crate::error::{Error, Result};
pub use library::{ParameterTemplate, RealMode, ReactiveMode, TemplateLibrary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionRatio {
    pub p_type3: f64,
    pub p_type4: f64,
}

impl Default for CompositionRatio {
    fn default() -> Self {
        CompositionRatio {
            p_type3: 1.0 / 3.0,
            p_type4: 2.0 / 3.0,
        }
    }
}

impl CompositionRatio {
    pub fn check(&self) -> Result<()> {
        if self.p_type3 < 0.0 || self.p_type4 < 0.0 || (self.p_type3 + self.p_type4 - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "composition ratio must be non-negative and sum to 1 (got {} + {})",
                self.p_type3, self.p_type4
            )));
        }
        Ok(())
    }
}

/// Explicit plant membership, overriding the same-bus/same-fuel default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantGroup {
    pub members: Vec<GenKey>,
    /// Bus regulated by the plant controller; defaults to the first member's bus.
    #[serde(default)]
    pub reg_bus: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentConfig {
    pub seed: u64,
    pub ratio: CompositionRatio,
    pub library: TemplateLibrary,
    pub plant_grouping: BTreeMap<String, PlantGroup>,
}

impl AssignmentConfig {
    pub fn with_seed(seed: u64) -> Self {
        AssignmentConfig {
            seed,
            ..Default::default()
        }
    }
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for one `(unit, purpose)` pair.
pub fn stream(seed: u64, key: &GenKey, purpose: &str) -> ChaCha8Rng {
    let mut h = 0xcbf2_9ce4_8422_2325;
    h = fnv1a(&seed.to_le_bytes(), h);
    h = fnv1a(&key.bus.to_le_bytes(), h);
    h = fnv1a(key.unit_id.as_bytes(), h);
    h = fnv1a(&[0xff], h);
    h = fnv1a(purpose.as_bytes(), h);
    ChaCha8Rng::seed_from_u64(splitmix64(h))
}

fn draw(rng: &mut ChaCha8Rng, weights: impl IntoIterator<Item = f64>, what: &str) -> Result<usize> {
    let w = WeightedIndex::new(weights).map_err(|e| Error::Config(format!("{what}: {e}")))?;
    Ok(w.sample(rng))
}

/// Draw Type 3 / Type 4 for each wind generator.
pub fn assign_wtg_types(wind: &[Generator], config: &AssignmentConfig) -> Result<BTreeMap<GenKey, ResourceType>> {
    config.ratio.check()?;
    let mut out = BTreeMap::new();
    for g in wind {
        if g.fuel != Fuel::Wind {
            return Err(Error::Config(format!("{} is {:?}, not a wind generator", g.key(), g.fuel)));
        }
        let u: f64 = stream(config.seed, &g.key(), "wtg_type").gen();
        let t = if u < config.ratio.p_type3 {
            ResourceType::Type3
        } else {
            ResourceType::Type4
        };
        out.insert(g.key(), t);
    }
    Ok(out)
}

/// Modules for a resource type; the plant controller comes last.
pub fn select_module_set(res: ResourceType, plant_size: usize) -> Vec<ModelName> {
    let mut m = vec![ModelName::RegcA, ModelName::ReecA];
    match res {
        ResourceType::Type3 => m.extend([ModelName::WtgtA, ModelName::WtgaA, ModelName::WtgpA, ModelName::WtgqA]),
        ResourceType::Type4 => m.push(ModelName::WtgtA),
        ResourceType::Pv => {}
    }
    m.push(if plant_size > 1 { ModelName::RepcB } else { ModelName::RepcA });
    m
}

/// A group of renewable units under one plant controller.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plant {
    pub id: String,
    pub members: Vec<GenKey>,
    pub reg_bus: u32,
}

impl Plant {
    /// The unit whose key identifies the plant controller record.
    pub fn anchor(&self) -> &GenKey {
        &self.members[0]
    }
}

/// In-service renewable generators grouped into plants.
pub fn group_plants(case: &PowerFlowCase, config: &AssignmentConfig) -> Result<Vec<Plant>> {
    let renewables: BTreeMap<GenKey, &Generator> = case
        .generators
        .iter()
        .filter(|g| g.is_on() && g.fuel.is_renewable())
        .map(|g| (g.key(), g))
        .collect();
    let mut claimed = BTreeSet::new();
    let mut plants = Vec::new();
    for (id, grp) in &config.plant_grouping {
        if grp.members.is_empty() {
            return Err(Error::Config(format!("plant {id} has no members")));
        }
        let mut members = grp.members.clone();
        members.sort();
        for m in &members {
            if !renewables.contains_key(m) {
                return Err(Error::Config(format!("plant {id} lists {m}, which is not an in-service renewable unit")));
            }
            if !claimed.insert(m.clone()) {
                return Err(Error::Config(format!("{m} is listed in two plants")));
            }
        }
        plants.push(Plant {
            id: id.clone(),
            reg_bus: grp.reg_bus.unwrap_or(members[0].bus),
            members,
        });
    }
    let mut by_site: BTreeMap<(u32, Fuel), Vec<GenKey>> = BTreeMap::new();
    for (k, g) in &renewables {
        if !claimed.contains(k) {
            by_site.entry((g.bus, g.fuel)).or_default().push(k.clone());
        }
    }
    for ((bus, fuel), members) in by_site {
        let fuel = serde_json::to_value(fuel).expect("fuel serializes");
        plants.push(Plant {
            id: format!("plant.{bus}.{}", fuel.as_str().unwrap_or("renewable")),
            reg_bus: bus,
            members,
        });
    }
    plants.sort_by(|a, b| a.anchor().cmp(b.anchor()));
    Ok(plants)
}

/// Flag settings emitted for one control option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOption {
    pub reactive: ReactiveMode,
    pub real: RealMode,
    pub v_flag: u8,
    pub q_flag: u8,
    pub ref_flag: u8,
    pub freq_flag: u8,
    pub ddn: f64,
    pub dup: f64,
}

impl ControlOption {
    pub fn new(reactive: ReactiveMode, real: RealMode, ddn: f64, dup: f64) -> Self {
        let (v_flag, q_flag, ref_flag) = match reactive {
            ReactiveMode::PlantV => (0, 0, 1),
            ReactiveMode::PlantQLocalVq => (1, 1, 0),
            ReactiveMode::PlantVLocalVq => (1, 1, 1),
        };
        ControlOption {
            reactive,
            real,
            v_flag,
            q_flag,
            ref_flag,
            freq_flag: 1,
            ddn,
            dup: if real == RealMode::DownOnly { 0.0 } else { dup },
        }
    }
}

/// One draw per plant; every member gets the plant's option.
pub fn assign_control_options(plants: &[Plant], config: &AssignmentConfig) -> Result<BTreeMap<GenKey, ControlOption>> {
    let co = &config.library.control_options;
    let mut out = BTreeMap::new();
    for p in plants {
        let mut rng = stream(config.seed, p.anchor(), "control_option");
        let r = draw(&mut rng, co.reactive.iter().map(|w| w.weight), "control_options.reactive")?;
        let a = draw(&mut rng, co.real.iter().map(|w| w.weight), "control_options.real")?;
        let opt = ControlOption::new(co.reactive[r].row, co.real[a].row, config.library.droop.ddn, config.library.droop.dup);
        for m in &p.members {
            out.insert(m.clone(), opt);
        }
    }
    Ok(out)
}

/// Template choices for one unit: index into the library list per module.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct UnitTemplates {
    pub modules: BTreeMap<ModelName, usize>,
    /// Index into the theta-limit distribution (Type 3 only).
    pub theta_limits: Option<usize>,
}

/// Draw templates for the unit-level modules of each typed unit. Plant
/// controllers are drawn per plant in [`build_dynamic_case`].
pub fn assign_parameter_templates(
    units: &BTreeMap<GenKey, ResourceType>,
    config: &AssignmentConfig,
) -> Result<BTreeMap<GenKey, UnitTemplates>> {
    let lib = &config.library;
    let mut out = BTreeMap::new();
    for (key, &res) in units {
        let mut t = UnitTemplates::default();
        for m in select_module_set(res, 1) {
            if m.is_plant_controller() {
                continue;
            }
            let list = lib
                .templates(m)
                .ok_or_else(|| Error::Config(format!("no template list for {m}")))?;
            let mut rng = stream(config.seed, key, m.as_str());
            t.modules.insert(m, draw(&mut rng, list.iter().map(|t| t.weight), m.as_str())?);
        }
        if res == ResourceType::Type3 {
            let mut rng = stream(config.seed, key, "theta_limits");
            t.theta_limits = Some(draw(&mut rng, lib.theta_limits.iter().map(|t| t.weight), "theta_limits")?);
        }
        out.insert(key.clone(), t);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Headroom {
    /// Units operating below available power.
    pub marked: BTreeSet<GenKey>,
    /// Available power per unit, MW.
    pub pmax_mw: BTreeMap<GenKey, f64>,
    pub warnings: Vec<String>,
}

/// Smallest available power given to a unit dispatched at zero.
pub const PMAX_FLOOR_MW: f64 = 1e-3;

/// Mark sub-optimal units and set available power. `dispatch` pairs each
/// renewable unit with its dispatched MW.
pub fn assign_headroom(dispatch: &[(GenKey, f64)], config: &AssignmentConfig) -> Headroom {
    let lib = &config.library;
    let mut h = Headroom::default();
    for (key, p) in dispatch {
        let u: f64 = stream(config.seed, key, "headroom").gen();
        let marked = u < lib.headroom_fraction;
        let mut pmax = if marked { p / (1.0 - lib.headroom_depth) } else { *p };
        if pmax <= 0.0 {
            h.warnings.push(format!("{key} is dispatched at {p} MW; available power floored at {PMAX_FLOOR_MW} MW"));
            pmax = PMAX_FLOOR_MW;
        }
        if marked {
            h.marked.insert(key.clone());
        }
        h.pmax_mw.insert(key.clone(), pmax);
    }
    h
}

/// Counts of what the assignment added.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub renewable_units: usize,
    pub wind_units: usize,
    pub solar_units: usize,
    pub resource_types: BTreeMap<String, usize>,
    pub plants: usize,
    /// Records per model name.
    pub models: BTreeMap<String, usize>,
    /// Converter records (regc_a), the machine/exciter role.
    pub machine_exciter_records: usize,
    /// Drive-train records (wtgt_a), the governor role.
    pub governor_records: usize,
    pub classical_records: usize,
    pub control_options: BTreeMap<String, usize>,
    pub headroom_units: usize,
    pub warnings: Vec<String>,
}

fn with_overrides(base: &Value, overrides: Value) -> Value {
    let mut v = base.clone();
    if let (Some(obj), Value::Object(o)) = (v.as_object_mut(), overrides) {
        obj.extend(o);
    }
    v
}

fn mode_name<T: Serialize>(t: &T) -> String {
    serde_json::to_value(t)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

/// Run all assignment steps and attach dynamics records to a copy of `case`.
/// Conventional units get classical machines. The result is checked by
/// initializing a simulation from it.
pub fn build_dynamic_case(case: &PowerFlowCase, config: &AssignmentConfig) -> Result<(PowerFlowCase, Manifest)> {
    config.library.check()?;
    config.ratio.check()?;
    let pf = crate::powerflow::solve_powerflow(case)?;
    if !pf.converged {
        return Err(Error::PowerFlowNotConverged {
            iterations: pf.iterations,
            max_mismatch: pf.max_mismatch,
        });
    }
    let lib = &config.library;
    let mut out = case.clone();
    let mut manifest = Manifest {
        seed: config.seed,
        ..Default::default()
    };

    let wind: Vec<Generator> = case
        .generators
        .iter()
        .filter(|g| g.is_on() && g.fuel == Fuel::Wind)
        .cloned()
        .collect();
    let mut types = assign_wtg_types(&wind, config)?;
    for g in case.generators.iter().filter(|g| g.is_on() && g.fuel == Fuel::Solar) {
        types.insert(g.key(), ResourceType::Pv);
    }
    let plants = group_plants(case, config)?;
    let options = assign_control_options(&plants, config)?;
    let templates = assign_parameter_templates(&types, config)?;
    let dispatch: Vec<(GenKey, f64)> = case
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| types.contains_key(&g.key()))
        .map(|(k, g)| (g.key(), pf.p_gen[k]))
        .collect();
    let headroom = assign_headroom(&dispatch, config);
    manifest.warnings.extend(headroom.warnings.iter().cloned());

    let mut records = Vec::new();
    for (k, g) in case.generators.iter().enumerate() {
        if !g.is_on() {
            continue;
        }
        let key = g.key();
        if !types.contains_key(&key) {
            records.push(DynamicRecord::new(ModelName::Classical, &key, lib.classical_params(g.fuel)));
            continue;
        }
        let opt = options[&key];
        let tpl = &templates[&key];
        let pmax = headroom.pmax_mw[&key];
        out.generators[k].p_max = pmax;
        for (&m, &i) in &tpl.modules {
            let base = &lib.templates(m).expect("drawn from library")[i];
            let params = match m {
                ModelName::ReecA => with_overrides(
                    &base.params,
                    json!({"q_flag": opt.q_flag, "v_flag": opt.v_flag, "p_flag": 0, "pmax": pmax / g.mbase}),
                ),
                ModelName::WtgpA => {
                    let th = lib.theta_limits[tpl.theta_limits.expect("type 3 units draw theta limits")];
                    with_overrides(&base.params, json!({"theta_min": th.theta_min, "theta_max": th.theta_max}))
                }
                _ => base.params.clone(),
            };
            let mut r = DynamicRecord::new(m, &key, params);
            r.template = Some(format!("{}/{}", m.as_str(), base.tag));
            records.push(r);
        }
    }
    let mbase: BTreeMap<GenKey, f64> = case.generators.iter().map(|g| (g.key(), g.mbase)).collect();
    for p in &plants {
        let model = select_module_set(ResourceType::Pv, p.members.len()).pop().expect("plant controller");
        let list = lib.templates(model).expect("plant templates");
        let i = draw(&mut stream(config.seed, p.anchor(), model.as_str()), list.iter().map(|t| t.weight), model.as_str())?;
        let opt = options[p.anchor()];
        let plant_base: f64 = p.members.iter().map(|m| mbase[m]).sum();
        let plant_pmax: f64 = p.members.iter().map(|m| headroom.pmax_mw[m]).sum();
        let params = with_overrides(
            &list[i].params,
            json!({
                "ref_flag": opt.ref_flag,
                "freq_flag": opt.freq_flag,
                "ddn": opt.ddn,
                "dup": opt.dup,
                "pmax": plant_pmax / plant_base,
            }),
        );
        let mut r = DynamicRecord::new(model, p.anchor(), params);
        if model == ModelName::RepcB {
            r.controlled_units = Some(p.members.clone());
        }
        r.reg_bus = Some(p.reg_bus);
        r.template = Some(format!("{}/{}", model.as_str(), list[i].tag));
        records.push(r);
        *manifest
            .control_options
            .entry(format!("{}+{}", mode_name(&opt.reactive), mode_name(&opt.real)))
            .or_default() += 1;
    }
    out.dynamics = records;

    manifest.renewable_units = types.len();
    manifest.wind_units = wind.len();
    manifest.solar_units = types.len() - wind.len();
    for t in types.values() {
        *manifest.resource_types.entry(t.as_str().to_string()).or_default() += 1;
    }
    manifest.plants = plants.len();
    for r in &out.dynamics {
        *manifest.models.entry(r.model.as_str().to_string()).or_default() += 1;
    }
    let count = |m: ModelName| out.dynamics.iter().filter(|r| r.model == m).count();
    manifest.machine_exciter_records = count(ModelName::RegcA);
    manifest.governor_records = count(ModelName::WtgtA);
    manifest.classical_records = count(ModelName::Classical);
    manifest.headroom_units = headroom.marked.len();

    crate::sim::initialize_simulation(&out, &crate::sim::SimOptions::default())?;
    Ok((out, manifest))
}
