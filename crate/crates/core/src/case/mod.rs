//! Static network data: buses, branches, generators, loads and shunts.
//!
//! Cases are exchanged as JSON. Every object rejects unknown keys so a typo
//! in a field name surfaces as an error naming the key.

mod validate;
mod ybus;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blocks::record::DynamicRecord;
use crate::error::{Error, Result};

pub use validate::{validate_case, Finding, ValidationReport};
pub use ybus::{build_ybus, branch_stamp, SparseYbus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    pub nominal_kv: f64,
    pub v_mag: f64,
    pub v_angle: f64,
    #[serde(default)]
    pub area: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    Closed,
    Open,
}

fn unit_tap() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b_charging: f64,
    #[serde(default = "unit_tap")]
    pub tap: f64,
    pub status: BranchStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fuel {
    Coal,
    Gas,
    Nuclear,
    Hydro,
    Wind,
    Solar,
}

impl Fuel {
    pub fn is_renewable(self) -> bool {
        matches!(self, Fuel::Wind | Fuel::Solar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenStatus {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: u32,
    pub unit_id: String,
    pub fuel: Fuel,
    pub p_mw: f64,
    pub q_mvar: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub q_max: f64,
    pub q_min: f64,
    pub mbase: f64,
    pub status: GenStatus,
    pub v_setpoint: f64,
}

impl Generator {
    pub fn is_on(&self) -> bool {
        self.status == GenStatus::On
    }

    pub fn key(&self) -> GenKey {
        GenKey::new(self.bus, &self.unit_id)
    }
}

/// Stable generator identity: (bus, unit id).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenKey {
    pub bus: u32,
    pub unit_id: String,
}

impl GenKey {
    pub fn new(bus: u32, unit_id: &str) -> Self {
        GenKey {
            bus,
            unit_id: unit_id.to_string(),
        }
    }
}

impl std::fmt::Display for GenKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "gen.{}.{}", self.bus, self.unit_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub bus: u32,
    pub p_mw: f64,
    pub q_mvar: f64,
}

/// Fixed shunt, MW/MVAr consumed at 1.0 pu voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shunt {
    pub bus: u32,
    #[serde(default)]
    pub g_mw: f64,
    #[serde(default)]
    pub b_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFlowCase {
    pub sbase_mva: f64,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub shunts: Vec<Shunt>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dynamics: Vec<DynamicRecord>,
}

impl PowerFlowCase {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("case serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json_pretty()).map_err(|e| Error::io(&path, e))
    }

    /// Bus id → dense index, in declaration order.
    pub fn bus_index(&self) -> BTreeMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn generator_index(&self, key: &GenKey) -> Option<usize> {
        self.generators
            .iter()
            .position(|g| g.bus == key.bus && g.unit_id == key.unit_id)
    }

    pub fn mw_to_pu(&self, mw: f64) -> f64 {
        mw / self.sbase_mva
    }

    pub fn pu_to_mw(&self, pu: f64) -> f64 {
        pu * self.sbase_mva
    }
}
