//! `dynamics[]` records of the case document and their typed parameters.

use serde::{Deserialize, Serialize};

use super::classical::{ClassicalParams, InfiniteSourceParams};
use super::reec::ReecParams;
use super::regc::RegcParams;
use super::repc::{RepcParams, RepcVariant};
use super::wtga::WtgaParams;
use super::wtgp::WtgpParams;
use super::wtgq::WtgqParams;
use super::wtgt::WtgtParams;
use crate::case::GenKey;
use crate::error::{Error, Result};

/// Renewable resource type, which fixes the module set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceType {
    Type3,
    Type4,
    Pv,
}

impl ResourceType {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceType::Type3 => "type3",
            ResourceType::Type4 => "type4",
            ResourceType::Pv => "pv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    RegcA,
    ReecA,
    RepcA,
    RepcB,
    WtgtA,
    WtgaA,
    WtgpA,
    WtgqA,
    Classical,
    InfiniteSource,
}

impl ModelName {
    pub const ALL: [ModelName; 10] = [
        ModelName::RegcA,
        ModelName::ReecA,
        ModelName::RepcA,
        ModelName::RepcB,
        ModelName::WtgtA,
        ModelName::WtgaA,
        ModelName::WtgpA,
        ModelName::WtgqA,
        ModelName::Classical,
        ModelName::InfiniteSource,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::RegcA => "regc_a",
            ModelName::ReecA => "reec_a",
            ModelName::RepcA => "repc_a",
            ModelName::RepcB => "repc_b",
            ModelName::WtgtA => "wtgt_a",
            ModelName::WtgaA => "wtga_a",
            ModelName::WtgpA => "wtgp_a",
            ModelName::WtgqA => "wtgq_a",
            ModelName::Classical => "classical",
            ModelName::InfiniteSource => "infinite_source",
        }
    }

    pub fn is_plant_controller(self) -> bool {
        matches!(self, ModelName::RepcA | ModelName::RepcB)
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

/// One block bound to a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicRecord {
    pub model: ModelName,
    pub bus: u32,
    pub unit_id: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    /// Plant-controller membership (repc records only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controlled_units: Option<Vec<GenKey>>,
    /// Bus regulated by a plant controller; defaults to the record's bus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg_bus: Option<u32>,
    /// Provenance label of the template the parameters came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
}

impl DynamicRecord {
    pub fn new(model: ModelName, key: &GenKey, params: serde_json::Value) -> Self {
        DynamicRecord {
            model,
            bus: key.bus,
            unit_id: key.unit_id.clone(),
            params,
            controlled_units: None,
            reg_bus: None,
            template: None,
        }
    }

    pub fn key(&self) -> GenKey {
        GenKey::new(self.bus, &self.unit_id)
    }

    /// Members of a plant controller; the record's own unit when unset.
    pub fn members(&self) -> Vec<GenKey> {
        self.controlled_units.clone().unwrap_or_else(|| vec![self.key()])
    }

    pub fn typed(&self) -> Result<ModelParams> {
        fn parse<P: serde::de::DeserializeOwned>(r: &DynamicRecord) -> Result<P> {
            serde_json::from_value(r.params.clone())
                .map_err(|e| Error::Parse(format!("{} params for {}: {e}", r.model, r.key())))
        }
        Ok(match self.model {
            ModelName::RegcA => ModelParams::Regc(parse(self)?),
            ModelName::ReecA => {
                let p: ReecParams = parse(self)?;
                p.check()?;
                ModelParams::Reec(p)
            }
            ModelName::RepcA | ModelName::RepcB => {
                let mut p: RepcParams = parse(self)?;
                p.variant = if self.model == ModelName::RepcB {
                    RepcVariant::B
                } else {
                    RepcVariant::A
                };
                p.check(self.members().len())?;
                ModelParams::Repc(p)
            }
            ModelName::WtgtA => ModelParams::Wtgt(parse(self)?),
            ModelName::WtgaA => ModelParams::Wtga(parse(self)?),
            ModelName::WtgpA => ModelParams::Wtgp(parse(self)?),
            ModelName::WtgqA => ModelParams::Wtgq(parse(self)?),
            ModelName::Classical => ModelParams::Classical(parse(self)?),
            ModelName::InfiniteSource => ModelParams::InfiniteSource(parse(self)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Regc(RegcParams),
    Reec(ReecParams),
    Repc(RepcParams),
    Wtgt(WtgtParams),
    Wtga(WtgaParams),
    Wtgp(WtgpParams),
    Wtgq(WtgqParams),
    Classical(ClassicalParams),
    InfiniteSource(InfiniteSourceParams),
}

/// Serialize a parameter record into the JSON stored in a dynamics record.
pub fn params_value<P: Serialize>(p: &P) -> serde_json::Value {
    serde_json::to_value(p).expect("parameters serialize")
}
