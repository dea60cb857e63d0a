//! Template library: per-module parameter templates and the distributions
//! used by the assignment draws.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blocks::record::ModelName;
use crate::case::Fuel;
use crate::error::{Error, Result};

const DEFAULT_LIBRARY: &str = include_str!("../../templates/default_library.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterTemplate {
    pub weight: f64,
    #[serde(default)]
    pub tag: String,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactiveMode {
    /// Plant-level voltage control (Qflag=0, Refflag=1).
    PlantV,
    /// Plant-level Q control with local coordinated V/Q (Vflag=1, Qflag=1, Refflag=0).
    PlantQLocalVq,
    /// Plant-level V control with local coordinated V/Q (Vflag=1, Qflag=1, Refflag=1).
    PlantVLocalVq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealMode {
    /// Governor response with down regulation only (Dup=0).
    DownOnly,
    /// Governor response with up and down regulation.
    UpAndDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weighted<R> {
    pub row: R,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlOptionDistribution {
    pub reactive: Vec<Weighted<ReactiveMode>>,
    pub real: Vec<Weighted<RealMode>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaLimits {
    pub theta_min: f64,
    pub theta_max: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroopGains {
    pub ddn: f64,
    pub dup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateLibrary {
    pub regc_a: Vec<ParameterTemplate>,
    pub reec_a: Vec<ParameterTemplate>,
    pub repc_a: Vec<ParameterTemplate>,
    pub repc_b: Vec<ParameterTemplate>,
    pub wtgt_a: Vec<ParameterTemplate>,
    pub wtga_a: Vec<ParameterTemplate>,
    pub wtgp_a: Vec<ParameterTemplate>,
    pub wtgq_a: Vec<ParameterTemplate>,
    /// Classical-machine data for conventional units, by fuel.
    pub classical: BTreeMap<Fuel, serde_json::Value>,
    pub control_options: ControlOptionDistribution,
    pub droop: DroopGains,
    pub theta_limits: Vec<ThetaLimits>,
    pub headroom_fraction: f64,
    /// Fraction of available power held back on sub-optimal units.
    pub headroom_depth: f64,
}

impl Default for TemplateLibrary {
    fn default() -> Self {
        Self::from_json_str(DEFAULT_LIBRARY).expect("bundled library is valid")
    }
}

fn check_weights(what: &str, w: impl Iterator<Item = f64>, normalized: bool) -> Result<()> {
    let w: Vec<f64> = w.collect();
    if w.is_empty() {
        return Err(Error::Config(format!("{what}: empty distribution")));
    }
    if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Config(format!("{what}: weights must be positive")));
    }
    let sum: f64 = w.iter().sum();
    if normalized && (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{what}: probabilities sum to {sum}, expected 1")));
    }
    Ok(())
}

impl TemplateLibrary {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let lib: TemplateLibrary = serde_json::from_str(s).map_err(|e| Error::Parse(format!("template library: {e}")))?;
        lib.check()?;
        Ok(lib)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json_str(&text)
    }

    pub fn templates(&self, model: ModelName) -> Option<&[ParameterTemplate]> {
        Some(match model {
            ModelName::RegcA => &self.regc_a,
            ModelName::ReecA => &self.reec_a,
            ModelName::RepcA => &self.repc_a,
            ModelName::RepcB => &self.repc_b,
            ModelName::WtgtA => &self.wtgt_a,
            ModelName::WtgaA => &self.wtga_a,
            ModelName::WtgpA => &self.wtgp_a,
            ModelName::WtgqA => &self.wtgq_a,
            ModelName::Classical | ModelName::InfiniteSource => return None,
        })
    }

    pub fn check(&self) -> Result<()> {
        for m in ModelName::ALL {
            if let Some(ts) = self.templates(m) {
                check_weights(m.as_str(), ts.iter().map(|t| t.weight), false)?;
                for (i, t) in ts.iter().enumerate() {
                    let rec = crate::blocks::record::DynamicRecord::new(m, &crate::case::GenKey::new(0, "t"), t.params.clone());
                    rec.typed()
                        .map_err(|e| Error::Config(format!("{} template {i} ({}): {e}", m.as_str(), t.tag)))?;
                }
            }
        }
        check_weights("control_options.reactive", self.control_options.reactive.iter().map(|r| r.weight), false)?;
        check_weights("control_options.real", self.control_options.real.iter().map(|r| r.weight), false)?;
        check_weights("theta_limits", self.theta_limits.iter().map(|t| t.weight), true)?;
        if self.theta_limits.iter().any(|t| !(t.theta_min < t.theta_max)) {
            return Err(Error::Config("theta_limits: theta_min must be below theta_max".into()));
        }
        if !(0.0..=1.0).contains(&self.headroom_fraction) {
            return Err(Error::Config("headroom_fraction must be in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.headroom_depth) {
            return Err(Error::Config("headroom_depth must be in [0, 1)".into()));
        }
        if !(self.droop.ddn > 0.0 && self.droop.dup > 0.0) {
            return Err(Error::Config("droop gains must be positive".into()));
        }
        Ok(())
    }

    pub fn classical_params(&self, fuel: Fuel) -> serde_json::Value {
        self.classical.get(&fuel).cloned().unwrap_or_else(|| serde_json::json!({}))
    }
}
