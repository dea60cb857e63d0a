//! Renewable dynamic-model assignment and transient-stability simulation.
//!
//! Control blocks and metric estimators are generic over [`scalar::Real`]
//! (`f32`, `f64`); the network, power flow and simulator work in `f64`.
//! The aliases below fix the scalar for the common cases.

pub mod assign;
pub mod blocks;
pub mod case;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod metrics;
pub mod powerflow;
pub mod scalar;
pub mod screen;
pub mod sim;

pub use assign::{build_dynamic_case, AssignmentConfig, CompositionRatio, Manifest, TemplateLibrary};
pub use blocks::record::{DynamicRecord, ModelName, ResourceType};
pub use case::{validate_case, GenKey, PowerFlowCase};
pub use error::{Error, Result};
pub use metrics::{evaluate, MetricsReport, MetricsThresholds};
pub use powerflow::{check_flat_start, solve_powerflow, PowerFlowSolution};
pub use scalar::Real;
pub use screen::{screen, ScreenPlan};
pub use sim::events::{Event, EventKind, EventSchedule};
pub use sim::result::SimulationResult;
pub use sim::{initialize_simulation, simulate, SimOptions};

pub type RegcParams = blocks::regc::RegcParams<f64>;
pub type ReecParams = blocks::reec::ReecParams<f64>;
pub type RepcParams = blocks::repc::RepcParams<f64>;
pub type WtgtParams = blocks::wtgt::WtgtParams<f64>;
pub type WtgaParams = blocks::wtga::WtgaParams<f64>;
pub type WtgpParams = blocks::wtgp::WtgpParams<f64>;
pub type WtgqParams = blocks::wtgq::WtgqParams<f64>;
pub type ClassicalParams = blocks::classical::ClassicalParams<f64>;
pub type DampingEstimate = metrics::DampingEstimate<f64>;

pub type RegcParamsF32 = blocks::regc::RegcParams<f32>;
pub type ReecParamsF32 = blocks::reec::ReecParams<f32>;
pub type RepcParamsF32 = blocks::repc::RepcParams<f32>;
pub type WtgtParamsF32 = blocks::wtgt::WtgtParams<f32>;
pub type WtgaParamsF32 = blocks::wtga::WtgaParams<f32>;
pub type WtgpParamsF32 = blocks::wtgp::WtgpParams<f32>;
pub type WtgqParamsF32 = blocks::wtgq::WtgqParams<f32>;
pub type ClassicalParamsF32 = blocks::classical::ClassicalParams<f32>;
pub type DampingEstimateF32 = metrics::DampingEstimate<f32>;
