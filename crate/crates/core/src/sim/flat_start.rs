//! Event-free run used to confirm a case starts at equilibrium.

use serde::Serialize;

use super::events::EventSchedule;
use super::{initialize_simulation, SimOptions, Simulation};
use crate::case::PowerFlowCase;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatStartReport {
    pub horizon_s: f64,
    /// Worst bus-voltage deviation from its t=0 value, pu.
    pub max_dv: f64,
    pub max_dv_bus: Option<u32>,
    /// Worst bus-frequency deviation from its t=0 value, Hz.
    pub max_df_hz: f64,
    pub max_df_bus: Option<u32>,
    pub init_max_derivative: f64,
}

impl FlatStartReport {
    pub fn is_flat(&self, dv_tol: f64, df_tol: f64) -> bool {
        self.max_dv < dv_tol && self.max_df_hz < df_tol
    }
}

pub fn check_flat_start(case: &PowerFlowCase, horizon_s: f64) -> Result<FlatStartReport> {
    let mut sim = initialize_simulation(case, &SimOptions::with_t_end(horizon_s))?;
    check_flat_start_sim(&mut sim, horizon_s)
}

/// Same as [`check_flat_start`] for an already initialized (and possibly
/// perturbed) simulation.
pub fn check_flat_start_sim(sim: &mut Simulation, horizon_s: f64) -> Result<FlatStartReport> {
    sim.opts.t_end = horizon_s;
    sim.opts.record_channels = vec!["bus.*.v_pu".into(), "bus.*.f_hz".into()];
    let init_max_derivative = sim.max_derivative()?;
    let r = sim.run(&EventSchedule::default())?;
    let worst = |suffix: &str| {
        let mut best = (0.0f64, None);
        for (name, d) in r.channels_matching(suffix) {
            let d0 = d[0];
            let dev = d.iter().fold(0.0f64, |m, x| m.max((x - d0).abs()));
            if dev > best.0 || best.1.is_none() {
                let bus = name.split('.').nth(1).and_then(|b| b.parse::<u32>().ok());
                best = (dev, bus);
            }
        }
        best
    };
    let (max_dv, max_dv_bus) = worst("bus.*.v_pu");
    let (max_df_hz, max_df_bus) = worst("bus.*.f_hz");
    Ok(FlatStartReport {
        horizon_s,
        max_dv,
        max_dv_bus,
        max_df_hz,
        max_df_bus,
        init_max_derivative,
    })
}
