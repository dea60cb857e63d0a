//! N-1 contingency screening over a worker pool.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::case::PowerFlowCase;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsOptions, MetricsReport, MetricsThresholds};
use crate::sim::events::{Event, EventSchedule};
use crate::sim::{initialize_simulation, SimOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub name: String,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContingencySet {
    AllGeneratorOutages,
    AllBusFaults { clear_after_s: f64 },
    Explicit(Vec<Contingency>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenPlan {
    pub sets: Vec<ContingencySet>,
    /// Worker count; 0 uses all cores.
    pub jobs: usize,
    /// When the contingency is applied, s.
    pub event_time: f64,
    pub sim: SimOptions,
    pub thresholds: MetricsThresholds,
    pub metrics: MetricsOptions,
}

impl Default for ScreenPlan {
    fn default() -> Self {
        ScreenPlan {
            sets: vec![
                ContingencySet::AllGeneratorOutages,
                ContingencySet::AllBusFaults { clear_after_s: 0.05 },
            ],
            jobs: 0,
            event_time: 1.0,
            sim: SimOptions {
                record_channels: vec!["bus.*".into(), "*.rotor_angle_deg".into()],
                ..SimOptions::default()
            },
            thresholds: MetricsThresholds::default(),
            metrics: MetricsOptions::default(),
        }
    }
}

/// Expand the plan's sets into concrete contingencies, in a fixed order.
pub fn contingencies(case: &PowerFlowCase, plan: &ScreenPlan) -> Result<Vec<Contingency>> {
    let mut out = Vec::new();
    for set in &plan.sets {
        match set {
            ContingencySet::AllGeneratorOutages => {
                for g in case.generators.iter().filter(|g| g.is_on()) {
                    out.push(Contingency {
                        name: format!("outage.{}", g.key()),
                        events: vec![Event::outage(&g.key(), plan.event_time)],
                    });
                }
            }
            ContingencySet::AllBusFaults { clear_after_s } => {
                if !(*clear_after_s > 0.0) {
                    return Err(Error::Config(format!("clear_after_s must be positive, got {clear_after_s}")));
                }
                for b in &case.buses {
                    out.push(Contingency {
                        name: format!("fault.bus.{}", b.id),
                        events: vec![
                            Event::bus_fault(b.id, plan.event_time),
                            Event::clear_fault(b.id, plan.event_time + clear_after_s),
                        ],
                    });
                }
            }
            ContingencySet::Explicit(list) => out.extend(list.iter().cloned()),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Box-plot statistics with linear-interpolation quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile `q` of sorted data, interpolating between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Distribution {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Distribution {
            n: v.len(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub contingencies: usize,
    pub passed: usize,
    pub failed: Vec<String>,
    pub errors: Vec<String>,
    pub mr: Option<Distribution>,
    /// Indeterminate damping results, excluded from `mr`.
    pub mr_indeterminate: usize,
    pub mf_min: Option<Distribution>,
    pub mf_max: Option<Distribution>,
    pub mv: Option<Distribution>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub outcomes: Vec<Outcome>,
    pub summary: Summary,
}

fn run_one(case: &PowerFlowCase, c: &Contingency, plan: &ScreenPlan) -> Outcome {
    let res = (|| {
        let ev = EventSchedule::new(c.events.clone())?;
        let r = initialize_simulation(case, &plan.sim)?.run(&ev)?;
        evaluate(&r, &plan.thresholds, &plan.metrics)
    })();
    match res {
        Ok(rep) => Outcome {
            name: c.name.clone(),
            pass: rep.pass,
            report: Some(rep),
            error: None,
        },
        Err(e) => Outcome {
            name: c.name.clone(),
            pass: false,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn summarize(outcomes: &[Outcome]) -> Summary {
    let reports: Vec<&MetricsReport> = outcomes.iter().filter_map(|o| o.report.as_ref()).collect();
    let mr: Vec<f64> = reports.iter().filter_map(|r| r.mr.value).collect();
    let col = |f: &dyn Fn(&MetricsReport) -> f64| Distribution::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
    Summary {
        contingencies: outcomes.len(),
        passed: outcomes.iter().filter(|o| o.pass).count(),
        failed: outcomes.iter().filter(|o| !o.pass).map(|o| o.name.clone()).collect(),
        errors: outcomes
            .iter()
            .filter_map(|o| o.error.as_ref().map(|e| format!("{}: {e}", o.name)))
            .collect(),
        mr: Distribution::of(&mr),
        mr_indeterminate: reports.len() - mr.len(),
        mf_min: col(&|r| r.mf.min),
        mf_max: col(&|r| r.mf.max),
        mv: col(&|r| r.mv.value),
        all_pass: !outcomes.is_empty() && outcomes.iter().all(|o| o.pass),
    }
}

/// Simulate every contingency and evaluate its metrics. A failing
/// contingency is recorded and the rest still run.
pub fn screen(case: &PowerFlowCase, plan: &ScreenPlan) -> Result<ScreenReport> {
    let list = contingencies(case, plan)?;
    if list.is_empty() {
        return Err(Error::Config("empty contingency list".into()));
    }
    plan.sim.check()?;
    plan.thresholds.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| list.par_iter().map(|c| run_one(case, c, plan)).collect());
    let summary = summarize(&outcomes);
    Ok(ScreenReport { outcomes, summary })
}

impl ScreenReport {
    /// `<dir>/<name>.json` per contingency plus `<dir>/summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, v: &dyn erased::Json| {
            let p = dir.join(format!("{name}.json"));
            std::fs::write(&p, v.pretty()).map_err(|e| Error::io(&p, e))
        };
        for o in &self.outcomes {
            put(&o.name, o)?;
        }
        put("summary", &self.summary)
    }
}

mod erased {
    pub trait Json {
        fn pretty(&self) -> String;
    }
    impl<T: serde::Serialize> Json for T {
        fn pretty(&self) -> String {
            let mut s = serde_json::to_string_pretty(self).expect("serializes");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_interpolation_quartiles() {
        let d = Distribution::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((d.min, d.q1, d.median, d.q3, d.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        let d = Distribution::of(&[7.0]).unwrap();
        assert_eq!((d.q1, d.median, d.q3), (7.0, 7.0, 7.0));
        assert!(Distribution::of(&[]).is_none());
    }

    proptest! {
        #[test]
        fn quartiles_are_ordered(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let d = Distribution::of(&v).unwrap();
            prop_assert!(d.min <= d.q1 && d.q1 <= d.median && d.median <= d.q3 && d.q3 <= d.max);
        }
    }

    #[test]
    fn contingency_expansion() {
        let case = crate::fixtures::wscc9_renewable();
        let plan = ScreenPlan::default();
        let c = contingencies(&case, &plan).unwrap();
        assert_eq!(c.len(), case.generators.len() + case.buses.len());
        assert_eq!(c[0].name, "outage.gen.1.1");
        let bad = ScreenPlan {
            sets: vec![ContingencySet::AllBusFaults { clear_after_s: 0.0 }],
            ..ScreenPlan::default()
        };
        assert!(contingencies(&case, &bad).is_err());
        let empty = ScreenPlan {
            sets: vec![ContingencySet::Explicit(vec![])],
            ..ScreenPlan::default()
        };
        assert!(screen(&case, &empty).is_err());
    }
}
