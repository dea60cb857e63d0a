//! Contingency events and their JSON form.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::case::GenKey;
use crate::error::{Error, Result};

fn default_fault_admittance() -> [f64; 2] {
    [1e4, -1e4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    BusFault {
        bus: u32,
        /// `[g, b]` in pu on the system base.
        #[serde(default = "default_fault_admittance")]
        fault_admittance: [f64; 2],
    },
    ClearFault {
        bus: u32,
    },
    GeneratorOutage {
        bus: u32,
        unit_id: String,
    },
    /// Steps the frequency of an `infinite_source` unit by `df_hz` from nominal.
    FrequencyStep {
        bus: u32,
        unit_id: String,
        df_hz: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn bus_fault(bus: u32, time: f64) -> Self {
        Event {
            time,
            kind: EventKind::BusFault {
                bus,
                fault_admittance: default_fault_admittance(),
            },
        }
    }

    pub fn clear_fault(bus: u32, time: f64) -> Self {
        Event {
            time,
            kind: EventKind::ClearFault { bus },
        }
    }

    pub fn outage(key: &GenKey, time: f64) -> Self {
        Event {
            time,
            kind: EventKind::GeneratorOutage {
                bus: key.bus,
                unit_id: key.unit_id.clone(),
            },
        }
    }

    pub fn frequency_step(key: &GenKey, df_hz: f64, time: f64) -> Self {
        Event {
            time,
            kind: EventKind::FrequencyStep {
                bus: key.bus,
                unit_id: key.unit_id.clone(),
                df_hz,
            },
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            EventKind::BusFault { bus, fault_admittance: [g, b] } => format!("bus fault at {bus} (y = {g}{b:+}j pu)"),
            EventKind::ClearFault { bus } => format!("clear fault at {bus}"),
            EventKind::GeneratorOutage { bus, unit_id } => format!("outage of gen.{bus}.{unit_id}"),
            EventKind::FrequencyStep { bus, unit_id, df_hz } => {
                format!("frequency of gen.{bus}.{unit_id} set to {:+} Hz", df_hz)
            }
        }
    }

    pub(crate) fn fault_admittance(&self) -> Option<Complex64> {
        match self.kind {
            EventKind::BusFault { fault_admittance: [g, b], .. } => Some(Complex64::new(g, b)),
            _ => None,
        }
    }
}

/// Ordered list of events.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventSchedule(pub Vec<Event>);

impl EventSchedule {
    pub fn new(mut events: Vec<Event>) -> Result<Self> {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let s = EventSchedule(events);
        s.check()?;
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let events: Vec<Event> = serde_json::from_str(text).map_err(|e| Error::Parse(format!("events: {e}")))?;
        Self::new(events)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json_str(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.0.iter().map(|e| e.time).fold(None, |m, t| Some(m.map_or(t, |m: f64| m.max(t))))
    }

    pub fn first_time(&self) -> Option<f64> {
        self.0.iter().map(|e| e.time).fold(None, |m, t| Some(m.map_or(t, |m: f64| m.min(t))))
    }

    fn check(&self) -> Result<()> {
        let mut open = std::collections::BTreeSet::new();
        for e in &self.0 {
            if !(e.time >= 0.0) || !e.time.is_finite() {
                return Err(Error::Config(format!("event time {} must be >= 0", e.time)));
            }
            match &e.kind {
                EventKind::BusFault { bus, fault_admittance } => {
                    if !fault_admittance.iter().all(|v| v.is_finite()) {
                        return Err(Error::Config("fault admittance must be finite".into()));
                    }
                    open.insert(*bus);
                }
                EventKind::ClearFault { bus } => {
                    if !open.remove(bus) {
                        return Err(Error::Config(format!("clear_fault at bus {bus} without a preceding bus_fault")));
                    }
                }
                EventKind::FrequencyStep { df_hz, .. } if !df_hz.is_finite() => {
                    return Err(Error::Config("frequency step must be finite".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
