//! Recorded channels, run metadata and their CSV/JSON forms.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    /// Time the event was applied (snapped to the step grid), s.
    pub time: f64,
    pub requested_time: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// Channel name or bus label.
    pub what: String,
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - 1e-9 && t <= self.end + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: usize,
    pub factorizations: usize,
    pub network_solves: usize,
    pub max_network_iterations: usize,
    /// Max-norm of the state derivative right after initialization.
    pub init_max_derivative: f64,
    /// Steps split at a converter dip-mode switch.
    #[serde(default)]
    pub mode_switch_splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub dt: f64,
    pub t_end: f64,
    pub freq_filter_tc: f64,
    pub integrator: String,
    pub load_model: String,
    pub events: Vec<EventLogEntry>,
    /// Bus faults as `[applied, cleared)` windows (`what` = `bus.N`).
    pub fault_intervals: Vec<Interval>,
    /// Samples of a channel that must not be used (de-energized buses).
    pub flagged: Vec<Interval>,
    pub warnings: Vec<String>,
    pub stats: SolverStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SimMeta {
    pub fn last_event_time(&self) -> Option<f64> {
        self.events.iter().map(|e| e.time).reduce(f64::max)
    }

    pub fn first_event_time(&self) -> Option<f64> {
        self.events.iter().map(|e| e.time).reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub time: Vec<f64>,
    pub names: Vec<String>,
    /// One series per name, same length as `time`.
    pub data: Vec<Vec<f64>>,
    pub meta: SimMeta,
}

/// Sidecar path `<dir>/<stem>.meta.json` for a CSV path.
pub fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.json"))
}

impl SimulationResult {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.data[i].as_slice())
    }

    pub fn channels_matching<'a>(&'a self, pattern: &'a str) -> impl Iterator<Item = (&'a str, &'a [f64])> + 'a {
        self.names
            .iter()
            .zip(&self.data)
            .filter(move |(n, _)| glob_match(pattern, n))
            .map(|(n, d)| (n.as_str(), d.as_slice()))
    }

    /// Flag mask for a channel, true where its samples are unusable.
    pub fn flag_mask(&self, name: &str) -> Vec<bool> {
        let iv: Vec<&Interval> = self.meta.flagged.iter().filter(|i| i.what == name).collect();
        self.time.iter().map(|&t| iv.iter().any(|i| i.contains(t))).collect()
    }

    pub fn dt(&self) -> f64 {
        self.meta.dt
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["time_s".to_string()];
        header.extend(self.names.iter().cloned());
        wr.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
        let mut row = Vec::with_capacity(header.len());
        for (k, t) in self.time.iter().enumerate() {
            row.clear();
            row.push(format!("{t}"));
            for d in &self.data {
                row.push(format!("{}", d[k]));
            }
            wr.write_record(&row).map_err(|e| Error::Parse(e.to_string()))?;
        }
        wr.flush().map_err(|e| Error::io("csv", e))?;
        Ok(())
    }

    /// Write the CSV and its `.meta.json` sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let mp = meta_path(csv_path);
        let mut text = serde_json::to_string_pretty(&self.meta).expect("meta serializes");
        text.push('\n');
        std::fs::write(&mp, text).map_err(|e| Error::io(&mp, e))
    }

    /// Read a CSV written by [`save`](Self::save); the sidecar is used when
    /// present, otherwise metadata is inferred from the time axis.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(csv_path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(csv_path, std::io::Error::other(e.to_string())),
            _ => Error::Parse(e.to_string()),
        })?;
        let headers = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.get(0) != Some("time_s") {
            return Err(Error::Parse("first CSV column must be time_s".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
        let mut time = Vec::new();
        let mut data = vec![Vec::new(); names.len()];
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            time.push(parse(&rec[0])?);
            for (j, d) in data.iter_mut().enumerate() {
                d.push(parse(rec.get(j + 1).ok_or_else(|| Error::Parse("short CSV row".into()))?)?);
            }
        }
        let mp = meta_path(csv_path);
        let meta = if mp.exists() {
            let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", mp.display())))?
        } else {
            let dt = if time.len() > 1 { time[1] - time[0] } else { 0.0 };
            SimMeta {
                dt,
                t_end: time.last().copied().unwrap_or(0.0),
                freq_filter_tc: 0.0,
                integrator: String::new(),
                load_model: String::new(),
                events: vec![],
                fault_intervals: vec![],
                flagged: vec![],
                warnings: vec![],
                stats: SolverStats::default(),
                aborted_at: None,
                error: None,
            }
        };
        Ok(SimulationResult { time, names, data, meta })
    }
}

/// Glob match supporting `*` wildcards.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == text;
    }
    let mut rest = text;
    for (i, part) in parts.iter().enumerate() {
        if i == 0 {
            match rest.strip_prefix(part) {
                Some(r) => rest = r,
                None => return false,
            }
        } else if i == parts.len() - 1 {
            return rest.len() >= part.len() && rest.ends_with(part);
        } else {
            match rest.find(part) {
                Some(p) => rest = &rest[p + part.len()..],
                None => return false,
            }
        }
    }
    true
}
