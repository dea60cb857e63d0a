//! Command-line front end. Exit codes: 0 pass, 1 domain failure, 2 usage or
//! I/O failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::assign::{build_dynamic_case, AssignmentConfig, CompositionRatio, PlantGroup, TemplateLibrary};
use crate::case::{validate_case, PowerFlowCase};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsOptions, MetricsThresholds};
use crate::powerflow::{solve_powerflow_with, PowerFlowOptions};
use crate::screen::{screen, Contingency, ContingencySet, ScreenPlan};
use crate::sim::events::EventSchedule;
use crate::sim::result::SimulationResult;
use crate::sim::{initialize_simulation, SimOptions};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "renewdyn", version, about = "Renewable dynamic-model assignment and transient-stability screening")]
pub struct Cli {
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print nothing on standard output; rely on the exit code.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a case file for structural errors.
    Validate { case: PathBuf },
    /// Solve the power flow.
    Pf(PfArgs),
    /// Attach renewable dynamic models to a case.
    Assign(AssignArgs),
    /// Run a time-domain simulation.
    Sim(SimArgs),
    /// Compute stability metrics from a simulation CSV.
    Metrics(MetricsArgs),
    /// Simulate a batch of N-1 contingencies and summarize their metrics.
    Screen(ScreenArgs),
}

#[derive(Debug, Args)]
pub struct PfArgs {
    pub case: PathBuf,
    /// Write the case with solved voltages and dispatch here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep PV buses regulating even past their reactive limits.
    #[arg(long)]
    pub no_q_limits: bool,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    pub case: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Template library JSON (defaults to the bundled library).
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Probability that a wind unit is Type 3.
    #[arg(long)]
    pub type3_fraction: Option<f64>,
    /// JSON map of plant id to `{"members": [...], "reg_bus": N}`.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the manifest JSON here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    pub case: PathBuf,
    /// Event schedule JSON; omit for an event-free run.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tend: f64,
    /// Bus-frequency filter time constant, s.
    #[arg(long, default_value_t = 0.04)]
    pub freq_filter_tc: f64,
    /// Comma-separated channel patterns to record.
    #[arg(long, value_delimiter = ',', default_value = "*")]
    pub channels: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.03)]
    pub mr_min: f64,
    #[arg(long, default_value_t = 59.5)]
    pub mf_low: f64,
    #[arg(long, default_value_t = 60.5)]
    pub mf_high: f64,
    #[arg(long, default_value_t = 0.75)]
    pub mv_min: f64,
    /// Oscillations smaller than this, in degrees, count as none.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude_floor: f64,
}

impl ThresholdArgs {
    fn thresholds(&self) -> MetricsThresholds {
        MetricsThresholds {
            mr_min: self.mr_min,
            mf_low: self.mf_low,
            mf_high: self.mf_high,
            mv_min: self.mv_min,
        }
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub csv: PathBuf,
    /// Start of the post-event window (default: last event + 0.5 s).
    #[arg(long)]
    pub window_start: Option<f64>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    pub case: PathBuf,
    /// Include every single-generator outage.
    #[arg(long)]
    pub outages: bool,
    /// Include a fault at every bus.
    #[arg(long)]
    pub faults: bool,
    /// Fault duration for `--faults`, s.
    #[arg(long, default_value_t = 0.05)]
    pub clear_after: f64,
    /// JSON list of `{"name": ..., "events": [...]}` contingencies.
    #[arg(long)]
    pub list: Option<PathBuf>,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub event_time: f64,
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tend: f64,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse(_) | Error::Config(_) | Error::Metrics(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

struct Io<'a> {
    json: bool,
    quiet: bool,
    out: &'a mut dyn Write,
}

impl Io<'_> {
    fn text(&mut self, s: &str) {
        if !self.quiet && !self.json {
            let _ = write!(self.out, "{s}");
        }
    }

    fn json(&mut self, v: &impl serde::Serialize) {
        if !self.quiet && self.json {
            let _ = writeln!(self.out, "{}", serde_json::to_string_pretty(v).expect("serializes"));
        }
    }
}

fn write_json(path: &PathBuf, v: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Run with the given arguments (including the program name), writing
/// normal output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let mut io = Io {
        json: cli.json,
        quiet: cli.quiet,
        out,
    };
    let res = match &cli.command {
        Command::Validate { case } => cmd_validate(case, &mut io),
        Command::Pf(a) => cmd_pf(a, &mut io),
        Command::Assign(a) => cmd_assign(a, &mut io),
        Command::Sim(a) => cmd_sim(a, &mut io),
        Command::Metrics(a) => cmd_metrics(a, &mut io),
        Command::Screen(a) => cmd_screen(a, &mut io),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_validate(path: &PathBuf, io: &mut Io) -> Result<i32> {
    let case = PowerFlowCase::load(path)?;
    let rep = validate_case(&case);
    io.text(&rep.render_text());
    io.json(&rep);
    Ok(if rep.is_ok() { EXIT_PASS } else { EXIT_FAIL })
}

fn load_valid(path: &PathBuf) -> Result<PowerFlowCase> {
    let case = PowerFlowCase::load(path)?;
    let rep = validate_case(&case);
    if !rep.is_ok() {
        return Err(Error::InvalidCase(rep.render_text().trim_end().replace('\n', "; ")));
    }
    Ok(case)
}

fn cmd_pf(a: &PfArgs, io: &mut Io) -> Result<i32> {
    let mut case = load_valid(&a.case)?;
    let opts = PowerFlowOptions {
        enforce_q_limits: !a.no_q_limits,
        ..PowerFlowOptions::default()
    };
    let sol = solve_powerflow_with(&case, opts)?;
    let mut s = format!(
        "converged: {} in {} iterations, max mismatch {:.3e} MVA\n{:>6} {:>9} {:>10}\n",
        sol.converged, sol.iterations, sol.max_mismatch, "bus", "v_pu", "angle_deg"
    );
    for (k, id) in sol.bus_ids.iter().enumerate() {
        s.push_str(&format!("{id:>6} {:>9.5} {:>10.4}\n", sol.v_mag[k], sol.v_angle[k].to_degrees()));
    }
    io.text(&s);
    io.json(&sol);
    if !sol.converged {
        return Ok(EXIT_FAIL);
    }
    if let Some(out) = &a.out {
        sol.apply_to(&mut case);
        case.save(out)?;
    }
    Ok(EXIT_PASS)
}

fn cmd_assign(a: &AssignArgs, io: &mut Io) -> Result<i32> {
    let case = load_valid(&a.case)?;
    let library = match &a.templates {
        Some(p) => TemplateLibrary::load(p)?,
        None => TemplateLibrary::default(),
    };
    let mut ratio = CompositionRatio::default();
    if let Some(f) = a.type3_fraction {
        ratio = CompositionRatio {
            p_type3: f,
            p_type4: 1.0 - f,
        };
    }
    let plant_grouping: BTreeMap<String, PlantGroup> = match &a.grouping {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?
        }
        None => BTreeMap::new(),
    };
    let cfg = AssignmentConfig {
        seed: a.seed,
        ratio,
        library,
        plant_grouping,
    };
    let (dyn_case, manifest) = build_dynamic_case(&case, &cfg)?;
    dyn_case.save(&a.out)?;
    if let Some(m) = &a.manifest {
        write_json(m, &manifest)?;
    }
    let mut s = format!(
        "seed {}: {} renewable units in {} plants\n",
        manifest.seed, manifest.renewable_units, manifest.plants
    );
    for (m, n) in &manifest.models {
        s.push_str(&format!("  {m:<10} {n}\n"));
    }
    s.push_str(&format!("  headroom units: {}\n", manifest.headroom_units));
    for w in &manifest.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    io.text(&s);
    io.json(&manifest);
    Ok(EXIT_PASS)
}

fn cmd_sim(a: &SimArgs, io: &mut Io) -> Result<i32> {
    let case = load_valid(&a.case)?;
    let events = match &a.events {
        Some(p) => EventSchedule::load(p)?,
        None => EventSchedule::default(),
    };
    let opts = SimOptions {
        dt: a.dt,
        t_end: a.tend,
        record_channels: a.channels.clone(),
        freq_filter_tc: a.freq_filter_tc,
    };
    opts.check()?;
    let (result, err) = initialize_simulation(&case, &opts)?.run_partial(&events)?;
    result.save(&a.out)?;
    let s = format!(
        "{} samples x {} channels written to {}\n",
        result.time.len(),
        result.names.len(),
        a.out.display()
    );
    io.text(&s);
    io.json(&result.meta);
    match err {
        None => Ok(EXIT_PASS),
        Some(e) => Err(e),
    }
}

fn cmd_metrics(a: &MetricsArgs, io: &mut Io) -> Result<i32> {
    let result = SimulationResult::load(&a.csv)?;
    let opts = MetricsOptions {
        window_start: a.window_start,
        amplitude_floor_deg: a.thresholds.amplitude_floor,
        ..MetricsOptions::default()
    };
    let rep = evaluate(&result, &a.thresholds.thresholds(), &opts)?;
    if let Some(p) = &a.out {
        write_json(p, &rep)?;
    }
    let verdict = |p: bool| if p { "pass" } else { "FAIL" };
    let mr = rep.mr.value.map_or_else(|| format!("{:?}", rep.mr.status).to_lowercase(), |v| format!("{v:.4}"));
    let s = format!(
        "Mr {mr} ({}) {}\nMf [{:.4}, {:.4}] Hz ({}) {}\nMv {:.4} ({}) {}\nwindow [{:.3}, {:.3}] s: {}\n",
        rep.mr.worst.as_deref().unwrap_or("-"),
        verdict(rep.mr.pass),
        rep.mf.min,
        rep.mf.max,
        rep.mf.worst,
        verdict(rep.mf.pass),
        rep.mv.value,
        rep.mv.worst.as_deref().unwrap_or("-"),
        verdict(rep.mv.pass),
        rep.window.0,
        rep.window.1,
        verdict(rep.pass)
    );
    io.text(&s);
    io.json(&rep);
    Ok(if rep.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_screen(a: &ScreenArgs, io: &mut Io) -> Result<i32> {
    let case = load_valid(&a.case)?;
    let mut sets = Vec::new();
    if a.outages {
        sets.push(ContingencySet::AllGeneratorOutages);
    }
    if a.faults {
        sets.push(ContingencySet::AllBusFaults {
            clear_after_s: a.clear_after,
        });
    }
    if let Some(p) = &a.list {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let list: Vec<Contingency> =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        sets.push(ContingencySet::Explicit(list));
    }
    let defaults = ScreenPlan::default();
    let plan = ScreenPlan {
        sets: if sets.is_empty() { defaults.sets.clone() } else { sets },
        jobs: a.jobs,
        event_time: a.event_time,
        sim: SimOptions {
            dt: a.dt,
            t_end: a.tend,
            ..defaults.sim.clone()
        },
        thresholds: a.thresholds.thresholds(),
        metrics: MetricsOptions {
            amplitude_floor_deg: a.thresholds.amplitude_floor,
            ..defaults.metrics
        },
    };
    let rep = screen(&case, &plan)?;
    rep.write(&a.out_dir)?;
    let sm = &rep.summary;
    let mut s = format!("{}/{} contingencies pass\n", sm.passed, sm.contingencies);
    for (name, d) in [("Mr", &sm.mr), ("Mf min", &sm.mf_min), ("Mf max", &sm.mf_max), ("Mv", &sm.mv)] {
        if let Some(d) = d {
            s.push_str(&format!(
                "  {name:<7} min {:.4}  q1 {:.4}  median {:.4}  q3 {:.4}  max {:.4}\n",
                d.min, d.q1, d.median, d.q3, d.max
            ));
        }
    }
    for f in &sm.failed {
        s.push_str(&format!("failed: {f}\n"));
    }
    for e in &sm.errors {
        s.push_str(&format!("error: {e}\n"));
    }
    io.text(&s);
    io.json(sm);
    Ok(if sm.all_pass { EXIT_PASS } else { EXIT_FAIL })
}
