//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use renewdyn::assign::{assign_headroom, assign_parameter_templates, assign_wtg_types, AssignmentConfig};
use renewdyn::case::{Fuel, GenStatus, Generator};
use renewdyn::fixtures;
use renewdyn::metrics::{log_decrement_damping, MetricsThresholds};
use renewdyn::screen::{screen, ScreenPlan};
use renewdyn::{
    check_flat_start, initialize_simulation, simulate, Event, EventSchedule, GenKey, ModelName, PowerFlowCase,
    ResourceType, SimOptions,
};
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bundled_composition_ok(case: &PowerFlowCase) -> bool {
    let count = |m: ModelName| case.dynamics.iter().filter(|r| r.model == m).count();
    let multi_unit_repc_b = case
        .dynamics
        .iter()
        .any(|r| r.model == ModelName::RepcB && r.controlled_units.as_ref().is_some_and(|u| u.len() > 1));
    case.buses.len() >= 9
        && count(ModelName::WtgqA) >= 1
        && count(ModelName::WtgtA) > count(ModelName::WtgqA)
        && multi_unit_repc_b
        && count(ModelName::Classical) >= 2
}

fn flat_start() -> Outcome {
    let case = fixtures::bundled_case();
    let rep = check_flat_start(&case, 20.0).expect("flat-start run");
    outcome(
        bundled_composition_ok(&case) && rep.max_dv < 1e-4 && rep.max_df_hz < 1e-4,
        format!("max |dV| {:.2e} pu, max |df| {:.2e} Hz over 20 s (tol 1e-4)", rep.max_dv, rep.max_df_hz),
    )
}

fn wind_units(n: u32) -> Vec<Generator> {
    (0..n)
        .map(|i| Generator {
            bus: 10_000 + i,
            unit_id: "1".into(),
            fuel: Fuel::Wind,
            p_mw: 85.0,
            q_mvar: 0.0,
            p_max: 100.0,
            p_min: 0.0,
            q_max: 30.0,
            q_min: -30.0,
            mbase: 100.0,
            status: GenStatus::On,
            v_setpoint: 1.0,
        })
        .collect()
}

fn composition() -> Outcome {
    let n = 10_000;
    let cfg = AssignmentConfig::with_seed(2024);
    let gens = wind_units(n);
    let types = assign_wtg_types(&gens, &cfg).expect("types");
    let f3 = types.values().filter(|&&t| t == ResourceType::Type3).count() as f64 / n as f64;
    let dispatch: Vec<(GenKey, f64)> = gens.iter().map(|g| (g.key(), g.p_mw)).collect();
    let head = assign_headroom(&dispatch, &cfg);
    let fh = head.marked.len() as f64 / n as f64;
    let all3: BTreeMap<GenKey, ResourceType> = gens.iter().map(|g| (g.key(), ResourceType::Type3)).collect();
    let tpl = assign_parameter_templates(&all3, &cfg).expect("templates");
    let theta: Vec<f64> = (0..3)
        .map(|i| tpl.values().filter(|u| u.theta_limits == Some(i)).count() as f64 / n as f64)
        .collect();
    let pass = (f3 - 1.0 / 3.0).abs() <= 0.02
        && (fh - 0.15).abs() <= 0.01
        && [0.11, 0.17, 0.72].iter().zip(&theta).all(|(w, g)| (w - g).abs() <= 0.02);
    outcome(
        pass,
        format!(
            "type3 {f3:.4} (1/3 +-0.02), headroom {fh:.4} (0.15 +-0.01), theta {:.3}/{:.3}/{:.3} (0.11/0.17/0.72 +-0.02)",
            theta[0], theta[1], theta[2]
        ),
    )
}

fn reactive_support() -> Outcome {
    let case = fixtures::bundled_case();
    let ev = EventSchedule::load(repo_root().join("cases/events/poi_fault.json")).expect("events");
    let (t_on, t_off) = (1.0, 1.05);
    let r = simulate(&case, &ev, &SimOptions::with_t_end(t_off + 10.0)).expect("run");
    let mut all_up = true;
    let mut min_rise = f64::INFINITY;
    for k in 1..=fixtures::PV_UNITS {
        let q = r.channel(&format!("gen.{}.{k}.q_mvar", fixtures::PV_COLLECTOR_BUS)).expect("q channel");
        for (i, &t) in r.time.iter().enumerate() {
            if t >= t_on - 1e-9 && t < t_off - 1e-9 {
                all_up &= q[i] > q[0];
                min_rise = min_rise.min(q[i] - q[0]);
            }
        }
    }
    let mut worst_v: f64 = 0.0;
    for (_, v) in r.channels_matching("bus.*.v_pu") {
        worst_v = worst_v.max(((v[v.len() - 1] - v[0]) / v[0]).abs());
    }
    outcome(
        all_up && worst_v < 0.02,
        format!(
            "PV unit Q above pre-fault on every fault-on sample (min rise {min_rise:.3} MVAr); worst |dV|/V0 10 s after clearing {worst_v:.2e} (tol 0.02)"
        ),
    )
}

fn droop_run(pmax_mw: f64, ddn: f64, dup: f64, df_hz: f64) -> f64 {
    let case = fixtures::droop_case(50.0, pmax_mw, json!({"freq_flag": 1, "ddn": ddn, "dup": dup}));
    let ev = EventSchedule::new(vec![Event::frequency_step(&GenKey::new(1, "1"), df_hz, 1.0)]).expect("events");
    let r = simulate(&case, &ev, &SimOptions::with_t_end(40.0)).expect("run");
    let p = r.channel("gen.3.1.p_mw").expect("p channel");
    // plant base is the single unit's 100 MVA
    (p[p.len() - 1] - p[0]) / 100.0
}

/// Steady droop response on plant base for a frequency offset in Hz.
fn analytic_droop(gain: f64, df_hz: f64, deadband_hz: f64) -> f64 {
    gain * (df_hz.abs() - deadband_hz) / 60.0
}

fn droop_down_only() -> Outcome {
    let want = analytic_droop(20.0, 0.2, 0.017);
    let over = droop_run(50.0, 20.0, 0.0, 0.2);
    let under = droop_run(50.0, 20.0, 0.0, -0.2);
    let rel = (-over - want).abs() / want;
    outcome(
        rel < 0.01 && under.abs() < 1e-4,
        format!("+0.2 Hz: dP {over:.6} pu vs -{want:.6} (rel err {rel:.1e}, tol 1%); -0.2 Hz: |dP| {:.1e} (tol 1e-4)", under.abs()),
    )
}

fn droop_headroom() -> Outcome {
    let want = analytic_droop(20.0, 0.2, 0.017);
    let with = droop_run(50.0 / 0.85, 20.0, 20.0, -0.2);
    let without = droop_run(50.0, 20.0, 20.0, -0.2);
    let rel = (with - want).abs() / want;
    outcome(
        rel < 0.01 && without < 1e-4,
        format!("headroom unit dP {with:.6} pu vs {want:.6} (rel err {rel:.1e}, tol 1%); zero-headroom dP {without:.1e} (tol 1e-4)"),
    )
}

fn ringdown(zeta: f64, fd: f64) -> (Vec<f64>, Vec<f64>) {
    let wd = 2.0 * std::f64::consts::PI * fd;
    let wn = wd / (1.0 - zeta * zeta).sqrt();
    let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.005).collect();
    let y = t.iter().map(|&t| 10.0 * (-zeta * wn * t).exp() * (wd * t).cos()).collect();
    (t, y)
}

fn metrics_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for z in [0.02, 0.05, 0.1, 0.2] {
        let (t, y) = ringdown(z, 1.0);
        let est = log_decrement_damping(&t, &y, 0.1).zeta.unwrap_or(f64::NAN);
        worst = worst.max((est - z).abs());
    }
    let th = MetricsThresholds::default();
    let edges = !th.mr_passes(0.03)
        && th.mr_passes(0.030001)
        && th.mf_passes(59.5, 60.5)
        && !th.mf_passes(59.4999, 60.0)
        && !th.mf_passes(60.0, 60.5001)
        && !th.mv_passes(0.75)
        && th.mv_passes(0.750001);
    outcome(
        worst <= 0.01 && edges,
        format!("max |zeta error| {worst:.2e} over 0.02/0.05/0.1/0.2 (tol 0.01); threshold edges enforced: {edges}"),
    )
}

fn n1_screening() -> Outcome {
    let case = fixtures::bundled_case();
    let rep = screen(&case, &ScreenPlan::default()).expect("screen");
    let s = &rep.summary;
    let q = |d: &Option<renewdyn::screen::Distribution>| d.map_or("-".to_string(), |d| format!("{:.3}/{:.3}/{:.3}", d.q1, d.median, d.q3));
    outcome(
        s.all_pass && s.contingencies == case.generators.len() + case.buses.len(),
        format!(
            "{}/{} pass; quartiles Mr {} Mf_min {} Mv {}",
            s.passed,
            s.contingencies,
            q(&s.mr),
            q(&s.mf_min),
            q(&s.mv)
        ),
    )
}

fn bus_fault_run(dt: f64) -> renewdyn::SimulationResult {
    let case = fixtures::bundled_case();
    let ev = EventSchedule::new(vec![
        Event::bus_fault(fixtures::POI_BUS, 1.0),
        Event::clear_fault(fixtures::POI_BUS, 1.05),
    ])
    .expect("events");
    let opts = SimOptions {
        dt,
        t_end: 3.0,
        record_channels: vec!["bus.*.v_pu".into(), "*.rotor_angle_deg".into()],
        ..SimOptions::default()
    };
    simulate(&case, &ev, &opts).expect("run")
}

/// Max difference between two runs on the coarse run's time grid.
fn max_diff(coarse: &renewdyn::SimulationResult, fine: &renewdyn::SimulationResult) -> f64 {
    let ratio = ((coarse.dt() / fine.dt()).round()) as usize;
    let mut m: f64 = 0.0;
    for (name, c) in coarse.names.iter().zip(&coarse.data) {
        let f = fine.channel(name).expect("same channels");
        for (k, cv) in c.iter().enumerate() {
            m = m.max((cv - f[k * ratio]).abs());
        }
    }
    m
}

fn smib_drift(dt: f64) -> f64 {
    let (h, pm) = (4.0, 0.6);
    let case = fixtures::smib_case(h, 0.0, pm * 100.0);
    let opts = SimOptions {
        dt,
        t_end: 20.0,
        ..SimOptions::default()
    };
    let mut s = initialize_simulation(&case, &opts).expect("init");
    let d0 = s.run(&EventSchedule::default()).expect("run").channel("gen.2.1.rotor_angle_deg").expect("angle")[0].to_radians();
    // lossless two-bus network: Pe = Pmax sin(delta)
    let pmax = pm / d0.sin();
    let mut s = initialize_simulation(&case, &opts).expect("init");
    s.set_state("gen.2.1.classical.dw", 2e-3).expect("state");
    let r = s.run(&EventSchedule::default()).expect("run");
    let d = r.channel("gen.2.1.rotor_angle_deg").expect("angle");
    let w = r.channel("gen.2.1.classical.dw").expect("speed");
    let wb = 2.0 * std::f64::consts::PI * 60.0;
    let energy = |k: usize| h * w[k] * w[k] - (pm * d[k].to_radians() + pmax * d[k].to_radians().cos()) / wb;
    let cycles = w.windows(2).filter(|p| p[0] < 0.0 && p[1] >= 0.0).count().max(1);
    (energy(w.len() - 1) - energy(0)).abs() / cycles as f64
}

fn numerics() -> Outcome {
    let runs: Vec<_> = [0.01, 0.005, 0.0025].iter().map(|&dt| bus_fault_run(dt)).collect();
    let e1 = max_diff(&runs[0], &runs[1]);
    let e2 = max_diff(&runs[1], &runs[2]);
    let order = (e1 / e2).log2();
    let drift = smib_drift(0.005);
    outcome(
        order >= 1.8 && drift < 1e-6,
        format!("observed order {order:.2} (>= 1.8, diffs {e1:.2e}, {e2:.2e}); SMIB energy drift {drift:.1e} pu/cycle (< 1e-6)"),
    )
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_renewdyn")).args(args).output().expect("binary runs")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let root = repo_root();
    let base = root.join("cases/wscc9_renewable.json");
    let golden_case = std::fs::read(root.join("cases/wscc9_renewable_dyn.json")).expect("golden case");
    let golden_manifest = std::fs::read(root.join("cases/wscc9_renewable_dyn.manifest.json")).expect("golden manifest");
    let events = root.join("cases/events/poi_fault.json");
    let mut bytes = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("dyn{run}.json"));
        let man = dir.path().join(format!("man{run}.json"));
        let csv = dir.path().join(format!("sim{run}.csv"));
        let a = cli(&[
            "assign",
            base.to_str().unwrap(),
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
            "--manifest",
            man.to_str().unwrap(),
            "--quiet",
        ]);
        let s = cli(&[
            "sim",
            out.to_str().unwrap(),
            "--events",
            events.to_str().unwrap(),
            "--tend",
            "3",
            "--out",
            csv.to_str().unwrap(),
            "--quiet",
        ]);
        let read = |p: &Path| std::fs::read(p).unwrap_or_default();
        let meta = renewdyn::sim::result::meta_path(&csv);
        bytes.push((
            a.status.success() && s.status.success(),
            read(&out),
            read(&man),
            read(&csv),
            read(&meta),
        ));
    }
    let (a, b) = (&bytes[0], &bytes[1]);
    let ok = a.0 && b.0 && a.1 == b.1 && a.2 == b.2 && a.3 == b.3 && a.4 == b.4 && !a.3.is_empty();
    let golden = a.1 == golden_case && a.2 == golden_manifest;
    outcome(
        ok && golden,
        format!(
            "assign/sim outputs byte-identical across runs: {ok}; match stored golden case and manifest: {golden}"
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("flat start", Duration::from_secs(10), flat_start),
        ("composition statistics", Duration::from_secs(5), composition),
        ("reactive support", Duration::from_secs(10), reactive_support),
        ("droop down-only", Duration::from_secs(10), droop_down_only),
        ("droop with headroom", Duration::from_secs(60), droop_headroom),
        ("metrics oracle", Duration::from_secs(1), metrics_oracle),
        ("N-1 screening", Duration::from_secs(120), n1_screening),
        ("numerical soundness", Duration::from_secs(300), numerics),
        ("determinism", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let el = t.elapsed();
        let pass = o.pass && el <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {} [{:.2} s, limit {} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
