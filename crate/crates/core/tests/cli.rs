use std::path::{Path, PathBuf};

use renewdyn::cli::{run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use renewdyn::sim::result::{SimMeta, SimulationResult, SolverStats};

fn cases() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

fn case_path() -> String {
    cases().join("wscc9_renewable.json").display().to_string()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["renewdyn"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(call(&["validate", &case_path()]).0, EXIT_PASS);

    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(case_path()).unwrap()).unwrap();
    v["branches"][0]["to_bus"] = 999.into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(call(&["validate", p(&bad)]).0, EXIT_FAIL);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    let (code, _, err) = call(&["validate", p(&broken)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("error:"));

    assert_eq!(call(&["validate", p(&dir.path().join("missing.json"))]).0, EXIT_USAGE);
    assert_eq!(call(&["no-such-command"]).0, EXIT_USAGE);
}

#[test]
fn pf_writes_solved_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solved.json");
    let (code, text, _) = call(&["pf", &case_path(), "--out", p(&out)]);
    assert_eq!(code, EXIT_PASS);
    assert!(text.contains("converged: true"));
    let solved = renewdyn::PowerFlowCase::load(&out).unwrap();
    let again = renewdyn::solve_powerflow(&solved).unwrap();
    assert!(again.iterations <= 1);
}

#[test]
fn assign_reproduces_golden_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dyn.json");
    let man = dir.path().join("manifest.json");
    let (code, ..) = call(&["assign", &case_path(), "--seed", "42", "--out", p(&out), "--manifest", p(&man)]);
    assert_eq!(code, EXIT_PASS);
    let golden = std::fs::read(cases().join("wscc9_renewable_dyn.json")).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), golden);
    let golden = std::fs::read(cases().join("wscc9_renewable_dyn.manifest.json")).unwrap();
    assert_eq!(std::fs::read(&man).unwrap(), golden);

    let (code, ..) = call(&[
        "assign",
        &case_path(),
        "--templates",
        p(&dir.path().join("nope.json")),
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn sim_rejects_missing_event_file() {
    let dir = tempfile::tempdir().unwrap();
    let dyn_case = cases().join("wscc9_renewable_dyn.json");
    let (code, ..) = call(&[
        "sim",
        p(&dyn_case),
        "--events",
        p(&dir.path().join("none.json")),
        "--out",
        p(&dir.path().join("r.csv")),
    ]);
    assert_eq!(code, EXIT_USAGE);
    let (code, ..) = call(&["sim", p(&dyn_case), "--dt", "0.5", "--out", p(&dir.path().join("r.csv"))]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn sim_then_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let dyn_case = cases().join("wscc9_renewable_dyn.json");
    let events = cases().join("events/gen2_outage.json");
    let (code, ..) = call(&["sim", p(&dyn_case), "--events", p(&events), "--tend", "8", "--out", p(&csv)]);
    assert_eq!(code, EXIT_PASS);
    assert!(dir.path().join("run.meta.json").exists());

    let rep = dir.path().join("metrics.json");
    let (code, text, _) = call(&["metrics", p(&csv), "--out", p(&rep)]);
    assert_eq!(code, EXIT_PASS, "{text}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["pass"], true);

    let (code, ..) = call(&["metrics", p(&csv), "--window-start", "50"]);
    assert_eq!(code, EXIT_USAGE);
}

fn sustained_swing(dir: &Path) -> PathBuf {
    let dt = 0.01;
    let time: Vec<f64> = (0..=1500).map(|k| k as f64 * dt).collect();
    let angle = time.iter().map(|t| 20.0 + 5.0 * (2.0 * std::f64::consts::PI * 1.2 * t).sin()).collect();
    let res = SimulationResult {
        names: vec!["gen.1.1.rotor_angle_deg".into(), "bus.1.v_pu".into(), "bus.1.f_hz".into()],
        data: vec![angle, vec![1.0; time.len()], vec![60.0; time.len()]],
        meta: SimMeta {
            dt,
            t_end: 15.0,
            freq_filter_tc: 0.04,
            integrator: "test".into(),
            load_model: "test".into(),
            events: vec![],
            fault_intervals: vec![],
            flagged: vec![],
            warnings: vec![],
            stats: SolverStats::default(),
            aborted_at: None,
            error: None,
        },
        time,
    };
    let csv = dir.join("swing.csv");
    res.save(&csv).unwrap();
    csv
}

#[test]
fn undamped_swing_fails_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = sustained_swing(dir.path());
    let (code, text, err) = call(&["metrics", p(&csv), "--window-start", "1"]);
    assert_eq!(code, EXIT_FAIL, "{text}{err}");
    assert!(text.contains("FAIL"));
    let (code, ..) = call(&["metrics", p(&csv), "--window-start", "1", "--mr-min", "0"]);
    assert_eq!(code, EXIT_PASS);
}

#[test]
fn screen_is_independent_of_worker_count() {
    let dyn_case = cases().join("wscc9_renewable_dyn.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--outages", "--tend", "5"];
    let mut args = vec!["screen", p(&dyn_case), "--jobs", "1", "--out-dir", p(a.path())];
    args.extend(common);
    let (c1, ..) = call(&args);
    let mut args = vec!["screen", p(&dyn_case), "--jobs", "8", "--out-dir", p(b.path())];
    args.extend(common);
    let (c8, ..) = call(&args);
    assert_eq!(c1, c8);
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "summary.json"));
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap());
    }
}

#[test]
fn screen_rejects_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("list.json");
    std::fs::write(&list, "[]").unwrap();
    let dyn_case = cases().join("wscc9_renewable_dyn.json");
    let (code, ..) = call(&["screen", p(&dyn_case), "--list", p(&list), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn json_output_is_parseable() {
    let (code, text, _) = call(&["--json", "pf", &case_path()]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["converged"], true);
    let (code, text, _) = call(&["--quiet", "validate", &case_path()]);
    assert_eq!((code, text.as_str()), (EXIT_PASS, ""));
}
