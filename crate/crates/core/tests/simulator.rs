use renewdyn::fixtures;
use renewdyn::{initialize_simulation, simulate, Event, EventSchedule, GenKey, SimOptions};

fn run(events: Vec<Event>, t_end: f64) -> renewdyn::SimulationResult {
    let case = fixtures::bundled_case();
    simulate(&case, &EventSchedule::new(events).unwrap(), &SimOptions::with_t_end(t_end)).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn unperturbed_case_stays_put() {
    let r = run(vec![], 2.0);
    for (name, d) in r.names.iter().zip(&r.data) {
        assert!(max_abs_diff(d, &vec![d[0]; d.len()]) < 1e-6, "{name} drifts");
    }
    assert_eq!(r.time.len(), 401);
    assert!(r.meta.events.is_empty());
}

#[test]
fn outage_zeroes_unit_output_from_the_event_on() {
    let key = GenKey::new(2, "1");
    let r = run(vec![Event::outage(&key, 0.5)], 2.0);
    let p = r.channel("gen.2.1.p_mw").unwrap();
    let k = r.time.iter().position(|&t| t >= 0.5 - 1e-9).unwrap();
    assert!(p[k - 1] > 100.0);
    assert!(p[k..].iter().all(|&v| v == 0.0));
    assert_eq!(r.meta.events.len(), 1);
    assert!(r.meta.events[0].description.contains("gen.2.1"));
    let others: f64 = ["gen.1.1.p_mw", "gen.3.1.p_mw"]
        .iter()
        .map(|n| {
            let c = r.channel(n).unwrap();
            c[c.len() - 1] - c[0]
        })
        .sum();
    assert!(others > 50.0, "remaining machines pick up {others} MW");
}

#[test]
fn events_snap_to_the_step_grid() {
    let r = run(vec![Event::outage(&GenKey::new(2, "1"), 0.5012)], 1.0);
    let e = &r.meta.events[0];
    assert_eq!(e.requested_time, 0.5012);
    assert!((e.time - 0.5).abs() < 1e-12);
}

#[test]
fn fault_cleared_in_the_same_step_leaves_no_trace() {
    let quiet = run(vec![], 1.5);
    let r = run(vec![Event::bus_fault(7, 0.5), Event::clear_fault(7, 0.5)], 1.5);
    for (n, d) in quiet.names.iter().zip(&quiet.data) {
        assert!(max_abs_diff(d, r.channel(n).unwrap()) < 1e-9, "{n}");
    }
}

#[test]
fn bolted_fault_flags_the_dead_bus_frequency() {
    let r = run(vec![Event::bus_fault(7, 1.0), Event::clear_fault(7, 1.1)], 2.0);
    let v = r.channel("bus.7.v_pu").unwrap();
    let k = r.time.iter().position(|&t| t >= 1.0 - 1e-9).unwrap();
    assert!(v[k] < 0.01, "{}", v[k]);
    assert_eq!(r.meta.fault_intervals.len(), 1);
    let fi = &r.meta.fault_intervals[0];
    assert_eq!((fi.what.as_str(), fi.start, fi.end), ("bus.7", 1.0, 1.1));
    let flagged: Vec<_> = r.meta.flagged.iter().filter(|i| i.what == "bus.7.f_hz").collect();
    assert_eq!(flagged.len(), 1);
    assert!(flagged[0].start <= 1.0 + 1e-9 && flagged[0].end < 1.1);
    let mask = r.flag_mask("bus.7.f_hz");
    assert!(mask[k] && !mask[k - 1] && !mask[mask.len() - 1]);
    assert!(r.channel("bus.7.f_hz").unwrap().iter().all(|f| f.is_finite()));
    assert!(v[v.len() - 1] > 0.9);
}

#[test]
fn runs_are_bitwise_repeatable() {
    let ev = vec![Event::bus_fault(13, 1.0), Event::clear_fault(13, 1.05)];
    let a = run(ev.clone(), 3.0);
    let b = run(ev, 3.0);
    assert_eq!(a, b);
}

#[test]
fn channel_selection_by_pattern() {
    let case = fixtures::bundled_case();
    let opts = SimOptions {
        record_channels: vec!["bus.1*.v_pu".into()],
        ..SimOptions::with_t_end(0.1)
    };
    let r = initialize_simulation(&case, &opts).unwrap().run(&EventSchedule::default()).unwrap();
    assert_eq!(r.names, ["bus.1.v_pu", "bus.10.v_pu", "bus.11.v_pu", "bus.12.v_pu", "bus.13.v_pu"]);
}

#[test]
fn unknown_event_target_is_rejected_before_stepping() {
    let case = fixtures::bundled_case();
    let mut sim = initialize_simulation(&case, &SimOptions::with_t_end(1.0)).unwrap();
    let ev = EventSchedule::new(vec![Event::outage(&GenKey::new(4, "1"), 0.5)]).unwrap();
    assert!(sim.run(&ev).is_err());
}

#[test]
fn smib_energy_is_conserved_without_damping() {
    let case = fixtures::smib_case(3.5, 0.0, 80.0);
    let mut sim = initialize_simulation(&case, &SimOptions::with_t_end(5.0)).unwrap();
    let d0 = sim.state()[sim.state_names().iter().position(|n| n == "gen.2.1.classical.delta").unwrap()];
    sim.set_state("gen.2.1.classical.delta", d0 + 0.2).unwrap();
    let r = sim.run(&EventSchedule::default()).unwrap();
    let ang = r.channel("gen.2.1.rotor_angle_deg").unwrap();
    let (lo, hi) = ang.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    // A lossless swing keeps returning to its starting amplitude.
    let last_cycle = &ang[ang.len() - 400..];
    let hi_last = last_cycle.iter().cloned().fold(f64::MIN, f64::max);
    assert!(hi - lo > 15.0);
    assert!((hi_last - hi).abs() < 0.05 * (hi - lo), "{hi_last} vs {hi}");
}
