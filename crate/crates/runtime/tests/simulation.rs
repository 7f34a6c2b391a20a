mod common;

use std::f64::consts::TAU;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use diakit_core::Value;
use diakit_runtime::newscast::reference_logic;
use diakit_runtime::sim::{run, sinusoid_value, Point, Scenario, SimError, Simulation, SteerError};
use diakit_runtime::trace::{to_jsonl, EventKind, EventRecord};
use diakit_runtime::{Handlers, LogicSet};
use proptest::prelude::*;
use serde_json::{json, Value as Json};

const THERMO: &str = r#"
device Thermo {
  source temp as Float;
}
device Heater {
  action Heat;
}
action Heat {
  heat(level as Float);
}
context Temp as Float {
  source temp from Thermo;
}
controller Watch {
  context Temp;
  action Heat on Heater;
}
"#;

fn thermo_logic() -> LogicSet {
    let mut set = LogicSet::new();
    set.insert(
        "Temp".into(),
        Handlers::new(())
            .init(|_, ctx| {
                let all = ctx.discover_all("Thermo")?;
                ctx.subscribe(&all, "temp")
            })
            .on("onNewTemp", |_, ctx, d| ctx.publish(d.value.clone(), vec![]))
            .boxed(),
    );
    set.insert("Watch".into(), Handlers::new(()).on("onNewTemp", |_, _, _| Ok(())).boxed());
    set
}

fn thermo_scenario(stimuli: Json, duration: u64) -> Scenario {
    serde_json::from_value(json!({
        "environment": {"width": 10.0, "height": 10.0},
        "entities": [{"deviceClass": "Thermo", "id": "t1", "position": {"x": 1.0, "y": 1.0}}],
        "stimuli": stimuli,
        "durationTicks": duration,
        "seed": 0
    }))
    .unwrap()
}

fn stimuli(trace: &[EventRecord]) -> Vec<(u64, Json)> {
    trace
        .iter()
        .filter(|r| r.kind == EventKind::Stimulus)
        .map(|r| (r.tick, r.value.clone()))
        .collect()
}

/// A reader at the origin and one agent following `path` at high speed, one
/// waypoint per tick.
fn boundary_scenario(start: [f64; 2], path: &[[f64; 2]]) -> Scenario {
    serde_json::from_value(json!({
        "environment": {"width": 20.0, "height": 20.0, "areas": [{"name": "hall", "x": 0.0, "y": 0.0, "w": 20.0, "h": 20.0}]},
        "entities": [{
            "deviceClass": "BadgeReader", "id": "br1", "attributes": {"area": {"name": "hall"}},
            "position": {"x": 0.0, "y": 0.0}, "behavior": {"detectionRange": 5.0}
        }],
        "agents": [{"id": "a", "properties": {"badgeId": "B1"}, "position": {"x": start[0], "y": start[1]}, "speed": 100.0, "waypoints": path}],
        "stimuli": [{"kind": "agentProximity", "deviceClass": "BadgeReader", "agentProperty": "badgeId",
                     "enterSource": "badgeDetected", "leaveSource": "badgeDisappeared"}],
        "durationTicks": path.len() as u64,
        "seed": 0
    }))
    .unwrap()
}

fn edges(s: Scenario) -> Vec<(u64, String)> {
    run(common::newscast(), reference_logic(), s)
        .unwrap()
        .iter()
        .filter(|r| r.kind == EventKind::Stimulus)
        .map(|r| (r.tick, r.name.clone()))
        .collect()
}

#[test]
fn proximity_boundary_is_strict() {
    let e = edges(boundary_scenario([3.0, 4.0], &[[3.0, 4.0], [4.999, 0.0], [5.0, 0.0], [5.001, 0.0]]));
    assert_eq!(e, [(1, "badgeDetected".to_string()), (3, "badgeDisappeared".to_string())]);
    assert!(edges(boundary_scenario([5.0, 0.0], &[[5.0, 0.0], [0.0, 5.0]])).is_empty());
}

#[test]
fn proximity_enter_and_leave_examples() {
    let e = edges(boundary_scenario([6.0, 0.0], &[[6.0, 0.0], [4.0, 0.0], [6.0, 0.0]]));
    assert_eq!(e, [(1, "badgeDetected".to_string()), (2, "badgeDisappeared".to_string())]);
}

#[test]
fn proximity_stimulus_carries_badge_property() {
    let trace = run(
        common::newscast(),
        reference_logic(),
        boundary_scenario([9.0, 0.0], &[[1.0, 0.0]]),
    )
    .unwrap();
    assert_eq!(trace[0].value, json!("B1"));
    assert_eq!(trace[0].producer, "br1");
    assert_eq!(trace[0].steered, Some(false));
}

#[test]
fn sinusoid_quarter_period_and_reference_point() {
    assert_eq!(sinusoid_value(0, 10.0, 5.0, 24.0, 0.0).unwrap(), 10.0);
    assert!((sinusoid_value(6, 10.0, 5.0, 24.0, 0.0).unwrap() - 15.0).abs() < 1e-9);
    let v = sinusoid_value(7, 0.0, 1.0, 24.0, 0.0).unwrap();
    assert!((v - 0.965_925_826_289_068_3).abs() < 1e-9, "{v}");
}

proptest! {
    #[test]
    fn sinusoid_matches_direct_formula(
        t in 0u64..100_000,
        offset in -100.0f64..100.0,
        amplitude in -50.0f64..50.0,
        period in 0.5f64..1000.0,
        phase in -7.0f64..7.0,
    ) {
        let want = offset + amplitude * (TAU * (t as f64) / period + phase).sin();
        prop_assert!((sinusoid_value(t, offset, amplitude, period, phase).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn sinusoid_stimulus_drives_trace() {
    let s = thermo_scenario(
        json!([{"kind": "sinusoid", "target": {"device": "t1", "source": "temp"},
                "offset": 20.0, "amplitude": 3.0, "periodTicks": 12.0, "phaseRadians": 0.5,
                "refreshPeriod": 2, "startTick": 1, "endTick": 9}]),
        12,
    );
    let got = stimuli(&run(common::spec_from(THERMO), thermo_logic(), s).unwrap());
    let ticks: Vec<u64> = got.iter().map(|(t, _)| *t).collect();
    assert_eq!(ticks, [1, 3, 5, 7]);
    for (t, v) in got {
        let want = 20.0 + 3.0 * (TAU * t as f64 / 12.0 + 0.5).sin();
        assert!((v.as_f64().unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn constant_and_sequence_stimuli() {
    let s = thermo_scenario(
        json!([
            {"kind": "constant", "target": {"device": "t1", "source": "temp"}, "value": 4, "refreshPeriod": 3},
            {"kind": "sequence", "target": {"device": "t1", "source": "temp"}, "values": [1.5, 2.5], "startTick": 2}
        ]),
        7,
    );
    let got = stimuli(&run(common::spec_from(THERMO), thermo_logic(), s).unwrap());
    assert_eq!(
        got,
        [(0, json!(4.0)), (2, json!(1.5)), (3, json!(4.0)), (3, json!(2.5)), (6, json!(4.0))]
    );
}

fn sim_err(s: Scenario) -> String {
    match Simulation::new(common::newscast(), reference_logic(), s) {
        Err(SimError::Scenario(m)) => m,
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("scenario accepted"),
    }
}

fn walkthrough_json() -> Json {
    serde_json::from_str(&std::fs::read_to_string(common::fixture("walkthrough.json")).unwrap()).unwrap()
}

fn patched(f: impl FnOnce(&mut Json)) -> Scenario {
    let mut v = walkthrough_json();
    f(&mut v);
    serde_json::from_value(v).unwrap()
}

#[test]
fn invalid_scenarios_are_rejected() {
    type Edit = Box<dyn FnOnce(&mut Json)>;
    let cases: Vec<(Edit, &str)> = vec![
        (Box::new(|v| v["entities"][0]["deviceClass"] = json!("Toaster")), "unknown device class"),
        (Box::new(|v| v["entities"][0]["position"]["x"] = json!(41.0)), "outside the environment"),
        (Box::new(|v| v["agents"][0]["waypoints"] = json!([[0.0, -1.0]])), "waypoint outside"),
        (Box::new(|v| v["agents"][0]["id"] = json!("br1")), "duplicate id"),
        (Box::new(|v| v["agents"][0]["speed"] = json!(0.0)), "speed"),
        (Box::new(|v| v["entities"][1]["attributes"]["brightness"] = json!("high")), "brightness"),
        (Box::new(|v| v["entities"][1]["attributes"]["color"] = json!("red")), "no attribute `color`"),
        (Box::new(|v| v["environment"]["areas"][0]["w"] = json!(100.0)), "area `hall`"),
        (
            Box::new(|v| v["stimuli"] = json!([{"kind": "constant", "target": {"device": "br1", "source": "temp"}, "value": 1}])),
            "no source `temp`",
        ),
        (
            Box::new(|v| v["stimuli"] = json!([{"kind": "constant", "target": {"device": "zz", "source": "temp"}, "value": 1}])),
            "unknown device `zz`",
        ),
        (
            Box::new(|v| v["stimuli"] = json!([{"kind": "constant", "target": {"device": "br1", "source": "badgeDetected"}, "value": 1}])),
            "stimulus 0",
        ),
        (
            Box::new(|v| {
                v["stimuli"] = json!([{"kind": "sinusoid", "target": {"device": "br1", "source": "badgeDetected"},
                    "offset": 0.0, "amplitude": 1.0, "periodTicks": 4.0, "phaseRadians": 0.0}])
            }),
            "Float source",
        ),
        (
            Box::new(|v| {
                v["stimuli"] = json!([{"kind": "constant", "target": {"device": "br1", "source": "badgeDetected"},
                    "value": "x", "refreshPeriod": 0}])
            }),
            "refreshPeriod",
        ),
        (
            Box::new(|v| {
                v["stimuli"] = json!([{"kind": "agentProximity", "deviceClass": "Screen", "agentProperty": "badgeId",
                    "enterSource": "badgeDetected", "leaveSource": "badgeDisappeared"}])
            }),
            "no source `badgeDetected`",
        ),
        (
            Box::new(|v| v["entities"][2]["behavior"]["tables"]["profile"][0]["indices"] = json!([])),
            "index value",
        ),
    ];
    for (patch, needle) in cases {
        let msg = sim_err(patched(patch));
        assert!(msg.contains(needle), "`{msg}` lacks `{needle}`");
    }
}

#[test]
fn unknown_scenario_keys_fail_to_parse() {
    let mut v = walkthrough_json();
    v["agents"][0]["colour"] = json!("red");
    assert!(serde_json::from_value::<Scenario>(v).is_err());
}

#[test]
fn missing_component_logic_is_reported() {
    let mut logic = reference_logic();
    logic.remove("AudioManager");
    match Simulation::new(common::newscast(), logic, common::walkthrough()) {
        Err(SimError::Runtime(e)) => assert_eq!(e.code(), "R-MISSING-LOGIC"),
        _ => panic!("expected missing logic"),
    }
}

#[test]
fn snapshots_track_ticks_and_entities() {
    let mut sim = Simulation::new(common::newscast(), reference_logic(), common::walkthrough()).unwrap();
    let cell = sim.snapshots();
    let s0 = cell.latest();
    assert_eq!(s0.tick, 0);
    let ids: Vec<_> = s0.entities.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["br1", "np1", "pdb1", "s1"]);
    assert_eq!(s0.agents[0].position, Point::new(10.0, 10.0));
    for _ in 0..11 {
        sim.step().unwrap();
    }
    let s = cell.latest();
    assert_eq!(s.tick, 11);
    assert_eq!(s.agents[0].position, Point::new(15.5, 10.0));
    assert!(s.events.iter().any(|e| e["kind"] == "command"), "tick 10 produced the display");
    sim.run_to_end().unwrap();
    let end = cell.latest();
    assert_eq!((end.tick, end.finished), (100, true));
    assert!(end.agents[0].waypoints.is_empty());
    assert!(!sim.step().unwrap());
}

#[test]
fn steering_validates_before_queueing() {
    let sim = Simulation::new(common::newscast(), reference_logic(), common::walkthrough()).unwrap();
    let h = sim.steering();
    assert!(matches!(
        h.inject_json("br1", "badgeDetected", &json!(12), &[]),
        Err(SteerError::IllTyped { .. })
    ));
    assert!(matches!(
        h.inject("br1", "badgeDetected", Value::Integer(12), vec![]),
        Err(SteerError::IllTyped { .. })
    ));
    assert_eq!(
        h.inject_json("zz", "badgeDetected", &json!("x"), &[]),
        Err(SteerError::UnknownDevice("zz".into()))
    );
    assert!(matches!(
        h.inject_json("s1", "badgeDetected", &json!("x"), &[]),
        Err(SteerError::UnknownSource { .. })
    ));
    assert!(matches!(
        h.inject_json("pdb1", "profile", &json!({"name": "x", "language": "FRENCH", "department": "PHYSICS"}), &[]),
        Err(SteerError::IllTyped { .. })
    ));
    assert_eq!(h.set_waypoints("bob", vec![]), Err(SteerError::UnknownAgent("bob".into())));
    assert_eq!(
        h.set_waypoints("alice", vec![Point::new(50.0, 1.0)]),
        Err(SteerError::OutOfBounds { x: 50.0, y: 1.0 })
    );
    drop(sim);
    assert_eq!(h.pause(), Err(SteerError::Closed));
}

fn without_steered(trace: &[EventRecord]) -> String {
    let mut t = trace.to_vec();
    for r in &mut t {
        if r.steered.is_some() {
            r.steered = Some(false);
        }
    }
    to_jsonl(&t)
}

fn steered_run(base: &Scenario, at: u64, badge: &str) -> Vec<EventRecord> {
    let mut sim = Simulation::new(common::newscast(), reference_logic(), base.clone()).unwrap();
    for t in 0..base.duration_ticks {
        if t == at {
            sim.steering().inject_json("br1", "badgeDetected", &json!(badge), &[]).unwrap();
        }
        sim.step().unwrap();
    }
    sim.records().to_vec()
}

fn scripted_run(base: &Scenario, at: u64, badge: &str) -> Vec<EventRecord> {
    let mut v = serde_json::to_value(base).unwrap();
    v["stimuli"].as_array_mut().unwrap().push(json!({
        "kind": "sequence", "target": {"device": "br1", "source": "badgeDetected"},
        "startTick": at, "values": [badge]
    }));
    run(common::newscast(), reference_logic(), serde_json::from_value(v).unwrap()).unwrap()
}

#[test]
fn steered_injection_equals_scripted_stimulus() {
    let base = common::walkthrough();
    for (at, badge) in [(0, "0A12"), (3, "0A12"), (10, "0A12"), (10, "FFFF"), (42, "0A12")] {
        let steered = steered_run(&base, at, badge);
        let scripted = scripted_run(&base, at, badge);
        assert_eq!(without_steered(&steered), without_steered(&scripted), "t={at} badge={badge}");
        let marked: Vec<_> = steered.iter().filter(|r| r.steered == Some(true)).collect();
        assert_eq!(marked.len(), 1);
        assert_eq!(marked[0].tick, at);
    }
}

#[test]
fn waypoint_steering_redirects_agent() {
    let mut sim = Simulation::new(common::newscast(), reference_logic(), common::walkthrough()).unwrap();
    sim.step().unwrap();
    sim.steering().set_waypoints("alice", vec![Point::new(10.5, 5.0)]).unwrap();
    sim.step().unwrap();
    let a = &sim.snapshots().latest().agents[0];
    assert!((a.position.x - 10.5).abs() < 1e-12 && (a.position.y - 9.5).abs() < 1e-12, "{:?}", a.position);
    assert_eq!(a.waypoints, [[10.5, 5.0]]);
}

#[test]
fn live_loop_pauses_steps_and_resumes() {
    let mut sim = Simulation::new(common::newscast(), reference_logic(), common::walkthrough()).unwrap();
    sim.set_paused(true);
    let h = sim.steering();
    let (tx, rx) = mpsc::channel();
    sim.on_snapshot(move |s| {
        let _ = tx.send(s.clone());
    });
    let worker = thread::spawn(move || {
        sim.run_live(Duration::from_millis(1)).unwrap();
        sim.records().len()
    });
    thread::sleep(Duration::from_millis(50));
    assert!(rx.try_recv().is_err(), "paused loop does not tick");

    h.inject_json("br1", "badgeDetected", &json!("0A12"), &[]).unwrap();
    h.step().unwrap();
    let s = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!((s.tick, s.paused), (1, true));
    let first = &s.events[0];
    assert_eq!(first["kind"], "stimulus");
    assert_eq!(first["steered"], true);
    assert!(s.events.iter().any(|e| e["kind"] == "command"));

    h.resume().unwrap();
    let mut last = s;
    while !last.finished {
        last = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    }
    assert_eq!(last.tick, 100);
    assert!(worker.join().unwrap() > 0);
}
