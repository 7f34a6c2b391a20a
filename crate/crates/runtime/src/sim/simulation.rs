//! The tick loop.
//!
//! Each tick runs, in order: (1) pending steering (waypoint changes take
//! effect, injections are held for phase 4), (2) agent motion, (3) proximity
//! stimuli, (4) timed stimuli in scenario order followed by steered
//! injections in arrival order, (5) delivery drain.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use diakit_core::checker::CheckedSpec;
use diakit_core::model::{Builtin, TypeRef};
use diakit_core::Value;
use serde_json::Value as Json;
use thiserror::Error;

use super::motion::{step_agent, Edge, Point, ProximityTracker, Sensor};
use super::scenario::*;
use super::snapshot::{AgentView, EntityView, Snapshot, SnapshotCell};
use super::steering::{SteerCommand, SteeringHandle};
use super::stimulus::{Schedule, TimedStimulus, Waveform};
use crate::entity::TableBehavior;
use crate::error::RuntimeError;
use crate::logic::LogicSet;
use crate::runtime::Runtime;
use crate::trace::EventRecord;

/// Default detection range of proximity sensors, in meters.
pub const DEFAULT_DETECTION_RANGE: f64 = 5.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::Scenario(msg.into())
}

struct AgentState {
    id: String,
    properties: BTreeMap<String, String>,
    position: Point,
    speed: f64,
    waypoints: VecDeque<Point>,
}

struct ProximityProducer {
    property: String,
    enter: String,
    leave: String,
    sensors: Vec<Sensor>,
    tracker: ProximityTracker,
}

type Observer = Box<dyn FnMut(&Arc<Snapshot>) + Send>;

pub struct Simulation {
    runtime: Runtime,
    environment: Environment,
    positions: BTreeMap<String, Point>,
    agents: Vec<AgentState>,
    proximity: Vec<ProximityProducer>,
    timed: Vec<TimedStimulus>,
    duration: u64,
    tick: u64,
    rx: Receiver<SteerCommand>,
    steering: SteeringHandle,
    held_waypoints: Vec<(String, Vec<Point>)>,
    held_injections: Vec<(String, String, Value, Vec<Value>)>,
    paused: bool,
    step_budget: u64,
    cell: SnapshotCell,
    observers: Vec<Observer>,
}

fn in_bounds(env: &Environment, p: Point) -> bool {
    p.x >= 0.0 && p.x <= env.width && p.y >= 0.0 && p.y <= env.height
}

fn decode(spec: &CheckedSpec, json: &Json, ty: &TypeRef, what: &str) -> Result<Value, SimError> {
    Value::from_json(spec, json, ty).map_err(|e| invalid(format!("{what}: {e}")))
}

fn decode_indices(spec: &CheckedSpec, given: &[Json], decl: &[diakit_core::model::Typed], what: &str) -> Result<Vec<Value>, SimError> {
    if given.len() != decl.len() {
        return Err(invalid(format!(
            "{what}: expected {} index value(s), found {}",
            decl.len(),
            given.len()
        )));
    }
    decl.iter()
        .zip(given)
        .map(|(d, j)| decode(spec, j, &d.ty, &format!("{what}, index `{}`", d.name)))
        .collect()
}

impl Simulation {
    /// Validates the scenario, registers entities and logic, and runs init
    /// hooks. Logic for components absent from the spec is ignored.
    pub fn new(spec: Arc<CheckedSpec>, mut logic: LogicSet, scenario: Scenario) -> Result<Simulation, SimError> {
        let env = &scenario.environment;
        if !(env.width > 0.0 && env.width.is_finite() && env.height > 0.0 && env.height.is_finite()) {
            return Err(invalid("environment width and height must be positive"));
        }
        let mut area_names = BTreeSet::new();
        for a in &env.areas {
            if !area_names.insert(a.name.as_str()) {
                return Err(invalid(format!("duplicate area `{}`", a.name)));
            }
            let ok = a.w >= 0.0 && a.h >= 0.0 && a.x >= 0.0 && a.y >= 0.0 && a.x + a.w <= env.width && a.y + a.h <= env.height;
            if !ok {
                return Err(invalid(format!("area `{}` lies outside the environment", a.name)));
            }
        }
        let mut ids = BTreeSet::new();
        for id in scenario.entities.iter().map(|e| &e.id).chain(scenario.agents.iter().map(|a| &a.id)) {
            if !ids.insert(id.as_str()) {
                return Err(invalid(format!("duplicate id `{id}`")));
            }
        }

        let mut runtime = Runtime::new(Arc::clone(&spec));
        let mut positions = BTreeMap::new();
        let mut ranges = BTreeMap::new();
        for e in &scenario.entities {
            let what = format!("entity `{}`", e.id);
            if !in_bounds(env, e.position) {
                return Err(invalid(format!("{what}: position outside the environment")));
            }
            if e.behavior.name != "basic" {
                return Err(invalid(format!("{what}: unknown behavior `{}`", e.behavior.name)));
            }
            let members = spec
                .effective_members(&e.device_class)
                .map_err(|_| invalid(format!("{what}: unknown device class `{}`", e.device_class)))?;
            let mut attributes = BTreeMap::new();
            for (name, json) in &e.attributes {
                let attr = members
                    .attribute(name)
                    .ok_or_else(|| invalid(format!("{what}: `{}` has no attribute `{name}`", e.device_class)))?;
                attributes.insert(name.clone(), decode(&spec, json, &attr.ty, &format!("{what}, attribute `{name}`"))?);
            }
            let mut behavior = TableBehavior::new();
            for (source, rows) in &e.behavior.tables {
                let decl = members
                    .source(source)
                    .ok_or_else(|| invalid(format!("{what}: `{}` has no source `{source}`", e.device_class)))?;
                for row in rows {
                    let w = format!("{what}, table `{source}`");
                    let idx = decode_indices(&spec, &row.indices, &decl.indices, &w)?;
                    let value = decode(&spec, &row.value, &decl.value_type, &w)?;
                    behavior.insert(source.clone(), idx, value);
                }
            }
            let range = e.behavior.detection_range.unwrap_or(DEFAULT_DETECTION_RANGE);
            if !(range >= 0.0 && range.is_finite()) {
                return Err(invalid(format!("{what}: detection range must be a non-negative number")));
            }
            runtime
                .register_entity(&e.device_class, &e.id, attributes, Box::new(behavior))
                .map_err(|err| invalid(format!("{what}: {err}")))?;
            positions.insert(e.id.clone(), e.position);
            ranges.insert(e.id.clone(), range);
        }

        let mut agents = Vec::new();
        for a in &scenario.agents {
            let what = format!("agent `{}`", a.id);
            if !(a.speed > 0.0 && a.speed.is_finite()) {
                return Err(invalid(format!("{what}: speed must be positive")));
            }
            if !in_bounds(env, a.position) {
                return Err(invalid(format!("{what}: position outside the environment")));
            }
            let waypoints: VecDeque<Point> = a.waypoints.iter().map(|[x, y]| Point::new(*x, *y)).collect();
            if waypoints.iter().any(|p| !in_bounds(env, *p)) {
                return Err(invalid(format!("{what}: waypoint outside the environment")));
            }
            agents.push(AgentState {
                id: a.id.clone(),
                properties: a.properties.clone(),
                position: a.position,
                speed: a.speed,
                waypoints,
            });
        }
        agents.sort_by(|a, b| a.id.cmp(&b.id));

        let entity_classes: BTreeMap<String, String> =
            scenario.entities.iter().map(|e| (e.id.clone(), e.device_class.clone())).collect();
        let target_decl = |t: &Target, what: &str| -> Result<diakit_core::model::SourceDecl, SimError> {
            let class = entity_classes
                .get(&t.device)
                .ok_or_else(|| invalid(format!("{what}: unknown device `{}`", t.device)))?;
            let members = spec.effective_members(class).expect("registered class");
            members
                .source(&t.source)
                .map(|m| m.decl.clone())
                .ok_or_else(|| invalid(format!("{what}: `{class}` has no source `{}`", t.source)))
        };
        let check_refresh = |r: u64, what: &str| {
            if r == 0 {
                Err(invalid(format!("{what}: refreshPeriod must be at least 1")))
            } else {
                Ok(())
            }
        };

        let mut timed = Vec::new();
        let mut proximity = Vec::new();
        for (i, s) in scenario.stimuli.iter().enumerate() {
            let what = format!("stimulus {i}");
            match s {
                StimulusSpec::Constant(c) => {
                    check_refresh(c.refresh_period, &what)?;
                    let decl = target_decl(&c.target, &what)?;
                    timed.push(TimedStimulus {
                        entity: c.target.device.clone(),
                        source: c.target.source.clone(),
                        indices: decode_indices(&spec, &c.indices, &decl.indices, &what)?,
                        schedule: Schedule {
                            start: c.start_tick,
                            end: c.end_tick,
                            refresh: c.refresh_period,
                        },
                        waveform: Waveform::Constant(decode(&spec, &c.value, &decl.value_type, &what)?),
                    });
                }
                StimulusSpec::Sequence(c) => {
                    check_refresh(c.refresh_period, &what)?;
                    let decl = target_decl(&c.target, &what)?;
                    let values = c
                        .values
                        .iter()
                        .map(|v| decode(&spec, v, &decl.value_type, &what))
                        .collect::<Result<Vec<_>, _>>()?;
                    timed.push(TimedStimulus {
                        entity: c.target.device.clone(),
                        source: c.target.source.clone(),
                        indices: decode_indices(&spec, &c.indices, &decl.indices, &what)?,
                        schedule: Schedule {
                            start: c.start_tick,
                            end: None,
                            refresh: c.refresh_period,
                        },
                        waveform: Waveform::Sequence(values),
                    });
                }
                StimulusSpec::Sinusoid(c) => {
                    check_refresh(c.refresh_period, &what)?;
                    let decl = target_decl(&c.target, &what)?;
                    if decl.value_type != TypeRef::Builtin(Builtin::Float) {
                        return Err(invalid(format!(
                            "{what}: sinusoid needs a Float source, `{}` is {}",
                            c.target.source, decl.value_type
                        )));
                    }
                    if !(c.period_ticks > 0.0 && c.period_ticks.is_finite()) {
                        return Err(invalid(format!("{what}: periodTicks must be positive")));
                    }
                    timed.push(TimedStimulus {
                        entity: c.target.device.clone(),
                        source: c.target.source.clone(),
                        indices: decode_indices(&spec, &c.indices, &decl.indices, &what)?,
                        schedule: Schedule {
                            start: c.start_tick,
                            end: c.end_tick,
                            refresh: c.refresh_period,
                        },
                        waveform: Waveform::Sinusoid {
                            offset: c.offset,
                            amplitude: c.amplitude,
                            period_ticks: c.period_ticks,
                            phase: c.phase_radians,
                        },
                    });
                }
                StimulusSpec::AgentProximity(p) => {
                    let members = spec
                        .effective_members(&p.device_class)
                        .map_err(|_| invalid(format!("{what}: unknown device class `{}`", p.device_class)))?;
                    for src in [&p.enter_source, &p.leave_source] {
                        let decl = members.source(src).ok_or_else(|| {
                            invalid(format!("{what}: `{}` has no source `{src}`", p.device_class))
                        })?;
                        if decl.value_type != TypeRef::Builtin(Builtin::String) || !decl.indices.is_empty() {
                            return Err(invalid(format!("{what}: `{src}` must be an unindexed String source")));
                        }
                    }
                    let sensors = runtime
                        .entities()
                        .filter(|e| spec.is_subclass(&e.class, &p.device_class))
                        .map(|e| Sensor {
                            id: e.id.clone(),
                            position: positions[&e.id],
                            range: ranges[&e.id],
                        })
                        .collect();
                    proximity.push(ProximityProducer {
                        property: p.agent_property.clone(),
                        enter: p.enter_source.clone(),
                        leave: p.leave_source.clone(),
                        sensors,
                        tracker: ProximityTracker::default(),
                    });
                }
            }
        }

        for (_, name) in spec.components() {
            if let Some(l) = logic.remove(name) {
                runtime.register_component_logic(name, l)?;
            }
        }
        runtime.start()?;

        let (tx, rx) = mpsc::channel();
        let steering = SteeringHandle {
            tx,
            spec: Arc::clone(&spec),
            entities: Arc::new(entity_classes),
            agents: Arc::new(agents.iter().map(|a| a.id.clone()).collect()),
            bounds: (env.width, env.height),
        };
        let sim = Simulation {
            runtime,
            environment: scenario.environment.clone(),
            positions,
            agents,
            proximity,
            timed,
            duration: scenario.duration_ticks,
            tick: 0,
            rx,
            steering,
            held_waypoints: Vec::new(),
            held_injections: Vec::new(),
            paused: false,
            step_budget: 0,
            cell: SnapshotCell::new(empty_snapshot()),
            observers: Vec::new(),
        };
        let initial = sim.build_snapshot(0);
        sim.cell.set(Arc::new(initial));
        Ok(sim)
    }

    pub fn steering(&self) -> SteeringHandle {
        self.steering.clone()
    }

    pub fn snapshots(&self) -> SnapshotCell {
        self.cell.clone()
    }

    /// Calls `f` with every snapshot published from now on.
    pub fn on_snapshot(&mut self, f: impl FnMut(&Arc<Snapshot>) + Send + 'static) {
        self.observers.push(Box::new(f));
    }

    pub fn runtime(&self) -> &Runtime {
        &self.runtime
    }

    /// Number of ticks run so far.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.duration
    }

    pub fn set_paused(&mut self, paused: bool) {
        self.paused = paused;
        self.republish();
    }

    pub fn records(&self) -> &[EventRecord] {
        self.runtime.records()
    }

    fn accept(&mut self, cmd: SteerCommand) {
        match cmd {
            SteerCommand::Inject {
                entity,
                source,
                value,
                indices,
            } => self.held_injections.push((entity, source, value, indices)),
            SteerCommand::SetWaypoints { agent, points } => self.held_waypoints.push((agent, points)),
            SteerCommand::Pause => self.paused = true,
            SteerCommand::Resume => {
                self.paused = false;
                self.step_budget = 0;
            }
            SteerCommand::Step => {
                if self.paused {
                    self.step_budget += 1;
                }
            }
        }
    }

    fn poll_inbox(&mut self) {
        while let Ok(cmd) = self.rx.try_recv() {
            self.accept(cmd);
        }
    }

    /// Runs one tick. Returns `false` when the scenario had already ended.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.is_finished() {
            return Ok(false);
        }
        self.poll_inbox();
        let t = self.tick;
        let mark = self.runtime.records().len();
        self.runtime.set_tick(t);

        for (agent, points) in std::mem::take(&mut self.held_waypoints) {
            if let Some(a) = self.agents.iter_mut().find(|a| a.id == agent) {
                a.waypoints = points.into();
            }
        }

        for a in &mut self.agents {
            a.position = step_agent(a.position, a.speed, &mut a.waypoints);
        }

        for p in &mut self.proximity {
            let carriers: Vec<(String, Point)> = self
                .agents
                .iter()
                .filter(|a| a.properties.contains_key(&p.property))
                .map(|a| (a.id.clone(), a.position))
                .collect();
            for ev in p.tracker.update(&carriers, &p.sensors) {
                let agent = self.agents.iter().find(|a| a.id == ev.agent).expect("known agent");
                let value = Value::string(agent.properties[&p.property].clone());
                let source = match ev.edge {
                    Edge::Enter => &p.enter,
                    Edge::Leave => &p.leave,
                };
                self.runtime.stimulus(&ev.sensor, source, value, vec![], false)?;
            }
        }

        for s in &self.timed {
            if let Some(v) = s.value_at(t) {
                self.runtime.stimulus(&s.entity, &s.source, v, s.indices.clone(), false)?;
            }
        }
        for (entity, source, value, indices) in std::mem::take(&mut self.held_injections) {
            self.runtime.stimulus(&entity, &source, value, indices, true)?;
        }

        self.runtime.drain()?;
        self.tick += 1;
        let snap = Arc::new(self.build_snapshot(mark));
        self.publish(snap);
        Ok(true)
    }

    /// Runs every remaining tick, ignoring pause state.
    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while self.step()? {}
        Ok(())
    }

    /// Runs until the scenario ends, honoring pause/resume/step commands and
    /// waiting `interval` between ticks while running.
    pub fn run_live(&mut self, interval: Duration) -> Result<(), SimError> {
        while !self.is_finished() {
            self.poll_inbox();
            if self.paused && self.step_budget == 0 {
                self.republish();
                match self.rx.recv() {
                    Ok(cmd) => self.accept(cmd),
                    Err(_) => return Ok(()),
                }
                continue;
            }
            if self.paused {
                self.step_budget -= 1;
            }
            self.step()?;
            if !self.paused && !interval.is_zero() {
                let deadline = Instant::now() + interval;
                loop {
                    let now = Instant::now();
                    if now >= deadline {
                        break;
                    }
                    match self.rx.recv_timeout(deadline - now) {
                        Ok(cmd) => self.accept(cmd),
                        Err(RecvTimeoutError::Timeout) => break,
                        Err(RecvTimeoutError::Disconnected) => return Ok(()),
                    }
                }
            }
        }
        self.republish();
        Ok(())
    }

    /// Re-sends the latest snapshot when only the pause flag changed.
    fn republish(&mut self) {
        let latest = self.cell.latest();
        if latest.paused != self.paused || latest.finished != self.is_finished() {
            let mut s = (*latest).clone();
            s.paused = self.paused;
            s.finished = self.is_finished();
            self.publish(Arc::new(s));
        }
    }

    fn publish(&mut self, snap: Arc<Snapshot>) {
        self.cell.set(Arc::clone(&snap));
        for o in &mut self.observers {
            o(&snap);
        }
    }

    fn build_snapshot(&self, mark: usize) -> Snapshot {
        let env = &self.environment;
        Snapshot {
            tick: self.tick,
            duration_ticks: self.duration,
            paused: self.paused,
            finished: self.is_finished(),
            width: env.width,
            height: env.height,
            areas: env.areas.clone(),
            walls: env.walls.clone(),
            entities: self
                .runtime
                .entities()
                .map(|e| EntityView {
                    id: e.id.clone(),
                    device_class: e.class.clone(),
                    position: self.positions.get(&e.id).copied().unwrap_or(Point::new(0.0, 0.0)),
                    attributes: e.attributes.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
                    online: e.online,
                })
                .collect(),
            agents: self
                .agents
                .iter()
                .map(|a| AgentView {
                    id: a.id.clone(),
                    properties: a.properties.clone(),
                    position: a.position,
                    waypoints: a.waypoints.iter().map(|p| [p.x, p.y]).collect(),
                })
                .collect(),
            events: self.runtime.records()[mark..].iter().map(EventRecord::to_json).collect(),
        }
    }
}

fn empty_snapshot() -> Snapshot {
    Snapshot {
        tick: 0,
        duration_ticks: 0,
        paused: false,
        finished: false,
        width: 0.0,
        height: 0.0,
        areas: vec![],
        walls: vec![],
        entities: vec![],
        agents: vec![],
        events: vec![],
    }
}

/// Convenience for headless runs: builds, runs to the end, and returns the
/// trace.
pub fn run(spec: Arc<CheckedSpec>, logic: LogicSet, scenario: Scenario) -> Result<Vec<EventRecord>, SimError> {
    let mut sim = Simulation::new(spec, logic, scenario)?;
    sim.run_to_end()?;
    Ok(sim.runtime.take_records())
}
