//! Agent motion and proximity detection.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Moves `speed` meters straight toward the first waypoint. When the
/// waypoint is within reach the agent lands exactly on it and it is consumed.
pub fn step_agent(position: Point, speed: f64, waypoints: &mut VecDeque<Point>) -> Point {
    let Some(&target) = waypoints.front() else {
        return position;
    };
    let d = position.distance(target);
    if d <= speed {
        waypoints.pop_front();
        return target;
    }
    let f = speed / d;
    Point::new(position.x + (target.x - position.x) * f, position.y + (target.y - position.y) * f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sensor {
    pub id: String,
    pub position: Point,
    pub range: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Enter,
    Leave,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProximityEvent {
    pub sensor: String,
    pub edge: Edge,
    pub agent: String,
}

/// Which sensor currently tracks each agent. An agent is tracked by at most
/// one sensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProximityTracker {
    tracked: BTreeMap<String, String>,
}

impl ProximityTracker {
    pub fn tracking(&self, agent: &str) -> Option<&str> {
        self.tracked.get(agent).map(String::as_str)
    }

    /// Compares current positions with the tracking state. A tracked agent
    /// leaves when strictly farther than the range of its sensor; an
    /// untracked agent enters the first sensor (by id) it is strictly within
    /// range of. Agents are visited in the given order.
    pub fn update(&mut self, agents: &[(String, Point)], sensors: &[Sensor]) -> Vec<ProximityEvent> {
        let mut sorted: Vec<&Sensor> = sensors.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        let mut events = Vec::new();
        for (agent, pos) in agents {
            match self.tracked.get(agent) {
                Some(sensor_id) => {
                    let Some(sensor) = sorted.iter().find(|s| &s.id == sensor_id) else {
                        self.tracked.remove(agent);
                        continue;
                    };
                    if pos.distance(sensor.position) > sensor.range {
                        events.push(ProximityEvent {
                            sensor: sensor.id.clone(),
                            edge: Edge::Leave,
                            agent: agent.clone(),
                        });
                        self.tracked.remove(agent);
                    }
                }
                None => {
                    if let Some(sensor) = sorted.iter().find(|s| pos.distance(s.position) < s.range) {
                        events.push(ProximityEvent {
                            sensor: sensor.id.clone(),
                            edge: Edge::Enter,
                            agent: agent.clone(),
                        });
                        self.tracked.insert(agent.clone(), sensor.id.clone());
                    }
                }
            }
        }
        events
    }
}
