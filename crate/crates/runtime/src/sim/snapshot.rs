//! Immutable world views published at tick boundaries.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::{Map, Value as Json};

use super::motion::Point;
use super::scenario::{AreaConfig, Wall};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityView {
    pub id: String,
    pub device_class: String,
    pub position: Point,
    pub attributes: Map<String, Json>,
    pub online: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentView {
    pub id: String,
    pub properties: BTreeMap<String, String>,
    pub position: Point,
    pub waypoints: Vec<[f64; 2]>,
}

/// World state after `tick` ticks have run. `events` holds the trace records
/// emitted by the most recent tick (or by initialization, for tick 0).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub tick: u64,
    pub duration_ticks: u64,
    pub paused: bool,
    pub finished: bool,
    pub width: f64,
    pub height: f64,
    pub areas: Vec<AreaConfig>,
    pub walls: Vec<Wall>,
    pub entities: Vec<EntityView>,
    pub agents: Vec<AgentView>,
    pub events: Vec<Json>,
}

impl Snapshot {
    pub fn to_json(&self) -> Json {
        serde_json::to_value(self).expect("snapshot serializes")
    }
}

/// Latest published snapshot, readable from any thread.
#[derive(Clone)]
pub struct SnapshotCell(Arc<Mutex<Arc<Snapshot>>>);

impl SnapshotCell {
    pub(crate) fn new(s: Snapshot) -> SnapshotCell {
        SnapshotCell(Arc::new(Mutex::new(Arc::new(s))))
    }

    pub(crate) fn set(&self, s: Arc<Snapshot>) {
        *self.0.lock().unwrap_or_else(|e| e.into_inner()) = s;
    }

    pub fn latest(&self) -> Arc<Snapshot> {
        Arc::clone(&self.0.lock().unwrap_or_else(|e| e.into_inner()))
    }
}
