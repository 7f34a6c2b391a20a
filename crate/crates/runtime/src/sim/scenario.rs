//! Scenario files: environment layout, entity placements, agents, stimuli.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::motion::Point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub environment: Environment,
    #[serde(default)]
    pub entities: Vec<EntityConfig>,
    #[serde(default)]
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub stimuli: Vec<StimulusSpec>,
    pub duration_ticks: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub tick_seconds: f64,
}

fn one() -> f64 {
    1.0
}

fn one_tick() -> u64 {
    1
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Scenario, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub areas: Vec<AreaConfig>,
    #[serde(default)]
    pub walls: Vec<Wall>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaConfig {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// A wall segment; rendering data only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EntityConfig {
    pub device_class: String,
    pub id: String,
    #[serde(default)]
    pub attributes: Map<String, Json>,
    pub position: Point,
    #[serde(default)]
    pub behavior: BehaviorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BehaviorConfig {
    #[serde(default = "basic")]
    pub name: String,
    #[serde(default)]
    pub detection_range: Option<f64>,
    /// Pull tables: source name to rows of (index values, value).
    #[serde(default)]
    pub tables: BTreeMap<String, Vec<TableRow>>,
}

fn basic() -> String {
    "basic".into()
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        BehaviorConfig {
            name: basic(),
            detection_range: None,
            tables: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    #[serde(default)]
    pub indices: Vec<Json>,
    pub value: Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: String,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
    pub position: Point,
    /// Meters per tick.
    pub speed: f64,
    #[serde(default)]
    pub waypoints: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    /// Entity id.
    pub device: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum StimulusSpec {
    Constant(ConstantStimulus),
    Sequence(SequenceStimulus),
    Sinusoid(SinusoidStimulus),
    AgentProximity(ProximityStimulus),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConstantStimulus {
    pub target: Target,
    #[serde(default = "one_tick")]
    pub refresh_period: u64,
    #[serde(default)]
    pub start_tick: u64,
    /// Exclusive.
    #[serde(default)]
    pub end_tick: Option<u64>,
    pub value: Json,
    #[serde(default)]
    pub indices: Vec<Json>,
}

/// Emits `values[k]` at `startTick + k * refreshPeriod`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SequenceStimulus {
    pub target: Target,
    #[serde(default = "one_tick")]
    pub refresh_period: u64,
    #[serde(default)]
    pub start_tick: u64,
    pub values: Vec<Json>,
    #[serde(default)]
    pub indices: Vec<Json>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SinusoidStimulus {
    pub target: Target,
    #[serde(default = "one_tick")]
    pub refresh_period: u64,
    #[serde(default)]
    pub start_tick: u64,
    #[serde(default)]
    pub end_tick: Option<u64>,
    pub offset: f64,
    pub amplitude: f64,
    pub period_ticks: f64,
    #[serde(default)]
    pub phase_radians: f64,
    #[serde(default)]
    pub indices: Vec<Json>,
}

/// Publishes `enterSource`/`leaveSource` on sensors of `deviceClass` with
/// the agent's `agentProperty` as value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProximityStimulus {
    pub device_class: String,
    pub agent_property: String,
    pub enter_source: String,
    pub leave_source: String,
}
