//! Live steering: commands validated on the caller's thread, then queued
//! for the simulation loop to apply at the next tick boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc::Sender;
use std::sync::Arc;

use diakit_core::model::TypeRef;
use diakit_core::{CheckedSpec, Value};
use serde_json::Value as Json;
use thiserror::Error;

use super::motion::Point;

#[derive(Clone, Debug, PartialEq)]
pub enum SteerCommand {
    Inject {
        entity: String,
        source: String,
        value: Value,
        indices: Vec<Value>,
    },
    SetWaypoints {
        agent: String,
        points: Vec<Point>,
    },
    Pause,
    Resume,
    Step,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SteerError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("`{class}` has no source `{source_name}`")]
    UnknownSource { class: String, source_name: String },
    #[error("ill-typed {what}: {message}")]
    IllTyped { what: String, message: String },
    #[error("point ({x}, {y}) is outside the environment")]
    OutOfBounds { x: f64, y: f64 },
    #[error("the simulation has ended")]
    Closed,
}

/// Thread-safe handle for steering a running simulation.
#[derive(Clone)]
pub struct SteeringHandle {
    pub(crate) tx: Sender<SteerCommand>,
    pub(crate) spec: Arc<CheckedSpec>,
    /// Entity id to device class.
    pub(crate) entities: Arc<BTreeMap<String, String>>,
    pub(crate) agents: Arc<BTreeSet<String>>,
    pub(crate) bounds: (f64, f64),
}

impl SteeringHandle {
    fn send(&self, cmd: SteerCommand) -> Result<(), SteerError> {
        self.tx.send(cmd).map_err(|_| SteerError::Closed)
    }

    fn source_types(&self, entity: &str, source: &str) -> Result<(TypeRef, Vec<TypeRef>), SteerError> {
        let class = self
            .entities
            .get(entity)
            .ok_or_else(|| SteerError::UnknownDevice(entity.to_string()))?;
        let members = self
            .spec
            .effective_members(class)
            .map_err(|_| SteerError::UnknownDevice(entity.to_string()))?;
        let decl = members.source(source).ok_or_else(|| SteerError::UnknownSource {
            class: class.clone(),
            source_name: source.to_string(),
        })?;
        Ok((decl.value_type.clone(), decl.indices.iter().map(|i| i.ty.clone()).collect()))
    }

    fn arity(what: &str, expected: usize, found: usize) -> Result<(), SteerError> {
        if expected == found {
            Ok(())
        } else {
            Err(SteerError::IllTyped {
                what: what.to_string(),
                message: format!("expected {expected} index value(s), found {found}"),
            })
        }
    }

    /// Queues a stimulus on `entity.source`, decoding JSON values against the
    /// source's declared types.
    pub fn inject_json(&self, entity: &str, source: &str, value: &Json, indices: &[Json]) -> Result<(), SteerError> {
        let (ty, index_types) = self.source_types(entity, source)?;
        let what = format!("value for {entity}.{source}");
        let value = Value::from_json(&self.spec, value, &ty).map_err(|e| SteerError::IllTyped {
            what: what.clone(),
            message: e.to_string(),
        })?;
        Self::arity(&what, index_types.len(), indices.len())?;
        let indices = index_types
            .iter()
            .zip(indices)
            .map(|(t, j)| Value::from_json(&self.spec, j, t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SteerError::IllTyped {
                what: what.clone(),
                message: e.to_string(),
            })?;
        self.send(SteerCommand::Inject {
            entity: entity.to_string(),
            source: source.to_string(),
            value,
            indices,
        })
    }

    /// Queues a stimulus, coercing values to the source's declared types.
    pub fn inject(&self, entity: &str, source: &str, value: Value, indices: Vec<Value>) -> Result<(), SteerError> {
        let (ty, index_types) = self.source_types(entity, source)?;
        let what = format!("value for {entity}.{source}");
        let ill = |e: diakit_core::value::ValueError| SteerError::IllTyped {
            what: what.clone(),
            message: e.to_string(),
        };
        let value = value.coerce(&self.spec, &ty).map_err(ill)?;
        Self::arity(&what, index_types.len(), indices.len())?;
        let indices = index_types
            .iter()
            .zip(indices)
            .map(|(t, v)| v.coerce(&self.spec, t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ill)?;
        self.send(SteerCommand::Inject {
            entity: entity.to_string(),
            source: source.to_string(),
            value,
            indices,
        })
    }

    pub fn set_waypoints(&self, agent: &str, points: Vec<Point>) -> Result<(), SteerError> {
        if !self.agents.contains(agent) {
            return Err(SteerError::UnknownAgent(agent.to_string()));
        }
        let (w, h) = self.bounds;
        if let Some(p) = points
            .iter()
            .find(|p| !(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h))
        {
            return Err(SteerError::OutOfBounds { x: p.x, y: p.y });
        }
        self.send(SteerCommand::SetWaypoints {
            agent: agent.to_string(),
            points,
        })
    }

    pub fn pause(&self) -> Result<(), SteerError> {
        self.send(SteerCommand::Pause)
    }

    pub fn resume(&self) -> Result<(), SteerError> {
        self.send(SteerCommand::Resume)
    }

    /// Runs exactly one tick while paused.
    pub fn step(&self) -> Result<(), SteerError> {
        self.send(SteerCommand::Step)
    }
}
