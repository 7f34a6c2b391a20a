//! Entity instances and the device-side behavior behind them.

use std::collections::BTreeMap;

use diakit_core::Value;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub id: String,
    pub class: String,
    pub attributes: BTreeMap<String, Value>,
    pub online: bool,
}

impl Entity {
    pub fn attribute(&self, name: &str) -> Option<&Value> {
        self.attributes.get(name)
    }
}

/// Result of a discovery: members in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composite {
    pub class: String,
    pub ids: Vec<String>,
}

impl Composite {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("no pull handler for `{0}`")]
    NoPull(String),
    #[error("no entry for `{source_name}` at [{indices}]")]
    NoEntry { source_name: String, indices: String },
    #[error("`{action}.{method}` is not implemented")]
    UnknownMethod { action: String, method: String },
    #[error("{0}")]
    Failed(String),
}

impl BehaviorError {
    pub fn no_pull(source: &str, _indices: &[Value]) -> BehaviorError {
        BehaviorError::NoPull(source.to_string())
    }

    pub fn unknown_method(action: &str, method: &str, _args: &[Value]) -> BehaviorError {
        BehaviorError::UnknownMethod {
            action: action.to_string(),
            method: method.to_string(),
        }
    }
}

/// The implementation side of an entity: answers pulls and carries out
/// commands. Both default to "not implemented"/"accepted".
pub trait EntityBehavior: Send {
    fn pull(&mut self, source: &str, indices: &[Value]) -> Result<Value, BehaviorError> {
        Err(BehaviorError::no_pull(source, indices))
    }

    fn command(&mut self, _action: &str, _method: &str, _args: &[Value]) -> Result<(), BehaviorError> {
        Ok(())
    }
}

/// Accepts every command and answers pulls from fixed lookup tables keyed by
/// index values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TableBehavior {
    tables: BTreeMap<String, Vec<(Vec<Value>, Value)>>,
    /// Commands received so far, as `(action, method, args)`.
    pub received: Vec<(String, String, Vec<Value>)>,
}

impl TableBehavior {
    pub fn new() -> TableBehavior {
        TableBehavior::default()
    }

    pub fn with_entry(mut self, source: impl Into<String>, indices: Vec<Value>, value: Value) -> TableBehavior {
        self.insert(source, indices, value);
        self
    }

    pub fn insert(&mut self, source: impl Into<String>, indices: Vec<Value>, value: Value) {
        let rows = self.tables.entry(source.into()).or_default();
        match rows.iter_mut().find(|(k, _)| *k == indices) {
            Some(row) => row.1 = value,
            None => rows.push((indices, value)),
        }
    }
}

impl EntityBehavior for TableBehavior {
    fn pull(&mut self, source: &str, indices: &[Value]) -> Result<Value, BehaviorError> {
        let rows = self.tables.get(source).ok_or_else(|| BehaviorError::NoPull(source.to_string()))?;
        rows.iter()
            .find(|(k, _)| k.as_slice() == indices)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| BehaviorError::NoEntry {
                source_name: source.to_string(),
                indices: indices.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "),
            })
    }

    fn command(&mut self, action: &str, method: &str, args: &[Value]) -> Result<(), BehaviorError> {
        self.received.push((action.to_string(), method.to_string(), args.to_vec()));
        Ok(())
    }
}
