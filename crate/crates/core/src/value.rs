//! Runtime values and their canonical JSON encoding.
//!
//! Values are structurally typed against the datatype declarations of a
//! [`CheckedSpec`]. The JSON encoding is type-directed: decoding needs the
//! expected [`TypeRef`], encoding does not carry type tags.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Map, Number, Value as Json};
use thiserror::Error;

use crate::checker::{CheckedSpec, Datatype};
use crate::model::{Builtin, TypeRef};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    String(String),
    Integer(i64),
    Float(f64),
    Boolean(bool),
    Enum { ty: String, value: String },
    Struct { ty: String, fields: BTreeMap<String, Value> },
    Array { element: TypeRef, items: Vec<Value> },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ValueError {
    #[error("expected a value of type {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("`{value}` is not a value of enumeration {ty}")]
    UnknownEnumValue { ty: String, value: String },
    #[error("structure {ty} is missing field `{field}`")]
    MissingField { ty: String, field: String },
    #[error("structure {ty} has no field `{field}`")]
    UnknownField { ty: String, field: String },
}

impl Value {
    pub fn string(s: impl Into<String>) -> Value {
        Value::String(s.into())
    }

    pub fn enumeration(ty: impl Into<String>, value: impl Into<String>) -> Value {
        Value::Enum {
            ty: ty.into(),
            value: value.into(),
        }
    }

    pub fn structure<K: Into<String>>(ty: impl Into<String>, fields: impl IntoIterator<Item = (K, Value)>) -> Value {
        Value::Struct {
            ty: ty.into(),
            fields: fields.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// Short description of the value's shape, for error messages.
    pub fn describe(&self) -> String {
        match self {
            Value::String(_) => "String".into(),
            Value::Integer(_) => "Integer".into(),
            Value::Float(_) => "Float".into(),
            Value::Boolean(_) => "Boolean".into(),
            Value::Enum { ty, .. } | Value::Struct { ty, .. } => ty.clone(),
            Value::Array { element, .. } => format!("{element}[]"),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            Value::Enum { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Integer(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Struct { fields, .. } => fields.get(name),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<&[Value]> {
        match self {
            Value::Array { items, .. } => Some(items),
            _ => None,
        }
    }

    /// Numeric ordering; `None` for non-numeric values or NaN.
    pub fn numeric_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            _ => self.as_f64()?.partial_cmp(&other.as_f64()?),
        }
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> Json {
        match self {
            Value::String(s) => Json::String(s.clone()),
            Value::Integer(i) => Json::Number((*i).into()),
            Value::Float(x) => Number::from_f64(*x).map(Json::Number).unwrap_or(Json::Null),
            Value::Boolean(b) => Json::Bool(*b),
            Value::Enum { value, .. } => Json::String(value.clone()),
            Value::Struct { fields, .. } => {
                let map: Map<String, Json> = fields.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
                Json::Object(map)
            }
            Value::Array { items, .. } => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    /// Decodes JSON against an expected type.
    ///
    /// A structure with exactly one field also accepts the bare field value,
    /// so `"hall"` decodes as `Area { name: "hall" }`.
    pub fn from_json(spec: &CheckedSpec, json: &Json, ty: &TypeRef) -> Result<Value, ValueError> {
        let mismatch = || ValueError::Mismatch {
            expected: ty.to_string(),
            found: json_kind(json).to_string(),
        };
        match ty {
            TypeRef::Builtin(b) => match (b, json) {
                (Builtin::String, Json::String(s)) => Ok(Value::String(s.clone())),
                (Builtin::Integer, Json::Number(n)) => n.as_i64().map(Value::Integer).ok_or_else(mismatch),
                (Builtin::Float, Json::Number(n)) => n.as_f64().map(Value::Float).ok_or_else(mismatch),
                (Builtin::Boolean, Json::Bool(v)) => Ok(Value::Boolean(*v)),
                _ => Err(mismatch()),
            },
            TypeRef::Array(element) => match json {
                Json::Array(items) => Ok(Value::Array {
                    element: (**element).clone(),
                    items: items
                        .iter()
                        .map(|j| Value::from_json(spec, j, element))
                        .collect::<Result<_, _>>()?,
                }),
                _ => Err(mismatch()),
            },
            TypeRef::Named(name) => match spec.datatype(name) {
                None => Err(ValueError::UnknownType(name.clone())),
                Some(Datatype::Enum(e)) => match json {
                    Json::String(s) if e.values.iter().any(|v| v.text == *s) => Ok(Value::enumeration(name.clone(), s.clone())),
                    Json::String(s) => Err(ValueError::UnknownEnumValue {
                        ty: name.clone(),
                        value: s.clone(),
                    }),
                    _ => Err(mismatch()),
                },
                Some(Datatype::Struct(s)) => match json {
                    Json::Object(map) => {
                        for key in map.keys() {
                            if !s.fields.iter().any(|f| f.name.text == *key) {
                                return Err(ValueError::UnknownField {
                                    ty: name.clone(),
                                    field: key.clone(),
                                });
                            }
                        }
                        let mut fields = BTreeMap::new();
                        for f in &s.fields {
                            let j = map.get(&f.name.text).ok_or_else(|| ValueError::MissingField {
                                ty: name.clone(),
                                field: f.name.text.clone(),
                            })?;
                            fields.insert(f.name.text.clone(), Value::from_json(spec, j, &f.ty)?);
                        }
                        Ok(Value::Struct { ty: name.clone(), fields })
                    }
                    other if s.fields.len() == 1 => {
                        let f = &s.fields[0];
                        let inner = Value::from_json(spec, other, &f.ty)?;
                        Ok(Value::structure(name.clone(), [(f.name.text.clone(), inner)]))
                    }
                    _ => Err(mismatch()),
                },
            },
        }
    }

    /// Verifies that the value inhabits `ty`.
    pub fn check(&self, spec: &CheckedSpec, ty: &TypeRef) -> Result<(), ValueError> {
        let mismatch = || ValueError::Mismatch {
            expected: ty.to_string(),
            found: self.describe(),
        };
        match (ty, self) {
            (TypeRef::Builtin(Builtin::String), Value::String(_))
            | (TypeRef::Builtin(Builtin::Integer), Value::Integer(_))
            | (TypeRef::Builtin(Builtin::Float), Value::Float(_))
            | (TypeRef::Builtin(Builtin::Boolean), Value::Boolean(_)) => Ok(()),
            (TypeRef::Array(expected), Value::Array { element, items }) => {
                if **expected != *element {
                    return Err(mismatch());
                }
                items.iter().try_for_each(|v| v.check(spec, expected))
            }
            (TypeRef::Named(name), Value::Enum { ty: vty, value }) if name == vty => match spec.datatype(name) {
                Some(Datatype::Enum(e)) if e.values.iter().any(|v| v.text == *value) => Ok(()),
                Some(Datatype::Enum(_)) => Err(ValueError::UnknownEnumValue {
                    ty: name.clone(),
                    value: value.clone(),
                }),
                Some(Datatype::Struct(_)) => Err(mismatch()),
                None => Err(ValueError::UnknownType(name.clone())),
            },
            (TypeRef::Named(name), Value::Struct { ty: vty, fields }) if name == vty => match spec.datatype(name) {
                Some(Datatype::Struct(s)) => {
                    for key in fields.keys() {
                        if !s.fields.iter().any(|f| f.name.text == *key) {
                            return Err(ValueError::UnknownField {
                                ty: name.clone(),
                                field: key.clone(),
                            });
                        }
                    }
                    for f in &s.fields {
                        let v = fields.get(&f.name.text).ok_or_else(|| ValueError::MissingField {
                            ty: name.clone(),
                            field: f.name.text.clone(),
                        })?;
                        v.check(spec, &f.ty)?;
                    }
                    Ok(())
                }
                Some(Datatype::Enum(_)) => Err(mismatch()),
                None => Err(ValueError::UnknownType(name.clone())),
            },
            _ => Err(mismatch()),
        }
    }

    /// Converts an untyped literal (as produced by the query parser) to `ty`.
    ///
    /// Values that already inhabit `ty` are returned unchanged. Otherwise a
    /// string may name an enumeration value, an integer may widen to a float,
    /// and a scalar may fill a single-field structure.
    pub fn coerce(self, spec: &CheckedSpec, ty: &TypeRef) -> Result<Value, ValueError> {
        if self.check(spec, ty).is_ok() {
            return Ok(self);
        }
        match (ty, &self) {
            (TypeRef::Builtin(Builtin::Float), Value::Integer(i)) => Ok(Value::Float(*i as f64)),
            (TypeRef::Named(name), _) => match spec.datatype(name) {
                Some(Datatype::Enum(e)) => match &self {
                    Value::String(s) if e.values.iter().any(|v| v.text == *s) => Ok(Value::enumeration(name.clone(), s.clone())),
                    Value::String(s) => Err(ValueError::UnknownEnumValue {
                        ty: name.clone(),
                        value: s.clone(),
                    }),
                    _ => Err(ValueError::Mismatch {
                        expected: name.clone(),
                        found: self.describe(),
                    }),
                },
                Some(Datatype::Struct(s)) if s.fields.len() == 1 && !matches!(self, Value::Struct { .. }) => {
                    let f = &s.fields[0];
                    let inner = self.coerce(spec, &f.ty)?;
                    Ok(Value::structure(name.clone(), [(f.name.text.clone(), inner)]))
                }
                Some(_) => Err(ValueError::Mismatch {
                    expected: name.clone(),
                    found: self.describe(),
                }),
                None => Err(ValueError::UnknownType(name.clone())),
            },
            _ => Err(ValueError::Mismatch {
                expected: ty.to_string(),
                found: self.describe(),
            }),
        }
    }
}

fn json_kind(json: &Json) -> &'static str {
    match json {
        Json::Null => "null",
        Json::Bool(_) => "Boolean",
        Json::Number(n) if n.is_i64() || n.is_u64() => "Integer",
        Json::Number(_) => "Float",
        Json::String(_) => "String",
        Json::Array(_) => "array",
        Json::Object(_) => "object",
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "true"
        && s != "false"
}

/// Literal form used by the textual filter syntax.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::String(s) if is_plain_ident(s) => f.write_str(s),
            Value::String(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Integer(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Enum { value, .. } => f.write_str(value),
            Value::Struct { fields, .. } if fields.len() == 1 => {
                write!(f, "{}", fields.values().next().expect("one field"))
            }
            Value::Struct { .. } | Value::Array { .. } => write!(f, "{}", self.to_json()),
        }
    }
}
