//! Event records and their JSON Lines encoding.

use std::fmt;

use diakit_core::json::to_canonical_string;
use serde_json::{json, Map, Value as Json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Stimulus,
    SourcePublish,
    ContextPublish,
    ControllerHandle,
    Command,
    Pull,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Stimulus => "stimulus",
            EventKind::SourcePublish => "sourcePublish",
            EventKind::ContextPublish => "contextPublish",
            EventKind::ControllerHandle => "controllerHandle",
            EventKind::Command => "command",
            EventKind::Pull => "pull",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        [
            EventKind::Stimulus,
            EventKind::SourcePublish,
            EventKind::ContextPublish,
            EventKind::ControllerHandle,
            EventKind::Command,
            EventKind::Pull,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One trace line.
///
/// `producer` is the entity id for stimulus, sourcePublish and pull records,
/// and the component name otherwise. Command records name the method and
/// carry the receiving entity in `target`; stimulus records carry `steered`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub seq: u64,
    pub cause: Option<u64>,
    pub tick: u64,
    pub kind: EventKind,
    pub producer: String,
    pub name: String,
    pub value: Json,
    pub indices: Map<String, Json>,
    pub target: Option<String>,
    pub steered: Option<bool>,
}

impl EventRecord {
    pub fn to_json(&self) -> Json {
        let mut v = json!({
            "seq": self.seq,
            "cause": self.cause,
            "tick": self.tick,
            "kind": self.kind.as_str(),
            "producer": self.producer,
            "name": self.name,
            "value": self.value,
            "indices": self.indices,
        });
        if let Some(t) = &self.target {
            v["target"] = json!(t);
        }
        if let Some(s) = self.steered {
            v["steered"] = json!(s);
        }
        v
    }

    pub fn to_line(&self) -> String {
        to_canonical_string(&self.to_json())
    }

    pub fn from_json(v: &Json) -> Option<EventRecord> {
        Some(EventRecord {
            seq: v.get("seq")?.as_u64()?,
            cause: match v.get("cause")? {
                Json::Null => None,
                c => Some(c.as_u64()?),
            },
            tick: v.get("tick")?.as_u64()?,
            kind: EventKind::parse(v.get("kind")?.as_str()?)?,
            producer: v.get("producer")?.as_str()?.to_string(),
            name: v.get("name")?.as_str()?.to_string(),
            value: v.get("value")?.clone(),
            indices: v.get("indices")?.as_object()?.clone(),
            target: v.get("target").and_then(Json::as_str).map(String::from),
            steered: v.get("steered").and_then(Json::as_bool),
        })
    }
}

/// Renders records as JSON Lines, one canonical object per line.
pub fn to_jsonl(records: &[EventRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Parses JSON Lines produced by [`to_jsonl`].
pub fn parse_jsonl(text: &str) -> Result<Vec<EventRecord>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let v: Json = serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
            EventRecord::from_json(&v).ok_or_else(|| format!("line {}: not an event record", i + 1))
        })
        .collect()
}

/// Follows `cause` links from `seq` back to a root; the result starts with
/// the record at `seq`. Records are looked up by their `seq` field.
pub fn cause_chain(records: &[EventRecord], seq: u64) -> Vec<&EventRecord> {
    let find = |s: u64| {
        records
            .binary_search_by_key(&s, |r| r.seq)
            .ok()
            .map(|i| &records[i])
            .or_else(|| records.iter().find(|r| r.seq == s))
    };
    let mut out = Vec::new();
    let mut cur = find(seq);
    while let Some(r) = cur {
        out.push(r);
        cur = r.cause.filter(|c| *c < r.seq).and_then(find);
    }
    out
}
