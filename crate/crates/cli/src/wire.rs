//! JSON messages exchanged with the console over `/ws`.
//!
//! Server to client: `snapshot`, `event`, `ack`, `error`. Client to server:
//! `inject`, `waypoints`, `pause`, `resume`, `step`, each optionally carrying
//! a `requestId` that is echoed in exactly one `ack` or `error`.

use diakit_runtime::sim::{Point, Snapshot, SteeringHandle};
use serde::Deserialize;
use serde_json::{json, Value as Json};

#[derive(Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Inject {
        device: String,
        source: String,
        value: Json,
        #[serde(default)]
        indices: Vec<Json>,
    },
    Waypoints {
        agent: String,
        points: Vec<[f64; 2]>,
    },
    Pause,
    Resume,
    Step,
}

/// Splits a text frame into its request id (`null` when absent) and the
/// decoded message.
pub fn decode(text: &str) -> (Json, Result<ClientMessage, String>) {
    let mut obj = match serde_json::from_str::<Json>(text) {
        Ok(Json::Object(obj)) => obj,
        Ok(_) => return (Json::Null, Err("message must be a JSON object".into())),
        Err(e) => return (Json::Null, Err(format!("malformed JSON: {e}"))),
    };
    let id = obj.remove("requestId").unwrap_or(Json::Null);
    let msg = serde_json::from_value(Json::Object(obj)).map_err(|e| e.to_string());
    (id, msg)
}

pub fn snapshot(s: &Snapshot) -> Json {
    json!({"type": "snapshot", "snapshot": s.to_json()})
}

pub fn event(record: &Json) -> Json {
    json!({"type": "event", "event": record})
}

pub fn ack(id: Json) -> Json {
    json!({"type": "ack", "requestId": id})
}

pub fn error(id: Json, message: impl Into<String>) -> Json {
    json!({"type": "error", "requestId": id, "message": message.into()})
}

/// Applies one client frame to the simulation and returns the reply.
pub fn handle(steering: &SteeringHandle, text: &str) -> Json {
    let (id, msg) = decode(text);
    let result = msg.and_then(|m| {
        match m {
            ClientMessage::Inject {
                device,
                source,
                value,
                indices,
            } => steering.inject_json(&device, &source, &value, &indices),
            ClientMessage::Waypoints { agent, points } => {
                steering.set_waypoints(&agent, points.iter().map(|[x, y]| Point::new(*x, *y)).collect())
            }
            ClientMessage::Pause => steering.pause(),
            ClientMessage::Resume => steering.resume(),
            ClientMessage::Step => steering.step(),
        }
        .map_err(|e| e.to_string())
    });
    match result {
        Ok(()) => ack(id),
        Err(message) => error(id, message),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_every_client_message() {
        let (id, m) = decode(r#"{"type":"inject","requestId":"r1","device":"br1","source":"badgeDetected","value":"0A12"}"#);
        assert_eq!(id, json!("r1"));
        assert_eq!(
            m.unwrap(),
            ClientMessage::Inject {
                device: "br1".into(),
                source: "badgeDetected".into(),
                value: json!("0A12"),
                indices: vec![],
            }
        );
        let (id, m) = decode(r#"{"type":"waypoints","requestId":7,"agent":"a","points":[[1,2],[3.5,4]]}"#);
        assert_eq!(id, json!(7));
        assert_eq!(
            m.unwrap(),
            ClientMessage::Waypoints {
                agent: "a".into(),
                points: vec![[1.0, 2.0], [3.5, 4.0]],
            }
        );
        for (t, want) in [
            ("pause", ClientMessage::Pause),
            ("resume", ClientMessage::Resume),
            ("step", ClientMessage::Step),
        ] {
            assert_eq!(decode(&format!(r#"{{"type":"{t}","requestId":1}}"#)).1.unwrap(), want);
        }
    }

    #[test]
    fn bad_frames_keep_their_request_id() {
        let (id, m) = decode(r#"{"type":"teleport","requestId":"x"}"#);
        assert_eq!(id, json!("x"));
        assert!(m.is_err());
        let (id, m) = decode(r#"{"type":"waypoints","requestId":"y","agent":"a"}"#);
        assert_eq!(id, json!("y"));
        assert!(m.unwrap_err().contains("points"));
        assert_eq!(decode("[1]").0, Json::Null);
        assert!(decode("{nope").1.unwrap_err().starts_with("malformed JSON"));
    }

    #[test]
    fn server_messages_carry_their_type() {
        assert_eq!(ack(json!(3)), json!({"type": "ack", "requestId": 3}));
        assert_eq!(error(Json::Null, "no")["type"], "error");
        assert_eq!(event(&json!({"seq": 0}))["event"]["seq"], 0);
    }
}
