//! JSON messages exchanged with operator consoles.
//!
//! The server sends one `frame` message per tick (the serialized
//! [`FrameRecord`](super::FrameRecord)) and an `error` message for every
//! client message it rejects. Clients send the messages of
//! [`ClientMessage`]; unknown fields are ignored.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::control::ControlMode;
use super::PipelineError;
use crate::{Direction, Thought};

/// Operator commands. Each overrides the decoded value it touches and
/// persists until the next command or decoded event on that quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    /// Drive in `dir` at the configured speed.
    Eye { dir: Direction },
    /// Gains of the preset for `label`.
    Thought { label: Thought },
    /// Explicit gains.
    Gains { a: f64, b: f64 },
    /// Zero drive.
    Halt,
    /// `manual` ignores decoded events; `decoded` resumes them.
    Mode { value: ControlMode },
}

const KNOWN_TYPES: [&str; 5] = ["eye", "thought", "gains", "halt", "mode"];

pub fn parse_client_message(text: &str) -> Result<ClientMessage, PipelineError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| PipelineError::Protocol(format!("malformed JSON: {e}")))?;
    let kind = value
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| PipelineError::Protocol("message has no string `type`".into()))?
        .to_string();
    if !KNOWN_TYPES.contains(&kind.as_str()) {
        return Err(PipelineError::Protocol(format!("unknown message type `{kind}`")));
    }
    let message: ClientMessage =
        serde_json::from_value(value).map_err(|e| PipelineError::Protocol(format!("bad `{kind}` message: {e}")))?;
    if let ClientMessage::Gains { a, b } = message {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(PipelineError::Protocol(format!("gains must be positive and finite, got a={a} b={b}")));
        }
    }
    Ok(message)
}

/// `{"type":"error", ...}` reply to a rejected client message.
pub fn error_reply(message: &str, received: &str) -> String {
    json!({
        "type": "error",
        "message": message,
        "received": received,
    })
    .to_string()
}
