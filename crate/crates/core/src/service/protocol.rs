//! Line-delimited JSON messages exchanged with live clients.

use serde::{Deserialize, Serialize};

use crate::sim::Handle;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        version: u32,
    },
    SetCrease {
        #[serde(default)]
        seq: Option<u64>,
        vertices: Vec<[f64; 2]>,
    },
    MoveHandle {
        #[serde(default)]
        seq: Option<u64>,
        handle: usize,
        position: Vec<f64>,
    },
    SetAlpha {
        #[serde(default)]
        seq: Option<u64>,
        alpha: f64,
    },
    Pause {
        #[serde(default)]
        seq: Option<u64>,
    },
    Resume {
        #[serde(default)]
        seq: Option<u64>,
    },
    Reset {
        #[serde(default)]
        seq: Option<u64>,
    },
}

impl ClientMessage {
    pub fn seq(&self) -> Option<u64> {
        match self {
            ClientMessage::Hello { .. } => None,
            ClientMessage::SetCrease { seq, .. }
            | ClientMessage::MoveHandle { seq, .. }
            | ClientMessage::SetAlpha { seq, .. }
            | ClientMessage::Pause { seq }
            | ClientMessage::Resume { seq }
            | ClientMessage::Reset { seq } => *seq,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClientMessage::Hello { .. } => "hello",
            ClientMessage::SetCrease { .. } => "set_crease",
            ClientMessage::MoveHandle { .. } => "move_handle",
            ClientMessage::SetAlpha { .. } => "set_alpha",
            ClientMessage::Pause { .. } => "pause",
            ClientMessage::Resume { .. } => "resume",
            ClientMessage::Reset { .. } => "reset",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigMessage {
    /// Increments whenever the tracer layout or interface changes.
    pub revision: u64,
    pub dim: usize,
    pub k: usize,
    pub alpha: f64,
    pub alpha_range: [f64; 2],
    pub crease: Vec<Vec<f64>>,
    pub cut: Option<Vec<Vec<f64>>>,
    /// Rest positions of the tracers; frames list their deformed positions in this order.
    pub tracers: Vec<Vec<f64>>,
    /// Material weight at every tracer.
    pub weights: Vec<f64>,
    pub handles: Vec<Handle>,
    pub out_of_family: bool,
    pub paused: bool,
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    pub revision: u64,
    pub step: u64,
    pub alpha: f64,
    pub z: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        version: u32,
        server: String,
    },
    Config(ConfigMessage),
    Frame(FrameMessage),
    Ack {
        seq: Option<u64>,
        edit: String,
        /// First frame step index that reflects the edit.
        step: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        warning: Option<String>,
    },
    Error {
        seq: Option<u64>,
        reason: String,
    },
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("server messages serialize");
        s.push('\n');
        s
    }
}
