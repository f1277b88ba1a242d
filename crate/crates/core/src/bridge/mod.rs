//! Line-delimited request/response protocol exposing the environment to
//! external agent processes. One JSON object per line, UTF-8, version field
//! mandatory; the wire format is documented in `docs/protocol.md`.

mod server;

pub use server::{serve_session, serve_stdio, serve_tcp, Session};

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u64 = 1;

/// Request envelope. Exactly one request per line; unknown fields are
/// rejected so drift against the documented format surfaces immediately.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    /// Protocol version; must equal [`PROTOCOL_VERSION`].
    pub v: u64,
    pub op: Op,
    #[serde(default)]
    pub sim_config: Option<String>,
    #[serde(default)]
    pub train_config: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub action: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Init,
    Spaces,
    Reset,
    Step,
    Close,
}

/// Response envelope: every request gets exactly one line back.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Response {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub done: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub info: Option<StepInfoJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_i: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_o: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn error(code: &str) -> Self {
        Self {
            ok: false,
            error: Some(code.to_string()),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct StepInfoJson {
    pub time: f64,
    pub invalid_action: bool,
    pub shed_pu: f64,
    pub synchronism_lost: bool,
}
