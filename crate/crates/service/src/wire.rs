//! Wire types for the session API. The JSON shapes here are described by
//! the schema document served at `/v1/schema`.

use serde::{Deserialize, Serialize};

use askloop_core::household::LayoutPool;
use askloop_core::{EnvKind, Outcome, Variant};

pub const API_VERSION: &str = "v1";
pub const SCHEMA_DOC: &str = include_str!("../schema/session-api-v1.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionMode {
    /// The rule oracle answers questions.
    AutoOracle,
    /// A person answers through the answer endpoint.
    HumanOracle,
    /// A person chooses actions through the act endpoint; the rule oracle
    /// answers their questions.
    HumanAgent,
}

impl SessionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionMode::AutoOracle => "auto-oracle",
            SessionMode::HumanOracle => "human-oracle",
            SessionMode::HumanAgent => "human-agent",
        }
    }
}

fn default_variant() -> Variant {
    Variant::Standard
}

fn default_policy() -> String {
    "scripted-aba".into()
}

fn default_mode() -> SessionMode {
    SessionMode::AutoOracle
}

fn default_pool() -> LayoutPool {
    LayoutPool::Id
}

fn default_task() -> u8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub env: EnvKind,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub seed: u64,
    /// Ignored in human-agent mode.
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default = "default_mode")]
    pub mode: SessionMode,
    #[serde(default = "default_pool")]
    pub pool: LayoutPool,
    /// Tabletop task number.
    #[serde(default = "default_task")]
    pub task: u8,
    #[serde(default)]
    pub x: u32,
    #[serde(default)]
    pub y: u32,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub max_tasks: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextBody {
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Think,
    Ask,
    Physical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    Ack,
    Answer,
    Env,
}

/// One entry of a session's event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventBody {
    /// First observation, carrying the instruction.
    Start { text: String },
    Action { t: usize, kind: ActionKind, text: String },
    /// The episode is parked until a human answers `text`.
    Question { t: usize, text: String },
    Observation { t: usize, kind: ObservationKind, text: String },
    End(Summary),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub cursor: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Events {
    pub events: Vec<Event>,
    /// Cursor to pass as `since` next time.
    pub next: u64,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub outcome: Outcome,
    pub steps: usize,
    pub physical_actions: usize,
    pub questions: usize,
    pub tasks_completed: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    AwaitingAnswer,
    AwaitingAction,
    Finished,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub mode: SessionMode,
    pub status: Status,
    pub env: EnvKind,
    pub variant: Variant,
    pub seed: u64,
    pub steps: usize,
    pub events: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownSession,
    AnswerWithoutQuestion,
    WrongMode,
    MalformedAction,
    EpisodeOver,
    BadRequest,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::UnknownSession => 404,
            ErrorCode::AnswerWithoutQuestion | ErrorCode::WrongMode | ErrorCode::EpisodeOver => 409,
            ErrorCode::MalformedAction => 422,
            ErrorCode::BadRequest => 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_doc_is_versioned_json() {
        let doc: serde_json::Value = serde_json::from_str(SCHEMA_DOC).unwrap();
        assert_eq!(doc["version"], API_VERSION);
        for def in ["CreateSession", "Event", "Events", "SessionState", "ErrorBody"] {
            assert!(doc["$defs"][def].is_object(), "{def}");
        }
    }

    #[test]
    fn events_flatten_with_a_type_tag() {
        let e = Event { cursor: 2, body: EventBody::Question { t: 3, text: "where?".into() } };
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v, serde_json::json!({"cursor": 2, "type": "question", "t": 3, "text": "where?"}));
        assert_eq!(serde_json::from_value::<Event>(v).unwrap(), e);
    }
}
