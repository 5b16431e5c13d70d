//! Policy families: the full-information expert, the scripted asking agent,
//! a scripted searcher that never asks, and a remote text-model policy.

pub mod aba;
pub mod baseline;
pub mod belief;
pub mod expert;
pub mod remote;
pub mod table;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aba::ScriptedAba;
pub use baseline::ScriptedBaseline;
pub use expert::{expert_action, ExpertPolicy};
pub use remote::{CandidateMode, Endpoint, HttpEndpoint, PromptBundle, RemotePolicy, ReplayEndpoint};

use crate::harness::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Expert,
    ScriptedAba,
    ScriptedBaseline,
    Remote,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Expert => "expert",
            PolicyKind::ScriptedAba => "scripted-aba",
            PolicyKind::ScriptedBaseline => "scripted-baseline",
            PolicyKind::Remote => "remote",
        }
    }

    /// Builds a local policy; the remote one needs an endpoint and is built
    /// with [`RemotePolicy::new`].
    pub fn build_local(self) -> Option<Box<dyn Policy>> {
        match self {
            PolicyKind::Expert => Some(Box::new(ExpertPolicy)),
            PolicyKind::ScriptedAba => Some(Box::new(ScriptedAba::new())),
            PolicyKind::ScriptedBaseline => Some(Box::new(ScriptedBaseline::new())),
            PolicyKind::Remote => None,
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expert" => Ok(PolicyKind::Expert),
            "scripted-aba" | "aba" => Ok(PolicyKind::ScriptedAba),
            "scripted-baseline" | "baseline" => Ok(PolicyKind::ScriptedBaseline),
            "remote" => Ok(PolicyKind::Remote),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}
