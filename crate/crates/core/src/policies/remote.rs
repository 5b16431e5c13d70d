//! Policy backed by a remote text model.
//!
//! The prompt is a preamble, K example transcripts with reasoning turns, the
//! current transcript and an `Act t:` cue. The first line of the completion
//! is taken as the action. With a candidate list configured and an endpoint
//! that returns token scores, each candidate is scored as a continuation and
//! the best one is chosen by [`select_by_token_scores`].

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{select_by_token_scores, Policy, PolicyDecision, PolicyError, PolicyView};
use crate::mdp::EnvKind;

// ---------------------------------------------------------------------------
// Prompt bundles
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptExample {
    pub name: String,
    pub transcript: String,
}

/// Versioned prompt template with its in-context examples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub version: String,
    pub preamble: String,
    #[serde(rename = "example", default)]
    pub examples: Vec<PromptExample>,
    /// Appended when the previous output failed to parse; `{error}` is replaced.
    #[serde(default = "default_corrective")]
    pub corrective: String,
}

fn default_corrective() -> String {
    "Your previous output could not be used ({error}). Reply with exactly one action.".into()
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] toml::de::Error),
}

const HOUSEHOLD_V1: &str = include_str!("../../assets/prompts/household-v1.toml");
const TABLETOP_V1: &str = include_str!("../../assets/prompts/tabletop-v1.toml");

impl PromptBundle {
    pub fn from_toml_str(text: &str) -> Result<Self, PromptError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Bundled prompt for an environment family.
    pub fn builtin(kind: EnvKind) -> Self {
        let text = match kind {
            EnvKind::Household => HOUSEHOLD_V1,
            EnvKind::Tabletop => TABLETOP_V1,
        };
        Self::from_toml_str(text).expect("bundled prompt parses")
    }

    /// Keeps the first `k` examples.
    pub fn with_k(mut self, k: usize) -> Self {
        self.examples.truncate(k);
        self
    }

    pub fn render(&self, transcript: &str, t: usize, feedback: Option<&str>) -> String {
        let mut parts: Vec<String> = vec![self.preamble.trim_end().to_string()];
        parts.extend(self.examples.iter().map(|e| e.transcript.trim_end().to_string()));
        let mut current = transcript.to_string();
        if let Some(err) = feedback {
            current.push('\n');
            current.push_str(&self.corrective.replace("{error}", err));
        }
        parts.push(current);
        format!("{}\nAct {t}:", parts.join("\n\n"))
    }
}

// ---------------------------------------------------------------------------
// Endpoints
// ---------------------------------------------------------------------------

/// Request body sent to a completion endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    #[serde(default)]
    pub stop: Vec<String>,
    #[serde(default)]
    pub want_token_scores: bool,
    /// When set, score this text as the continuation of `prompt` instead of
    /// generating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    /// Per-token probabilities in (0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_scores: Option<Vec<f64>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("transport: {0}")]
pub struct TransportError(pub String);

pub trait Endpoint: Send {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, TransportError>;
}

/// JSON-over-HTTP endpoint with retry and exponential backoff.
pub struct HttpEndpoint {
    url: String,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(60))).build().into();
        Self { url: url.into(), agent, retries: 3, backoff: Duration::from_millis(250) }
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    fn once(&self, req: &CompletionRequest) -> Result<CompletionResponse, TransportError> {
        let mut resp = self.agent.post(&self.url).send_json(req).map_err(|e| TransportError(e.to_string()))?;
        resp.body_mut().read_json::<CompletionResponse>().map_err(|e| TransportError(e.to_string()))
    }
}

impl Endpoint for HttpEndpoint {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, TransportError> {
        let mut last = TransportError("no attempt made".into());
        for attempt in 0..=self.retries {
            match self.once(req) {
                Ok(r) => return Ok(r),
                Err(e) => last = e,
            }
            if attempt < self.retries {
                std::thread::sleep(self.backoff * 2u32.pow(attempt));
            }
        }
        Err(last)
    }
}

/// Offline endpoint that returns canned completions in order.
#[derive(Clone, Debug, Default)]
pub struct ReplayEndpoint {
    replies: Vec<CompletionResponse>,
    next: usize,
    /// Requests seen so far, for inspection.
    pub requests: Vec<CompletionRequest>,
}

impl ReplayEndpoint {
    pub fn new(texts: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let replies = texts.into_iter().map(|t| CompletionResponse { text: t.into(), token_scores: None }).collect();
        Self { replies, next: 0, requests: Vec::new() }
    }

    pub fn with_responses(replies: Vec<CompletionResponse>) -> Self {
        Self { replies, next: 0, requests: Vec::new() }
    }
}

impl Endpoint for ReplayEndpoint {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, TransportError> {
        self.requests.push(req.clone());
        let r = self.replies.get(self.next).cloned().ok_or_else(|| TransportError("replay exhausted".into()))?;
        self.next += 1;
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

/// Where scored candidates come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandidateMode {
    Fixed(Vec<String>),
    /// The environment's admissible physical commands in the current state.
    Admissible,
}

pub struct RemotePolicy {
    endpoint: Box<dyn Endpoint>,
    bundle: PromptBundle,
    candidates: Option<CandidateMode>,
    max_tokens: u32,
}

impl RemotePolicy {
    pub fn new(endpoint: Box<dyn Endpoint>, bundle: PromptBundle) -> Self {
        Self { endpoint, bundle, candidates: None, max_tokens: 64 }
    }

    pub fn with_candidates(mut self, mode: CandidateMode) -> Self {
        self.candidates = Some(mode);
        self
    }

    fn candidate_list(&self, view: &PolicyView<'_>) -> Option<Vec<String>> {
        match self.candidates.as_ref()? {
            CandidateMode::Fixed(v) => Some(v.clone()),
            CandidateMode::Admissible => Some(
                crate::mdp::dynamics(view.env_kind)
                    .admissible_actions(view.state, view.context)
                    .iter()
                    .map(|a| a.render())
                    .collect(),
            ),
        }
    }

    /// Scores each candidate; `None` if the endpoint gives no scores.
    fn choose(&mut self, prompt: &str, candidates: &[String]) -> Result<Option<String>, PolicyError> {
        let mut scored = Vec::with_capacity(candidates.len());
        for c in candidates {
            let req = CompletionRequest {
                prompt: prompt.to_string(),
                max_tokens: 0,
                stop: Vec::new(),
                want_token_scores: true,
                continuation: Some(format!(" {c}")),
            };
            let resp = self.endpoint.complete(&req).map_err(|e| PolicyError::Transport(e.0))?;
            let Some(scores) = resp.token_scores else { return Ok(None) };
            scored.push((c.clone(), scores));
        }
        match select_by_token_scores(&scored) {
            Ok(i) => Ok(Some(scored[i].0.clone())),
            Err(e) => Err(PolicyError::Other(e.to_string())),
        }
    }
}

/// First line of a completion, without an echoed `Act t:` label.
pub fn first_action_line(text: &str) -> String {
    let line = text.trim_start().lines().next().unwrap_or("").trim();
    match line.strip_prefix("Act ").and_then(|r| r.split_once(':')) {
        Some((n, rest)) if n.chars().all(|c| c.is_ascii_digit()) => rest.trim().to_string(),
        _ => line.to_string(),
    }
}

impl Policy for RemotePolicy {
    fn name(&self) -> &str {
        "remote"
    }

    fn concurrent_safe(&self) -> bool {
        false
    }

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        let prompt = self.bundle.render(view.transcript, view.t, view.feedback);
        if let Some(cands) = self.candidate_list(view).filter(|c| !c.is_empty()) {
            if let Some(choice) = self.choose(&prompt, &cands)? {
                return Ok(PolicyDecision::act(choice));
            }
        }
        let req = CompletionRequest {
            prompt,
            max_tokens: self.max_tokens,
            stop: vec!["\n".into()],
            want_token_scores: false,
            continuation: None,
        };
        let resp = self.endpoint.complete(&req).map_err(|e| PolicyError::Transport(e.0))?;
        Ok(PolicyDecision::act(first_action_line(&resp.text)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_line_strips_label() {
        assert_eq!(first_action_line(" Act 3: go to desk 1\nObs 4: x"), "go to desk 1");
        assert_eq!(first_action_line("think: hello"), "think: hello");
    }

    #[test]
    fn bundles_parse_and_render() {
        let b = PromptBundle::builtin(EnvKind::Household);
        assert_eq!(b.examples.len(), 2);
        let p = b.render("Obs 1: x", 1, None);
        assert!(p.ends_with("Obs 1: x\nAct 1:"));
        assert_eq!(b.clone().with_k(0).examples.len(), 0);
        let t = PromptBundle::builtin(EnvKind::Tabletop);
        assert!(!t.examples.is_empty());
    }
}
