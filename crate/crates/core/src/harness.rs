//! Episode driver.
//!
//! An [`Episode`] owns one world state and its growing transcript; it routes
//! each augmented action through [`step`], charging tabletop question budgets
//! on the way. [`run_episode`] loops a [`Policy`] against it. The module also
//! hosts candidate selection by token scores, the sighting query over past
//! observations, and metadata stripping.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{
    concat_trajectory, dynamics, parse_augmented, step, AugmentedAction, Context, EnvDynamics, EnvKind, Observation,
    StepError, TaskKind, Variant, WorldState,
};
use crate::names::split_instance;
use crate::oracle::{classify_question, Oracle, OracleQuery};
use crate::tabletop::{consume_question_budget, BUDGET_REFUSAL};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
            Outcome::Timeout => "timeout",
        }
    }
}

/// One transition: the action taken and what came back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: AugmentedAction,
    pub observation: Observation,
    /// Set when the action was injected noise rather than the policy's choice.
    #[serde(default)]
    pub noise: bool,
    pub reward: f64,
}

/// A finished episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub context: Context,
    pub initial_observation: String,
    pub steps: Vec<StepRecord>,
    pub horizon: usize,
    pub discount: f64,
    pub outcome: Outcome,
    pub tasks_completed: u32,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EpisodeRecord {
    /// Full transcript text.
    pub fn transcript(&self) -> String {
        self.transcript_prefix(self.steps.len())
    }

    /// Transcript of the first `t` steps.
    pub fn transcript_prefix(&self, t: usize) -> String {
        concat_trajectory(&self.initial_observation, self.steps[..t].iter().map(|s| (&s.action, &s.observation)))
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().enumerate().map(|(i, s)| self.discount.powi(i as i32) * s.reward).sum()
    }

    pub fn physical_count(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_physical()).count()
    }

    pub fn ask_count(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_ask()).count()
    }

    pub fn think_count(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_think()).count()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

// ---------------------------------------------------------------------------
// Episode state machine
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLimits {
    /// Step budget T (every action counts).
    pub horizon: usize,
    pub max_parse_retries: usize,
    pub discount: f64,
    /// Multiround only: end the episode after this many completed tasks.
    #[serde(default)]
    pub max_tasks: Option<u32>,
}

impl Default for EpisodeLimits {
    fn default() -> Self {
        Self { horizon: 50, max_parse_retries: 3, discount: 1.0, max_tasks: None }
    }
}

/// What an Ask costs before it reaches the oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum AskGate {
    Free,
    Charged(WorldState),
    Refused,
}

/// A live episode.
pub struct Episode {
    ctx: Context,
    env: &'static dyn EnvDynamics,
    state: WorldState,
    initial_observation: String,
    steps: Vec<StepRecord>,
    limits: EpisodeLimits,
    outcome: Option<Outcome>,
    failure: Option<String>,
}

impl Episode {
    pub fn new(ctx: Context, limits: EpisodeLimits) -> Result<Self, StepError> {
        let env = dynamics(ctx.env_kind);
        let state = env.initial_state(&ctx)?;
        let initial_observation = env.initial_observation(&state, &ctx);
        let mut ep = Self { ctx, env, state, initial_observation, steps: Vec::new(), limits, outcome: None, failure: None };
        ep.settle();
        Ok(ep)
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn env(&self) -> &'static dyn EnvDynamics {
        self.env
    }

    pub fn initial_observation(&self) -> &str {
        &self.initial_observation
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn limits(&self) -> &EpisodeLimits {
        &self.limits
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    pub fn is_over(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn transcript(&self) -> String {
        concat_trajectory(&self.initial_observation, self.steps.iter().map(|s| (&s.action, &s.observation)))
    }

    fn settle(&mut self) {
        if self.outcome.is_some() {
            return;
        }
        let done_tasks = self.state.tasks_completed();
        if self.state.finished() || self.limits.max_tasks.is_some_and(|m| m > 0 && done_tasks >= m) {
            self.outcome = Some(Outcome::Success);
        } else if self.steps.len() >= self.limits.horizon {
            self.outcome = Some(Outcome::Timeout);
        }
    }

    /// Whether and how an Ask with `question` is metered.
    pub fn ask_gate(&self, question: &str) -> AskGate {
        let Some(table) = self.state.as_tabletop() else { return AskGate::Free };
        if table.question_budget_remaining.is_none() {
            return AskGate::Free;
        }
        // In the combined task only the color questions draw on the budget.
        if self.ctx.task.kind == TaskKind::Tabletop3
            && matches!(classify_question(question), OracleQuery::RelativeTarget(_))
        {
            return AskGate::Free;
        }
        match consume_question_budget(table) {
            Ok(next) => AskGate::Charged(WorldState::Tabletop(next)),
            Err(_) => AskGate::Refused,
        }
    }

    /// Applies one action; Asks go to `oracle` unless refused by the budget.
    pub fn apply(&mut self, action: AugmentedAction, noise: bool, oracle: &mut dyn Oracle) -> Result<&StepRecord, StepError> {
        if self.is_over() {
            return Err(StepError::EpisodeFinished);
        }
        let record = match &action {
            AugmentedAction::Ask(q) => match self.ask_gate(q) {
                AskGate::Refused => StepRecord {
                    action: action.clone(),
                    observation: Observation::EnvText(BUDGET_REFUSAL.into()),
                    noise,
                    reward: 0.0,
                },
                gate => {
                    let base = if let AskGate::Charged(s) = gate { s } else { self.state.clone() };
                    let out = step(&base, &action, &self.ctx, oracle, self.env)?;
                    self.state = out.state;
                    StepRecord { action, observation: out.observation, noise, reward: out.reward }
                }
            },
            _ => {
                let out = step(&self.state, &action, &self.ctx, oracle, self.env)?;
                self.state = out.state;
                StepRecord { action, observation: out.observation, noise, reward: out.reward }
            }
        };
        self.steps.push(record);
        self.settle();
        Ok(self.steps.last().expect("just pushed"))
    }

    /// Ends the episode early as a failure.
    pub fn fail(&mut self, reason: impl Into<String>) {
        if self.outcome.is_none() {
            self.outcome = Some(Outcome::Failure);
            self.failure = Some(reason.into());
        }
    }

    pub fn into_record(mut self, policy: &str) -> EpisodeRecord {
        if self.outcome.is_none() {
            self.fail("unfinished");
        }
        EpisodeRecord {
            tasks_completed: self.state.tasks_completed(),
            context: self.ctx,
            initial_observation: self.initial_observation,
            steps: self.steps,
            horizon: self.limits.horizon,
            discount: self.limits.discount,
            outcome: self.outcome.unwrap_or(Outcome::Failure),
            policy: policy.to_string(),
            failure: self.failure,
        }
    }
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeInfo {
    pub env_kind: EnvKind,
    pub variant: Variant,
    pub seed: u64,
}

/// Everything a policy may look at when choosing its next action.
///
/// `context` and `state` are privileged: only policies that are meant to see
/// the hidden context (the expert and noise wrappers around it) read them.
pub struct PolicyView<'a> {
    pub transcript: &'a str,
    /// Index of the action about to be taken, starting at 1.
    pub t: usize,
    pub initial_observation: &'a str,
    pub steps: &'a [StepRecord],
    pub env_kind: EnvKind,
    pub context: &'a Context,
    pub state: &'a WorldState,
    /// Parser feedback when the previous attempt at this step failed.
    pub feedback: Option<&'a str>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyDecision {
    /// Text of the next action, and whether it is injected noise.
    Act { text: String, noise: bool },
    /// The policy gives up.
    Finish,
}

impl PolicyDecision {
    pub fn act(text: impl Into<String>) -> Self {
        PolicyDecision::Act { text: text.into(), noise: false }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("{0}")]
    Other(String),
}

pub trait Policy: Send {
    fn name(&self) -> &str;

    fn begin_episode(&mut self, _info: &EpisodeInfo) {}

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError>;

    /// False for policies that must not be shared between concurrent runs.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Runs `policy` against `ctx` until the episode ends.
pub fn run_episode(ctx: &Context, policy: &mut dyn Policy, oracle: &mut dyn Oracle, limits: EpisodeLimits) -> Result<EpisodeRecord, StepError> {
    let mut ep = Episode::new(ctx.clone(), limits)?;
    policy.begin_episode(&EpisodeInfo { env_kind: ctx.env_kind, variant: ctx.variant, seed: ctx.seed });
    while !ep.is_over() {
        match next_action(&ep, policy)? {
            Ok((action, noise)) => {
                ep.apply(action, noise, oracle)?;
            }
            Err(reason) => ep.fail(reason),
        }
    }
    Ok(ep.into_record(policy.name()))
}

/// Asks the policy for a parseable action, retrying with feedback.
/// The inner error is a failure reason that ends the episode.
pub fn next_action(ep: &Episode, policy: &mut dyn Policy) -> Result<Result<(AugmentedAction, bool), String>, StepError> {
    let transcript = ep.transcript();
    let mut feedback: Option<String> = None;
    for _ in 0..=ep.limits.max_parse_retries {
        let view = PolicyView {
            transcript: &transcript,
            t: ep.steps.len() + 1,
            initial_observation: &ep.initial_observation,
            steps: &ep.steps,
            env_kind: ep.ctx.env_kind,
            context: &ep.ctx,
            state: &ep.state,
            feedback: feedback.as_deref(),
        };
        let text = match policy.act(&view) {
            Ok(PolicyDecision::Act { text, noise }) => (text, noise),
            Ok(PolicyDecision::Finish) => return Ok(Err("policy finished".into())),
            Err(e) => return Ok(Err(e.to_string())),
        };
        match parse_augmented(&text.0, ep.ctx.env_kind) {
            Ok(a) => return Ok(Ok((a, text.1))),
            Err(e) => feedback = Some(e.message),
        }
    }
    Ok(Err(format!("parse failure: {}", feedback.unwrap_or_default())))
}

/// Runs one episode per context in parallel; output order follows input.
pub fn run_many<P, O>(contexts: &[Context], make_policy: P, make_oracle: O, limits: EpisodeLimits) -> Vec<Result<EpisodeRecord, StepError>>
where
    P: Fn(&Context) -> Box<dyn Policy> + Sync,
    O: Fn(&Context) -> Box<dyn Oracle> + Sync,
{
    contexts
        .par_iter()
        .map(|ctx| {
            let mut policy = make_policy(ctx);
            let mut oracle = make_oracle(ctx);
            run_episode(ctx, policy.as_mut(), oracle.as_mut(), limits)
        })
        .collect()
}

/// Re-applies recorded actions and returns the observations they produce.
pub fn replay(record: &EpisodeRecord, oracle: &mut dyn Oracle) -> Result<Vec<Observation>, StepError> {
    let limits = EpisodeLimits { horizon: record.horizon.max(record.steps.len()), ..EpisodeLimits::default() };
    let mut ep = Episode::new(record.context.clone(), limits)?;
    let mut out = Vec::new();
    for s in &record.steps {
        out.push(ep.apply(s.action.clone(), s.noise, oracle)?.observation.clone());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Candidate scoring
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("no candidates")]
    EmptyCandidates,
    #[error("candidate {0} has a score outside (0, 1] or no scores")]
    NonPositiveScore(usize),
}

/// Sum of log token scores: the log of the sequence probability.
pub fn sequence_log_score(scores: &[f64]) -> f64 {
    scores.iter().map(|s| s.ln()).sum()
}

/// Log scores closer than this (relative) are treated as equal, so products
/// that agree mathematically tie even when their log sums round apart.
pub const SCORE_TIE_TOLERANCE: f64 = 1e-12;

/// Index of the candidate whose token scores have the largest product,
/// compared in log space. Ties go to the earlier candidate. No length
/// normalization is applied, so longer candidates pay for every token.
pub fn select_by_token_scores<T>(candidates: &[(T, Vec<f64>)]) -> Result<usize, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::EmptyCandidates);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, scores)) in candidates.iter().enumerate() {
        if scores.is_empty() || scores.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(SelectError::NonPositiveScore(i));
        }
        let v = sequence_log_score(scores);
        if best.is_none_or(|(_, b)| v - b > SCORE_TIE_TOLERANCE * b.abs().max(1.0)) {
            best = Some((i, v));
        }
    }
    Ok(best.expect("non-empty").0)
}

/// Drops a leading reasoning turn from a `[Think?, action]` pair.
pub fn strip_metadata(actions: &[AugmentedAction]) -> &[AugmentedAction] {
    match actions {
        [AugmentedAction::Think(_), rest @ ..] if !rest.is_empty() => rest,
        _ => actions,
    }
}

// ---------------------------------------------------------------------------
// Sighting memory
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "snake_case")]
pub enum SeenLocation {
    Receptacle(String),
    Held,
    /// Mentioned without a recoverable location.
    Unlocated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sighting {
    pub instance: String,
    pub location: SeenLocation,
    /// Step whose observation last placed the instance (0 = initial).
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "sightings", rename_all = "snake_case")]
pub enum SightingStatus {
    NeverSeen,
    SeenAt(Vec<Sighting>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SightingReport {
    pub object_class: String,
    pub status: SightingStatus,
}

impl SightingReport {
    pub fn never_seen(&self) -> bool {
        self.status == SightingStatus::NeverSeen
    }

    pub fn sightings(&self) -> &[Sighting] {
        match &self.status {
            SightingStatus::NeverSeen => &[],
            SightingStatus::SeenAt(v) => v,
        }
    }

    /// "mug 1 is in diningtable 1, ..." or "I have never seen mug before."
    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .sightings()
            .iter()
            .filter_map(|s| match &s.location {
                SeenLocation::Receptacle(r) => Some(format!("{} is in {r}", s.instance)),
                SeenLocation::Held => Some(format!("{} is in your hand", s.instance)),
                SeenLocation::Unlocated => None,
            })
            .collect();
        if self.never_seen() {
            format!("I have never seen {} before.", self.object_class)
        } else if parts.is_empty() {
            format!("I have seen {} but do not know where it is.", self.object_class)
        } else {
            format!("{}.", parts.join(", "))
        }
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Instances of `class` mentioned in `text`, in order of appearance.
pub fn mentions(text: &str, class: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    if class.is_empty() {
        return out;
    }
    let mut from = 0;
    while let Some(off) = text[from..].find(class) {
        let at = from + off;
        from = at + class.len();
        if at > 0 && is_word_byte(bytes[at - 1]) {
            continue;
        }
        let rest = &bytes[from..];
        if rest.first() != Some(&b' ') {
            continue;
        }
        let digits = rest[1..].iter().take_while(|b| b.is_ascii_digit()).count();
        if digits == 0 {
            continue;
        }
        out.push(format!("{class} {}", &text[from + 1..from + 1 + digits]));
    }
    out
}

/// Items of a listing such as "a mug 1, a pen 2, and a pen 1".
fn listing_items(list: &str) -> Vec<String> {
    list.split(", ")
        .map(|item| {
            let item = item.trim();
            let item = item.strip_prefix("and ").unwrap_or(item);
            let item = item.strip_prefix("a ").or_else(|| item.strip_prefix("an ")).unwrap_or(item);
            item.trim().to_string()
        })
        .filter(|i| split_instance(i).is_some())
        .collect()
}

/// Located sightings carried by one household observation.
fn sightings_in(text: &str) -> Vec<(String, SeenLocation)> {
    let mut out = Vec::new();
    let mut open_rec: Option<String> = None;
    for sentence in text.split(". ").map(|s| s.trim_end_matches('.')) {
        if let Some(rest) = sentence.strip_prefix("On the ") {
            if let Some((rec, list)) = rest.split_once(", you see ") {
                out.extend(listing_items(list).into_iter().map(|i| (i, SeenLocation::Receptacle(rec.to_string()))));
            }
        } else if let Some(rec) = sentence.strip_prefix("The ").and_then(|r| r.strip_suffix(" is open")) {
            open_rec = Some(rec.to_string());
        } else if let Some(list) = sentence.strip_prefix("In it, you see ") {
            if let Some(rec) = &open_rec {
                out.extend(listing_items(list).into_iter().map(|i| (i, SeenLocation::Receptacle(rec.clone()))));
            }
        } else if let Some((obj, _)) = sentence.strip_prefix("You pick up the ").and_then(|r| r.split_once(" from the ")) {
            out.push((obj.to_string(), SeenLocation::Held));
        } else if let Some((obj, rec)) = sentence.strip_prefix("You put the ").and_then(|r| r.split_once(" in/on the ")) {
            out.push((obj.to_string(), SeenLocation::Receptacle(rec.to_string())));
        }
    }
    out
}

/// Where instances of `class` were last seen in the environment text of a
/// transcript prefix. Answers from the oracle are not consulted.
pub fn query_memory(initial_observation: &str, steps: &[StepRecord], class: &str) -> SightingReport {
    let texts = std::iter::once((0, initial_observation)).chain(steps.iter().enumerate().filter_map(|(i, s)| match &s.observation {
        Observation::EnvText(t) => Some((i + 1, t.as_str())),
        _ => None,
    }));
    let mut order: Vec<String> = Vec::new();
    let mut latest: BTreeMap<String, (SeenLocation, usize)> = BTreeMap::new();
    for (step_idx, text) in texts {
        let located: Vec<(String, SeenLocation)> =
            sightings_in(text).into_iter().filter(|(i, _)| crate::names::class_of(i) == class).collect();
        for inst in mentions(text, class) {
            if !order.contains(&inst) {
                order.push(inst.clone());
            }
            latest.entry(inst).or_insert((SeenLocation::Unlocated, step_idx));
        }
        for (inst, loc) in located {
            latest.insert(inst, (loc, step_idx));
        }
    }
    if order.is_empty() {
        return SightingReport { object_class: class.to_string(), status: SightingStatus::NeverSeen };
    }
    let sightings = order
        .into_iter()
        .map(|instance| {
            let (location, step) = latest[&instance].clone();
            Sighting { instance, location, step }
        })
        .collect();
    SightingReport { object_class: class.to_string(), status: SightingStatus::SeenAt(sightings) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_score_selection() {
        let c = vec![("a", vec![0.5, 0.5]), ("b", vec![0.3])];
        assert_eq!(select_by_token_scores(&c), Ok(1));
        assert_eq!(select_by_token_scores::<&str>(&[]), Err(SelectError::EmptyCandidates));
        assert_eq!(select_by_token_scores(&[("x", vec![0.0])]), Err(SelectError::NonPositiveScore(0)));
        assert_eq!(select_by_token_scores(&[("x", vec![0.5]), ("y", vec![0.5])]), Ok(0));
    }

    #[test]
    fn strip_is_idempotent() {
        let v = vec![AugmentedAction::Think("m".into()), AugmentedAction::Ask("q".into())];
        let once = strip_metadata(&v);
        assert_eq!(once, &v[1..]);
        assert_eq!(strip_metadata(once), once);
    }

    #[test]
    fn memory_from_listing() {
        let steps = vec![StepRecord {
            action: AugmentedAction::Think("x".into()),
            observation: Observation::EnvText(
                "On the diningtable 1, you see a creditcard 3, a pencil 3, and a pencil 1.".into(),
            ),
            noise: false,
            reward: 0.0,
        }];
        let r = query_memory("", &steps, "pencil");
        assert_eq!(r.render(), "pencil 3 is in diningtable 1, pencil 1 is in diningtable 1.");
        assert!(query_memory("", &steps, "mug").never_seen());
        assert!(query_memory("", &[], "mug").never_seen());
    }

    #[test]
    fn mention_scan_respects_word_boundaries() {
        assert_eq!(mentions("a pen 1 and a pencil 2", "pen"), vec!["pen 1"]);
        assert_eq!(mentions("the mug is here", "mug"), Vec::<String>::new());
    }
}
