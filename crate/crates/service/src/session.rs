//! Session state machines, independent of the transport.
//!
//! A session owns one episode. Automatic work (policy turns, oracle answers)
//! is done in small increments by [`Session::advance`]; the session parks
//! whenever it needs a person, and resumes when [`Session::answer`] or
//! [`Session::act`] supplies the missing input.

use std::time::Instant;

use thiserror::Error;

use askloop_core::harness::{next_action, AskGate, Episode, EpisodeInfo, Policy};
use askloop_core::household::LayoutPool;
use askloop_core::oracle::ScriptedOracle;
use askloop_core::policies::{PolicyKind, PromptBundle, RemotePolicy, HttpEndpoint};
use askloop_core::scenario::ScenarioSpec;
use askloop_core::mdp::parse_augmented;
use askloop_core::{AugmentedAction, Context, EnvKind, EpisodeLimits, Observation, Oracle, RuleOracle};

use crate::wire::{ActionKind, CreateSession, ErrorCode, Event, EventBody, Events, ObservationKind, SessionMode, SessionState, Status, Summary};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message}")]
pub struct SessionError {
    pub code: ErrorCode,
    pub message: String,
}

impl SessionError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

/// Fills tabletop size parameters left at zero.
pub fn scenario_for(req: &CreateSession) -> ScenarioSpec {
    match req.env {
        EnvKind::Household => ScenarioSpec::household(req.variant, req.pool),
        EnvKind::Tabletop => {
            let x = if req.x == 0 && req.task != 2 { 3 } else { req.x };
            let y = if req.y == 0 && req.task != 1 { 3 } else { req.y };
            ScenarioSpec::tabletop(req.task, x, y)
        }
    }
}

/// Server-wide options that affect session construction.
#[derive(Clone, Debug, Default)]
pub struct SessionConfig {
    /// Completion endpoint for the `remote` policy.
    pub endpoint: Option<String>,
}

pub struct Session {
    pub id: String,
    pub mode: SessionMode,
    ctx: Context,
    episode: Episode,
    policy: Option<Box<dyn Policy>>,
    oracle: RuleOracle,
    events: Vec<Event>,
    pending: Option<(String, bool)>,
    ended: bool,
    pub last_touch: Instant,
}

fn action_kind(a: &AugmentedAction) -> ActionKind {
    match a {
        AugmentedAction::Think(_) => ActionKind::Think,
        AugmentedAction::Ask(_) => ActionKind::Ask,
        AugmentedAction::Physical(_) => ActionKind::Physical,
    }
}

fn observation_kind(o: &Observation) -> ObservationKind {
    match o {
        Observation::Ack => ObservationKind::Ack,
        Observation::Answer(_) => ObservationKind::Answer,
        Observation::EnvText(_) => ObservationKind::Env,
    }
}

impl Session {
    pub fn create(id: String, req: &CreateSession, config: &SessionConfig) -> Result<Self, SessionError> {
        let bad = |m: String| SessionError::new(ErrorCode::BadRequest, m);
        if req.env == EnvKind::Tabletop && req.pool != LayoutPool::Id {
            return Err(bad("layout pools apply to household sessions only".into()));
        }
        let ctx = scenario_for(req).context(req.seed).map_err(|e| bad(e.to_string()))?;
        let policy: Option<Box<dyn Policy>> = match req.mode {
            SessionMode::HumanAgent => None,
            _ => {
                let kind: PolicyKind = req.policy.parse().map_err(bad)?;
                Some(match (kind.build_local(), &config.endpoint) {
                    (Some(p), _) => p,
                    (None, Some(url)) => Box::new(RemotePolicy::new(Box::new(HttpEndpoint::new(url.clone())), PromptBundle::builtin(req.env))),
                    (None, None) => return Err(bad("the remote policy needs a server started with --endpoint".into())),
                })
            }
        };
        let mut limits = EpisodeLimits { max_tasks: req.max_tasks, ..EpisodeLimits::default() };
        if let Some(h) = req.horizon {
            limits.horizon = h;
        }
        let episode = Episode::new(ctx.clone(), limits).map_err(|e| bad(e.to_string()))?;
        let mut s = Self {
            id,
            mode: req.mode,
            oracle: RuleOracle::new(&ctx),
            ctx,
            episode,
            policy,
            events: Vec::new(),
            pending: None,
            ended: false,
            last_touch: Instant::now(),
        };
        if let Some(p) = s.policy.as_mut() {
            p.begin_episode(&EpisodeInfo { env_kind: s.ctx.env_kind, variant: s.ctx.variant, seed: s.ctx.seed });
        }
        let start = s.episode.initial_observation().to_string();
        s.push(EventBody::Start { text: start });
        Ok(s)
    }

    fn push(&mut self, body: EventBody) {
        let cursor = self.events.len() as u64;
        self.events.push(Event { cursor, body });
    }

    pub fn event_count(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn is_done(&self) -> bool {
        self.ended
    }

    pub fn pending_question(&self) -> Option<&str> {
        self.pending.as_ref().map(|(q, _)| q.as_str())
    }

    fn summary(&self) -> Option<Summary> {
        let outcome = self.episode.outcome()?;
        let steps = self.episode.steps();
        Some(Summary {
            outcome,
            steps: steps.len(),
            physical_actions: steps.iter().filter(|s| s.action.is_physical()).count(),
            questions: steps.iter().filter(|s| s.action.is_ask()).count(),
            tasks_completed: self.episode.state().tasks_completed(),
            failure: self.episode.failure().map(str::to_string),
        })
    }

    fn close_if_over(&mut self) {
        if self.episode.is_over() && !self.ended {
            let summary = self.summary().expect("episode is over");
            self.push(EventBody::End(summary));
            self.ended = true;
        }
    }

    /// Applies `action` and logs it; `announced` means the action event was
    /// already written (a parked question).
    fn apply(&mut self, action: AugmentedAction, noise: bool, oracle: &mut dyn Oracle, announced: bool) -> Result<(), SessionError> {
        let t = self.episode.steps().len() + 1;
        if !announced {
            self.push(EventBody::Action { t, kind: action_kind(&action), text: action.render() });
        }
        let obs = self
            .episode
            .apply(action, noise, oracle)
            .map_err(|e| SessionError::new(ErrorCode::EpisodeOver, e.to_string()))?
            .observation
            .clone();
        self.push(EventBody::Observation { t, kind: observation_kind(&obs), text: obs.text().to_string() });
        self.close_if_over();
        Ok(())
    }

    /// Does one unit of automatic work. Returns false when the session is
    /// finished or waiting for a person.
    pub fn advance(&mut self) -> bool {
        self.close_if_over();
        if self.ended || self.pending.is_some() {
            return false;
        }
        let Some(policy) = self.policy.as_mut() else { return false };
        let decision = match next_action(&self.episode, policy.as_mut()) {
            Ok(d) => d,
            Err(e) => Err(e.to_string()),
        };
        match decision {
            Err(reason) => {
                self.episode.fail(reason);
                self.close_if_over();
                false
            }
            Ok((AugmentedAction::Ask(q), noise))
                if self.mode == SessionMode::HumanOracle && !matches!(self.episode.ask_gate(&q), AskGate::Refused) =>
            {
                let t = self.episode.steps().len() + 1;
                self.push(EventBody::Action { t, kind: ActionKind::Ask, text: AugmentedAction::Ask(q.clone()).render() });
                self.push(EventBody::Question { t, text: q.clone() });
                self.pending = Some((q, noise));
                false
            }
            Ok((action, noise)) => {
                let mut oracle = std::mem::replace(&mut self.oracle, RuleOracle::new(&self.ctx));
                let r = self.apply(action, noise, &mut oracle, false);
                self.oracle = oracle;
                r.is_ok() && !self.ended
            }
        }
    }

    /// Runs automatic work until the session finishes or parks.
    pub fn run_until_blocked(&mut self) {
        while self.advance() {}
    }

    /// Supplies the answer to the parked question, verbatim.
    pub fn answer(&mut self, text: &str) -> Result<(), SessionError> {
        let Some((q, noise)) = self.pending.take() else {
            return Err(SessionError::new(ErrorCode::AnswerWithoutQuestion, "no question is pending"));
        };
        let mut oracle = ScriptedOracle::new(vec![text.to_string()]);
        self.apply(AugmentedAction::Ask(q), noise, &mut oracle, true)
    }

    /// Applies a person's action in human-agent mode.
    pub fn act(&mut self, text: &str) -> Result<(), SessionError> {
        if self.mode != SessionMode::HumanAgent {
            return Err(SessionError::new(ErrorCode::WrongMode, format!("act is only accepted in human-agent mode, not {}", self.mode.as_str())));
        }
        if self.ended {
            return Err(SessionError::new(ErrorCode::EpisodeOver, "the episode has finished"));
        }
        let action = parse_augmented(text, self.ctx.env_kind).map_err(|e| SessionError::new(ErrorCode::MalformedAction, e.to_string()))?;
        let mut oracle = std::mem::replace(&mut self.oracle, RuleOracle::new(&self.ctx));
        let r = self.apply(action, false, &mut oracle, false);
        self.oracle = oracle;
        r
    }

    pub fn events_since(&self, since: u64) -> Events {
        let from = (since as usize).min(self.events.len());
        Events { events: self.events[from..].to_vec(), next: self.events.len() as u64, done: self.ended }
    }

    pub fn state(&self) -> SessionState {
        let status = if self.ended {
            Status::Finished
        } else if self.pending.is_some() {
            Status::AwaitingAnswer
        } else if self.mode == SessionMode::HumanAgent {
            Status::AwaitingAction
        } else {
            Status::Running
        };
        SessionState {
            id: self.id.clone(),
            mode: self.mode,
            status,
            env: self.ctx.env_kind,
            variant: self.ctx.variant,
            seed: self.ctx.seed,
            steps: self.episode.steps().len(),
            events: self.event_count(),
            pending_question: self.pending_question().map(str::to_string),
            summary: self.summary(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(mode: SessionMode) -> CreateSession {
        serde_json::from_value(serde_json::json!({"env": "household", "seed": 3, "mode": mode})).unwrap()
    }

    #[test]
    fn human_oracle_parks_at_question() {
        let mut s = Session::create("a".into(), &req(SessionMode::HumanOracle), &SessionConfig::default()).unwrap();
        s.run_until_blocked();
        assert!(s.pending_question().is_some());
        let steps = s.state().steps;
        // Parking consumes no steps.
        s.run_until_blocked();
        assert_eq!(s.state().steps, steps);
        assert_eq!(s.state().status, Status::AwaitingAnswer);
        s.answer("I am not sure.").unwrap();
        assert!(s.answer("again").is_err());
    }

    #[test]
    fn act_requires_human_agent() {
        let mut s = Session::create("a".into(), &req(SessionMode::AutoOracle), &SessionConfig::default()).unwrap();
        assert_eq!(s.act("go to desk 1").unwrap_err().code, ErrorCode::WrongMode);
        let mut h = Session::create("b".into(), &req(SessionMode::HumanAgent), &SessionConfig::default()).unwrap();
        assert_eq!(h.act("dance").unwrap_err().code, ErrorCode::MalformedAction);
        h.act("think: hmm").unwrap();
        assert_eq!(h.state().steps, 1);
    }
}
