//! The augmented decision process shared by every environment family.
//!
//! A [`Context`] is the hidden parameterization of one environment instance.
//! Agents act in an augmented action space: a physical action, a question for
//! the information source, or a free-form reasoning turn. [`step`] routes each
//! kind: questions go to the oracle and leave the world untouched, reasoning
//! is acknowledged with `OK.`, and physical actions go to the environment
//! dynamics without ever touching the oracle.
//!
//! Transcripts render as alternating `Obs k:` / `Act k:` lines (see
//! [`concat_trajectory`]); that layout is the stable interchange format used
//! by prompts, datasets and the session service.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::household::{self, HouseholdAction, HouseholdState};
use crate::oracle::Oracle;
use crate::tabletop::{self, MoveCmd, TabletopState};

/// Literal text of the acknowledgement observation returned for reasoning turns.
pub const ACK_TEXT: &str = "OK.";

// ---------------------------------------------------------------------------
// Context
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Household,
    Tabletop,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::Household => "household",
            EnvKind::Tabletop => "tabletop",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "household" => Ok(EnvKind::Household),
            "tabletop" => Ok(EnvKind::Tabletop),
            other => Err(format!("unknown environment `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    Ambiguous,
    Multiround,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Ambiguous => "ambiguous",
            Variant::Multiround => "multiround",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Variant::Standard),
            "ambiguous" => Ok(Variant::Ambiguous),
            "multiround" => Ok(Variant::Multiround),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Pick,
    Examine,
    Clean,
    Heat,
    Cool,
    Pick2,
    Tabletop1,
    Tabletop2,
    Tabletop3,
}

impl TaskKind {
    /// The six household task kinds, in report column order.
    pub const HOUSEHOLD: [TaskKind; 6] = [
        TaskKind::Pick,
        TaskKind::Examine,
        TaskKind::Clean,
        TaskKind::Heat,
        TaskKind::Cool,
        TaskKind::Pick2,
    ];

    pub fn is_household(self) -> bool {
        !matches!(self, TaskKind::Tabletop1 | TaskKind::Tabletop2 | TaskKind::Tabletop3)
    }

    /// Column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::Pick => "Pick",
            TaskKind::Examine => "Examine",
            TaskKind::Clean => "Clean",
            TaskKind::Heat => "Heat",
            TaskKind::Cool => "Cool",
            TaskKind::Pick2 => "Pick 2",
            TaskKind::Tabletop1 => "Task 1",
            TaskKind::Tabletop2 => "Task 2",
            TaskKind::Tabletop3 => "Task 3",
        }
    }

    /// Appliance class a kind needs, if any.
    pub fn appliance(self) -> Option<&'static str> {
        match self {
            TaskKind::Heat => Some("microwave"),
            TaskKind::Clean => Some("sinkbasin"),
            TaskKind::Cool => Some("fridge"),
            TaskKind::Examine => Some("desklamp"),
            _ => None,
        }
    }
}

/// Tabletop size parameters; zero when unused.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskParams {
    /// Number of red blocks (one of which is the goal).
    #[serde(default)]
    pub x: u32,
    /// Number of bases.
    #[serde(default)]
    pub y: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub object_class: String,
    /// Destination receptacle class for household tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
    #[serde(default)]
    pub params: TaskParams,
    /// Natural-language instruction shown to the agent.
    pub instruction: String,
}

/// Where an object instance starts out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Receptacle(String),
    Pose([f64; 2]),
}

impl Location {
    pub fn render(&self) -> String {
        match self {
            Location::Receptacle(r) => r.clone(),
            Location::Pose([x, y]) => {
                format!("({}, {})", tabletop::fmt_coord(*x), tabletop::fmt_coord(*y))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub instance: String,
    #[serde(flatten)]
    pub location: Location,
}

/// A receptacle present in a household room.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptacleSpec {
    pub name: String,
    #[serde(default)]
    pub openable: bool,
}

/// Object class entry used when sampling follow-up tasks in multiround rooms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectClass {
    pub class: String,
    pub kinds: Vec<TaskKind>,
    pub destinations: Vec<String>,
}

/// Hidden parameterization of one environment instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub env_kind: EnvKind,
    pub variant: Variant,
    pub seed: u64,
    pub task: TaskSpec,
    /// Initial location of every object instance. The order is the order in
    /// which the oracle's knowledge document lists facts.
    pub placement: Vec<Placement>,
    #[serde(default)]
    pub target_instances: BTreeSet<String>,
    #[serde(default)]
    pub color_map: BTreeMap<u32, String>,
    /// Household receptacles, in room-listing order.
    #[serde(default)]
    pub room: Vec<ReceptacleSpec>,
    #[serde(default)]
    pub catalog: Vec<ObjectClass>,
    /// Maximum per-axis placement drift for tabletop moves (meters).
    #[serde(default)]
    pub pose_jitter: f64,
    #[serde(default)]
    pub layout_id: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum ContextError {
    #[error("object instance `{0}` is placed more than once")]
    DuplicateInstance(String),
    #[error("object instance `{instance}` is placed in unknown receptacle `{receptacle}`")]
    UnknownReceptacle { instance: String, receptacle: String },
    #[error("target `{0}` is not an instance of the task's object class")]
    ForeignTarget(String),
    #[error("color `{0}` is assigned to more than one base")]
    DuplicateColor(String),
    #[error("task parameters out of range: {0}")]
    ParamOutOfRange(String),
    #[error("task kind {0:?} does not belong to the {1:?} environment")]
    KindMismatch(TaskKind, EnvKind),
}

impl Context {
    /// Checks the structural invariants every context must satisfy.
    pub fn validate(&self) -> Result<(), ContextError> {
        let mut seen = BTreeSet::new();
        for p in &self.placement {
            if !seen.insert(p.instance.as_str()) {
                return Err(ContextError::DuplicateInstance(p.instance.clone()));
            }
            if let (EnvKind::Household, Location::Receptacle(r)) = (self.env_kind, &p.location) {
                if !self.room.iter().any(|spec| &spec.name == r) {
                    return Err(ContextError::UnknownReceptacle {
                        instance: p.instance.clone(),
                        receptacle: r.clone(),
                    });
                }
            }
        }
        let target_class = match self.task.kind {
            TaskKind::Tabletop1 | TaskKind::Tabletop3 => "red block",
            _ => self.task.object_class.as_str(),
        };
        for t in &self.target_instances {
            if crate::names::class_of(t) != target_class || !seen.contains(t.as_str()) {
                return Err(ContextError::ForeignTarget(t.clone()));
            }
        }
        let mut colors = BTreeSet::new();
        for c in self.color_map.values() {
            if !colors.insert(c) {
                return Err(ContextError::DuplicateColor(c.clone()));
            }
        }
        let is_household = self.env_kind == EnvKind::Household;
        if self.task.kind.is_household() != is_household {
            return Err(ContextError::KindMismatch(self.task.kind, self.env_kind));
        }
        let p = self.task.params;
        match self.task.kind {
            TaskKind::Tabletop1 if p.x < 1 => Err(ContextError::ParamOutOfRange("x must be >= 1".into())),
            TaskKind::Tabletop2 if p.y < 1 => Err(ContextError::ParamOutOfRange("y must be >= 1".into())),
            TaskKind::Tabletop3 if p.x < 1 || p.y < 1 => {
                Err(ContextError::ParamOutOfRange("x and y must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Instances of a class in knowledge order.
    pub fn instances_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a Placement> + 'a {
        self.placement
            .iter()
            .filter(move |p| crate::names::class_of(&p.instance) == class)
    }
}

// ---------------------------------------------------------------------------
// Actions and observations
// ---------------------------------------------------------------------------

/// A well-formed physical action of either environment family.
#[derive(Clone, Debug, PartialEq)]
pub enum PhysicalAction {
    Household(HouseholdAction),
    Move(MoveCmd),
}

impl PhysicalAction {
    pub fn render(&self) -> String {
        match self {
            PhysicalAction::Household(a) => a.render(),
            PhysicalAction::Move(m) => m.render(),
        }
    }

    /// Parses text with whichever grammar accepts it.
    pub fn parse_any(text: &str) -> Result<Self, MalformedAction> {
        if text.trim_start().starts_with("move_to") {
            tabletop::parse_move(text).map(PhysicalAction::Move)
        } else {
            household::parse_household_action(text).map(PhysicalAction::Household)
        }
    }
}

impl fmt::Display for PhysicalAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for PhysicalAction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for PhysicalAction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        PhysicalAction::parse_any(&text).map_err(serde::de::Error::custom)
    }
}

/// Member of the augmented action space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentedAction {
    Physical(PhysicalAction),
    Ask(String),
    Think(String),
}

impl AugmentedAction {
    /// Transcript rendering: `think: ...`, `ask: ...`, or the physical command.
    pub fn render(&self) -> String {
        match self {
            AugmentedAction::Physical(p) => p.render(),
            AugmentedAction::Ask(q) => format!("ask: {q}"),
            AugmentedAction::Think(m) => format!("think: {m}"),
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self, AugmentedAction::Physical(_))
    }

    pub fn is_ask(&self) -> bool {
        matches!(self, AugmentedAction::Ask(_))
    }

    pub fn is_think(&self) -> bool {
        matches!(self, AugmentedAction::Think(_))
    }
}

impl fmt::Display for AugmentedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    EnvText(String),
    Answer(String),
    Ack,
}

impl Observation {
    pub fn text(&self) -> &str {
        match self {
            Observation::EnvText(t) | Observation::Answer(t) => t,
            Observation::Ack => ACK_TEXT,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Text that does not parse as a member of the augmented action space.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct MalformedAction {
    pub message: String,
    /// Byte span of the offending token in the input.
    pub span: Range<usize>,
}

impl MalformedAction {
    pub fn new(message: impl Into<String>, span: Range<usize>) -> Self {
        Self { message: message.into(), span }
    }
}

/// Parses agent output into an augmented action for the given environment.
///
/// `think:` and `ask:` prefixes select reasoning and question turns; anything
/// else must satisfy the environment's physical grammar.
pub fn parse_augmented(text: &str, env: EnvKind) -> Result<AugmentedAction, MalformedAction> {
    let trimmed = text.trim();
    let offset = text.len() - text.trim_start().len();
    for (prefix, is_ask) in [("think:", false), ("ask:", true)] {
        if trimmed.len() >= prefix.len() && trimmed[..prefix.len()].eq_ignore_ascii_case(prefix) {
            let body = trimmed[prefix.len()..].trim();
            let span = offset..offset + trimmed.len();
            if body.is_empty() {
                return Err(MalformedAction::new(format!("empty `{prefix}` turn"), span));
            }
            if body.contains('\n') {
                return Err(MalformedAction::new("turn text must be a single line", span));
            }
            let body = body.to_string();
            return Ok(if is_ask { AugmentedAction::Ask(body) } else { AugmentedAction::Think(body) });
        }
    }
    let shift = |mut e: MalformedAction| {
        e.span = e.span.start + offset..e.span.end + offset;
        e
    };
    match env {
        EnvKind::Household => household::parse_household_action(trimmed)
            .map(|a| AugmentedAction::Physical(PhysicalAction::Household(a)))
            .map_err(shift),
        EnvKind::Tabletop => tabletop::parse_move(trimmed)
            .map(|m| AugmentedAction::Physical(PhysicalAction::Move(m)))
            .map_err(shift),
    }
}

// ---------------------------------------------------------------------------
// World state and dynamics
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldState {
    Household(HouseholdState),
    Tabletop(TabletopState),
}

impl WorldState {
    /// True once a single-task episode has reached its goal.
    pub fn finished(&self) -> bool {
        match self {
            WorldState::Household(s) => s.finished,
            WorldState::Tabletop(s) => s.finished,
        }
    }

    pub fn tasks_completed(&self) -> u32 {
        match self {
            WorldState::Household(s) => s.tasks_completed,
            WorldState::Tabletop(s) => u32::from(s.finished),
        }
    }

    pub fn as_household(&self) -> Option<&HouseholdState> {
        match self {
            WorldState::Household(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tabletop(&self) -> Option<&TabletopState> {
        match self {
            WorldState::Tabletop(s) => Some(s),
            _ => None,
        }
    }
}

/// Result of applying one physical action.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: WorldState,
    pub observation: String,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("malformed action: {0}")]
    MalformedAction(#[from] MalformedAction),
    #[error("the episode has already finished")]
    EpisodeFinished,
    #[error("action or state does not belong to the {0:?} environment")]
    WrongEnvironment(EnvKind),
    #[error("invalid context: {0}")]
    Context(#[from] ContextError),
}

/// Environment dynamics for one family. Implementations are stateless; all
/// mutable data lives in [`WorldState`].
pub trait EnvDynamics: Send + Sync {
    fn kind(&self) -> EnvKind;

    fn initial_state(&self, context: &Context) -> Result<WorldState, StepError>;

    fn initial_observation(&self, state: &WorldState, context: &Context) -> String;

    fn parse_physical(&self, text: &str) -> Result<PhysicalAction, MalformedAction>;

    /// Applies a physical action. Invalid actions are absorbed and reported
    /// in the observation text.
    fn apply(
        &self,
        state: &WorldState,
        action: &PhysicalAction,
        context: &Context,
    ) -> Result<Transition, StepError>;

    /// Physical actions that would change the state, used for noise injection.
    fn admissible_actions(&self, state: &WorldState, context: &Context) -> Vec<PhysicalAction>;

    fn is_success(&self, state: &WorldState, context: &Context) -> bool;
}

/// Dynamics object for an environment kind.
pub fn dynamics(kind: EnvKind) -> &'static dyn EnvDynamics {
    match kind {
        EnvKind::Household => &household::HouseholdEnv,
        EnvKind::Tabletop => &tabletop::TabletopEnv,
    }
}

/// Output of [`step`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: WorldState,
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
}

/// One transition of the augmented process.
///
/// Questions are answered by `oracle` and return the input state unchanged;
/// reasoning turns are acknowledged; physical actions are delegated to `env`
/// and never reach the oracle.
pub fn step(
    state: &WorldState,
    action: &AugmentedAction,
    context: &Context,
    oracle: &mut dyn Oracle,
    env: &dyn EnvDynamics,
) -> Result<StepOutcome, StepError> {
    if state.finished() {
        return Err(StepError::EpisodeFinished);
    }
    match action {
        AugmentedAction::Ask(question) => Ok(StepOutcome {
            state: state.clone(),
            observation: Observation::Answer(oracle.answer(question)),
            reward: 0.0,
            done: false,
        }),
        AugmentedAction::Think(_) => Ok(StepOutcome {
            state: state.clone(),
            observation: Observation::Ack,
            reward: 0.0,
            done: false,
        }),
        AugmentedAction::Physical(p) => {
            let t = env.apply(state, p, context)?;
            Ok(StepOutcome {
                state: t.state,
                observation: Observation::EnvText(t.observation),
                reward: t.reward,
                done: t.done,
            })
        }
    }
}

/// Parses `text` and steps; convenience for text-driven callers.
pub fn step_text(
    state: &WorldState,
    text: &str,
    context: &Context,
    oracle: &mut dyn Oracle,
    env: &dyn EnvDynamics,
) -> Result<StepOutcome, StepError> {
    let action = parse_augmented(text, env.kind())?;
    step(state, &action, context, oracle, env)
}

// ---------------------------------------------------------------------------
// Transcript rendering
// ---------------------------------------------------------------------------

/// Escapes line breaks so one turn always renders as one line.
fn one_line(text: &str) -> std::borrow::Cow<'_, str> {
    if text.contains('\n') || text.contains('\r') || text.contains('\\') {
        std::borrow::Cow::Owned(
            text.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r"),
        )
    } else {
        std::borrow::Cow::Borrowed(text)
    }
}

/// Renders a transcript prefix.
///
/// The first line carries the initial observation, which includes the
/// instruction, as `Obs 1:`. Each step `k` then contributes `Act k:` followed
/// by `Obs k+1:`. An empty initial observation omits that first line. Text
/// containing line breaks is escaped so the rendering stays injective.
pub fn concat_trajectory<'a, I>(instruction: &str, steps: I) -> String
where
    I: IntoIterator<Item = (&'a AugmentedAction, &'a Observation)>,
{
    let mut lines: Vec<String> = Vec::new();
    if !instruction.is_empty() {
        lines.push(format!("Obs 1: {}", one_line(instruction)));
    }
    for (k, (action, obs)) in steps.into_iter().enumerate() {
        lines.push(format!("Act {}: {}", k + 1, one_line(&action.render())));
        lines.push(format!("Obs {}: {}", k + 2, one_line(obs.text())));
    }
    lines.join("\n")
}

fn unescape_line(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Raw turns of a rendered transcript.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedTrajectory {
    pub initial_observation: String,
    /// `(action text, observation text)` per step.
    pub turns: Vec<(String, String)>,
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct TrajectoryError {
    pub line: usize,
    pub message: String,
}

/// Inverse of [`concat_trajectory`]. Blank lines are skipped and a missing
/// final observation is allowed (it is returned as an empty string).
pub fn parse_trajectory(text: &str) -> Result<ParsedTrajectory, TrajectoryError> {
    let mut out = ParsedTrajectory::default();
    let mut pending: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| TrajectoryError { line: i + 1, message };
        let (label, rest) = line.split_once(':').ok_or_else(|| err("missing label".into()))?;
        let body = unescape_line(rest.strip_prefix(' ').unwrap_or(rest));
        let (kind, n) = label.split_once(' ').ok_or_else(|| err(format!("bad label `{label}`")))?;
        let n: usize = n.parse().map_err(|_| err(format!("bad label `{label}`")))?;
        match kind {
            "Obs" if n == 1 && out.turns.is_empty() && pending.is_none() => out.initial_observation = body,
            "Obs" => {
                let act = pending.take().ok_or_else(|| err("observation without action".into()))?;
                if n != out.turns.len() + 2 {
                    return Err(err(format!("expected Obs {}", out.turns.len() + 2)));
                }
                out.turns.push((act, body));
            }
            "Act" => {
                if pending.is_some() || n != out.turns.len() + 1 {
                    return Err(err(format!("expected Act {}", out.turns.len() + 1)));
                }
                pending = Some(body);
            }
            _ => return Err(err(format!("bad label `{label}`"))),
        }
    }
    if let Some(act) = pending {
        out.turns.push((act, String::new()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmented_parse_prefixes() {
        assert_eq!(
            parse_augmented("think: hello", EnvKind::Household).unwrap(),
            AugmentedAction::Think("hello".into())
        );
        assert_eq!(
            parse_augmented("ask: Where is the mug?", EnvKind::Household).unwrap(),
            AugmentedAction::Ask("Where is the mug?".into())
        );
        assert!(parse_augmented("think:   ", EnvKind::Household).is_err());
        assert!(parse_augmented("ask: a\nb", EnvKind::Household).is_err());
        let a = parse_augmented("go to drawer 1", EnvKind::Household).unwrap();
        assert_eq!(a.render(), "go to drawer 1");
    }

    #[test]
    fn ack_renders_ok() {
        assert_eq!(Observation::Ack.text(), "OK.");
    }

    #[test]
    fn empty_prefix_renders_instruction_line_only() {
        let s = concat_trajectory("Your task is to: x.", std::iter::empty());
        assert_eq!(s, "Obs 1: Your task is to: x.");
    }

    #[test]
    fn trajectory_round_trip() {
        let a = AugmentedAction::Ask("q\\n".into());
        let o = Observation::Answer("a\nAct 2: b".into());
        let s = concat_trajectory("start", [(&a, &o)]);
        let p = parse_trajectory(&s).unwrap();
        assert_eq!(p.initial_observation, "start");
        assert_eq!(p.turns, vec![("ask: q\\n".to_string(), "a\nAct 2: b".to_string())]);
        assert!(parse_trajectory("Act 2: x").is_err());
    }

    #[test]
    fn newlines_are_escaped() {
        let a = AugmentedAction::Ask("q".into());
        let o = Observation::Answer("a\nAct 2: b".into());
        let s = concat_trajectory("i", [(&a, &o)]);
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn physical_action_serde_is_text() {
        let a = AugmentedAction::Physical(PhysicalAction::parse_any("open drawer 1").unwrap());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"physical":"open drawer 1"}"#);
        let back: AugmentedAction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
