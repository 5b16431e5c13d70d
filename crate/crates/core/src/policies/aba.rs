//! Scripted asking agent.
//!
//! Context-blind: everything it knows comes from the transcript. On a new
//! household task it checks what it has already seen, asks where the object
//! is when memory comes up empty, asks which instance is wanted when the task
//! is ambiguous, and then follows the shared planner over its belief. Each
//! question is preceded by a reasoning turn that states what is unknown.

use crate::harness::{query_memory, EpisodeInfo, Policy, PolicyDecision, PolicyError, PolicyView, StepRecord};
use crate::household::planner::{plan_next, PlanStep};
use crate::household::{HouseholdAction, ParsedInstruction};
use crate::mdp::{AugmentedAction, EnvKind, Observation, PhysicalAction, TaskKind, Variant};
use crate::names::class_of;
use crate::oracle::{asserted_pairs, classify_question, OracleQuery};

use super::belief::Belief;
use super::table::{TableScript, TableTask};

const ASK_MARK: &str = "Let me ask that person.";
const OWNER_MARK: &str = "I need to ask the owner of this room.";
const REASK_MARK: &str = "Let me ask again.";
const MULTI_MARK: &str = "There are multiple";
const QUERY_MARK: &str = "### query:";

/// "find and take a mug, then heat it with microwave, then put it in cabinet"
pub fn plan_phrase(t: &ParsedInstruction) -> String {
    let o = &t.object_class;
    let d = t.destination.as_deref().unwrap_or("");
    match t.kind {
        TaskKind::Pick2 => format!("find and take two {o}, then put them in {d}"),
        TaskKind::Examine => format!("find and take a {o}, then use the desklamp"),
        k => match (k, k.appliance()) {
            (TaskKind::Heat, Some(a)) => format!("find and take a {o}, then heat it with {a}, then put it in {d}"),
            (TaskKind::Clean, Some(a)) => format!("find and take a {o}, then clean it with {a}, then put it in {d}"),
            (TaskKind::Cool, Some(a)) => format!("find and take a {o}, then cool it with {a}, then put it in {d}"),
            _ => format!("find and take a {o}, then put it in {d}"),
        },
    }
}

/// What is left to do once the object is in hand.
fn after_take(t: &ParsedInstruction) -> String {
    let d = t.destination.as_deref().unwrap_or("");
    match (t.kind, t.kind.appliance()) {
        (TaskKind::Examine, _) => "use the desklamp".into(),
        (TaskKind::Heat, Some(a)) => format!("heat it with {a}, then put it in {d}"),
        (TaskKind::Clean, Some(a)) => format!("clean it with {a}, then put it in {d}"),
        (TaskKind::Cool, Some(a)) => format!("cool it with {a}, then put it in {d}"),
        _ => format!("put it in {d}"),
    }
}

fn think(text: String) -> PolicyDecision {
    PolicyDecision::act(format!("think: {text}"))
}

fn ask(text: String) -> PolicyDecision {
    PolicyDecision::act(format!("ask: {text}"))
}

/// The scripted asking policy for both environment families.
#[derive(Clone, Debug, Default)]
pub struct ScriptedAba {
    variant: Option<Variant>,
}

impl ScriptedAba {
    pub fn new() -> Self {
        Self::default()
    }

    fn household(&self, view: &PolicyView<'_>) -> PolicyDecision {
        let b = Belief::from_transcript(view.initial_observation, view.steps);
        let (Some(task), Some(spec)) = (b.task.clone(), b.task_spec()) else { return PolicyDecision::Finish };
        let class = task.object_class.as_str();
        let since = &view.steps[b.task_start.min(view.steps.len())..];
        let last = since.last();
        let last_think = match last.map(|s| &s.action) {
            Some(AugmentedAction::Think(m)) => Some(m.as_str()),
            _ => None,
        };
        let multiround = self.variant == Some(Variant::Multiround);

        if since.is_empty() {
            let head = format!("To solve the task, I need to {}.", plan_phrase(&task));
            return if multiround {
                let report = query_memory(view.initial_observation, view.steps, class);
                think(format!("{head} First I need to find the locations of {class}. {QUERY_MARK} {class} > {}", report.render()))
            } else {
                think(format!("{head} But where is the {class}? {ASK_MARK}"))
            };
        }
        if let Some(m) = last_think {
            if m.ends_with(ASK_MARK) || m.ends_with(OWNER_MARK) {
                return ask(format!("Where is the {class}?"));
            }
            if m.ends_with(REASK_MARK) {
                return ask(format!("Where can I find the {class}?"));
            }
            if m.starts_with(MULTI_MARK) {
                return ask(format!("Which {class} do you prefer?"));
            }
        }

        let where_asks = since
            .iter()
            .filter(|s| matches!(&s.action, AugmentedAction::Ask(q) if classify_question(q) == OracleQuery::WhereIs(class.to_string())))
            .count();
        let which_asked = since.iter().any(|s| matches!(&s.action, AugmentedAction::Ask(q) if matches!(classify_question(q), OracleQuery::WhichPreferred(_))));

        // A location answer naming several instances of an ambiguous task.
        if self.variant == Some(Variant::Ambiguous) && b.task_index == 0 && !which_asked {
            if let Some(StepRecord { action: AugmentedAction::Ask(_), observation: Observation::Answer(ans), .. }) = last {
                let named = asserted_pairs(ans).iter().filter(|(i, _)| class_of(i) == class).count();
                if named >= 2 {
                    return think(format!("{MULTI_MARK} {class}. I need to ask which {class} should be taken."));
                }
            }
        }

        let model = b.model();
        match plan_next(&model, &spec, b.targets.as_ref()) {
            PlanStep::Complete => PolicyDecision::Finish,
            PlanStep::NeedInformation => {
                if where_asks == 0 {
                    think(format!("I cannot locate {class}, {OWNER_MARK}"))
                } else if where_asks == 1 {
                    think(format!("I cannot find the {class} where I expected. {REASK_MARK}"))
                } else {
                    search_step(&b)
                }
            }
            PlanStep::Act(a) => {
                let after_answer = matches!(last.map(|s| &s.observation), Some(Observation::Answer(_)));
                let after_query = last_think.is_some_and(|m| m.contains(QUERY_MARK));
                if after_answer || after_query {
                    if let HouseholdAction::GoTo(r) = &a {
                        let what = if b.targets.as_ref().is_some_and(|t| t.len() == 1) {
                            format!("the {}", b.targets.as_ref().and_then(|t| t.iter().next()).cloned().unwrap_or_default())
                        } else {
                            format!("the {class}")
                        };
                        return think(format!("I can go to {r} and take {what}, then {}.", after_take(&task)));
                    }
                }
                if let Some(StepRecord {
                    action: AugmentedAction::Physical(PhysicalAction::Household(HouseholdAction::Take { object, .. })),
                    observation: Observation::EnvText(t),
                    ..
                }) = last
                {
                    if t.starts_with("You pick up") {
                        return think(format!("Now I take a {object}. Next, I need to {}.", after_take(&task)));
                    }
                }
                PolicyDecision::act(a.render())
            }
        }
    }
}

/// Exhaustive search once asking has not helped.
fn search_step(b: &Belief) -> PolicyDecision {
    let here = b.agent_at.as_deref();
    if let Some(r) = here {
        if b.closed.contains(r) && !b.searched.contains(r) {
            return PolicyDecision::act(HouseholdAction::Open(r.to_string()).render());
        }
    }
    match b.receptacles.iter().find(|r| !b.searched.contains(*r) && Some(r.as_str()) != here) {
        Some(r) => PolicyDecision::act(HouseholdAction::GoTo(r.clone()).render()),
        None => PolicyDecision::Finish,
    }
}

impl Policy for ScriptedAba {
    fn name(&self) -> &str {
        "scripted-aba"
    }

    fn begin_episode(&mut self, info: &EpisodeInfo) {
        self.variant = Some(info.variant);
    }

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        Ok(match view.env_kind {
            EnvKind::Household => self.household(view),
            EnvKind::Tabletop => table_decision(view),
        })
    }
}

fn table_decision(view: &PolicyView<'_>) -> PolicyDecision {
    let Some(script) = TableScript::from_transcript(view.initial_observation, view.steps) else {
        return PolicyDecision::Finish;
    };
    let last_think = matches!(view.steps.last().map(|s| &s.action), Some(AugmentedAction::Think(_)));
    let reds = script.red_count();
    if script.task.wants_red() && reds > 1 && script.red_rank.is_none() && !script.red_asked {
        return if last_think {
            ask("Which red block should I move?".into())
        } else {
            think(format!("There are {reds} red blocks and only one of them is the goal. I need to ask which one to move."))
        };
    }
    if script.task.wants_bases() {
        let y = script.base_count();
        let asked = script.color_asks;
        if y > 1 && asked < y - 1 {
            return if asked == 0 && !last_think {
                think(format!(
                    "I need to know which color goes on each of the {y} bases. I can ask {} questions and infer the last one.",
                    y - 1
                ))
            } else {
                ask(format!("Which color should be put on the # {} base?", asked + 1))
            };
        }
    }
    let moves = script.moves::<rand_chacha::ChaCha8Rng>(None);
    let done = view.steps.iter().filter(|s| s.action.is_physical()).count();
    match moves.get(done) {
        Some(m) => PolicyDecision::act(m.render()),
        None => PolicyDecision::Finish,
    }
}

impl TableTask {
    pub fn wants_red(self) -> bool {
        matches!(self, TableTask::One | TableTask::Three)
    }

    pub fn wants_bases(self) -> bool {
        matches!(self, TableTask::Two | TableTask::Three)
    }
}
