//! What a context-blind household agent can reconstruct from its transcript.
//!
//! The belief is rebuilt from scratch on every call, which keeps the
//! scripted policies free of hidden per-episode state.

use std::collections::{BTreeMap, BTreeSet};

use crate::harness::StepRecord;
use crate::household::planner::WorldModel;
use crate::household::{parse_instruction, HouseholdAction, ObjectStatus, ParsedInstruction, NOTHING_HAPPENS};
use crate::mdp::{AugmentedAction, Observation, PhysicalAction, TaskParams, TaskSpec};
use crate::names::{class_of, split_instance};
use crate::oracle::{asserted_pairs, classify_question, OracleQuery};

/// Receptacle classes that usually have doors; assumed closed until seen.
pub const COMMONLY_CLOSED: [&str; 5] = ["cabinet", "drawer", "fridge", "microwave", "safe"];

const TASK_MARK: &str = "Your task is to: ";
const NEXT_TASK_MARK: &str = "Your next task is to: ";

#[derive(Clone, Debug, Default)]
pub struct Belief {
    pub receptacles: Vec<String>,
    pub agent_at: Option<String>,
    pub holding: Option<String>,
    pub closed: BTreeSet<String>,
    pub locations: BTreeMap<String, String>,
    pub order: Vec<String>,
    pub status: BTreeMap<String, ObjectStatus>,
    /// Receptacles whose contents have been seen.
    pub searched: BTreeSet<String>,
    /// Instances the agent has seen itself; answers never override these.
    pub observed: BTreeSet<String>,
    pub task: Option<ParsedInstruction>,
    pub instruction: String,
    /// Index into the steps where the current task began.
    pub task_start: usize,
    pub task_index: u32,
    /// Preferred instances named by an answer during the current task.
    pub targets: Option<BTreeSet<String>>,
}

fn items(list: &str) -> Vec<String> {
    list.trim_end_matches('.')
        .split(", ")
        .map(|i| {
            let i = i.trim();
            let i = i.strip_prefix("and ").unwrap_or(i);
            i.strip_prefix("a ").or_else(|| i.strip_prefix("an ")).unwrap_or(i).trim().to_string()
        })
        .filter(|i| split_instance(i).is_some())
        .collect()
}

impl Belief {
    pub fn from_transcript(initial_observation: &str, steps: &[StepRecord]) -> Self {
        let mut b = Belief::default();
        if let Some(rest) = initial_observation.split_once("you see ").map(|(_, r)| r) {
            let list = rest.split_once(". ").map_or(rest, |(l, _)| l);
            b.receptacles = items(list);
        }
        for r in &b.receptacles {
            if COMMONLY_CLOSED.contains(&class_of(r)) {
                b.closed.insert(r.clone());
            }
        }
        if let Some((_, instr)) = initial_observation.split_once(TASK_MARK) {
            b.set_task(instr, 0);
        }
        for (i, s) in steps.iter().enumerate() {
            b.absorb(i, s);
        }
        b
    }

    fn set_task(&mut self, instruction: &str, start: usize) {
        self.instruction = instruction.trim().to_string();
        self.task = parse_instruction(&self.instruction);
        self.task_start = start;
        self.targets = None;
    }

    fn note(&mut self, instance: &str, rec: &str) {
        if !self.order.iter().any(|o| o == instance) {
            self.order.push(instance.to_string());
        }
        self.locations.insert(instance.to_string(), rec.to_string());
    }

    fn listing(&mut self, rec: &str, list: &str) {
        let seen = items(list);
        self.locations.retain(|inst, r| r != rec || seen.contains(inst));
        for inst in &seen {
            self.observed.insert(inst.clone());
            self.note(inst, rec);
        }
        self.searched.insert(rec.to_string());
    }

    fn arrival(&mut self, rec: &str, text: &str) {
        for sentence in text.split(". ") {
            if let Some(list) = sentence.strip_prefix(&format!("On the {rec}, you see ")) {
                self.closed.remove(rec);
                self.listing(rec, list);
            } else if let Some(list) = sentence.strip_prefix("In it, you see ") {
                self.closed.remove(rec);
                self.listing(rec, list);
            } else if sentence.trim_end_matches('.') == format!("The {rec} is closed") {
                self.closed.insert(rec.to_string());
            }
        }
    }

    fn absorb(&mut self, i: usize, s: &StepRecord) {
        match (&s.action, &s.observation) {
            (AugmentedAction::Physical(PhysicalAction::Household(a)), Observation::EnvText(t)) => {
                if t == NOTHING_HAPPENS {
                    if let HouseholdAction::Take { object, from } = a {
                        if self.locations.get(object) == Some(from) {
                            self.locations.remove(object);
                        }
                    }
                    return;
                }
                match a {
                    HouseholdAction::GoTo(r) => {
                        self.agent_at = Some(r.clone());
                        self.arrival(r, t);
                    }
                    HouseholdAction::Open(r) => self.arrival(r, t),
                    HouseholdAction::Close(r) => {
                        self.closed.insert(r.clone());
                    }
                    HouseholdAction::Take { object, .. } => {
                        self.locations.remove(object);
                        self.observed.insert(object.clone());
                        self.holding = Some(object.clone());
                    }
                    HouseholdAction::Put { object, to } => {
                        self.holding = None;
                        self.note(object, to);
                    }
                    HouseholdAction::Heat { object, .. } => self.status.entry(object.clone()).or_default().heated = true,
                    HouseholdAction::Clean { object, .. } => self.status.entry(object.clone()).or_default().cleaned = true,
                    HouseholdAction::Cool { object, .. } => self.status.entry(object.clone()).or_default().cooled = true,
                    HouseholdAction::Use(_) => {
                        if let Some(h) = &self.holding {
                            self.status.entry(h.clone()).or_default().examined = true;
                        }
                    }
                }
                if let Some((_, next)) = t.split_once(NEXT_TASK_MARK) {
                    self.task_index += 1;
                    self.set_task(next, i + 1);
                }
            }
            (AugmentedAction::Ask(q), Observation::Answer(ans)) => match classify_question(q) {
                OracleQuery::WhereIs(_) => {
                    for (inst, rec) in asserted_pairs(ans) {
                        let known_rec = self.receptacles.contains(&rec);
                        let held = self.holding.as_deref() == Some(inst.as_str());
                        if known_rec && !held && !self.observed.contains(&inst) {
                            self.note(&inst, &rec);
                        }
                    }
                }
                OracleQuery::WhichPreferred(class) => {
                    let named: BTreeSet<String> = ans
                        .trim()
                        .trim_end_matches('.')
                        .strip_prefix("I mean ")
                        .map(|rest| {
                            rest.split([',', ' '])
                                .collect::<Vec<_>>()
                                .windows(2)
                                .filter(|w| w[0] == class && w[1].parse::<u32>().is_ok())
                                .map(|w| format!("{} {}", w[0], w[1]))
                                .collect()
                        })
                        .unwrap_or_default();
                    if !named.is_empty() {
                        self.targets = Some(named);
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }

    pub fn model(&self) -> WorldModel {
        WorldModel {
            agent_at: self.agent_at.clone(),
            holding: self.holding.clone(),
            receptacles: self.receptacles.clone(),
            locations: self.locations.clone(),
            order: self.order.clone(),
            closed: self.closed.clone(),
            status: self.status.clone(),
        }
    }

    pub fn task_spec(&self) -> Option<TaskSpec> {
        let t = self.task.as_ref()?;
        Some(TaskSpec {
            kind: t.kind,
            object_class: t.object_class.clone(),
            destination: t.destination.clone(),
            params: TaskParams::default(),
            instruction: self.instruction.clone(),
        })
    }

    /// Instances of `class` known to exist.
    pub fn known_of(&self, class: &str) -> Vec<&String> {
        self.order.iter().filter(|i| class_of(i) == class).collect()
    }
}
