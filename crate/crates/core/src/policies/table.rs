//! Tabletop bookkeeping shared by the scripted policies: the scene as first
//! observed, what the answers so far revealed, and the resulting moves.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::harness::StepRecord;
use crate::mdp::{AugmentedAction, Observation};
use crate::oracle::{classify_question, OracleQuery};
use crate::tabletop::{parse_scene, phrase_rank, MoveCmd, SeenObject, TableKind, TASK1_INSTRUCTION, TASK2_INSTRUCTION, TASK3_INSTRUCTION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableTask {
    One,
    Two,
    Three,
}

#[derive(Clone, Debug)]
pub struct TableScript {
    pub task: TableTask,
    pub scene: Vec<SeenObject>,
    pub red_asked: bool,
    pub red_rank: Option<usize>,
    pub color_asks: u32,
    pub colors: BTreeMap<u32, String>,
}

/// Color named by "You should put the {color} block on the # {k} base."
fn answered_color(answer: &str) -> Option<String> {
    let rest = answer.trim().strip_prefix("You should put the ")?;
    let (color, _) = rest.split_once(" block")?;
    (!color.contains(' ')).then(|| color.to_string())
}

impl TableScript {
    pub fn from_transcript(initial_observation: &str, steps: &[StepRecord]) -> Option<Self> {
        let (_, instr) = initial_observation.split_once("You task is: ")?;
        let task = match instr.trim() {
            TASK1_INSTRUCTION => TableTask::One,
            TASK2_INSTRUCTION => TableTask::Two,
            TASK3_INSTRUCTION => TableTask::Three,
            _ => return None,
        };
        let mut s = Self {
            task,
            scene: parse_scene(initial_observation),
            red_asked: false,
            red_rank: None,
            color_asks: 0,
            colors: BTreeMap::new(),
        };
        for st in steps {
            let AugmentedAction::Ask(q) = &st.action else { continue };
            let answer = match &st.observation {
                Observation::Answer(a) => Some(a.as_str()),
                _ => None,
            };
            match classify_question(q) {
                OracleQuery::RelativeTarget(color) if color == "red" => {
                    s.red_asked = true;
                    if let Some(r) = answer.and_then(|a| phrase_rank(a, "red")) {
                        s.red_rank = Some(r);
                    }
                }
                OracleQuery::ColorForBase(k) => {
                    s.color_asks += 1;
                    if let Some(c) = answer.and_then(answered_color) {
                        s.colors.insert(k, c);
                    }
                }
                _ => {}
            }
        }
        Some(s)
    }

    fn reds(&self) -> Vec<&SeenObject> {
        let mut v: Vec<&SeenObject> = self.scene.iter().filter(|o| o.kind == TableKind::Block && o.color == "red").collect();
        v.sort_by(|a, b| a.pose[1].total_cmp(&b.pose[1]));
        v
    }

    pub fn red_count(&self) -> usize {
        self.reds().len()
    }

    pub fn base_count(&self) -> u32 {
        self.scene.iter().filter(|o| o.kind == TableKind::Base).count() as u32
    }

    /// Non-red block colors present, in first-seen order.
    fn block_colors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for o in &self.scene {
            let use_it = o.kind == TableKind::Block && (self.task == TableTask::Two || o.color != "red");
            if use_it && !out.contains(&o.color) {
                out.push(o.color.clone());
            }
        }
        out
    }

    /// Base-to-color assignment: answers first, then elimination, then
    /// guesses (random when `rng` is given, else in first-seen order).
    pub fn assignment<R: Rng>(&self, rng: Option<&mut R>) -> BTreeMap<u32, String> {
        let y = self.base_count();
        let mut map = self.colors.clone();
        let mut free: Vec<String> = self.block_colors().into_iter().filter(|c| !map.values().any(|v| v == c)).collect();
        if let Some(rng) = rng {
            free.shuffle(rng);
        }
        for k in 1..=y {
            if !map.contains_key(&k) && !free.is_empty() {
                map.insert(k, free.remove(0));
            }
        }
        map
    }

    /// Full move list given what is known.
    pub fn moves<R: Rng>(&self, mut rng: Option<&mut R>) -> Vec<MoveCmd> {
        let mut out = Vec::new();
        if matches!(self.task, TableTask::One | TableTask::Three) {
            let reds = self.reds();
            let bowl = self.scene.iter().find(|o| o.kind == TableKind::Bowl && o.color == "green");
            let rank = match (self.red_rank, rng.as_deref_mut()) {
                (Some(r), _) => r,
                (None, Some(rng)) if !reds.is_empty() => rng.gen_range(0..reds.len()),
                _ => 0,
            };
            if let (Some(red), Some(bowl)) = (reds.get(rank), bowl) {
                out.push(MoveCmd { pick: red.pose, place: bowl.pose });
            }
        }
        if matches!(self.task, TableTask::Two | TableTask::Three) {
            let map = self.assignment(rng);
            let mut used: BTreeSet<usize> = BTreeSet::new();
            for (k, color) in &map {
                let base = self.scene.iter().find(|o| o.kind == TableKind::Base && o.index == Some(*k));
                let block = self
                    .scene
                    .iter()
                    .enumerate()
                    .find(|(i, o)| o.kind == TableKind::Block && &o.color == color && !used.contains(i));
                if let (Some(base), Some((i, block))) = (base, block) {
                    used.insert(i);
                    out.push(MoveCmd { pick: block.pose, place: base.pose });
                }
            }
        }
        out
    }
}
