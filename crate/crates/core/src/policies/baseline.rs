//! Scripted searcher that never asks.
//!
//! It visits receptacles in a fixed seeded order, opening closed ones, until
//! it sees an instance of the task object, then finishes the task with the
//! shared planner. Where several instances sit together, the ambiguous
//! variant picks one uniformly at random. It makes a single attempt.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::harness::{EpisodeInfo, Policy, PolicyDecision, PolicyError, PolicyView};
use crate::household::planner::{plan_next, PlanStep};
use crate::household::HouseholdAction;
use crate::mdp::{AugmentedAction, EnvKind, Variant};
use crate::seeding::rng_for;

use super::belief::Belief;
use super::table::TableScript;

#[derive(Clone, Debug, Default)]
pub struct ScriptedBaseline {
    info: Option<EpisodeInfo>,
}

impl ScriptedBaseline {
    pub fn new() -> Self {
        Self::default()
    }

    fn seed(&self) -> u64 {
        self.info.as_ref().map_or(0, |i| i.seed)
    }

    fn household(&self, view: &PolicyView<'_>) -> PolicyDecision {
        let mut b = Belief::from_transcript(view.initial_observation, view.steps);
        let Some(spec) = b.task_spec() else { return PolicyDecision::Finish };
        let since = &view.steps[b.task_start.min(view.steps.len())..];
        if since.is_empty() {
            return PolicyDecision::act(format!(
                "think: To solve the task, I need to {}. I do not know where the {} is, so I will check one by one.",
                super::aba::plan_phrase(b.task.as_ref().expect("spec implies task")),
                spec.object_class
            ));
        }
        let ambiguous = self.info.as_ref().is_some_and(|i| i.variant == Variant::Ambiguous);
        if ambiguous {
            // Uniform choice among equally convenient instances.
            let mut rng = rng_for(self.seed(), "baseline-pick", u64::from(b.task_index));
            b.order.shuffle(&mut rng);
        }
        match plan_next(&b.model(), &spec, None) {
            PlanStep::Act(a) => PolicyDecision::act(a.render()),
            PlanStep::Complete => PolicyDecision::Finish,
            PlanStep::NeedInformation => {
                let mut order = b.receptacles.clone();
                order.shuffle(&mut rng_for(self.seed(), "baseline-order", 0));
                let here = b.agent_at.as_deref();
                if let Some(r) = here {
                    if b.closed.contains(r) && !b.searched.contains(r) {
                        return PolicyDecision::act(HouseholdAction::Open(r.to_string()).render());
                    }
                }
                match order.iter().find(|r| !b.searched.contains(*r) && Some(r.as_str()) != here) {
                    Some(r) => PolicyDecision::act(HouseholdAction::GoTo(r.clone()).render()),
                    None => PolicyDecision::Finish,
                }
            }
        }
    }

    fn tabletop(&self, view: &PolicyView<'_>) -> PolicyDecision {
        let Some(script) = TableScript::from_transcript(view.initial_observation, view.steps) else {
            return PolicyDecision::Finish;
        };
        let mut rng: ChaCha8Rng = rng_for(self.seed(), "baseline-table", 0);
        let moves = script.moves(Some(&mut rng));
        let done = view.steps.iter().filter(|s| matches!(s.action, AugmentedAction::Physical(_))).count();
        match moves.get(done) {
            Some(m) => PolicyDecision::act(m.render()),
            None => PolicyDecision::Finish,
        }
    }
}

impl Policy for ScriptedBaseline {
    fn name(&self) -> &str {
        "scripted-baseline"
    }

    fn begin_episode(&mut self, info: &EpisodeInfo) {
        self.info = Some(info.clone());
    }

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        Ok(match view.env_kind {
            EnvKind::Household => self.household(view),
            EnvKind::Tabletop => self.tabletop(view),
        })
    }
}
