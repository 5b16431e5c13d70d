//! Full-information planner. Reads the hidden context and true state, never
//! asks, and replans from scratch every step.

use crate::harness::{Policy, PolicyDecision, PolicyError, PolicyView};
use crate::household::planner::{plan_next, PlanStep, WorldModel};
use crate::household::{active_targets, HouseholdState};
use crate::mdp::{Context, Location, PhysicalAction, TaskKind, WorldState};
use crate::tabletop::{dist, MoveCmd, TableKind, TabletopState, CONTAIN_RADIUS};

/// Next physical action of the expert, or `None` when it has nothing to do.
pub fn expert_action(state: &WorldState, ctx: &Context) -> Option<PhysicalAction> {
    match state {
        WorldState::Household(s) => household_action(s, ctx).map(PhysicalAction::Household),
        WorldState::Tabletop(s) => tabletop_action(s, ctx).map(PhysicalAction::Move),
    }
}

fn household_action(s: &HouseholdState, ctx: &Context) -> Option<crate::household::HouseholdAction> {
    let order: Vec<String> = ctx.placement.iter().map(|p| p.instance.clone()).collect();
    match plan_next(&WorldModel::from_state(s, &order), &s.task, active_targets(s, ctx)) {
        PlanStep::Act(a) => Some(a),
        PlanStep::NeedInformation | PlanStep::Complete => None,
    }
}

fn tabletop_action(s: &TabletopState, ctx: &Context) -> Option<MoveCmd> {
    let near = |a: [f64; 2], b: [f64; 2]| dist(a, b) <= CONTAIN_RADIUS;
    let wants_red = matches!(ctx.task.kind, TaskKind::Tabletop1 | TaskKind::Tabletop3);
    if wants_red {
        let bowl = s.objects.iter().find(|o| o.kind == TableKind::Bowl && o.color == "green")?;
        let target = ctx.target_instances.iter().next()?;
        // Clear distractors out of the bowl first, back to where they started.
        if let Some(b) = s.blocks().find(|b| b.color == "red" && &b.name != target && near(b.pose, bowl.pose)) {
            let home = ctx.placement.iter().find(|p| p.instance == b.name).and_then(|p| match p.location {
                Location::Pose(q) => Some(q),
                _ => None,
            })?;
            return Some(MoveCmd { pick: b.pose, place: home });
        }
        let t = s.get(target)?;
        if !near(t.pose, bowl.pose) {
            return Some(MoveCmd { pick: t.pose, place: bowl.pose });
        }
    }
    for (k, color) in &ctx.color_map {
        let base = s.base(*k)?;
        if s.blocks().any(|b| &b.color == color && near(b.pose, base.pose)) {
            continue;
        }
        // Colors are injective over bases, so any block of this color is free.
        let block = s.blocks().find(|b| &b.color == color)?;
        return Some(MoveCmd { pick: block.pose, place: base.pose });
    }
    None
}

/// The expert as a [`Policy`].
#[derive(Clone, Debug, Default)]
pub struct ExpertPolicy;

impl Policy for ExpertPolicy {
    fn name(&self) -> &str {
        "expert"
    }

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        Ok(match expert_action(view.state, view.context) {
            Some(a) => PolicyDecision::act(a.render()),
            None => PolicyDecision::Finish,
        })
    }
}
