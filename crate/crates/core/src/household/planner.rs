//! Greedy replanning over a (possibly partial) model of a household room.
//!
//! The same planner drives the full-information expert, which fills the
//! model from the true state, and the scripted asking agent, which fills it
//! from answers and observations. Each call returns only the next command, so
//! callers replan after every step and recover from perturbations.

use std::collections::{BTreeMap, BTreeSet};

use super::{HouseholdAction, HouseholdState, ObjectStatus};
use crate::mdp::{TaskKind, TaskSpec};
use crate::names::{class_of, number_of};

/// What the planner knows about the room.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorldModel {
    pub agent_at: Option<String>,
    pub holding: Option<String>,
    /// Receptacles in the room.
    pub receptacles: Vec<String>,
    /// Believed location of each known instance.
    pub locations: BTreeMap<String, String>,
    /// Preference order among instances (earlier wins ties).
    pub order: Vec<String>,
    /// Receptacles believed to be closed.
    pub closed: BTreeSet<String>,
    pub status: BTreeMap<String, ObjectStatus>,
}

impl WorldModel {
    /// Complete model of a true state; `order` breaks ties.
    pub fn from_state(state: &HouseholdState, order: &[String]) -> Self {
        let mut locations = BTreeMap::new();
        for (name, r) in &state.receptacles {
            for c in &r.contents {
                locations.insert(c.clone(), name.clone());
            }
        }
        let closed = state
            .receptacles
            .iter()
            .filter(|(_, r)| r.openable && !r.open)
            .map(|(n, _)| n.clone())
            .collect();
        let mut known: Vec<String> = order.iter().filter(|i| locations.contains_key(*i)).cloned().collect();
        let mut rest: Vec<String> = locations.keys().filter(|i| !order.contains(i)).cloned().collect();
        rest.sort();
        known.extend(rest);
        Self {
            agent_at: state.agent_at.clone(),
            holding: state.inventory.clone(),
            receptacles: state.receptacles.keys().cloned().collect(),
            locations,
            order: known,
            closed,
            status: state.object_status.clone(),
        }
    }

    fn is_closed(&self, r: &str) -> bool {
        self.closed.contains(r)
    }

    fn status(&self, i: &str) -> ObjectStatus {
        self.status.get(i).copied().unwrap_or_default()
    }

    fn rank(&self, i: &str) -> usize {
        self.order.iter().position(|o| o == i).unwrap_or(usize::MAX)
    }
}

/// Progress towards the current task as seen by the model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanStep {
    Act(HouseholdAction),
    /// The model holds no usable candidate instance.
    NeedInformation,
    /// The model believes the task is already complete.
    Complete,
}

struct Planner<'a> {
    m: &'a WorldModel,
    task: &'a TaskSpec,
    targets: Option<&'a BTreeSet<String>>,
}

impl<'a> Planner<'a> {
    fn is_candidate(&self, i: &str) -> bool {
        class_of(i) == self.task.object_class && self.targets.is_none_or(|t| t.contains(i))
    }

    fn processed(&self, i: &str) -> bool {
        self.m.status(i).satisfies(self.task.kind)
    }

    fn at_dest(&self, i: &str) -> bool {
        let dest = self.task.destination.as_deref().unwrap_or("");
        self.m.locations.get(i).is_some_and(|r| class_of(r) == dest)
    }

    fn done(&self, i: &str) -> bool {
        if self.task.kind == TaskKind::Examine {
            self.processed(i)
        } else {
            self.at_dest(i) && self.processed(i)
        }
    }

    fn need(&self) -> usize {
        match self.targets {
            Some(t) => t.len(),
            None if self.task.kind == TaskKind::Pick2 => 2,
            None => 1,
        }
    }

    fn receptacles_of<'s>(&self, class: &'s str) -> impl Iterator<Item = &'a String> + 's
    where
        'a: 's,
    {
        let m: &'a WorldModel = self.m;
        m.receptacles.iter().filter(move |r| class_of(r) == class)
    }

    /// Cheapest receptacle of a class from `from`: travel plus opening.
    fn best_of(&self, class: &str, from: Option<&str>) -> Option<(&'a String, usize)> {
        self.receptacles_of(class)
            .map(|r| {
                let cost = usize::from(from != Some(r.as_str())) + usize::from(self.m.is_closed(r));
                (r, cost)
            })
            .min_by_key(|(r, cost)| (*cost, number_of(r)))
    }

    /// Steps needed to finish one instance starting at `from`, having it in hand.
    fn finish_cost(&self, item: &str, from: Option<&str>) -> usize {
        let mut cost = 0;
        let mut here = from.map(str::to_string);
        if !self.processed(item) {
            if let Some(app) = self.task.kind.appliance() {
                let Some((a, _)) = self.best_of(app, here.as_deref()) else { return usize::MAX / 4 };
                cost += usize::from(here.as_deref() != Some(a.as_str())) + 1;
                here = Some(a.clone());
            }
        }
        if self.task.kind != TaskKind::Examine {
            let dest = self.task.destination.as_deref().unwrap_or("");
            let Some((_, c)) = self.best_of(dest, here.as_deref()) else { return usize::MAX / 4 };
            cost += c + 1;
        }
        cost
    }

    fn fetch_cost(&self, item: &str) -> usize {
        let r = &self.m.locations[item];
        let here = self.m.agent_at.as_deref();
        usize::from(here != Some(r.as_str())) + usize::from(self.m.is_closed(r)) + 1 + self.finish_cost(item, Some(r))
    }

    fn deliver(&self, item: &str) -> HouseholdAction {
        let here = self.m.agent_at.as_deref();
        if !self.processed(item) {
            if let Some(app) = self.task.kind.appliance() {
                if let Some((a, _)) = self.best_of(app, here) {
                    if here != Some(a.as_str()) {
                        return HouseholdAction::GoTo(a.clone());
                    }
                    let (object, with) = (item.to_string(), a.clone());
                    return match self.task.kind {
                        TaskKind::Heat => HouseholdAction::Heat { object, with },
                        TaskKind::Clean => HouseholdAction::Clean { object, with },
                        TaskKind::Cool => HouseholdAction::Cool { object, with },
                        _ => HouseholdAction::Use(with),
                    };
                }
            }
        }
        let dest = self.task.destination.as_deref().unwrap_or("");
        match self.best_of(dest, here) {
            Some((d, _)) if here != Some(d.as_str()) => HouseholdAction::GoTo(d.clone()),
            Some((d, _)) if self.m.is_closed(d) => HouseholdAction::Open(d.clone()),
            Some((d, _)) => HouseholdAction::Put { object: item.to_string(), to: d.clone() },
            // Without a destination there is nothing left but the lamp.
            None => HouseholdAction::GoTo(self.m.receptacles.first().cloned().unwrap_or_default()),
        }
    }

    fn drop_off(&self, item: &str) -> HouseholdAction {
        match self.m.agent_at.as_deref() {
            Some(r) if self.m.is_closed(r) => HouseholdAction::Open(r.to_string()),
            Some(r) => HouseholdAction::Put { object: item.to_string(), to: r.to_string() },
            None => {
                let spot = self
                    .m
                    .receptacles
                    .iter()
                    .find(|r| !self.m.is_closed(r))
                    .or(self.m.receptacles.first())
                    .cloned()
                    .unwrap_or_default();
                HouseholdAction::GoTo(spot)
            }
        }
    }

    fn next(&self) -> PlanStep {
        let known: Vec<&String> = self.m.locations.keys().chain(self.m.holding.iter()).collect();
        let done = known.iter().filter(|i| self.is_candidate(i) && self.done(i)).count();
        if done >= self.need() {
            return PlanStep::Complete;
        }
        if let Some(h) = &self.m.holding {
            return PlanStep::Act(if self.is_candidate(h) && !self.done(h) {
                self.deliver(h)
            } else {
                self.drop_off(h)
            });
        }
        let best = self
            .m
            .locations
            .keys()
            .filter(|i| self.is_candidate(i) && !self.done(i))
            .min_by_key(|i| (self.fetch_cost(i), self.m.rank(i), number_of(i)));
        let Some(item) = best else { return PlanStep::NeedInformation };
        let r = &self.m.locations[item];
        let here = self.m.agent_at.as_deref();
        PlanStep::Act(if here != Some(r.as_str()) {
            HouseholdAction::GoTo(r.clone())
        } else if self.m.is_closed(r) {
            HouseholdAction::Open(r.clone())
        } else {
            HouseholdAction::Take { object: item.clone(), from: r.clone() }
        })
    }
}

/// Next command towards `task` under the model.
pub fn plan_next(model: &WorldModel, task: &TaskSpec, targets: Option<&BTreeSet<String>>) -> PlanStep {
    Planner { m: model, task, targets }.next()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::household::{apply_household, check_household_success};
    use crate::mdp::Context;

    fn bedroom() -> Context {
        crate::household::tests::bedroom()
    }

    #[test]
    fn expert_plan_for_simple_pick() {
        let ctx = bedroom();
        let mut s = HouseholdState::from_context(&ctx).unwrap();
        let order: Vec<String> = ctx.placement.iter().map(|p| p.instance.clone()).collect();
        let mut plan = Vec::new();
        while let PlanStep::Act(a) = plan_next(&WorldModel::from_state(&s, &order), &s.task, None) {
            plan.push(a.render());
            s = apply_household(&s, &a).0;
            assert!(plan.len() < 20);
        }
        assert_eq!(
            plan,
            ["go to diningtable 1", "take mug 1 from diningtable 1", "go to sidetable 1", "put mug 1 in/on sidetable 1"]
        );
        assert!(check_household_success(&s, &ctx));
    }

    #[test]
    fn unknown_locations_request_information() {
        let ctx = bedroom();
        let mut m = WorldModel::from_state(&HouseholdState::from_context(&ctx).unwrap(), &[]);
        m.locations.clear();
        assert_eq!(plan_next(&m, &ctx.task, None), PlanStep::NeedInformation);
    }
}
