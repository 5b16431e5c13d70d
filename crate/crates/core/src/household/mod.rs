//! Text household environment: rooms of named receptacles holding object
//! instances, an agent that teleports between receptacles, and six task
//! kinds (pick, examine, clean, heat, cool, pick two).
//!
//! Dynamics follow the usual text-adventure conventions: well-formed but
//! invalid commands are absorbed with `Nothing happens.`, closed receptacles
//! hide their contents, and heating, cleaning and cooling work directly at
//! the appliance without opening it.

mod generate;
mod layout;
mod parse;
pub mod planner;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::mdp::{
    Context, EnvDynamics, EnvKind, Location, MalformedAction, PhysicalAction, StepError, TaskKind,
    TaskSpec, Transition, Variant, WorldState,
};
use crate::names::{class_of, join_list, number_of};

pub use generate::{
    generate_context, next_multiround_task, parse_instruction, render_instruction, GenerateError,
    ParsedInstruction,
};
pub use layout::{HouseholdLayout, LayoutCatalog, LayoutError, LayoutPool, ObjectGroup, ReceptacleGroup};
pub use parse::{parse_household_action, HouseholdAction};

/// Absorb text for well-formed commands that do not apply.
pub const NOTHING_HAPPENS: &str = "Nothing happens.";

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptacleState {
    pub contents: Vec<String>,
    pub openable: bool,
    pub open: bool,
}

impl ReceptacleState {
    /// Whether the contents can be seen and reached.
    pub fn accessible(&self) -> bool {
        !self.openable || self.open
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectStatus {
    pub heated: bool,
    pub cleaned: bool,
    pub cooled: bool,
    pub examined: bool,
}

impl ObjectStatus {
    /// Whether the processing step a task kind requires has happened.
    pub fn satisfies(&self, kind: TaskKind) -> bool {
        match kind {
            TaskKind::Heat => self.heated,
            TaskKind::Clean => self.cleaned,
            TaskKind::Cool => self.cooled,
            TaskKind::Examine => self.examined,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseholdState {
    /// Current receptacle; `None` is the starting spot in the middle of the room.
    pub agent_at: Option<String>,
    pub inventory: Option<String>,
    pub receptacles: BTreeMap<String, ReceptacleState>,
    pub object_status: BTreeMap<String, ObjectStatus>,
    /// Task currently being pursued (changes in multiround rooms).
    pub task: TaskSpec,
    pub tasks_completed: u32,
    pub finished: bool,
}

impl HouseholdState {
    pub fn from_context(ctx: &Context) -> Result<Self, StepError> {
        ctx.validate()?;
        if ctx.env_kind != EnvKind::Household {
            return Err(StepError::WrongEnvironment(EnvKind::Household));
        }
        let mut receptacles: BTreeMap<String, ReceptacleState> = ctx
            .room
            .iter()
            .map(|r| {
                (r.name.clone(), ReceptacleState { contents: Vec::new(), openable: r.openable, open: false })
            })
            .collect();
        let mut object_status = BTreeMap::new();
        for p in &ctx.placement {
            let Location::Receptacle(r) = &p.location else {
                return Err(StepError::WrongEnvironment(EnvKind::Household));
            };
            receptacles.get_mut(r).expect("validated").contents.push(p.instance.clone());
            object_status.insert(p.instance.clone(), ObjectStatus::default());
        }
        Ok(Self {
            agent_at: None,
            inventory: None,
            receptacles,
            object_status,
            task: ctx.task.clone(),
            tasks_completed: 0,
            finished: false,
        })
    }

    /// Receptacle currently holding an instance.
    pub fn location_of(&self, instance: &str) -> Option<&str> {
        self.receptacles
            .iter()
            .find(|(_, r)| r.contents.iter().any(|c| c == instance))
            .map(|(n, _)| n.as_str())
    }

    /// All object instances, whether in a receptacle or held.
    pub fn all_instances(&self) -> Vec<String> {
        let mut v: Vec<String> = self.receptacles.values().flat_map(|r| r.contents.iter().cloned()).collect();
        v.extend(self.inventory.iter().cloned());
        v.sort();
        v
    }

    pub fn status(&self, instance: &str) -> ObjectStatus {
        self.object_status.get(instance).copied().unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Listing comparison: by class, then by number descending.
pub fn listing_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    class_of(a).cmp(class_of(b)).then(number_of(b).cmp(&number_of(a)))
}

/// Orders names the way listings show them.
pub fn listing_order(names: &mut [String]) {
    names.sort_by(|a, b| listing_cmp(a, b));
}

/// `a x 1, a y 2, and a z 1`, or `nothing`.
pub fn render_listing(names: &[String]) -> String {
    if names.is_empty() {
        return "nothing".to_string();
    }
    let mut sorted = names.to_vec();
    listing_order(&mut sorted);
    let items: Vec<String> = sorted.iter().map(|n| format!("a {n}")).collect();
    join_list(&items)
}

fn render_arrival(name: &str, r: &ReceptacleState) -> String {
    if !r.openable {
        format!("On the {name}, you see {}.", render_listing(&r.contents))
    } else if r.open {
        format!("The {name} is open. In it, you see {}.", render_listing(&r.contents))
    } else {
        format!("The {name} is closed.")
    }
}

/// Opening text of an episode.
pub fn render_initial(state: &HouseholdState) -> String {
    let names: Vec<String> = state.receptacles.keys().cloned().collect();
    format!(
        "You are in the middle of a room. Looking quickly around you, you see {}. Your task is to: {}",
        render_listing(&names),
        state.task.instruction
    )
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

fn appliance_verb(action: &HouseholdAction) -> Option<(&'static str, &str, &str)> {
    match action {
        HouseholdAction::Heat { object, with } => Some(("heat", object, with)),
        HouseholdAction::Clean { object, with } => Some(("clean", object, with)),
        HouseholdAction::Cool { object, with } => Some(("cool", object, with)),
        _ => None,
    }
}

/// Applies one command. Returns the successor state and the observation;
/// invalid commands return an unchanged state and [`NOTHING_HAPPENS`].
pub fn apply_household(state: &HouseholdState, action: &HouseholdAction) -> (HouseholdState, String) {
    let mut s = state.clone();
    let absorbed = || (state.clone(), NOTHING_HAPPENS.to_string());
    let here = s.agent_at.clone();
    let at = |r: &str| here.as_deref() == Some(r);
    match action {
        HouseholdAction::GoTo(r) => {
            let Some(rec) = s.receptacles.get(r) else { return absorbed() };
            let text = render_arrival(r, rec);
            s.agent_at = Some(r.clone());
            (s, text)
        }
        HouseholdAction::Open(r) => {
            let Some(rec) = s.receptacles.get_mut(r) else { return absorbed() };
            if !at(r) || !rec.openable || rec.open {
                return absorbed();
            }
            rec.open = true;
            let text = format!("You open the {r}. {}", render_arrival(r, rec));
            (s, text)
        }
        HouseholdAction::Close(r) => {
            let Some(rec) = s.receptacles.get_mut(r) else { return absorbed() };
            if !at(r) || !rec.openable || !rec.open {
                return absorbed();
            }
            rec.open = false;
            (s, format!("You close the {r}."))
        }
        HouseholdAction::Take { object, from } => {
            if s.inventory.is_some() || !at(from) {
                return absorbed();
            }
            let Some(rec) = s.receptacles.get_mut(from) else { return absorbed() };
            if !rec.accessible() {
                return absorbed();
            }
            let Some(pos) = rec.contents.iter().position(|c| c == object) else { return absorbed() };
            rec.contents.remove(pos);
            s.inventory = Some(object.clone());
            (s, format!("You pick up the {object} from the {from}."))
        }
        HouseholdAction::Put { object, to } => {
            if s.inventory.as_deref() != Some(object.as_str()) || !at(to) {
                return absorbed();
            }
            let Some(rec) = s.receptacles.get_mut(to) else { return absorbed() };
            if !rec.accessible() {
                return absorbed();
            }
            rec.contents.push(object.clone());
            s.inventory = None;
            (s, format!("You put the {object} in/on the {to}."))
        }
        HouseholdAction::Use(r) => {
            if !at(r) || class_of(r) != "desklamp" || !s.receptacles.contains_key(r) {
                return absorbed();
            }
            if let Some(held) = s.inventory.clone() {
                s.object_status.entry(held).or_default().examined = true;
            }
            (s, format!("You turn on the {r}."))
        }
        _ => {
            let (verb, object, with) = appliance_verb(action).expect("remaining variants are appliance verbs");
            let appliance = match verb {
                "heat" => "microwave",
                "clean" => "sinkbasin",
                _ => "fridge",
            };
            if !at(with)
                || class_of(with) != appliance
                || !s.receptacles.contains_key(with)
                || s.inventory.as_deref() != Some(object)
            {
                return absorbed();
            }
            let st = s.object_status.entry(object.to_string()).or_default();
            match verb {
                "heat" => st.heated = true,
                "clean" => st.cleaned = true,
                _ => st.cooled = true,
            }
            (s, format!("You {verb} the {object} using the {with}."))
        }
    }
}

/// Targets that restrict success, if the context designates any.
pub fn active_targets<'a>(state: &HouseholdState, ctx: &'a Context) -> Option<&'a BTreeSet<String>> {
    (ctx.variant == Variant::Ambiguous && state.tasks_completed == 0 && !ctx.target_instances.is_empty())
        .then_some(&ctx.target_instances)
}

/// Whether the current task's goal predicate holds.
pub fn check_household_success(state: &HouseholdState, ctx: &Context) -> bool {
    task_satisfied(state, &state.task, active_targets(state, ctx))
}

/// Goal predicate of `task` in `state`, optionally restricted to `targets`.
pub fn task_satisfied(state: &HouseholdState, task: &TaskSpec, targets: Option<&BTreeSet<String>>) -> bool {
    let class = task.object_class.as_str();
    let dest = task.destination.as_deref().unwrap_or("");
    let at_dest = |inst: &str| state.location_of(inst).is_some_and(|r| class_of(r) == dest);
    let good = |inst: &str| state.status(inst).satisfies(task.kind);
    if task.kind == TaskKind::Examine {
        return match targets {
            Some(t) => t.iter().all(|i| good(i)),
            None => state.object_status.iter().any(|(i, st)| class_of(i) == class && st.examined),
        };
    }
    if let Some(t) = targets {
        return t.iter().all(|i| at_dest(i) && good(i));
    }
    let placed = state
        .receptacles
        .iter()
        .filter(|(name, _)| class_of(name) == dest)
        .flat_map(|(_, r)| r.contents.iter())
        .filter(|i| class_of(i) == class && good(i))
        .count();
    let need = if task.kind == TaskKind::Pick2 { 2 } else { 1 };
    placed >= need
}

/// Household dynamics as an [`EnvDynamics`] implementation.
#[derive(Clone, Copy, Debug, Default)]
pub struct HouseholdEnv;

impl HouseholdEnv {
    fn state<'a>(&self, s: &'a WorldState) -> Result<&'a HouseholdState, StepError> {
        s.as_household().ok_or(StepError::WrongEnvironment(EnvKind::Household))
    }
}

impl EnvDynamics for HouseholdEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::Household
    }

    fn initial_state(&self, context: &Context) -> Result<WorldState, StepError> {
        HouseholdState::from_context(context).map(WorldState::Household)
    }

    fn initial_observation(&self, state: &WorldState, _context: &Context) -> String {
        state.as_household().map(render_initial).unwrap_or_default()
    }

    fn parse_physical(&self, text: &str) -> Result<PhysicalAction, MalformedAction> {
        parse_household_action(text).map(PhysicalAction::Household)
    }

    fn apply(&self, state: &WorldState, action: &PhysicalAction, ctx: &Context) -> Result<Transition, StepError> {
        let s = self.state(state)?;
        let PhysicalAction::Household(a) = action else {
            return Err(StepError::WrongEnvironment(EnvKind::Household));
        };
        let (mut next, mut text) = apply_household(s, a);
        let mut reward = 0.0;
        let mut done = false;
        if check_household_success(&next, ctx) {
            reward = 1.0;
            next.tasks_completed += 1;
            if ctx.variant == Variant::Multiround {
                match next_multiround_task(&next, ctx) {
                    Some(task) => {
                        text = format!("{text} Your next task is to: {}", task.instruction);
                        next.task = task;
                    }
                    None => {
                        next.finished = true;
                        done = true;
                    }
                }
            } else {
                next.finished = true;
                done = true;
            }
        }
        Ok(Transition { state: WorldState::Household(next), observation: text, reward, done })
    }

    fn admissible_actions(&self, state: &WorldState, _ctx: &Context) -> Vec<PhysicalAction> {
        let Some(s) = state.as_household() else { return Vec::new() };
        admissible(s).into_iter().map(PhysicalAction::Household).collect()
    }

    fn is_success(&self, state: &WorldState, ctx: &Context) -> bool {
        state.as_household().is_some_and(|s| check_household_success(s, ctx))
    }
}

/// Commands that change the state (or at least move the agent).
pub fn admissible(s: &HouseholdState) -> Vec<HouseholdAction> {
    let mut out = Vec::new();
    for name in s.receptacles.keys() {
        if s.agent_at.as_deref() != Some(name.as_str()) {
            out.push(HouseholdAction::GoTo(name.clone()));
        }
    }
    let Some(here) = s.agent_at.as_deref() else { return out };
    let rec = &s.receptacles[here];
    if rec.openable {
        out.push(if rec.open { HouseholdAction::Close(here.into()) } else { HouseholdAction::Open(here.into()) });
    }
    match &s.inventory {
        None if rec.accessible() => {
            for o in &rec.contents {
                out.push(HouseholdAction::Take { object: o.clone(), from: here.into() });
            }
        }
        Some(held) => {
            if rec.accessible() {
                out.push(HouseholdAction::Put { object: held.clone(), to: here.into() });
            }
            let o = held.clone();
            let w = here.to_string();
            match class_of(here) {
                "microwave" => out.push(HouseholdAction::Heat { object: o, with: w }),
                "sinkbasin" => out.push(HouseholdAction::Clean { object: o, with: w }),
                "fridge" => out.push(HouseholdAction::Cool { object: o, with: w }),
                "desklamp" => out.push(HouseholdAction::Use(w)),
                _ => {}
            }
        }
        None => {}
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::mdp::{Placement, ReceptacleSpec, TaskParams};

    pub(crate) fn bedroom() -> Context {
        let rec = |n: &str, openable: bool| ReceptacleSpec { name: n.into(), openable };
        let put = |i: &str, r: &str| Placement { instance: i.into(), location: Location::Receptacle(r.into()) };
        Context {
            env_kind: EnvKind::Household,
            variant: Variant::Standard,
            seed: 0,
            task: TaskSpec {
                kind: TaskKind::Pick,
                object_class: "mug".into(),
                destination: Some("sidetable".into()),
                params: TaskParams::default(),
                instruction: "put a mug in sidetable.".into(),
            },
            placement: vec![
                put("mug 1", "diningtable 1"),
                put("mug 3", "diningtable 1"),
                put("mug 2", "diningtable 1"),
                put("cellphone 1", "drawer 1"),
                put("keychain 1", "sidetable 1"),
            ],
            target_instances: Default::default(),
            color_map: Default::default(),
            room: vec![
                rec("bed 1", false),
                rec("diningtable 1", false),
                rec("drawer 1", true),
                rec("drawer 2", true),
                rec("sidetable 1", false),
                rec("sidetable 2", false),
            ],
            catalog: vec![],
            pose_jitter: 0.0,
            layout_id: String::new(),
        }
    }

    fn run(ctx: &Context, cmds: &[&str]) -> (HouseholdState, Vec<String>) {
        let mut s = HouseholdState::from_context(ctx).unwrap();
        let mut obs = Vec::new();
        for c in cmds {
            let (n, t) = apply_household(&s, &parse_household_action(c).unwrap());
            s = n;
            obs.push(t);
        }
        (s, obs)
    }

    #[test]
    fn initial_listing_is_sorted() {
        let s = HouseholdState::from_context(&bedroom()).unwrap();
        assert_eq!(
            render_initial(&s),
            "You are in the middle of a room. Looking quickly around you, you see a bed 1, a diningtable 1, \
             a drawer 2, a drawer 1, a sidetable 2, and a sidetable 1. Your task is to: put a mug in sidetable."
        );
    }

    #[test]
    fn open_take_put_cycle() {
        let (s, obs) = run(
            &bedroom(),
            &[
                "go to drawer 1",
                "open drawer 1",
                "take cellphone 1 from drawer 1",
                "go to sidetable 2",
                "put cellphone 1 in/on sidetable 2",
                "take mug 9 from diningtable 1",
            ],
        );
        assert_eq!(obs[0], "The drawer 1 is closed.");
        assert_eq!(obs[1], "You open the drawer 1. The drawer 1 is open. In it, you see a cellphone 1.");
        assert_eq!(obs[2], "You pick up the cellphone 1 from the drawer 1.");
        assert_eq!(obs[3], "On the sidetable 2, you see nothing.");
        assert_eq!(obs[4], "You put the cellphone 1 in/on the sidetable 2.");
        assert_eq!(obs[5], NOTHING_HAPPENS);
        assert_eq!(s.location_of("cellphone 1"), Some("sidetable 2"));
    }

    #[test]
    fn closed_receptacle_blocks_take_and_put() {
        let (s, obs) = run(&bedroom(), &["go to drawer 1", "take cellphone 1 from drawer 1"]);
        assert_eq!(obs[1], NOTHING_HAPPENS);
        assert!(s.inventory.is_none());
    }

    #[test]
    fn success_predicates() {
        let ctx = bedroom();
        let (s, _) = run(&ctx, &["go to diningtable 1", "take mug 2 from diningtable 1", "go to sidetable 1"]);
        assert!(!check_household_success(&s, &ctx));
        let (s2, _) = apply_household(&s, &parse_household_action("put mug 2 in/on sidetable 1").unwrap());
        assert!(check_household_success(&s2, &ctx));

        let mut amb = ctx.clone();
        amb.variant = Variant::Ambiguous;
        amb.target_instances = ["mug 1".to_string()].into();
        assert!(!check_household_success(&s2, &amb));

        let mut s3 = s2.clone();
        s3.task.kind = TaskKind::Pick2;
        assert!(!check_household_success(&s3, &ctx));
    }

    #[test]
    fn heat_without_opening() {
        let mut ctx = bedroom();
        ctx.room.push(ReceptacleSpec { name: "microwave 1".into(), openable: true });
        let (s, obs) = run(
            &ctx,
            &["go to diningtable 1", "take mug 1 from diningtable 1", "go to microwave 1", "heat mug 1 with microwave 1"],
        );
        assert_eq!(obs[2], "The microwave 1 is closed.");
        assert_eq!(obs[3], "You heat the mug 1 using the microwave 1.");
        assert!(s.status("mug 1").heated);
    }
}
