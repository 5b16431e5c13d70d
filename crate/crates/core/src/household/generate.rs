//! Seeded context generation, instruction templates, and follow-up task
//! sampling for multiround rooms.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::layout::{HouseholdLayout, LayoutCatalog, LayoutPool};
use super::{task_satisfied, HouseholdState};
use crate::mdp::{
    Context, EnvKind, Location, ObjectClass, Placement, ReceptacleSpec, TaskKind, TaskParams, TaskSpec, Variant,
};
use crate::names::{class_of, instance};
use crate::seeding::rng_for;

/// Probability that an ambiguous single-object task designates several targets.
pub const MULTI_TARGET_PROB: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("layout pool {0:?} is empty")]
    EmptyPool(LayoutPool),
    #[error("no valid task or placement in layout `{0}`")]
    UnsatisfiableTask(String),
}

// ---------------------------------------------------------------------------
// Instruction templates
// ---------------------------------------------------------------------------

fn templates(kind: TaskKind) -> &'static [&'static str] {
    match kind {
        TaskKind::Pick => &["put a {o} in {d}.", "put some {o} on {d}."],
        TaskKind::Pick2 => &["put two {o} in {d}.", "find two {o} and put them in {d}."],
        TaskKind::Clean => &["put a clean {o} in {d}.", "clean some {o} and put it in {d}."],
        TaskKind::Heat => &["put a hot {o} in {d}.", "heat some {o} and put it in {d}."],
        TaskKind::Cool => &["put a cool {o} in {d}.", "cool some {o} and put it in {d}."],
        TaskKind::Examine => &["look at {o} under the desklamp.", "examine the {o} with the desklamp."],
        _ => &[],
    }
}

/// Renders an instruction; `which` selects among the kind's phrasings.
pub fn render_instruction(kind: TaskKind, class: &str, dest: Option<&str>, which: usize) -> String {
    let t = templates(kind);
    t[which % t.len()].replace("{o}", class).replace("{d}", dest.unwrap_or(""))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedInstruction {
    pub kind: TaskKind,
    pub object_class: String,
    pub destination: Option<String>,
}

fn match_template(template: &str, text: &str) -> Option<(String, Option<String>)> {
    // Split the template into literal pieces and placeholders.
    let mut pieces: Vec<&str> = Vec::new();
    let mut holes: Vec<&str> = Vec::new();
    let mut rest = template;
    while let Some(i) = rest.find('{') {
        pieces.push(&rest[..i]);
        holes.push(&rest[i..i + 3]);
        rest = &rest[i + 3..];
    }
    pieces.push(rest);
    let mut cursor = text.strip_prefix(pieces[0])?;
    let mut object = None;
    let mut dest = None;
    for (hole, lit) in holes.iter().zip(&pieces[1..]) {
        let end = if lit.is_empty() { cursor.len() } else { cursor.find(lit)? };
        let word = &cursor[..end];
        if word.is_empty() || word.contains(' ') {
            return None;
        }
        match *hole {
            "{o}" => object = Some(word.to_string()),
            _ => dest = Some(word.to_string()),
        }
        cursor = &cursor[end + lit.len()..];
    }
    if !cursor.is_empty() {
        return None;
    }
    Some((object?, dest))
}

/// Recovers kind, object class and destination from an instruction.
pub fn parse_instruction(text: &str) -> Option<ParsedInstruction> {
    let text = text.trim();
    for kind in TaskKind::HOUSEHOLD {
        for t in templates(kind) {
            if let Some((object_class, destination)) = match_template(t, text) {
                return Some(ParsedInstruction { kind, object_class, destination });
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Context generation
// ---------------------------------------------------------------------------

fn need_count(kind: TaskKind) -> u32 {
    if kind == TaskKind::Pick2 {
        2
    } else {
        1
    }
}

/// Samples a household context from a layout pool.
pub fn generate_context(
    seed: u64,
    catalog: &LayoutCatalog,
    pool: LayoutPool,
    variant: Variant,
) -> Result<Context, GenerateError> {
    let layouts = catalog.pool(pool);
    if layouts.is_empty() {
        return Err(GenerateError::EmptyPool(pool));
    }
    let mut rng = rng_for(seed, "household-context", 0);
    let layout: &HouseholdLayout = layouts[rng.gen_range(0..layouts.len())];
    let fail = || GenerateError::UnsatisfiableTask(layout.id.clone());

    let mut room: Vec<ReceptacleSpec> = layout
        .receptacles
        .iter()
        .flat_map(|g| (1..=g.count).map(move |n| ReceptacleSpec { name: instance(&g.class, n), openable: g.openable }))
        .collect();
    room.sort_by(|a, b| super::listing_cmp(&a.name, &b.name));

    // Task: kind first, then subject class, then destination.
    let eligible = |g: &super::ObjectGroup, k: TaskKind| {
        g.kinds.contains(&k) && (variant != Variant::Ambiguous || g.max >= 2) && g.max >= need_count(k)
    };
    let kinds: Vec<TaskKind> = TaskKind::HOUSEHOLD
        .into_iter()
        .filter(|k| {
            // Multi-instance ambiguity is meaningless for examine.
            !(variant == Variant::Ambiguous && *k == TaskKind::Examine)
                && layout.objects.iter().any(|g| eligible(g, *k))
        })
        .collect();
    let kind = *kinds.choose(&mut rng).ok_or_else(fail)?;
    let groups: Vec<_> = layout.objects.iter().filter(|g| eligible(g, kind)).collect();
    let subject = *groups.choose(&mut rng).ok_or_else(fail)?;
    let destination = if kind == TaskKind::Examine {
        None
    } else {
        Some(subject.destinations.choose(&mut rng).ok_or_else(fail)?.clone())
    };

    // Instance counts and placement.
    let mut placement = Vec::new();
    for g in &layout.objects {
        let mut count = rng.gen_range(g.min..=g.max);
        if g.class == subject.class {
            let floor = if variant == Variant::Ambiguous { 2 } else { need_count(kind) };
            count = count.max(floor);
        }
        let allowed: Vec<&ReceptacleSpec> = room
            .iter()
            .filter(|r| {
                let c = class_of(&r.name);
                g.locations.iter().any(|l| l == c)
                    && !(g.class == subject.class && destination.as_deref() == Some(c))
            })
            .collect();
        if allowed.is_empty() {
            return Err(fail());
        }
        for n in 1..=count {
            let r = allowed[rng.gen_range(0..allowed.len())];
            placement.push(Placement { instance: instance(&g.class, n), location: Location::Receptacle(r.name.clone()) });
        }
    }

    // Designated targets for the ambiguous variant.
    let mut target_instances = BTreeSet::new();
    let multi_draw: f64 = rng.gen();
    if variant == Variant::Ambiguous {
        let mut pool: Vec<String> =
            placement.iter().filter(|p| class_of(&p.instance) == subject.class).map(|p| p.instance.clone()).collect();
        pool.shuffle(&mut rng);
        let size = if kind == TaskKind::Pick2 {
            2
        } else if multi_draw < MULTI_TARGET_PROB && pool.len() >= 2 {
            rng.gen_range(2..=pool.len())
        } else {
            1
        };
        target_instances.extend(pool.into_iter().take(size));
    }

    placement.shuffle(&mut rng);
    let which = rng.gen_range(0..2);
    let instruction = render_instruction(kind, &subject.class, destination.as_deref(), which);
    let catalog = layout
        .objects
        .iter()
        .map(|g| ObjectClass { class: g.class.clone(), kinds: g.kinds.clone(), destinations: g.destinations.clone() })
        .collect();
    let ctx = Context {
        env_kind: EnvKind::Household,
        variant,
        seed,
        task: TaskSpec {
            kind,
            object_class: subject.class.clone(),
            destination,
            params: TaskParams::default(),
            instruction,
        },
        placement,
        target_instances,
        color_map: Default::default(),
        room,
        catalog,
        pose_jitter: 0.0,
        layout_id: layout.id.clone(),
    };
    debug_assert!(ctx.validate().is_ok());
    Ok(ctx)
}

// ---------------------------------------------------------------------------
// Multiround follow-up tasks
// ---------------------------------------------------------------------------

/// Samples the next task for a multiround room after a completion.
///
/// Only tasks that are not already satisfied and that have enough instances
/// outside the destination are eligible. Returns `None` if the room admits
/// no further task.
pub fn next_multiround_task(state: &HouseholdState, ctx: &Context) -> Option<TaskSpec> {
    let mut rng = rng_for(ctx.seed, "multiround-task", u64::from(state.tasks_completed));
    let present: BTreeSet<String> = state.all_instances().iter().map(|i| class_of(i).to_string()).collect();
    let has_rec = |class: &str| state.receptacles.keys().any(|r| class_of(r) == class);
    let mut options: Vec<(TaskKind, &str, Option<&str>)> = Vec::new();
    for entry in ctx.catalog.iter().filter(|e| present.contains(&e.class)) {
        for &kind in &entry.kinds {
            if kind.appliance().is_some_and(|a| !has_rec(a)) {
                continue;
            }
            let dests: Vec<Option<&str>> = if kind == TaskKind::Examine {
                vec![None]
            } else {
                entry.destinations.iter().filter(|d| has_rec(d)).map(|d| Some(d.as_str())).collect()
            };
            for dest in dests {
                let remaining = state
                    .all_instances()
                    .iter()
                    .filter(|i| class_of(i) == entry.class)
                    .filter(|i| dest.is_none() || state.location_of(i).map(class_of) != dest)
                    .count() as u32;
                if remaining < need_count(kind) {
                    continue;
                }
                let task = TaskSpec {
                    kind,
                    object_class: entry.class.clone(),
                    destination: dest.map(str::to_string),
                    params: TaskParams::default(),
                    instruction: String::new(),
                };
                if !task_satisfied(state, &task, None) {
                    options.push((kind, entry.class.as_str(), dest));
                }
            }
        }
    }
    let kinds: BTreeSet<TaskKind> = options.iter().map(|o| o.0).collect();
    let kinds: Vec<TaskKind> = kinds.into_iter().collect();
    let kind = *kinds.choose(&mut rng)?;
    let classes: BTreeSet<&str> = options.iter().filter(|o| o.0 == kind).map(|o| o.1).collect();
    let classes: Vec<&str> = classes.into_iter().collect();
    let class = *classes.choose(&mut rng)?;
    let dests: Vec<Option<&str>> = options.iter().filter(|o| o.0 == kind && o.1 == class).map(|o| o.2).collect();
    let dest = *dests.choose(&mut rng)?;
    let which = rng.gen_range(0..2);
    Some(TaskSpec {
        kind,
        object_class: class.to_string(),
        destination: dest.map(str::to_string),
        params: TaskParams::default(),
        instruction: render_instruction(kind, class, dest, which),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instruction_round_trip() {
        for kind in TaskKind::HOUSEHOLD {
            for which in 0..2 {
                let dest = (kind != TaskKind::Examine).then_some("sidetable");
                let text = render_instruction(kind, "mug", dest, which);
                let p = parse_instruction(&text).unwrap();
                assert_eq!(p.kind, kind, "{text}");
                assert_eq!(p.object_class, "mug");
                assert_eq!(p.destination.as_deref(), dest);
            }
        }
        assert_eq!(parse_instruction("put a hot egg in diningtable.").unwrap().kind, TaskKind::Heat);
        assert_eq!(parse_instruction("put some spraybottle on toilet.").unwrap().kind, TaskKind::Pick);
        assert_eq!(parse_instruction("clean some spatula and put it in drawer.").unwrap().kind, TaskKind::Clean);
        assert!(parse_instruction("dance.").is_none());
    }

    #[test]
    fn generation_is_deterministic_and_valid() {
        let cat = LayoutCatalog::builtin();
        for seed in 0..200 {
            for variant in [Variant::Standard, Variant::Ambiguous, Variant::Multiround] {
                let a = generate_context(seed, cat, LayoutPool::Id, variant).unwrap();
                let b = generate_context(seed, cat, LayoutPool::Id, variant).unwrap();
                assert_eq!(a, b);
                a.validate().unwrap();
                if variant == Variant::Ambiguous {
                    assert!(!a.target_instances.is_empty());
                } else {
                    assert!(a.target_instances.is_empty());
                }
                let s = HouseholdState::from_context(&a).unwrap();
                assert!(!super::super::check_household_success(&s, &a));
            }
        }
    }

    #[test]
    fn ambiguous_variant_produces_multi_target_tasks() {
        let cat = LayoutCatalog::builtin();
        let multi = (0..400)
            .filter(|&s| {
                let c = generate_context(s, cat, LayoutPool::Id, Variant::Ambiguous).unwrap();
                c.task.kind != TaskKind::Pick2 && c.target_instances.len() >= 2
            })
            .count();
        assert!(multi > 20, "{multi}");
    }
}
