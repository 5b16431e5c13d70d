//! The expert's household plans are compared against breadth-first search
//! over a pruned action set (moves that cannot contribute to the goal are
//! dropped, which never shortens the optimum).

use std::collections::{BTreeSet, HashSet, VecDeque};

use askloop_core::household::{admissible, apply_household, check_household_success, HouseholdAction, HouseholdState, LayoutPool};
use askloop_core::names::class_of;
use askloop_core::policies::ExpertPolicy;
use askloop_core::scenario::ScenarioSpec;
use askloop_core::{run_episode, Context, EpisodeLimits, RuleOracle, Variant};

fn relevant(s0: &HouseholdState, ctx: &Context) -> BTreeSet<String> {
    let t = &ctx.task;
    let mut out = BTreeSet::new();
    for (name, r) in &s0.receptacles {
        let c = class_of(name);
        if r.contents.iter().any(|o| class_of(o) == t.object_class)
            || Some(c) == t.destination.as_deref()
            || Some(c) == t.kind.appliance()
        {
            out.insert(name.clone());
        }
    }
    out
}

fn shortest_plan(ctx: &Context, cap: usize) -> Option<usize> {
    let s0 = HouseholdState::from_context(ctx).unwrap();
    let keep = relevant(&s0, ctx);
    let class = ctx.task.object_class.clone();
    let mut seen: HashSet<String> = HashSet::new();
    let mut queue = VecDeque::from([(s0, 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        if check_household_success(&s, ctx) {
            return Some(d);
        }
        if d >= cap || !seen.insert(serde_json::to_string(&s).unwrap()) {
            continue;
        }
        for a in admissible(&s) {
            let useful = match &a {
                HouseholdAction::GoTo(r) | HouseholdAction::Open(r) => keep.contains(r),
                HouseholdAction::Close(_) => false,
                HouseholdAction::Take { object, .. } => class_of(object) == class,
                _ => true,
            };
            if useful {
                let (n, _) = apply_household(&s, &a);
                queue.push_back((n, d + 1));
            }
        }
    }
    None
}

#[test]
fn expert_matches_breadth_first_optimum() {
    for variant in [Variant::Standard, Variant::Ambiguous] {
        let spec = ScenarioSpec::household(variant, LayoutPool::Id);
        for seed in 0..40 {
            let ctx = spec.context(seed).unwrap();
            let r = run_episode(&ctx, &mut ExpertPolicy, &mut RuleOracle::new(&ctx), EpisodeLimits::default()).unwrap();
            assert!(r.success());
            let best = shortest_plan(&ctx, r.physical_count()).expect("expert plan bounds the search");
            assert_eq!(r.physical_count(), best, "{variant:?} seed {seed}\n{}", r.transcript());
        }
    }
}
