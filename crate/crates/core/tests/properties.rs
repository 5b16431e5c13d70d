//! Invariant suites over the step function, candidate selection, the masked
//! objective and metric aggregation.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use askloop_core::ftdata::masked_objective;
use askloop_core::harness::{run_many, select_by_token_scores};
use askloop_core::household::LayoutPool;
use askloop_core::mdp::dynamics;
use askloop_core::metrics::{compute_metrics, GroupKey};
use askloop_core::policies::PolicyKind;
use askloop_core::records::{read_records, write_records};
use askloop_core::scenario::ScenarioSpec;
use askloop_core::*;

/// Counts calls and answers with a fixed string.
struct CountingOracle {
    calls: usize,
}

impl Oracle for CountingOracle {
    fn answer(&mut self, _question: &str) -> String {
        self.calls += 1;
        "counted".into()
    }
}

fn spec_for(i: u8) -> ScenarioSpec {
    match i {
        0 => ScenarioSpec::household(Variant::Standard, LayoutPool::Id),
        1 => ScenarioSpec::household(Variant::Ambiguous, LayoutPool::Ood),
        2 => ScenarioSpec::household(Variant::Multiround, LayoutPool::Id),
        3 => ScenarioSpec::tabletop(1, 4, 0),
        4 => ScenarioSpec::tabletop(2, 0, 3),
        _ => ScenarioSpec::tabletop(3, 3, 3),
    }
}

/// A state reached from the initial one by `walk` random admissible actions.
fn reachable(spec: u8, seed: u64, walk: usize) -> (Context, WorldState) {
    let ctx = spec_for(spec).context(seed).unwrap();
    let env = dynamics(ctx.env_kind);
    let mut state = env.initial_state(&ctx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ walk as u64);
    for _ in 0..walk {
        if state.finished() {
            break;
        }
        let options = env.admissible_actions(&state, &ctx);
        let Some(a) = options.choose(&mut rng) else { break };
        state = env.apply(&state, a, &ctx).unwrap().state;
    }
    (ctx, state)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn asking_and_thinking_leave_state_alone(spec in 0u8..6, seed in 0u64..5000, walk in 0usize..12, q in ".{0,40}", note in "[a-z ]{0,30}") {
        let (ctx, state) = reachable(spec, seed, walk);
        prop_assume!(!state.finished());
        let env = dynamics(ctx.env_kind);
        let mut oracle = CountingOracle { calls: 0 };
        let out = step(&state, &AugmentedAction::Ask(q), &ctx, &mut oracle, env).unwrap();
        prop_assert_eq!(&out.state, &state);
        prop_assert_eq!(oracle.calls, 1);
        prop_assert_eq!(out.observation, Observation::Answer("counted".into()));
        let out = step(&state, &AugmentedAction::Think(note), &ctx, &mut oracle, env).unwrap();
        prop_assert_eq!(&out.state, &state);
        prop_assert_eq!(out.observation.text(), "OK.");
        prop_assert_eq!(oracle.calls, 1);
    }

    #[test]
    fn physical_actions_never_reach_the_oracle(spec in 0u8..6, seed in 0u64..5000, walk in 0usize..12, pick in any::<prop::sample::Index>()) {
        let (ctx, state) = reachable(spec, seed, walk);
        prop_assume!(!state.finished());
        let env = dynamics(ctx.env_kind);
        let options = env.admissible_actions(&state, &ctx);
        prop_assume!(!options.is_empty());
        let a = pick.get(&options).clone();
        let mut oracle = CountingOracle { calls: 0 };
        let direct = env.apply(&state, &a, &ctx).unwrap();
        let out = step(&state, &AugmentedAction::Physical(a), &ctx, &mut oracle, env).unwrap();
        prop_assert_eq!(oracle.calls, 0);
        prop_assert_eq!(out.state, direct.state);
        prop_assert_eq!(out.observation.text(), direct.observation.as_str());
    }

    #[test]
    fn selection_matches_brute_force(sets in prop::collection::vec(prop::collection::vec(1u32..=16, 1..6), 1..8)) {
        // Scores on a dyadic grid multiply exactly, so the reference can
        // compare products as integers over a common denominator.
        let exact: Vec<u64> = sets.iter().map(|s| s.iter().map(|k| *k as u64).product::<u64>() << (4 * (6 - s.len()))).collect();
        let best = *exact.iter().max().unwrap();
        let expected = exact.iter().position(|v| *v == best).unwrap();
        let cands: Vec<((), Vec<f64>)> = sets.iter().map(|s| ((), s.iter().map(|k| *k as f64 / 16.0).collect())).collect();
        prop_assert_eq!(select_by_token_scores(&cands).unwrap(), expected);
    }

    #[test]
    fn masked_records_do_not_matter(
        qa in prop::collection::vec(prop::collection::vec(-20.0f64..0.0, 0..5), 0..5),
        policy in prop::collection::vec((prop::collection::vec(-20.0f64..0.0, 1..5), any::<bool>()), 1..8),
        junk in prop::collection::vec(prop_oneof![Just(f64::NAN), Just(f64::INFINITY), -1e6f64..1e6], 1..5),
    ) {
        let base = masked_objective(&qa, &policy).unwrap();
        prop_assert_eq!(base.total.to_bits(), (base.qa + base.policy).to_bits());
        let mut perturbed = policy.clone();
        for (toks, masked) in perturbed.iter_mut() {
            if *masked {
                *toks = junk.clone();
            }
        }
        let again = masked_objective(&qa, &perturbed).unwrap();
        prop_assert_eq!(again.total.to_bits(), base.total.to_bits());
        prop_assert_eq!(again.policy.to_bits(), base.policy.to_bits());
        // Masking everything leaves only the QA term.
        let all_masked: Vec<_> = policy.iter().map(|(t, _)| (t.clone(), true)).collect();
        prop_assert_eq!(masked_objective(&qa, &all_masked).unwrap().policy, 0.0);
    }

    #[test]
    fn metrics_ignore_record_order(perm_seed in any::<u64>()) {
        let recs = sample_records();
        let mut shuffled = recs.to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let keys = [GroupKey::Policy, GroupKey::Variant];
        let a = compute_metrics(recs, &keys).unwrap();
        let b = compute_metrics(&shuffled, &keys).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

fn sample_records() -> &'static [EpisodeRecord] {
    static RECS: OnceLock<Vec<EpisodeRecord>> = OnceLock::new();
    RECS.get_or_init(|| {
        let mut out = Vec::new();
        for spec in [0u8, 1] {
            let ctxs: Vec<Context> = (0..12).map(|s| spec_for(spec).context(s).unwrap()).collect();
            for kind in [PolicyKind::ScriptedAba, PolicyKind::ScriptedBaseline] {
                out.extend(
                    run_many(&ctxs, |_| kind.build_local().unwrap(), |c| Box::new(RuleOracle::new(c)), EpisodeLimits::default())
                        .into_iter()
                        .map(Result::unwrap),
                );
            }
        }
        out
    })
}

#[test]
fn records_round_trip_through_jsonl() {
    let recs = sample_records();
    let mut buf = Vec::new();
    write_records(&mut buf, recs).unwrap();
    let back = read_records(&buf[..]).unwrap();
    assert_eq!(back, recs);
}
