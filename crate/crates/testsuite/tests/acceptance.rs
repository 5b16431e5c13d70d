//! Acceptance checks. Each check prints one PASS or FAIL line with the
//! measured quantities; the process exits non-zero if any check fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use askloop_core::fixtures::{replay_fixture, Fixture, BUILTIN};
use askloop_core::ftdata::{build_corpus, masked_objective};
use askloop_core::harness::{run_many, select_by_token_scores, Policy, PolicyDecision, PolicyError, PolicyView};
use askloop_core::household::LayoutPool;
use askloop_core::mdp::{dynamics, TaskParams};
use askloop_core::oracle::{answer_is_correct, classify_question, probe_accuracy, probe_questions, NoiseMode, NoisyOracle, OracleQuery};
use askloop_core::policies::PolicyKind;
use askloop_core::scenario::ScenarioSpec;
use askloop_core::seeding::{derive_seed, rng_for};
use askloop_core::tabletop::{generate_tabletop, resolve_relative, TableKind, BUDGET_REFUSAL};
use askloop_core::*;

type Verdict = (bool, String);
type Check = (&'static str, fn() -> Verdict);

fn household(variant: Variant) -> ScenarioSpec {
    ScenarioSpec::household(variant, LayoutPool::Id)
}

fn contexts(spec: &ScenarioSpec, seeds: std::ops::Range<u64>) -> Vec<Context> {
    seeds.map(|s| spec.context(s).expect("context")).collect()
}

fn run(ctxs: &[Context], kind: PolicyKind, limits: EpisodeLimits) -> Vec<EpisodeRecord> {
    run_many(ctxs, |_| kind.build_local().expect("local policy"), |c| Box::new(RuleOracle::new(c)), limits)
        .into_iter()
        .map(|r| r.expect("episode runs"))
        .collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn success_rate(recs: &[EpisodeRecord]) -> f64 {
    100.0 * recs.iter().filter(|r| r.success()).count() as f64 / recs.len() as f64
}

/// Answers through an inner oracle and counts the calls.
struct Counting<O> {
    inner: O,
    calls: usize,
}

impl<O: Oracle> Oracle for Counting<O> {
    fn answer(&mut self, question: &str) -> String {
        self.calls += 1;
        self.inner.answer(question)
    }
}

// ---------------------------------------------------------------------------
// 1. Transcript replay
// ---------------------------------------------------------------------------

fn replay() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for name in BUILTIN {
        let fx = Fixture::builtin(name).expect("bundled fixture");
        let r = replay_fixture(&fx).expect("fixture replays");
        ok &= r.ok() && r.record.success();
        for m in &r.mismatches {
            notes.push(format!("{name} obs {}: expected {:?} got {:?}", m.obs, m.expected, m.actual));
        }
        notes.push(format!("{name}: {} observations, {} actions", r.observations_checked, r.record.len()));
    }
    let hh = replay_fixture(&Fixture::builtin("household-mug").unwrap()).unwrap();
    ok &= hh.observations_checked == 10 && hh.record.len() == 9;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 1.0;
    (ok, format!("{}; {secs:.3}s", notes.join("; ")))
}

// ---------------------------------------------------------------------------
// 2. Step purity
// ---------------------------------------------------------------------------

fn purity() -> Verdict {
    let specs = [
        household(Variant::Standard),
        household(Variant::Ambiguous),
        household(Variant::Multiround),
        ScenarioSpec::tabletop(1, 4, 0),
        ScenarioSpec::tabletop(2, 0, 3),
        ScenarioSpec::tabletop(3, 3, 3),
    ];
    let ctxs: Vec<Context> = specs.iter().flat_map(|s| contexts(s, 0..10)).collect();
    let mut rng = rng_for(11, "acceptance-purity", 0);
    let words = ["mug", "apple", "red block", "bowl", "the # 2 base", "cellphone", "knife"];
    let (mut pairs, mut violations) = (0usize, 0usize);
    while pairs < 10_000 {
        let ctx = &ctxs[rng.gen_range(0..ctxs.len())];
        let env = dynamics(ctx.env_kind);
        let mut state = env.initial_state(ctx).unwrap();
        for _ in 0..rng.gen_range(0..12) {
            let options = env.admissible_actions(&state, ctx);
            if state.finished() || options.is_empty() {
                break;
            }
            state = env.apply(&state, options.choose(&mut rng).unwrap(), ctx).unwrap().state;
        }
        if state.finished() {
            continue;
        }
        pairs += 1;
        let w = words[rng.gen_range(0..words.len())];
        let question = match rng.gen_range(0..4) {
            0 => format!("Where is the {w}?"),
            1 => "Which red block should I move?".to_string(),
            2 => format!("Which color should be put on the # {} base?", rng.gen_range(1..5)),
            _ => (0..rng.gen_range(0..30)).map(|_| rng.gen_range(' '..='~')).collect(),
        };
        let mut oracle = Counting { inner: RuleOracle::new(ctx), calls: 0 };
        let asked = step(&state, &AugmentedAction::Ask(question), ctx, &mut oracle, env).unwrap();
        violations += usize::from(asked.state != state || oracle.calls != 1 || !matches!(asked.observation, Observation::Answer(_)));
        let thought = step(&state, &AugmentedAction::Think(w.to_string()), ctx, &mut oracle, env).unwrap();
        violations += usize::from(thought.state != state || thought.observation.text() != "OK." || oracle.calls != 1);
        if let Some(a) = env.admissible_actions(&state, ctx).choose(&mut rng) {
            let direct = env.apply(&state, a, ctx).unwrap();
            let via = step(&state, &AugmentedAction::Physical(a.clone()), ctx, &mut oracle, env).unwrap();
            violations += usize::from(oracle.calls != 1 || via.state != direct.state || via.observation.text() != direct.observation);
        }
    }
    (violations == 0, format!("{pairs} pairs, {violations} violations"))
}

// ---------------------------------------------------------------------------
// 3. Candidate selection
// ---------------------------------------------------------------------------

/// First index of the maximum by explicit pairwise comparison.
fn brute_force<T: PartialOrd>(values: &[T]) -> usize {
    (0..values.len())
        .find(|&i| values.iter().enumerate().all(|(j, v)| if j < i { *v < values[i] } else { *v <= values[i] }))
        .expect("a maximum exists")
}

fn product_argmax(cands: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in cands.iter().enumerate() {
        let p: f64 = c.iter().product();
        if p > best.1 {
            best = (i, p);
        }
    }
    best.0
}

fn selection() -> Verdict {
    let mut rng = rng_for(12, "acceptance-selection", 0);
    let mut violations = 0;
    for set in 0..10_000 {
        let n = rng.gen_range(1..8);
        let lens: Vec<usize> = (0..n).map(|_| rng.gen_range(1..7)).collect();
        let (cands, reference): (Vec<Vec<f64>>, usize) = if set % 2 == 0 {
            // Dyadic scores: products are exact integers over 16^6.
            let ks: Vec<Vec<u64>> = lens.iter().map(|l| (0..*l).map(|_| rng.gen_range(1..=16)).collect()).collect();
            let exact: Vec<u64> = ks.iter().map(|k| k.iter().product::<u64>() << (4 * (6 - k.len()))).collect();
            (ks.iter().map(|k| k.iter().map(|v| *v as f64 / 16.0).collect()).collect(), brute_force(&exact))
        } else {
            let c: Vec<Vec<f64>> = lens.iter().map(|l| (0..*l).map(|_| rng.gen_range(1e-6..=1.0)).collect()).collect();
            let prods: Vec<f64> = c.iter().map(|v| v.iter().product()).collect();
            let r = brute_force(&prods);
            (c, r)
        };
        let tagged: Vec<(usize, Vec<f64>)> = cands.iter().cloned().enumerate().collect();
        let chosen = select_by_token_scores(&tagged).unwrap();
        violations += usize::from(chosen != reference || product_argmax(&cands) != reference);
    }
    let ties: [(Vec<Vec<f64>>, usize); 4] = [
        (vec![vec![0.5, 0.25], vec![0.125], vec![0.25, 0.5]], 0),
        (vec![vec![0.1], vec![0.5, 0.5], vec![0.25]], 1),
        (vec![vec![0.3, 0.3], vec![0.3, 0.3]], 0),
        (vec![vec![0.2], vec![0.9, 0.5, 0.5], vec![0.225]], 1),
    ];
    let mut tie_fail = 0;
    for (c, want) in &ties {
        let tagged: Vec<((), Vec<f64>)> = c.iter().map(|v| ((), v.clone())).collect();
        tie_fail += usize::from(select_by_token_scores(&tagged).unwrap() != *want);
    }
    (violations == 0 && tie_fail == 0, format!("10000 sets, {violations} violations; {} constructed ties, {tie_fail} wrong", ties.len()))
}

// ---------------------------------------------------------------------------
// 4. Masked objective
// ---------------------------------------------------------------------------

fn masking() -> Verdict {
    let corpus = build_corpus(&household(Variant::Standard), 40, 0.2, 4, 2, EpisodeLimits::default()).unwrap();
    let flagged: usize = corpus.records.iter().map(|r| r.steps.iter().filter(|s| s.noise).count()).sum();
    let masked = corpus.policy.iter().filter(|r| r.mask == 1).count();
    let mut rng = rng_for(13, "acceptance-masking", 0);
    let tokens = |text: &str, rng: &mut dyn rand::RngCore| -> Vec<f64> { text.split(' ').map(|_| -rng.gen_range(0.01..5.0)).collect() };
    let qa: Vec<Vec<f64>> = corpus.qa.iter().map(|r| tokens(&r.y, &mut rng)).collect();
    let policy: Vec<(Vec<f64>, bool)> = corpus.policy.iter().map(|r| (tokens(&r.y, &mut rng), r.mask == 1)).collect();
    let base = masked_objective(&qa, &policy).unwrap();
    let mut changed = 0;
    for _ in 0..1000 {
        let mut p = policy.clone();
        for (toks, m) in p.iter_mut() {
            if *m && rng.gen_bool(0.5) {
                *toks = (0..rng.gen_range(0..6))
                    .map(|_| match rng.gen_range(0..4) {
                        0 => f64::NAN,
                        1 => f64::NEG_INFINITY,
                        _ => rng.gen_range(-1e9..1e9),
                    })
                    .collect();
            }
        }
        let o = masked_objective(&qa, &p).unwrap();
        changed += usize::from(o.total.to_bits() != base.total.to_bits() || o.policy.to_bits() != base.policy.to_bits());
    }
    // One QA record and two policy records, the second of them masked.
    let (a, b, c) = (0.9f64.ln(), 0.8f64.ln(), 0.5f64.ln());
    let hand = masked_objective(&[vec![a, b]], &[(vec![c], false), (vec![0.01f64.ln()], true)]).unwrap();
    let hand_ok = (hand.total - 1.0216512475319814).abs() < 1e-12
        && (hand.qa - 0.328504066972036).abs() < 1e-12
        && (hand.policy - std::f64::consts::LN_2).abs() < 1e-12;
    (
        changed == 0 && hand_ok && masked == flagged && masked > 0,
        format!("{masked} masked of {} policy records ({flagged} flagged steps); 1000 perturbations, {changed} changed the objective; hand case {}", corpus.policy.len(), if hand_ok { "matches" } else { "differs" }),
    )
}

// ---------------------------------------------------------------------------
// 5. Noise injection
// ---------------------------------------------------------------------------

fn noise() -> Verdict {
    let corpus = build_corpus(&household(Variant::Standard), 1200, 0.2, 5, 0, EpisodeLimits::default()).unwrap();
    let steps: usize = corpus.records.iter().map(|r| r.steps.len()).sum();
    let flagged: usize = corpus.records.iter().map(|r| r.steps.iter().filter(|s| s.noise).count()).sum();
    let frac = flagged as f64 / steps as f64;
    let wins = corpus.records.iter().filter(|r| r.success()).count();
    (
        steps >= 10_000 && (0.18..=0.22).contains(&frac) && wins == corpus.records.len(),
        format!("{steps} steps, flagged fraction {frac:.4}; {wins}/{} corrupted episodes succeed", corpus.records.len()),
    )
}

// ---------------------------------------------------------------------------
// 6. Oracle accuracy
// ---------------------------------------------------------------------------

fn oracle_accuracy() -> Verdict {
    let spec = household(Variant::Standard);
    let scenarios: Vec<Context> = (0..8).map(|i| spec.context(derive_seed(6, "acceptance-probe", i)).unwrap()).collect();
    let rule = probe_accuracy(&scenarios, 5, 6, |c| Box::new(RuleOracle::new(c)));
    let rule_ok = rule.per_scenario.len() == 8 && rule.per_scenario.iter().all(|a| *a == 100.0);

    let (mut probes, mut errors, mut i) = (0usize, 0usize, 0u64);
    while probes < 10_000 {
        let ctx = spec.context(derive_seed(7, "acceptance-noisy", i)).unwrap();
        let mut oracle = NoisyOracle::new(RuleOracle::new(&ctx), 0.275, NoiseMode::Unhelpful, derive_seed(7, "noisy-oracle", i), ctx.task.object_class.clone());
        for (q, class) in probe_questions(&ctx, 10, i) {
            errors += usize::from(!answer_is_correct(&oracle.answer(&q), &ctx, &class));
            probes += 1;
        }
        i += 1;
    }
    let err = errors as f64 / probes as f64;
    (
        rule_ok && (0.245..=0.305).contains(&err),
        format!("rule oracle {:.1}% over 8x5 probes; noisy oracle q=0.275 error {err:.4} over {probes} probes", rule.mean),
    )
}

// ---------------------------------------------------------------------------
// 7. Efficiency
// ---------------------------------------------------------------------------

fn efficiency() -> Verdict {
    let start = Instant::now();
    let ctxs = contexts(&household(Variant::Standard), 0..200);
    let roomy = ctxs.iter().filter(|c| c.room.len() >= 10).count();
    let aba = run(&ctxs, PolicyKind::ScriptedAba, EpisodeLimits::default());
    let base = run(&ctxs, PolicyKind::ScriptedBaseline, EpisodeLimits::default());
    let secs = start.elapsed().as_secs_f64();
    let aba_mean = mean(aba.iter().map(|r| r.physical_count() as f64));
    let base_mean = mean(base.iter().map(|r| r.physical_count() as f64));
    let mut by_kind: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &aba {
        by_kind.entry(format!("{:?}", r.context.task.kind)).or_default().push(r.physical_count() as f64);
    }
    let kinds: Vec<String> = by_kind.into_iter().map(|(k, v)| format!("{k} {:.2}", mean(v))).collect();
    (
        roomy == ctxs.len() && success_rate(&aba) == 100.0 && aba_mean <= 6.0 && base_mean >= 2.0 * aba_mean && secs < 10.0,
        format!(
            "{roomy}/200 rooms with >=10 receptacles; aba success {:.1}%, mean physical {aba_mean:.3} ({}); baseline mean {base_mean:.2} ({:.2}x); {secs:.2}s",
            success_rate(&aba),
            kinds.join(", "),
            base_mean / aba_mean
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Question counts
// ---------------------------------------------------------------------------

fn questions_per_success(recs: &[EpisodeRecord]) -> f64 {
    let wins: Vec<&EpisodeRecord> = recs.iter().filter(|r| r.success()).collect();
    wins.iter().map(|r| r.ask_count()).sum::<usize>() as f64 / wins.len() as f64
}

fn question_counts() -> Verdict {
    let std = run(&contexts(&household(Variant::Standard), 0..200), PolicyKind::ScriptedAba, EpisodeLimits::default());
    let amb = run(&contexts(&household(Variant::Ambiguous), 0..200), PolicyKind::ScriptedAba, EpisodeLimits::default());
    let limits = EpisodeLimits { horizon: 200, max_tasks: Some(5), ..EpisodeLimits::default() };
    let multi = run(&contexts(&household(Variant::Multiround), 0..200), PolicyKind::ScriptedAba, limits);
    let q_std = questions_per_success(&std);
    let q_amb = questions_per_success(&amb);
    let q_multi = mean(multi.iter().map(|r| r.ask_count() as f64));
    let tasks = mean(multi.iter().map(|r| r.tasks_completed as f64));
    let five = multi.iter().filter(|r| r.tasks_completed == 5).count();
    let no_reuse = multi.iter().filter(|r| r.ask_count() >= r.tasks_completed as usize).count();
    (
        q_std == 1.0 && q_amb <= 2.0 && q_multi < tasks && five == multi.len(),
        format!(
            "standard {q_std:.3}/success, ambiguous {q_amb:.3}/success; multiround {q_multi:.2} questions vs {tasks:.2} tasks ({five}/200 reached 5 tasks; {no_reuse} episodes asked once per task)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Tabletop Task 1
// ---------------------------------------------------------------------------

fn wilson(k: usize, n: usize) -> (f64, f64) {
    let (k, n, z) = (k as f64, n as f64, 1.959964);
    let p = k / n;
    let d = 1.0 + z * z / n;
    let c = (p + z * z / (2.0 * n)) / d;
    let h = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / d;
    (c - h, c + h)
}

fn tabletop_task1() -> Verdict {
    const ORD: [&str; 8] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth"];
    let mut rng = rng_for(9, "acceptance-relative", 0);
    let mut mismatches = 0;
    for i in 0..1000u64 {
        let x = rng.gen_range(1..=8u32);
        let (_, state) = generate_tabletop(1, TaskParams { x, y: 0 }, derive_seed(9, "relative", i)).unwrap();
        let mut reds: Vec<_> = state.objects.iter().filter(|o| o.kind == TableKind::Block && o.color == "red").collect();
        reds.sort_by(|a, b| a.pose[1].partial_cmp(&b.pose[1]).unwrap());
        let rank = rng.gen_range(0..x as usize);
        let phrase = if rng.gen_bool(0.5) { format!("the {} red block from the left", ORD[rank]) } else { format!("The {}th red block from the left.", rank + 1) };
        mismatches += usize::from(resolve_relative(&state, "red", &phrase).ok().as_deref() != Some(reds[rank].name.as_str()));
    }
    let mut ok = mismatches == 0;
    let mut notes = vec![format!("resolver vs sort: {mismatches}/1000 mismatches")];
    for x in [3u32, 4, 5] {
        let ctxs = contexts(&ScenarioSpec::tabletop(1, x, 0), 0..100);
        let aba = run(&ctxs, PolicyKind::ScriptedAba, EpisodeLimits::default());
        let base = run(&ctxs, PolicyKind::ScriptedBaseline, EpisodeLimits::default());
        let k = base.iter().filter(|r| r.success()).count();
        let (lo, hi) = wilson(k, base.len());
        let target = 1.0 / x as f64;
        ok &= success_rate(&aba) == 100.0 && lo <= target && target <= hi;
        notes.push(format!("x={x}: aba {:.0}%, baseline {k}/100 (CI {lo:.3}..{hi:.3} vs {target:.3})", success_rate(&aba)));
    }
    (ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 10. Tabletop question budget
// ---------------------------------------------------------------------------

/// Asks for base colors far past any budget, then stops.
struct PersistentAsker {
    asked: usize,
    limit: usize,
}

impl Policy for PersistentAsker {
    fn name(&self) -> &str {
        "persistent-asker"
    }

    fn act(&mut self, _view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        self.asked += 1;
        if self.asked > self.limit {
            return Ok(PolicyDecision::Finish);
        }
        Ok(PolicyDecision::act(format!("ask: Which color should be put on the # {} base?", 1 + self.asked % 3)))
    }
}

fn budget_questions(r: &EpisodeRecord) -> usize {
    r.steps
        .iter()
        .filter(|s| match &s.action {
            AugmentedAction::Ask(q) => !matches!(classify_question(q), OracleQuery::RelativeTarget(_)),
            _ => false,
        })
        .count()
}

fn tabletop_budget() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for task in [2u8, 3] {
        for y in [2u32, 3, 4] {
            let x = if task == 3 { 3 } else { 0 };
            let ctxs = contexts(&ScenarioSpec::tabletop(task, x, y), 0..100);
            // Enforcement: a policy that keeps asking only gets y-1 answers.
            let mut enforced = true;
            for ctx in ctxs.iter().take(10) {
                let mut oracle = Counting { inner: RuleOracle::new(ctx), calls: 0 };
                let mut p = PersistentAsker { asked: 0, limit: 3 * y as usize };
                let r = run_episode(ctx, &mut p, &mut oracle, EpisodeLimits::default()).unwrap();
                let refused = r.steps.iter().filter(|s| s.observation.text() == BUDGET_REFUSAL).count();
                enforced &= oracle.calls == (y - 1) as usize && refused == r.ask_count() - oracle.calls;
            }
            let aba = run(&ctxs, PolicyKind::ScriptedAba, EpisodeLimits::default());
            let exact = aba.iter().all(|r| budget_questions(r) == (y - 1) as usize);
            ok &= enforced && exact && success_rate(&aba) == 100.0;
            notes.push(format!("task {task} y={y}: enforced {enforced}, aba asks y-1 {exact}, success {:.0}%", success_rate(&aba)));
        }
    }
    (ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 11. CLI determinism
// ---------------------------------------------------------------------------

fn cli(args: &[&str]) -> i32 {
    askloop_service::cli::main_with(std::iter::once("askloop").chain(args.iter().copied()))
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Verdict {
    let invocations: [&[&str]; 6] = [
        &["gen", "--env", "tabletop", "--task", "3", "--seed", "7", "--out", "{}/out.json"],
        &["run", "--variant", "ambiguous", "--seeds", "0..19", "--out", "{}/out.jsonl"],
        &["run", "--env", "tabletop", "--task", "3", "--x", "4", "--y", "3", "--oracle", "noisy", "--seeds", "0..19", "--out", "{}/out.jsonl"],
        &["run", "--variant", "multiround", "--max-tasks", "3", "--T", "120", "--policy", "scripted-baseline", "--seeds", "5..15", "--out", "{}/out.jsonl"],
        &["ftdata", "--n", "20", "--p", "0.2", "--seed", "3", "--out", "{}"],
        &["ftdata", "--env", "tabletop", "--task", "2", "--y", "4", "--n", "10", "--p", "0.3", "--out", "{}"],
    ];
    let mut same = 0;
    for inv in &invocations {
        let outs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let d = dir.path().to_str().unwrap().to_string();
                let args: Vec<String> = inv.iter().map(|a| a.replace("{}", &d)).collect();
                let refs: Vec<&str> = args.iter().map(String::as_str).collect();
                (cli(&refs), dir_bytes(dir.path()))
            })
            .collect();
        same += usize::from(outs[0].0 == 0 && outs[0] == outs[1] && !outs[0].1.is_empty());
    }
    (same == invocations.len(), format!("{same}/{} invocations byte-identical across two runs", invocations.len()))
}

fn main() {
    let checks: [Check; 11] = [
        ("transcript replay", replay),
        ("step purity", purity),
        ("score selection", selection),
        ("masked objective", masking),
        ("noise injection", noise),
        ("oracle accuracy", oracle_accuracy),
        ("household efficiency", efficiency),
        ("question counts", question_counts),
        ("tabletop task 1", tabletop_task1),
        ("tabletop budget", tabletop_budget),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let (pass, detail) = check();
        failed += usize::from(!pass);
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
