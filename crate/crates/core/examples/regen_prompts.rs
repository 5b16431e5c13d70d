//! Regenerates the bundled prompt files from scripted episodes.
//!
//! Run from the crate root: `cargo run --example regen_prompts`.

use askloop_core::policies::remote::{PromptBundle, PromptExample};
use askloop_core::policies::PolicyKind;
use askloop_core::scenario::ScenarioSpec;
use askloop_core::household::LayoutPool;
use askloop_core::*;

fn run(spec: &ScenarioSpec, seed: u64) -> String {
    let ctx = spec.context(seed).unwrap();
    let mut p = PolicyKind::ScriptedAba.build_local().unwrap();
    let r = run_episode(&ctx, p.as_mut(), &mut RuleOracle::new(&ctx), EpisodeLimits::default()).unwrap();
    assert!(r.success());
    r.transcript()
}

fn main() {
    let hh = ScenarioSpec::household(Variant::Standard, LayoutPool::Id);
    let household = PromptBundle {
        version: "household-v1".into(),
        preamble: "You are an agent acting in a household. Each turn, reply with exactly one action. \
Physical actions: go to {recep}, open {recep}, close {recep}, take {obj} from {recep}, put {obj} in/on {recep}, \
clean {obj} with {recep}, heat {obj} with {recep}, cool {obj} with {recep}, use {lamp}. \
You may also reply \"think: ...\" to reason, or \"ask: ...\" to ask the person who knows the room a question. \
Ask when information you need is missing instead of searching everywhere.".into(),
        examples: vec![
            PromptExample { name: "clean-cloth".into(), transcript: run(&hh, 1) },
            PromptExample { name: "cool-pan".into(), transcript: run(&hh, 5) },
        ],
        corrective: "Your previous output could not be used ({error}). Reply with exactly one action.".into(),
    };
    let tabletop = PromptBundle {
        version: "tabletop-v1".into(),
        preamble: "You control a robot arm above a table. Positions are (x, y) in meters; a larger second coordinate is further right. \
Each turn, reply with exactly one action: move_to(x1, y1, x2, y2) picks the object at (x1, y1) and places it at (x2, y2). \
You may also reply \"think: ...\" to reason, or \"ask: ...\" to ask the person who set the task. \
Questions may be limited; ask only what you cannot work out yourself.".into(),
        examples: vec![
            PromptExample { name: "task1".into(), transcript: run(&ScenarioSpec::tabletop(1, 3, 0), 3) },
            PromptExample { name: "task2".into(), transcript: run(&ScenarioSpec::tabletop(2, 0, 3), 3) },
            PromptExample { name: "task3".into(), transcript: run(&ScenarioSpec::tabletop(3, 3, 2), 3) },
        ],
        corrective: "Your previous output could not be used ({error}). Reply with exactly one action.".into(),
    };
    std::fs::write("assets/prompts/household-v1.toml", toml::to_string(&household).unwrap()).unwrap();
    std::fs::write("assets/prompts/tabletop-v1.toml", toml::to_string(&tabletop).unwrap()).unwrap();
}
