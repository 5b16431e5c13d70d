//! The information source agents put their questions to.
//!
//! [`RuleOracle`] answers from a knowledge document derived from the hidden
//! context: one "A is in B." fact per object instance, in the context's
//! seeded placement order. Questions are matched against a handful of
//! templates; anything else gets a polite non-answer. [`NoisyOracle`] wraps
//! any oracle and replaces a fraction of replies with an unhelpful one, which
//! is how a fallible answerer is emulated. [`probe_accuracy`] scores an
//! oracle on where-is questions against ground truth.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::{Context, EnvKind, Location};
use crate::names::{class_of, split_instance};
use crate::seeding::rng_for;
use crate::tabletop::{self, TabletopState};

pub const NOT_SURE: &str = "I am not sure.";

/// Anything that can answer a question in text.
pub trait Oracle: Send {
    fn answer(&mut self, question: &str) -> String;

    /// A plausible but wrong reply, if this oracle can produce one.
    fn wrong_answer(&self, _question: &str) -> Option<String> {
        None
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn answer(&mut self, question: &str) -> String {
        (**self).answer(question)
    }

    fn wrong_answer(&self, question: &str) -> Option<String> {
        (**self).wrong_answer(question)
    }
}

// ---------------------------------------------------------------------------
// Knowledge document
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub instance: String,
    pub location: String,
}

impl Fact {
    pub fn sentence(&self) -> String {
        format!("{} is in {}.", self.instance, self.location)
    }
}

/// Ground-truth paragraph the oracle answers from. It reflects the initial
/// context and is never updated as the episode moves objects around.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeDoc {
    pub facts: Vec<Fact>,
}

impl KnowledgeDoc {
    pub fn sentences(&self) -> Vec<String> {
        self.facts.iter().map(Fact::sentence).collect()
    }

    pub fn paragraph(&self) -> String {
        self.sentences().join(" ")
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Facts about instances of `class`, in document order.
    pub fn of_class<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.facts.iter().filter(move |f| class_of(&f.instance) == class)
    }
}

pub fn build_knowledge(ctx: &Context) -> KnowledgeDoc {
    let facts = ctx
        .placement
        .iter()
        .map(|p| Fact {
            instance: p.instance.clone(),
            location: match &p.location {
                Location::Receptacle(r) => r.clone(),
                Location::Pose(_) => p.location.render(),
            },
        })
        .collect();
    KnowledgeDoc { facts }
}

// ---------------------------------------------------------------------------
// Question classification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum OracleQuery {
    WhereIs(String),
    WhichPreferred(String),
    ColorForBase(u32),
    RelativeTarget(String),
    Freeform(String),
}

impl OracleQuery {
    /// Object class the question is about, when it names one.
    pub fn class(&self) -> Option<String> {
        match self {
            OracleQuery::WhereIs(c) | OracleQuery::WhichPreferred(c) => Some(c.clone()),
            OracleQuery::ColorForBase(_) => Some("block".into()),
            OracleQuery::RelativeTarget(color) => Some(format!("{color} block")),
            OracleQuery::Freeform(_) => None,
        }
    }
}

const WHERE_STOPWORDS: &[&str] = &[
    "is", "are", "was", "were", "can", "could", "would", "do", "does", "did", "i", "we", "you", "find", "found",
    "the", "a", "an", "any", "some", "my", "located", "kept", "put", "placed", "get", "see", "seen", "know",
];

fn normalize(text: &str) -> String {
    text.trim()
        .trim_end_matches(['?', '.', '!'])
        .trim()
        .to_ascii_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maps question text onto one of the supported query kinds.
pub fn classify_question(text: &str) -> OracleQuery {
    let q = normalize(text);
    let words: Vec<&str> = q.split(' ').collect();

    if q.contains("which color") || q.contains("what color") {
        if let Some(pos) = words.iter().position(|w| *w == "#") {
            if let Some(k) = words.get(pos + 1).and_then(|w| w.parse::<u32>().ok()) {
                if words.get(pos + 2) == Some(&"base") {
                    return OracleQuery::ColorForBase(k);
                }
            }
        }
    }
    if let Some(rest) = q.strip_prefix("which ") {
        if let Some(color) = rest.strip_suffix(" block should i move").filter(|c| !c.contains(' ')) {
            return OracleQuery::RelativeTarget(color.to_string());
        }
        if let Some(class) = rest.strip_suffix(" do you prefer").filter(|c| !c.is_empty()) {
            return OracleQuery::WhichPreferred(class.to_string());
        }
    }
    if let Some(pos) = words.iter().position(|w| *w == "where") {
        let class: Vec<&str> = words[pos + 1..].iter().copied().filter(|w| !WHERE_STOPWORDS.contains(w)).collect();
        if !class.is_empty() {
            return OracleQuery::WhereIs(class.join(" "));
        }
    }
    OracleQuery::Freeform(text.trim().to_string())
}

/// "a and b", "a, b and c".
fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

// ---------------------------------------------------------------------------
// Rule-based oracle
// ---------------------------------------------------------------------------

/// Deterministic template answerer over the hidden context.
#[derive(Clone, Debug)]
pub struct RuleOracle {
    context: Context,
    knowledge: KnowledgeDoc,
    table: Option<TabletopState>,
}

impl RuleOracle {
    pub fn new(context: &Context) -> Self {
        let table = (context.env_kind == EnvKind::Tabletop)
            .then(|| TabletopState::from_context(context).ok())
            .flatten();
        Self { context: context.clone(), knowledge: build_knowledge(context), table }
    }

    pub fn knowledge(&self) -> &KnowledgeDoc {
        &self.knowledge
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    fn where_is(&self, class: &str) -> String {
        let parts: Vec<String> =
            self.knowledge.of_class(class).map(|f| format!("{} is in {}", f.instance, f.location)).collect();
        if parts.is_empty() {
            NOT_SURE.into()
        } else {
            format!("{}.", parts.join(", "))
        }
    }

    /// Targets of `class` in knowledge order.
    fn targets_of(&self, class: &str) -> Vec<String> {
        self.knowledge
            .of_class(class)
            .filter(|f| self.context.target_instances.contains(&f.instance))
            .map(|f| f.instance.clone())
            .collect()
    }

    fn which_preferred(&self, class: &str) -> String {
        let targets = self.targets_of(class);
        if !targets.is_empty() {
            format!("I mean {}.", join_and(&targets))
        } else if self.knowledge.of_class(class).next().is_some() {
            format!("Any {class} is fine.")
        } else {
            NOT_SURE.into()
        }
    }

    fn relative_target(&self, color: &str) -> String {
        let Some(table) = &self.table else { return NOT_SURE.into() };
        self.context
            .target_instances
            .iter()
            .find(|t| class_of(t) == format!("{color} block"))
            .and_then(|t| tabletop::relative_position_phrase(table, color, t).ok())
            .unwrap_or_else(|| NOT_SURE.into())
    }

    pub fn answer_query(&self, query: &OracleQuery) -> String {
        match query {
            OracleQuery::WhereIs(class) => self.where_is(class),
            OracleQuery::WhichPreferred(class) => self.which_preferred(class),
            OracleQuery::ColorForBase(k) => match self.context.color_map.get(k) {
                Some(color) => format!("You should put the {color} block on the # {k} base."),
                None => NOT_SURE.into(),
            },
            OracleQuery::RelativeTarget(color) => self.relative_target(color),
            OracleQuery::Freeform(_) => NOT_SURE.into(),
        }
    }
}

impl Oracle for RuleOracle {
    fn answer(&mut self, question: &str) -> String {
        self.answer_query(&classify_question(question))
    }

    fn wrong_answer(&self, question: &str) -> Option<String> {
        match classify_question(question) {
            OracleQuery::WhichPreferred(class) => {
                let targets = self.targets_of(&class);
                let others: Vec<String> = self
                    .knowledge
                    .of_class(&class)
                    .filter(|f| !targets.contains(&f.instance))
                    .map(|f| f.instance.clone())
                    .collect();
                (!targets.is_empty() && !others.is_empty()).then(|| format!("I mean {}.", others[0]))
            }
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Noisy wrapper
// ---------------------------------------------------------------------------

/// How a noisy reply looks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Ask the agent to restate the information instead of answering.
    #[default]
    Unhelpful,
    /// Name a non-target instance on preference questions; unhelpful otherwise.
    WrongTarget,
}

pub fn unhelpful_reply(class: &str) -> String {
    format!("I am not sure. Could you remind me the information about each {class}?")
}

/// Replaces each reply with probability `q` by a noisy one.
pub struct NoisyOracle<O> {
    inner: O,
    q: f64,
    mode: NoiseMode,
    fallback_class: String,
    rng: ChaCha8Rng,
}

impl<O: Oracle> NoisyOracle<O> {
    /// `fallback_class` names the object in noisy replies to questions that
    /// mention none; `q` is clamped into [0, 1].
    pub fn new(inner: O, q: f64, mode: NoiseMode, seed: u64, fallback_class: impl Into<String>) -> Self {
        Self { inner, q: q.clamp(0.0, 1.0), mode, fallback_class: fallback_class.into(), rng: rng_for(seed, "oracle-noise", 0) }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: Oracle> Oracle for NoisyOracle<O> {
    fn answer(&mut self, question: &str) -> String {
        // One draw per question keeps the noise stream aligned across modes.
        let noisy = self.rng.gen::<f64>() < self.q;
        if !noisy {
            return self.inner.answer(question);
        }
        if self.mode == NoiseMode::WrongTarget {
            if let Some(w) = self.inner.wrong_answer(question) {
                return w;
            }
        }
        let class = classify_question(question).class().unwrap_or_else(|| self.fallback_class.clone());
        unhelpful_reply(&class)
    }
}

/// Replies from a fixed list, in order; used to replay recorded answers.
#[derive(Clone, Debug, Default)]
pub struct ScriptedOracle {
    replies: Vec<String>,
    next: usize,
}

impl ScriptedOracle {
    pub fn new(replies: Vec<String>) -> Self {
        Self { replies, next: 0 }
    }
}

impl Oracle for ScriptedOracle {
    fn answer(&mut self, _question: &str) -> String {
        let r = self.replies.get(self.next).cloned().unwrap_or_else(|| NOT_SURE.into());
        self.next += 1;
        r
    }
}

// ---------------------------------------------------------------------------
// Accuracy probe
// ---------------------------------------------------------------------------

/// Per-scenario accuracies (percent) with their mean and population std.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub per_scenario: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// `(instance, receptacle)` pairs asserted by a where-is style answer.
pub fn asserted_pairs(answer: &str) -> Vec<(String, String)> {
    answer
        .trim()
        .trim_end_matches('.')
        .split(',')
        .filter_map(|part| {
            let (inst, rec) = part.trim().split_once(" is in ")?;
            let inst = inst.trim().trim_start_matches("and ").trim();
            split_instance(inst)?;
            Some((inst.to_string(), rec.trim().to_string()))
        })
        .collect()
}

/// True iff every pair the answer asserts is right and all instances of
/// `class` are covered.
pub fn answer_is_correct(answer: &str, ctx: &Context, class: &str) -> bool {
    let truth: BTreeSet<(String, String)> =
        build_knowledge(ctx).of_class(class).map(|f| (f.instance.clone(), f.location.clone())).collect();
    let said: BTreeSet<(String, String)> = asserted_pairs(answer).into_iter().collect();
    !truth.is_empty() && said == truth
}

const PROBE_TEMPLATES: [&str; 3] = ["Where is the {}?", "Where can I find the {}?", "Where are the {}?"];

/// The probe questions for one scenario: where-is questions about up to
/// `questions_per` distinct classes, picked by seed.
pub fn probe_questions(ctx: &Context, questions_per: usize, seed: u64) -> Vec<(String, String)> {
    let mut classes: Vec<String> = Vec::new();
    for p in &ctx.placement {
        let c = class_of(&p.instance).to_string();
        if !classes.contains(&c) {
            classes.push(c);
        }
    }
    let mut rng = rng_for(seed, "probe-questions", ctx.seed);
    let mut out = Vec::new();
    for i in 0..questions_per.min(classes.len()) {
        let pick = rng.gen_range(i..classes.len());
        classes.swap(i, pick);
        let template = PROBE_TEMPLATES[i % PROBE_TEMPLATES.len()];
        out.push((template.replace("{}", &classes[i]), classes[i].clone()));
    }
    out
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scores an oracle built by `make` for each scenario.
pub fn probe_accuracy<F>(scenarios: &[Context], questions_per: usize, seed: u64, mut make: F) -> ProbeReport
where
    F: FnMut(&Context) -> Box<dyn Oracle>,
{
    let per_scenario: Vec<f64> = scenarios
        .iter()
        .map(|ctx| {
            let mut oracle = make(ctx);
            let qs = probe_questions(ctx, questions_per, seed);
            if qs.is_empty() {
                return 0.0;
            }
            let right = qs.iter().filter(|(q, class)| answer_is_correct(&oracle.answer(q), ctx, class)).count();
            100.0 * right as f64 / qs.len() as f64
        })
        .collect();
    let (mean, std) = mean_std(&per_scenario);
    ProbeReport { per_scenario, mean, std }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_templates() {
        assert_eq!(classify_question("Where can I find the dishsponge?"), OracleQuery::WhereIs("dishsponge".into()));
        assert_eq!(classify_question("Where is the mug?"), OracleQuery::WhereIs("mug".into()));
        assert_eq!(classify_question("Which mug do you prefer?"), OracleQuery::WhichPreferred("mug".into()));
        assert_eq!(classify_question("Which color should be put on the # 1 base?"), OracleQuery::ColorForBase(1));
        assert_eq!(classify_question("Which red block should I move?"), OracleQuery::RelativeTarget("red".into()));
        assert!(matches!(classify_question("What's the weather?"), OracleQuery::Freeform(_)));
    }

    #[test]
    fn where_is_follows_knowledge_order() {
        let ctx = crate::household::tests::bedroom();
        let mut o = RuleOracle::new(&ctx);
        assert_eq!(
            o.answer("Where is the mug?"),
            "mug 1 is in diningtable 1, mug 3 is in diningtable 1, mug 2 is in diningtable 1."
        );
        assert!(answer_is_correct(&o.answer("Where is the mug?"), &ctx, "mug"));
        assert_eq!(o.answer("Which mug do you prefer?"), "Any mug is fine.");
    }

    #[test]
    fn preference_lists_targets() {
        let mut ctx = crate::household::tests::bedroom();
        ctx.target_instances = ["mug 1".to_string(), "mug 2".to_string()].into();
        let mut o = RuleOracle::new(&ctx);
        assert_eq!(o.answer("Which mug do you prefer?"), "I mean mug 1 and mug 2.");
        assert_eq!(o.wrong_answer("Which mug do you prefer?").unwrap(), "I mean mug 3.");
    }

    #[test]
    fn noise_extremes() {
        let ctx = crate::household::tests::bedroom();
        let mut always = NoisyOracle::new(RuleOracle::new(&ctx), 1.0, NoiseMode::Unhelpful, 1, "mug");
        assert_eq!(always.answer("Where is the mug?"), unhelpful_reply("mug"));
        let mut never = NoisyOracle::new(RuleOracle::new(&ctx), 0.0, NoiseMode::Unhelpful, 1, "mug");
        assert_eq!(never.answer("Where is the mug?"), RuleOracle::new(&ctx).answer("Where is the mug?"));
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[80.0, 80.0, 80.0, 80.0, 60.0, 60.0, 80.0, 60.0]);
        assert_eq!(m, 72.5);
        assert!((s - 9.68).abs() < 0.01);
    }
}
