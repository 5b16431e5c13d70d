//! Fine-tuning corpora.
//!
//! Demonstrations come from a demonstrator that talks like the scripted
//! asking agent and acts like the expert. A corruption wrapper replaces each
//! step, with probability `p`, by a random admissible physical action and
//! flags it; the expert replans from whatever state results, so episodes
//! still finish. Two datasets are derived from the collected records: a
//! policy set with one example per step (flagged steps masked out) and a
//! question-answering set that teaches when asking is necessary.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harness::{
    query_memory, run_many, EpisodeInfo, EpisodeLimits, EpisodeRecord, Policy, PolicyDecision, PolicyError, PolicyView,
};
use crate::mdp::{dynamics, parse_augmented, AugmentedAction, Observation, StepError};
use crate::names::class_of;
use crate::oracle::RuleOracle;
use crate::policies::{expert_action, ScriptedAba};
use crate::records::{write_records, RecordsError};
use crate::scenario::{ScenarioError, ScenarioSpec};
use crate::seeding::{derive_seed, rng_for};

pub const DATASET_FORMAT: &str = "askloop.ftdata";
pub const DATASET_VERSION: u32 = 1;
/// Extra memory queries inserted per episode in the QA set.
pub const DEFAULT_AUGMENT: usize = 2;

#[derive(Debug, Error)]
pub enum FtError {
    #[error("score {index} of record {record} is not finite")]
    NonFiniteScore { record: usize, index: usize },
    #[error("noise probability {0} outside [0, 1)")]
    BadProbability(f64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Records(#[from] RecordsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Demonstrator and corruption
// ---------------------------------------------------------------------------

/// Asks like the scripted agent, acts like the expert.
#[derive(Clone, Debug, Default)]
pub struct Demonstrator {
    talk: ScriptedAba,
}

impl Policy for Demonstrator {
    fn name(&self) -> &str {
        "demonstrator"
    }

    fn begin_episode(&mut self, info: &EpisodeInfo) {
        self.talk.begin_episode(info);
    }

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        if let PolicyDecision::Act { text, .. } = self.talk.act(view)? {
            if matches!(parse_augmented(&text, view.env_kind), Ok(AugmentedAction::Think(_) | AugmentedAction::Ask(_))) {
                return Ok(PolicyDecision::act(text));
            }
        }
        Ok(match expert_action(view.state, view.context) {
            Some(a) => PolicyDecision::act(a.render()),
            None => PolicyDecision::Finish,
        })
    }
}

/// With probability `p` per step, replaces the wrapped policy's choice by a
/// uniformly drawn admissible physical action that differs from the
/// expert's plan, and flags it as noise.
pub struct CorruptedPolicy<P> {
    inner: P,
    p: f64,
    rng: ChaCha8Rng,
}

impl<P: Policy> CorruptedPolicy<P> {
    pub fn new(inner: P, p: f64) -> Self {
        Self { inner, p, rng: rng_for(0, "corrupt", 0) }
    }
}

impl<P: Policy> Policy for CorruptedPolicy<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn begin_episode(&mut self, info: &EpisodeInfo) {
        self.rng = rng_for(info.seed, "corrupt", 0);
        self.inner.begin_episode(info);
    }

    fn act(&mut self, view: &PolicyView<'_>) -> Result<PolicyDecision, PolicyError> {
        // Retries after a parse failure are not fresh decisions.
        if view.feedback.is_none() && self.rng.gen::<f64>() < self.p {
            let planned = expert_action(view.state, view.context).map(|a| a.render());
            let choices: Vec<String> = dynamics(view.env_kind)
                .admissible_actions(view.state, view.context)
                .iter()
                .map(|a| a.render())
                .filter(|a| Some(a) != planned.as_ref())
                .collect();
            if let Some(pick) = choices.choose(&mut self.rng) {
                return Ok(PolicyDecision::Act { text: pick.clone(), noise: true });
            }
        }
        self.inner.act(view)
    }
}

/// Collects `n` demonstrations with noise probability `p`.
pub fn collect_corrupted(spec: &ScenarioSpec, n: usize, p: f64, seed: u64, limits: EpisodeLimits) -> Result<Vec<EpisodeRecord>, FtError> {
    if !(0.0..1.0).contains(&p) {
        return Err(FtError::BadProbability(p));
    }
    let contexts = (0..n)
        .map(|i| spec.context(derive_seed(seed, "ftdata-episode", i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let out = run_many(
        &contexts,
        |_| Box::new(CorruptedPolicy::new(Demonstrator::default(), p)),
        |ctx| Box::new(RuleOracle::new(ctx)),
        limits,
    );
    Ok(out.into_iter().collect::<Result<Vec<_>, _>>()?)
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// One training pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtRecord {
    pub x: String,
    pub y: String,
    /// 1 when the target is injected noise and must not be learned.
    pub mask: u8,
    pub episode_id: u64,
    pub step: usize,
}

/// Policy examples: the transcript so far with the next-action cue, and the
/// action taken. Reasoning turns are their own examples.
pub fn build_policy_dataset(records: &[EpisodeRecord]) -> Vec<FtRecord> {
    let mut out = Vec::new();
    for (e, r) in records.iter().enumerate() {
        for (t, s) in r.steps.iter().enumerate() {
            out.push(FtRecord {
                x: format!("{}\nAct {}:", r.transcript_prefix(t), t + 1),
                y: s.action.render(),
                mask: u8::from(s.noise),
                episode_id: e as u64,
                step: t + 1,
            });
        }
    }
    out
}

pub fn seen_question(class: &str) -> String {
    format!("do you have ever seen the {class}?")
}

pub fn where_seen_question(class: &str) -> String {
    format!("where have you seen the {class}?")
}

/// Steps at which a task begins, with the task's object class.
fn decision_points(r: &EpisodeRecord) -> Vec<(usize, String)> {
    let mut out = vec![(0, r.context.task.object_class.clone())];
    for (i, s) in r.steps.iter().enumerate() {
        if let Observation::EnvText(t) = &s.observation {
            if let Some((_, next)) = t.split_once("Your next task is to: ") {
                if let Some(p) = crate::household::parse_instruction(next) {
                    out.push((i + 1, p.object_class));
                }
            }
        }
    }
    out
}

fn qa_pair(r: &EpisodeRecord, e: u64, t: usize, class: &str, out: &mut Vec<FtRecord>) {
    let prefix = r.transcript_prefix(t);
    let report = query_memory(&r.initial_observation, &r.steps[..t], class);
    let seen = !report.never_seen();
    out.push(FtRecord {
        x: format!("{prefix}\n{}", seen_question(class)),
        y: if seen { "yes" } else { "no" }.into(),
        mask: 0,
        episode_id: e,
        step: t,
    });
    if seen {
        out.push(FtRecord {
            x: format!("{prefix}\n{}", where_seen_question(class)),
            y: report.render(),
            mask: 0,
            episode_id: e,
            step: t,
        });
    }
}

/// Memory-query examples at every task start, plus `augment` queries per
/// episode about other classes at uniformly drawn points.
pub fn build_qa_dataset(records: &[EpisodeRecord], seed: u64, augment: usize) -> Vec<FtRecord> {
    let mut out = Vec::new();
    for (e, r) in records.iter().enumerate() {
        let e = e as u64;
        for (t, class) in decision_points(r) {
            qa_pair(r, e, t, &class, &mut out);
        }
        let mut classes: Vec<String> = Vec::new();
        for p in &r.context.placement {
            let c = class_of(&p.instance).to_string();
            if c != r.context.task.object_class && !classes.contains(&c) {
                classes.push(c);
            }
        }
        if classes.is_empty() {
            continue;
        }
        let mut rng = rng_for(seed, "qa-augment", e);
        for _ in 0..augment {
            let class = classes[rng.gen_range(0..classes.len())].clone();
            let t = rng.gen_range(0..=r.steps.len());
            qa_pair(r, e, t, &class, &mut out);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// The two sums of the training loss, kept apart so callers can reweight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub qa: f64,
    pub policy: f64,
    pub total: f64,
}

/// Negated log-likelihood over QA examples and unmasked policy examples.
/// Masked policy examples are skipped without being read.
pub fn masked_objective(qa_scores: &[Vec<f64>], policy_scores: &[(Vec<f64>, bool)]) -> Result<ObjectiveTerms, FtError> {
    let mut qa = 0.0;
    for (r, toks) in qa_scores.iter().enumerate() {
        for (i, l) in toks.iter().enumerate() {
            if !l.is_finite() {
                return Err(FtError::NonFiniteScore { record: r, index: i });
            }
            qa -= l;
        }
    }
    let mut policy = 0.0;
    for (r, (toks, masked)) in policy_scores.iter().enumerate() {
        if *masked {
            continue;
        }
        for (i, l) in toks.iter().enumerate() {
            if !l.is_finite() {
                return Err(FtError::NonFiniteScore { record: qa_scores.len() + r, index: i });
            }
            policy -= l;
        }
    }
    Ok(ObjectiveTerms { qa, policy, total: qa + policy })
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub kind: String,
}

pub fn write_dataset<W: Write>(mut w: W, kind: &str, rows: &[FtRecord]) -> Result<(), FtError> {
    let header = DatasetHeader { format: DATASET_FORMAT.into(), version: DATASET_VERSION, kind: kind.into() };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(text: &str) -> Result<(DatasetHeader, Vec<FtRecord>), FtError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: DatasetHeader = serde_json::from_str(lines.next().unwrap_or("{}"))?;
    let rows = lines.map(serde_json::from_str).collect::<Result<Vec<FtRecord>, _>>()?;
    Ok((header, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub episodes: usize,
    pub successes: usize,
    pub steps: usize,
    pub policy_records: usize,
    pub masked_records: usize,
    pub qa_records: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub scenario: ScenarioSpec,
    pub seed: u64,
    pub n: usize,
    pub p: f64,
    pub augment: usize,
    pub counts: Counts,
    /// File name to hex SHA-256.
    pub sha256: std::collections::BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything a corpus build produces, in memory.
pub struct Corpus {
    pub records: Vec<EpisodeRecord>,
    pub policy: Vec<FtRecord>,
    pub qa: Vec<FtRecord>,
}

pub fn build_corpus(spec: &ScenarioSpec, n: usize, p: f64, seed: u64, augment: usize, limits: EpisodeLimits) -> Result<Corpus, FtError> {
    let records = collect_corrupted(spec, n, p, seed, limits)?;
    let policy = build_policy_dataset(&records);
    let qa = build_qa_dataset(&records, seed, augment);
    Ok(Corpus { records, policy, qa })
}

/// Writes `records.jsonl`, `policy.jsonl`, `qa.jsonl` and `manifest.json`
/// into `dir`.
pub fn export_corpus(dir: &Path, corpus: &Corpus, spec: &ScenarioSpec, n: usize, p: f64, seed: u64, augment: usize) -> Result<Manifest, FtError> {
    std::fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut buf = Vec::new();
    write_records(&mut buf, &corpus.records)?;
    files.push(("records.jsonl", buf));
    let mut buf = Vec::new();
    write_dataset(&mut buf, "policy", &corpus.policy)?;
    files.push(("policy.jsonl", buf));
    let mut buf = Vec::new();
    write_dataset(&mut buf, "qa", &corpus.qa)?;
    files.push(("qa.jsonl", buf));
    let mut sha256 = std::collections::BTreeMap::new();
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)?;
        sha256.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        scenario: spec.clone(),
        seed,
        n,
        p,
        augment,
        counts: Counts {
            episodes: corpus.records.len(),
            successes: corpus.records.iter().filter(|r| r.success()).count(),
            steps: corpus.records.iter().map(|r| r.steps.len()).sum(),
            policy_records: corpus.policy.len(),
            masked_records: corpus.policy.iter().filter(|r| r.mask == 1).count(),
            qa_records: corpus.qa.len(),
        },
        sha256,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_arithmetic() {
        assert_eq!(masked_objective(&[], &[]).unwrap().total, 0.0);
        assert_eq!(masked_objective(&[vec![-1.0, -2.0]], &[]).unwrap().total, 3.0);
        let t = masked_objective(&[vec![-1.0]], &[(vec![-0.5], false), (vec![-9.0], true)]).unwrap();
        assert_eq!((t.qa, t.policy, t.total), (1.0, 0.5, 1.5));
        assert!(masked_objective(&[vec![f64::NAN]], &[]).is_err());
    }
}
