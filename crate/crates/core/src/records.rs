//! Line-delimited episode log.
//!
//! The first line is a header naming the format and version. Each episode is
//! then an `episode` line (context and metadata), one `step` line per action,
//! and an `end` line with the outcome. Every line is a standalone JSON
//! object, so files can be concatenated after stripping headers and streamed
//! without loading them whole.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{EpisodeRecord, Outcome, StepRecord};
use crate::mdp::{AugmentedAction, Context, Observation};

pub const RECORDS_FORMAT: &str = "askloop.records";
pub const RECORDS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RecordsError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("missing or unsupported header: {0}")]
    Header(String),
    #[error("line {0}: {1}")]
    Structure(usize, String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
}

impl Default for Header {
    fn default() -> Self {
        Self { format: RECORDS_FORMAT.into(), version: RECORDS_VERSION }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Line {
    Episode {
        policy: String,
        horizon: usize,
        discount: f64,
        initial_observation: String,
        context: Box<Context>,
    },
    Step {
        index: usize,
        action: AugmentedAction,
        observation: Observation,
        noise: bool,
        reward: f64,
    },
    End {
        outcome: Outcome,
        tasks_completed: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        failure: Option<String>,
    },
}

/// Lines of one episode, without the header.
pub fn episode_lines(r: &EpisodeRecord) -> Vec<Line> {
    let mut out = Vec::with_capacity(r.steps.len() + 2);
    out.push(Line::Episode {
        policy: r.policy.clone(),
        horizon: r.horizon,
        discount: r.discount,
        initial_observation: r.initial_observation.clone(),
        context: Box::new(r.context.clone()),
    });
    for (i, s) in r.steps.iter().enumerate() {
        out.push(Line::Step {
            index: i + 1,
            action: s.action.clone(),
            observation: s.observation.clone(),
            noise: s.noise,
            reward: s.reward,
        });
    }
    out.push(Line::End { outcome: r.outcome, tasks_completed: r.tasks_completed, failure: r.failure.clone() });
    out
}

pub fn write_records<W: Write>(mut w: W, records: &[EpisodeRecord]) -> Result<(), RecordsError> {
    serde_json::to_writer(&mut w, &Header::default()).map_err(|e| RecordsError::Json { line: 1, source: e })?;
    w.write_all(b"\n")?;
    for r in records {
        for line in episode_lines(r) {
            serde_json::to_writer(&mut w, &line).map_err(|e| RecordsError::Json { line: 0, source: e })?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_records(path: &Path, records: &[EpisodeRecord]) -> Result<(), RecordsError> {
    write_records(BufWriter::new(File::create(path)?), records)
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<EpisodeRecord>, RecordsError> {
    let mut lines = r.lines().enumerate();
    let header: Header = match lines.next() {
        Some((_, l)) => serde_json::from_str(&l?).map_err(|e| RecordsError::Json { line: 1, source: e })?,
        None => return Err(RecordsError::Header("empty file".into())),
    };
    if header.format != RECORDS_FORMAT || header.version != RECORDS_VERSION {
        return Err(RecordsError::Header(format!("{} v{}", header.format, header.version)));
    }
    let mut out = Vec::new();
    let mut open: Option<EpisodeRecord> = None;
    for (i, l) in lines {
        let n = i + 1;
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(&l).map_err(|e| RecordsError::Json { line: n, source: e })?;
        match line {
            Line::Episode { policy, horizon, discount, initial_observation, context } => {
                if open.is_some() {
                    return Err(RecordsError::Structure(n, "episode started before previous ended".into()));
                }
                open = Some(EpisodeRecord {
                    context: *context,
                    initial_observation,
                    steps: Vec::new(),
                    horizon,
                    discount,
                    outcome: Outcome::Failure,
                    tasks_completed: 0,
                    policy,
                    failure: None,
                });
            }
            Line::Step { index, action, observation, noise, reward } => {
                let ep = open.as_mut().ok_or_else(|| RecordsError::Structure(n, "step outside episode".into()))?;
                if index != ep.steps.len() + 1 {
                    return Err(RecordsError::Structure(n, format!("step index {index} out of order")));
                }
                ep.steps.push(StepRecord { action, observation, noise, reward });
            }
            Line::End { outcome, tasks_completed, failure } => {
                let mut ep = open.take().ok_or_else(|| RecordsError::Structure(n, "end outside episode".into()))?;
                ep.outcome = outcome;
                ep.tasks_completed = tasks_completed;
                ep.failure = failure;
                out.push(ep);
            }
        }
    }
    if open.is_some() {
        return Err(RecordsError::Structure(0, "truncated episode".into()));
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<EpisodeRecord>, RecordsError> {
    read_records(BufReader::new(File::open(path)?))
}
