//! Bundled reference transcripts and a checker that replays them through
//! the environments.
//!
//! Household observations must match byte for byte. Tabletop scene
//! descriptions list objects in an arbitrary order, so after the first
//! observation they are compared as object sets with a coordinate tolerance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{Episode, EpisodeLimits, EpisodeRecord};
use crate::mdp::{parse_augmented, parse_trajectory, Context, EnvKind, StepError, TrajectoryError};
use crate::oracle::RuleOracle;
use crate::tabletop::{parse_scene, SeenObject};

/// Coordinate tolerance for tabletop scene comparison.
pub const SCENE_TOLERANCE: f64 = 1e-2;

const HOUSEHOLD_MUG: &str = include_str!("../assets/fixtures/household-mug.json");
const TABLETOP_RED_BLOCK: &str = include_str!("../assets/fixtures/tabletop-red-block.json");

/// Names of the bundled fixtures.
pub const BUILTIN: [&str; 2] = ["household-mug", "tabletop-red-block"];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    Unknown(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Transcript(#[from] TrajectoryError),
    #[error("action {index}: {message}")]
    Action { index: usize, message: String },
    #[error(transparent)]
    Step(#[from] StepError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub context: Context,
    pub transcript: String,
}

impl Fixture {
    pub fn builtin(name: &str) -> Result<Self, FixtureError> {
        let text = match name {
            "household-mug" => HOUSEHOLD_MUG,
            "tabletop-red-block" => TABLETOP_RED_BLOCK,
            _ => return Err(FixtureError::Unknown(name.into())),
        };
        Ok(serde_json::from_str(text)?)
    }

    /// Action texts in order.
    pub fn actions(&self) -> Result<Vec<String>, FixtureError> {
        Ok(parse_trajectory(&self.transcript)?.turns.into_iter().map(|(a, _)| a).collect())
    }
}

/// A line that did not reproduce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    /// Observation number as printed in the transcript.
    pub obs: usize,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug)]
pub struct FixtureReplay {
    pub record: EpisodeRecord,
    pub observations_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl FixtureReplay {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn same_object(a: &SeenObject, b: &SeenObject, tol: f64) -> bool {
    a.kind == b.kind
        && a.color == b.color
        && a.index == b.index
        && (a.pose[0] - b.pose[0]).abs() <= tol + 1e-9
        && (a.pose[1] - b.pose[1]).abs() <= tol + 1e-9
}

/// Order-insensitive scene comparison; every expected object must pair with
/// a distinct actual one within `tol` per axis.
pub fn scenes_match(expected: &str, actual: &str, tol: f64) -> bool {
    let exp = parse_scene(expected);
    let mut act = parse_scene(actual);
    if exp.is_empty() || exp.len() != act.len() {
        return false;
    }
    for e in &exp {
        // Closest candidate first keeps the greedy pairing sound for
        // objects that sit close together.
        let best = act
            .iter()
            .enumerate()
            .filter(|(_, a)| same_object(e, a, tol))
            .min_by(|(_, a), (_, b)| {
                let da = (a.pose[0] - e.pose[0]).abs() + (a.pose[1] - e.pose[1]).abs();
                let db = (b.pose[0] - e.pose[0]).abs() + (b.pose[1] - e.pose[1]).abs();
                da.total_cmp(&db)
            })
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                act.swap_remove(i);
            }
            None => return false,
        }
    }
    true
}

/// Replays a fixture's actions with the rule oracle and compares every
/// observation.
pub fn replay_fixture(fx: &Fixture) -> Result<FixtureReplay, FixtureError> {
    let parsed = parse_trajectory(&fx.transcript)?;
    let limits = EpisodeLimits { horizon: parsed.turns.len().max(1), ..EpisodeLimits::default() };
    let mut ep = Episode::new(fx.context.clone(), limits)?;
    let mut oracle = RuleOracle::new(&fx.context);
    let mut mismatches = Vec::new();
    if ep.initial_observation() != parsed.initial_observation {
        mismatches.push(Mismatch { obs: 1, expected: parsed.initial_observation.clone(), actual: ep.initial_observation().to_string() });
    }
    let tabletop = fx.context.env_kind == EnvKind::Tabletop;
    for (i, (act, expected)) in parsed.turns.iter().enumerate() {
        let action = parse_augmented(act, fx.context.env_kind).map_err(|e| FixtureError::Action { index: i + 1, message: e.to_string() })?;
        let actual = ep.apply(action, false, &mut oracle)?.observation.text().to_string();
        let same = if tabletop && !parse_scene(expected).is_empty() {
            scenes_match(expected, &actual, SCENE_TOLERANCE)
        } else {
            *expected == actual
        };
        if !same {
            mismatches.push(Mismatch { obs: i + 2, expected: expected.clone(), actual });
        }
    }
    Ok(FixtureReplay { observations_checked: parsed.turns.len() + 1, record: ep.into_record("fixture"), mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_matching_tolerates_order_and_rounding() {
        let a = "A red block is in (0.5, 0.1). A green bowl is in (0.3, 0.2).";
        let b = "A green bowl is in (0.3, 0.2). A red block is in (0.51, 0.1).";
        assert!(scenes_match(a, b, 1e-2));
        assert!(!scenes_match(a, "A green bowl is in (0.3, 0.2). A red block is in (0.53, 0.1).", 1e-2));
        assert!(!scenes_match(a, "A green bowl is in (0.3, 0.2).", 1e-2));
    }

    #[test]
    fn builtins_load() {
        for name in BUILTIN {
            let fx = Fixture::builtin(name).unwrap();
            assert!(!fx.actions().unwrap().is_empty());
        }
        assert!(Fixture::builtin("nope").is_err());
    }
}
