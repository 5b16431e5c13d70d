//! Tabletop pick-and-place environment.
//!
//! The scene holds colored blocks, bowls and numbered bases on a planar
//! workspace. The only physical action is `move_to(px, py, qx, qy)`: the block
//! nearest to the pick point (within a snap radius) is moved to the place
//! point. Observations list every object with its coordinates rounded to
//! centimeters.
//!
//! Three tasks are supported: move the goal red block (one of several) into
//! the green bowl; put blocks of the right colors on numbered bases; and both
//! at once. Base tasks carry a question budget of one less than the number of
//! bases, so the last correspondence must be inferred.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{
    Context, EnvDynamics, EnvKind, Location, MalformedAction, PhysicalAction, Placement, StepError, TaskKind,
    TaskParams, TaskSpec, Transition, Variant, WorldState,
};
use crate::names::{class_of, instance, split_instance};
use crate::seeding::rng_for;

pub const X_RANGE: (f64, f64) = (0.25, 0.75);
pub const Y_RANGE: (f64, f64) = (-0.5, 0.5);
/// A pick point grabs the nearest block within this distance.
pub const SNAP_RADIUS: f64 = 0.05;
/// A block within this distance of a bowl or base counts as on it.
pub const CONTAIN_RADIUS: f64 = 0.06;
/// Minimum distance between sampled initial poses.
pub const SEPARATION: f64 = 0.08;
/// Minimum gap between second coordinates of same-color blocks, so that
/// rounded coordinates keep their left-to-right order.
pub const RANK_GAP: f64 = 0.02;
pub const BASE_SPACING: f64 = 0.09;
/// Default maximum per-axis drift applied to placed blocks.
pub const DEFAULT_JITTER: f64 = 0.005;
pub const MAX_RED_BLOCKS: u32 = 8;
pub const MAX_BASES: u32 = 6;

/// Refusal text once the question budget is spent.
pub const BUDGET_REFUSAL: &str = "You have used up your questions.";
/// Feedback for text that is not a `move_to` call.
pub const NO_FUNCTION_CALL: &str = "No function call detected.";

pub const TASK1_INSTRUCTION: &str = "Move the red block into the green bowl.";
pub const TASK2_INSTRUCTION: &str = "Place the blocks on the corresponding bases.";
pub const TASK3_INSTRUCTION: &str =
    "Move the red block into the green bowl and place the blocks on the corresponding bases.";

const BOWL_COLORS: [&str; 8] = ["blue", "brown", "yellow", "purple", "orange", "gray", "pink", "red"];
const BLOCK_COLORS: [&str; 9] = ["blue", "yellow", "orange", "purple", "green", "pink", "cyan", "brown", "gray"];
const ORDINALS: [&str; 10] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Block,
    Bowl,
    Base,
}

impl TableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::Block => "block",
            TableKind::Bowl => "bowl",
            TableKind::Base => "base",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableObject {
    pub name: String,
    pub kind: TableKind,
    pub color: String,
    pub pose: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabletopState {
    pub objects: Vec<TableObject>,
    /// Remaining questions; `None` is unlimited.
    pub question_budget_remaining: Option<u32>,
    /// Number of move commands processed so far.
    pub moves: u32,
    pub finished: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveCmd {
    pub pick: [f64; 2],
    pub place: [f64; 2],
}

impl MoveCmd {
    pub fn render(&self) -> String {
        format!(
            "move_to({}, {}, {}, {})",
            fmt_num(self.pick[0]),
            fmt_num(self.pick[1]),
            fmt_num(self.place[0]),
            fmt_num(self.place[1])
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TabletopError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("two {0} blocks share a second coordinate")]
    AmbiguousRank(String),
    #[error("no such object: {0}")]
    NoSuchObject(String),
    #[error("question budget exhausted")]
    BudgetExhausted,
}

// ---------------------------------------------------------------------------
// Number formatting and parsing
// ---------------------------------------------------------------------------

/// Shortest decimal form, always with a fractional part (`0.7`, `1.0`).
pub fn fmt_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Coordinate as shown in observations: rounded to two decimals.
pub fn fmt_coord(v: f64) -> String {
    fmt_num((v * 100.0).round() / 100.0)
}

fn is_decimal_literal(s: &str) -> bool {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => !int.is_empty() && digits(int),
        Some(f) => digits(int) && digits(f) && !(int.is_empty() && f.is_empty()),
    }
}

/// Parses `move_to(a, b, c, d)`.
pub fn parse_move(text: &str) -> Result<MoveCmd, MalformedAction> {
    let err = || MalformedAction::new(NO_FUNCTION_CALL, 0..text.len());
    let t = text.trim();
    let inner = t
        .strip_prefix("move_to")
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix('('))
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(err)?;
    let nums: Vec<&str> = inner.split(',').map(str::trim).collect();
    if nums.len() != 4 || !nums.iter().all(|n| is_decimal_literal(n)) {
        return Err(err());
    }
    let v: Vec<f64> = nums.iter().map(|n| n.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err())?;
    Ok(MoveCmd { pick: [v[0], v[1]], place: [v[2], v[3]] })
}

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

pub fn in_bounds(p: [f64; 2]) -> bool {
    (X_RANGE.0..=X_RANGE.1).contains(&p[0]) && (Y_RANGE.0..=Y_RANGE.1).contains(&p[1])
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn clamp(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(X_RANGE.0, X_RANGE.1), p[1].clamp(Y_RANGE.0, Y_RANGE.1)]
}

// ---------------------------------------------------------------------------
// State construction and rendering
// ---------------------------------------------------------------------------

/// Splits an object name into kind, color and base index.
fn describe(name: &str) -> Option<(TableKind, String, Option<u32>)> {
    let (class, n) = split_instance(name)?;
    if class == "base" {
        return Some((TableKind::Base, "base".into(), Some(n)));
    }
    let (color, kind) = class.rsplit_once(' ')?;
    match kind {
        "block" => Some((TableKind::Block, color.into(), None)),
        "bowl" => Some((TableKind::Bowl, color.into(), None)),
        _ => None,
    }
}

impl TabletopState {
    pub fn from_context(ctx: &Context) -> Result<Self, StepError> {
        ctx.validate()?;
        if ctx.env_kind != EnvKind::Tabletop {
            return Err(StepError::WrongEnvironment(EnvKind::Tabletop));
        }
        let mut objects = Vec::new();
        for p in &ctx.placement {
            let (Location::Pose(pose), Some((kind, color, index))) = (&p.location, describe(&p.instance)) else {
                return Err(StepError::WrongEnvironment(EnvKind::Tabletop));
            };
            objects.push(TableObject { name: p.instance.clone(), kind, color, pose: *pose, index });
        }
        let budget = match ctx.task.kind {
            TaskKind::Tabletop2 | TaskKind::Tabletop3 => Some(ctx.task.params.y.saturating_sub(1)),
            _ => None,
        };
        Ok(Self { objects, question_budget_remaining: budget, moves: 0, finished: false })
    }

    pub fn get(&self, name: &str) -> Option<&TableObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &TableObject> {
        self.objects.iter().filter(|o| o.kind == TableKind::Block)
    }

    pub fn base(&self, index: u32) -> Option<&TableObject> {
        self.objects.iter().find(|o| o.kind == TableKind::Base && o.index == Some(index))
    }
}

fn render_object(o: &TableObject) -> String {
    let (x, y) = (fmt_coord(o.pose[0]), fmt_coord(o.pose[1]));
    match o.kind {
        TableKind::Base => format!("The # {} base is in ({x}, {y}).", o.index.unwrap_or(0)),
        _ => format!("A {} {} is in ({x}, {y}).", o.color, o.kind.as_str()),
    }
}

/// Scene description with bases first and the other lines in a seeded order.
pub fn render_scene(state: &TabletopState, seed: u64) -> String {
    let mut bases: Vec<&TableObject> = state.objects.iter().filter(|o| o.kind == TableKind::Base).collect();
    bases.sort_by_key(|o| o.index);
    let mut rest: Vec<&TableObject> = state.objects.iter().filter(|o| o.kind != TableKind::Base).collect();
    rest.shuffle(&mut rng_for(seed, "tabletop-render", u64::from(state.moves)));
    bases.into_iter().chain(rest).map(render_object).collect::<Vec<_>>().join(" ")
}

/// Opening observation: objects in context order, then the instruction.
pub fn render_initial(state: &TabletopState, ctx: &Context) -> String {
    let lines: Vec<String> = state.objects.iter().map(render_object).collect();
    format!("{} You task is: {}", lines.join(" "), ctx.task.instruction)
}

/// An object line recovered from an observation.
#[derive(Clone, Debug, PartialEq)]
pub struct SeenObject {
    pub kind: TableKind,
    pub color: String,
    pub pose: [f64; 2],
    pub index: Option<u32>,
}

/// Parses every `... is in (x, y).` line of an observation.
pub fn parse_scene(text: &str) -> Vec<SeenObject> {
    let mut out = Vec::new();
    let mut start = 0;
    while let Some(off) = text[start..].find(" is in (") {
        let at = start + off;
        let subject = text[start..at].trim().trim_start_matches('.').trim();
        let coords_start = at + " is in (".len();
        let Some(close) = text[coords_start..].find(')') else { break };
        let coords = &text[coords_start..coords_start + close];
        start = coords_start + close + 1;
        let nums: Vec<f64> = coords.split(',').filter_map(|c| c.trim().parse().ok()).collect();
        if nums.len() != 2 {
            continue;
        }
        let pose = [nums[0], nums[1]];
        // The subject is the tail of the text since the last sentence end.
        let subject = subject.rsplit(". ").next().unwrap_or(subject).trim();
        if let Some(rest) = subject.strip_prefix("The # ") {
            if let Some(k) = rest.strip_suffix(" base").and_then(|k| k.trim().parse().ok()) {
                out.push(SeenObject { kind: TableKind::Base, color: "base".into(), pose, index: Some(k) });
            }
        } else if let Some(rest) = subject.strip_prefix("A ").or_else(|| subject.strip_prefix("An ")) {
            if let Some((color, kind)) = rest.rsplit_once(' ') {
                let kind = match kind {
                    "block" => TableKind::Block,
                    "bowl" => TableKind::Bowl,
                    _ => continue,
                };
                out.push(SeenObject { kind, color: color.into(), pose, index: None });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

/// Block that a pick point grabs: nearest within the snap radius, ties to
/// the lower (x, then y) pose.
pub fn grabbed_block(state: &TabletopState, pick: [f64; 2]) -> Option<usize> {
    let near: Vec<(usize, f64)> = state
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.kind == TableKind::Block)
        .map(|(i, o)| (i, dist(o.pose, pick)))
        .filter(|(_, d)| *d <= SNAP_RADIUS + 1e-12)
        .collect();
    let best = near.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    near.into_iter()
        .filter(|(_, d)| *d <= best + 1e-12)
        .min_by(|(a, _), (b, _)| {
            let (pa, pb) = (state.objects[*a].pose, state.objects[*b].pose);
            pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
        })
        .map(|(i, _)| i)
}

/// Applies a move. Misses and out-of-bounds commands leave poses unchanged
/// but still advance the move counter.
pub fn apply_move(state: &TabletopState, cmd: &MoveCmd, ctx: &Context) -> (TabletopState, String) {
    let mut s = state.clone();
    s.moves += 1;
    if in_bounds(cmd.pick) && in_bounds(cmd.place) {
        if let Some(i) = grabbed_block(state, cmd.pick) {
            let mut target = cmd.place;
            if ctx.pose_jitter > 0.0 {
                let mut rng = rng_for(ctx.seed, "tabletop-jitter", u64::from(s.moves));
                target[0] += rng.gen_range(-ctx.pose_jitter..=ctx.pose_jitter);
                target[1] += rng.gen_range(-ctx.pose_jitter..=ctx.pose_jitter);
            }
            s.objects[i].pose = clamp(target);
        }
    }
    let text = render_scene(&s, ctx.seed);
    (s, text)
}

fn within(a: &TableObject, b: &TableObject) -> bool {
    dist(a.pose, b.pose) <= CONTAIN_RADIUS
}

fn task1_done(state: &TabletopState, ctx: &Context) -> bool {
    let Some(bowl) = state.objects.iter().find(|o| o.kind == TableKind::Bowl && o.color == "green") else {
        return false;
    };
    let Some(target) = ctx.target_instances.iter().next().and_then(|t| state.get(t)) else { return false };
    within(target, bowl)
        && !state
            .blocks()
            .any(|b| b.color == "red" && b.name != target.name && within(b, bowl))
}

fn task2_done(state: &TabletopState, ctx: &Context) -> bool {
    ctx.color_map.iter().all(|(k, color)| {
        state.base(*k).is_some_and(|base| state.blocks().any(|b| &b.color == color && within(b, base)))
    })
}

pub fn check_tabletop_success(state: &TabletopState, ctx: &Context) -> bool {
    match ctx.task.kind {
        TaskKind::Tabletop1 => task1_done(state, ctx),
        TaskKind::Tabletop2 => task2_done(state, ctx),
        TaskKind::Tabletop3 => task1_done(state, ctx) && task2_done(state, ctx),
        _ => false,
    }
}

/// Charges one question against the budget.
pub fn consume_question_budget(state: &TabletopState) -> Result<TabletopState, TabletopError> {
    match state.question_budget_remaining {
        None => Ok(state.clone()),
        Some(0) => Err(TabletopError::BudgetExhausted),
        Some(n) => {
            let mut s = state.clone();
            s.question_budget_remaining = Some(n - 1);
            Ok(s)
        }
    }
}

// ---------------------------------------------------------------------------
// Relative positions
// ---------------------------------------------------------------------------

pub fn ordinal(rank: usize) -> String {
    ORDINALS.get(rank).map(|s| s.to_string()).unwrap_or_else(|| format!("{}th", rank + 1))
}

fn parse_ordinal(word: &str) -> Option<usize> {
    if let Some(i) = ORDINALS.iter().position(|o| *o == word) {
        return Some(i);
    }
    word.strip_suffix("th").and_then(|n| n.parse::<usize>().ok()).filter(|n| *n > 0).map(|n| n - 1)
}

/// Same-color blocks ordered left to right (ascending second coordinate).
fn ranked<'a>(state: &'a TabletopState, color: &str) -> Result<Vec<&'a TableObject>, TabletopError> {
    let mut v: Vec<&TableObject> = state.blocks().filter(|b| b.color == color).collect();
    if v.is_empty() {
        return Err(TabletopError::NoSuchObject(format!("{color} block")));
    }
    v.sort_by(|a, b| a.pose[1].total_cmp(&b.pose[1]));
    if v.windows(2).any(|w| (w[1].pose[1] - w[0].pose[1]).abs() < 1e-9) {
        return Err(TabletopError::AmbiguousRank(color.to_string()));
    }
    Ok(v)
}

/// "The {ordinal} {color} block from the left." for `target`.
pub fn relative_position_phrase(state: &TabletopState, color: &str, target: &str) -> Result<String, TabletopError> {
    let v = ranked(state, color)?;
    let rank = v.iter().position(|b| b.name == target).ok_or_else(|| TabletopError::NoSuchObject(target.into()))?;
    Ok(format!("The {} {color} block from the left.", ordinal(rank)))
}

/// Inverse of [`relative_position_phrase`]: the named block.
pub fn resolve_relative(state: &TabletopState, color: &str, phrase: &str) -> Result<String, TabletopError> {
    let rank = phrase_rank(phrase, color).ok_or_else(|| TabletopError::NoSuchObject(phrase.into()))?;
    let v = ranked(state, color)?;
    v.get(rank).map(|b| b.name.clone()).ok_or_else(|| TabletopError::NoSuchObject(phrase.into()))
}

/// Rank encoded in a relative-position phrase.
pub fn phrase_rank(phrase: &str, color: &str) -> Option<usize> {
    let p = phrase.trim().trim_end_matches('.');
    let lower = p.to_ascii_lowercase();
    let rest = lower.strip_prefix("the ")?;
    let rest = rest.strip_suffix(" from the left")?;
    let (ord, tail) = rest.split_once(' ')?;
    (tail == format!("{color} block")).then(|| parse_ordinal(ord)).flatten()
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct Sampler<'a, R: Rng> {
    rng: &'a mut R,
    poses: Vec<[f64; 2]>,
}

impl<R: Rng> Sampler<'_, R> {
    fn sample(&mut self, ok: impl Fn([f64; 2]) -> bool) -> Result<[f64; 2], TabletopError> {
        for _ in 0..20_000 {
            let p = [self.rng.gen_range(X_RANGE.0..=X_RANGE.1), self.rng.gen_range(Y_RANGE.0..=Y_RANGE.1)];
            if self.poses.iter().all(|q| dist(p, *q) >= SEPARATION) && ok(p) {
                self.poses.push(p);
                return Ok(p);
            }
        }
        Err(TabletopError::ParamOutOfRange("scene too crowded to sample".into()))
    }
}

fn task_kind_for(kind: u8) -> Result<TaskKind, TabletopError> {
    match kind {
        1 => Ok(TaskKind::Tabletop1),
        2 => Ok(TaskKind::Tabletop2),
        3 => Ok(TaskKind::Tabletop3),
        k => Err(TabletopError::ParamOutOfRange(format!("unknown task {k}"))),
    }
}

/// Samples a tabletop scene for task `kind` (1, 2 or 3).
pub fn generate_tabletop(kind: u8, params: TaskParams, seed: u64) -> Result<(Context, TabletopState), TabletopError> {
    let task_kind = task_kind_for(kind)?;
    let wants_red = matches!(task_kind, TaskKind::Tabletop1 | TaskKind::Tabletop3);
    let wants_bases = matches!(task_kind, TaskKind::Tabletop2 | TaskKind::Tabletop3);
    if wants_red && !(1..=MAX_RED_BLOCKS).contains(&params.x) {
        return Err(TabletopError::ParamOutOfRange(format!("x must be in 1..={MAX_RED_BLOCKS}")));
    }
    if wants_bases && !(1..=MAX_BASES).contains(&params.y) {
        return Err(TabletopError::ParamOutOfRange(format!("y must be in 1..={MAX_BASES}")));
    }
    let mut rng = rng_for(seed, "tabletop-context", u64::from(kind));
    let mut bases: Vec<Placement> = Vec::new();
    let mut others: Vec<Placement> = Vec::new();
    let mut color_map = BTreeMap::new();
    let mut target_instances = BTreeSet::new();
    let place = |name: String, p: [f64; 2]| Placement { instance: name, location: Location::Pose(p) };

    let mut sampler = Sampler { rng: &mut rng, poses: Vec::new() };
    if wants_bases {
        let span = BASE_SPACING * f64::from(params.y - 1);
        let x0 = sampler.rng.gen_range(X_RANGE.0..=X_RANGE.1 - span);
        let y0 = sampler.rng.gen_range(Y_RANGE.0..=Y_RANGE.1);
        for k in 1..=params.y {
            let p = [x0 + BASE_SPACING * f64::from(k - 1), y0];
            sampler.poses.push(p);
            bases.push(place(instance("base", k), p));
        }
    }
    if wants_red {
        let mut red_y: Vec<f64> = Vec::new();
        for n in 1..=params.x {
            let p = sampler.sample(|p| red_y.iter().all(|y| (p[1] - y).abs() >= RANK_GAP))?;
            red_y.push(p[1]);
            others.push(place(instance("red block", n), p));
        }
        let target = sampler.rng.gen_range(1..=params.x);
        target_instances.insert(instance("red block", target));
        let p = sampler.sample(|_| true)?;
        others.push(place(instance("green bowl", 1), p));
        let n_bowls = sampler.rng.gen_range(3..=5);
        let mut palette = BOWL_COLORS.to_vec();
        palette.shuffle(sampler.rng);
        for color in palette.into_iter().take(n_bowls) {
            let p = sampler.sample(|_| true)?;
            others.push(place(instance(&format!("{color} bowl"), 1), p));
        }
    }
    if wants_bases {
        let mut palette = BLOCK_COLORS.to_vec();
        palette.shuffle(sampler.rng);
        let mapped: Vec<&str> = palette.into_iter().take(params.y as usize).collect();
        for (k, c) in mapped.iter().enumerate() {
            color_map.insert(k as u32 + 1, c.to_string());
        }
        let extra = sampler.rng.gen_range(0..=2);
        let mut colors: Vec<&str> = mapped.clone();
        for _ in 0..extra {
            colors.push(mapped[sampler.rng.gen_range(0..mapped.len())]);
        }
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for c in colors {
            let n = counts.entry(c).or_default();
            *n += 1;
            let p = sampler.sample(|_| true)?;
            others.push(place(instance(&format!("{c} block"), *n), p));
        }
    }
    others.shuffle(&mut rng);
    let instruction = match task_kind {
        TaskKind::Tabletop1 => TASK1_INSTRUCTION,
        TaskKind::Tabletop2 => TASK2_INSTRUCTION,
        _ => TASK3_INSTRUCTION,
    };
    let ctx = Context {
        env_kind: EnvKind::Tabletop,
        variant: Variant::Standard,
        seed,
        task: TaskSpec {
            kind: task_kind,
            object_class: if wants_red { "red block".into() } else { "block".into() },
            destination: None,
            params,
            instruction: instruction.into(),
        },
        placement: bases.into_iter().chain(others).collect(),
        target_instances,
        color_map,
        room: Vec::new(),
        catalog: Vec::new(),
        pose_jitter: DEFAULT_JITTER,
        layout_id: "tabletop".into(),
    };
    let state = TabletopState::from_context(&ctx).map_err(|e| TabletopError::ParamOutOfRange(e.to_string()))?;
    Ok((ctx, state))
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Default)]
pub struct TabletopEnv;

impl EnvDynamics for TabletopEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::Tabletop
    }

    fn initial_state(&self, context: &Context) -> Result<WorldState, StepError> {
        TabletopState::from_context(context).map(WorldState::Tabletop)
    }

    fn initial_observation(&self, state: &WorldState, context: &Context) -> String {
        state.as_tabletop().map(|s| render_initial(s, context)).unwrap_or_default()
    }

    fn parse_physical(&self, text: &str) -> Result<PhysicalAction, MalformedAction> {
        parse_move(text).map(PhysicalAction::Move)
    }

    fn apply(&self, state: &WorldState, action: &PhysicalAction, ctx: &Context) -> Result<Transition, StepError> {
        let (Some(s), PhysicalAction::Move(cmd)) = (state.as_tabletop(), action) else {
            return Err(StepError::WrongEnvironment(EnvKind::Tabletop));
        };
        let (mut next, text) = apply_move(s, cmd, ctx);
        let done = check_tabletop_success(&next, ctx);
        next.finished = done;
        Ok(Transition { state: WorldState::Tabletop(next), observation: text, reward: if done { 1.0 } else { 0.0 }, done })
    }

    fn admissible_actions(&self, state: &WorldState, _ctx: &Context) -> Vec<PhysicalAction> {
        let Some(s) = state.as_tabletop() else { return Vec::new() };
        let spots: Vec<[f64; 2]> = s.objects.iter().filter(|o| o.kind != TableKind::Block).map(|o| o.pose).collect();
        s.blocks()
            .flat_map(|b| spots.iter().map(move |p| PhysicalAction::Move(MoveCmd { pick: b.pose, place: *p })))
            .collect()
    }

    fn is_success(&self, state: &WorldState, ctx: &Context) -> bool {
        state.as_tabletop().is_some_and(|s| check_tabletop_success(s, ctx))
    }
}

/// Class label of a tabletop object name ("red block", "base").
pub fn object_class(name: &str) -> &str {
    class_of(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting_matches_transcripts() {
        assert_eq!(fmt_coord(0.703125), "0.7");
        assert_eq!(fmt_coord(0.228125), "0.23");
        assert_eq!(fmt_coord(-0.06), "-0.06");
        assert_eq!(fmt_coord(-0.001), "0.0");
        assert_eq!(fmt_coord(0.1), "0.1");
        assert_eq!(fmt_num(1.0), "1.0");
    }

    #[test]
    fn parse_move_variants() {
        let m = parse_move("move_to(0.7, 0.23, 0.65, 0.03)").unwrap();
        assert_eq!(m, MoveCmd { pick: [0.7, 0.23], place: [0.65, 0.03] });
        assert_eq!(parse_move("move_to(0.46,-0.06,0.38,0.23)").unwrap().pick, [0.46, -0.06]);
        let e = parse_move("move(0.1,0.2)").unwrap_err();
        assert_eq!(e.message, NO_FUNCTION_CALL);
        assert!(parse_move("move_to(0.1, 0.2, 0.3)").is_err());
        assert!(parse_move("move_to(a, 0.2, 0.3, 0.4)").is_err());
        assert!(parse_move("move_to(1e3, 0.2, 0.3, 0.4)").is_err());
        assert_eq!(parse_move(&m.render()).unwrap(), m);
    }

    #[test]
    fn generated_budget_and_targets() {
        let (ctx, s) = generate_tabletop(1, TaskParams { x: 4, y: 0 }, 3).unwrap();
        assert_eq!(ctx.target_instances.len(), 1);
        assert_eq!(s.blocks().filter(|b| b.color == "red").count(), 4);
        assert_eq!(s.question_budget_remaining, None);
        let (ctx, s) = generate_tabletop(2, TaskParams { x: 0, y: 3 }, 3).unwrap();
        assert_eq!(s.question_budget_remaining, Some(2));
        assert_eq!(ctx.color_map.len(), 3);
        assert!(generate_tabletop(2, TaskParams { x: 0, y: 0 }, 3).is_err());
        assert!(generate_tabletop(1, TaskParams { x: 0, y: 0 }, 3).is_err());
    }

    #[test]
    fn budget_refuses_at_zero() {
        let (_, s) = generate_tabletop(2, TaskParams { x: 0, y: 2 }, 1).unwrap();
        let s = consume_question_budget(&s).unwrap();
        assert_eq!(s.question_budget_remaining, Some(0));
        assert_eq!(consume_question_budget(&s), Err(TabletopError::BudgetExhausted));
    }

    #[test]
    fn scene_parse_round_trip() {
        let (ctx, s) = generate_tabletop(3, TaskParams { x: 3, y: 3 }, 9).unwrap();
        let seen = parse_scene(&render_initial(&s, &ctx));
        assert_eq!(seen.len(), s.objects.len());
        for (o, v) in s.objects.iter().zip(&seen) {
            assert_eq!(o.kind, v.kind);
            assert!(dist(o.pose, v.pose) < 0.01);
        }
    }

    #[test]
    fn relative_phrase_example() {
        let text = "A red block is in (0.67, -0.29). A red block is in (0.7, 0.23). A red block is in (0.68, 0.34). \
                    A red block is in (0.51, 0.25).";
        let objects = parse_scene(text)
            .into_iter()
            .enumerate()
            .map(|(i, o)| TableObject { name: format!("red block {}", i + 1), kind: o.kind, color: o.color, pose: o.pose, index: None })
            .collect();
        let s = TabletopState { objects, question_budget_remaining: None, moves: 0, finished: false };
        assert_eq!(relative_position_phrase(&s, "red", "red block 2").unwrap(), "The second red block from the left.");
        assert_eq!(resolve_relative(&s, "red", "The second red block from the left.").unwrap(), "red block 2");
    }
}
