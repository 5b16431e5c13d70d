//! Evaluation aggregates over episode records.
//!
//! Records are grouped into rows by the chosen keys and into columns by task
//! kind, with an extra `All` column per row. Episode length is the number of
//! actions taken (physical, reasoning and questions); standard deviations
//! are population deviations over episodes.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::EpisodeRecord;
use crate::mdp::{EnvKind, TaskKind};

pub const METRICS_VERSION: u32 = 1;
pub const ALL_COLUMN: &str = "All";
pub const STD_NOTE: &str = "std: population standard deviation over episodes; length counts every action.";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    EmptyGroup,
    #[error("row `{0}` mixes environment families")]
    MixedEnv(String),
    #[error("unsupported report format `{0}`")]
    UnsupportedFormat(String),
    #[error("unknown grouping key `{0}`")]
    UnknownKey(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Row grouping keys. Columns are always task kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Policy,
    Env,
    Variant,
    Layout,
}

impl GroupKey {
    fn value(self, r: &EpisodeRecord) -> String {
        match self {
            GroupKey::Policy => r.policy.clone(),
            GroupKey::Env => r.context.env_kind.as_str().to_string(),
            GroupKey::Variant => r.context.variant.as_str().to_string(),
            GroupKey::Layout => r.context.layout_id.clone(),
        }
    }
}

impl FromStr for GroupKey {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "policy" => Ok(GroupKey::Policy),
            "env" => Ok(GroupKey::Env),
            "variant" => Ok(GroupKey::Variant),
            "layout" => Ok(GroupKey::Layout),
            _ => Err(MetricsError::UnknownKey(s.into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics; sorts first so the result does not depend on
    /// record order.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
        dev.sort_by(f64::total_cmp);
        Some(Self { mean, std: (dev.iter().sum::<f64>() / n).sqrt() })
    }

    pub fn render(&self) -> String {
        format!("{:.1}±{:.1}", self.mean, self.std)
    }
}

/// Percentage rounded half-up to one decimal.
pub fn percent(successes: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    // floor(1000 s / t + 1/2) in integers, so exact halves round up.
    let tenths = (2000 * successes as u64 + total as u64) / (2 * total as u64);
    tenths as f64 / 10.0
}

/// One cell: a row group restricted to one task column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub row: Vec<String>,
    pub column: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub length_succ: Option<MeanStd>,
    pub length_all: MeanStd,
    pub actions_succ: Option<MeanStd>,
    pub actions_all: MeanStd,
    /// Mean questions over successful episodes.
    pub questions_succ: Option<f64>,
    pub reward_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub version: u32,
    pub keys: Vec<GroupKey>,
    /// Column labels in display order, ending with `All`.
    pub columns: Vec<String>,
    pub cells: Vec<CellMetrics>,
}

impl MetricsTable {
    pub fn rows(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.row) {
                out.push(c.row.clone());
            }
        }
        out
    }

    pub fn cell(&self, row: &[String], column: &str) -> Option<&CellMetrics> {
        self.cells.iter().find(|c| c.row == row && c.column == column)
    }

    /// The `All` cell of a row.
    pub fn total(&self, row: &[String]) -> Option<&CellMetrics> {
        self.cell(row, ALL_COLUMN)
    }
}

fn cell(row: Vec<String>, column: String, recs: &[&EpisodeRecord]) -> CellMetrics {
    let succ: Vec<&&EpisodeRecord> = recs.iter().filter(|r| r.success()).collect();
    let lens = |v: &[&&EpisodeRecord]| v.iter().map(|r| r.len() as f64).collect::<Vec<_>>();
    let acts = |v: &[&&EpisodeRecord]| v.iter().map(|r| r.physical_count() as f64).collect::<Vec<_>>();
    let all: Vec<&&EpisodeRecord> = recs.iter().collect();
    CellMetrics {
        row,
        column,
        episodes: recs.len(),
        successes: succ.len(),
        success_rate: percent(succ.len(), recs.len()),
        length_succ: MeanStd::of(&lens(&succ)),
        length_all: MeanStd::of(&lens(&all)).expect("cells are non-empty"),
        actions_succ: MeanStd::of(&acts(&succ)),
        actions_all: MeanStd::of(&acts(&all)).expect("cells are non-empty"),
        questions_succ: MeanStd::of(&succ.iter().map(|r| r.ask_count() as f64).collect::<Vec<_>>()).map(|m| m.mean),
        reward_mean: MeanStd::of(&recs.iter().map(|r| r.total_reward()).collect::<Vec<_>>()).expect("cells are non-empty").mean,
    }
}

pub fn compute_metrics(records: &[EpisodeRecord], keys: &[GroupKey]) -> Result<MetricsTable, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    let mut rows: BTreeMap<Vec<String>, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        rows.entry(keys.iter().map(|k| k.value(r)).collect()).or_default().push(r);
    }
    let mut kinds: Vec<TaskKind> = Vec::new();
    let mut household = false;
    for (row, recs) in &rows {
        let env = recs[0].context.env_kind;
        if recs.iter().any(|r| r.context.env_kind != env) {
            return Err(MetricsError::MixedEnv(row.join("/")));
        }
        household |= env == EnvKind::Household;
        for r in recs {
            if !kinds.contains(&r.context.task.kind) {
                kinds.push(r.context.task.kind);
            }
        }
    }
    if household {
        kinds.extend(TaskKind::HOUSEHOLD);
    }
    kinds.sort();
    kinds.dedup();
    let mut columns: Vec<String> = kinds.iter().map(|k| k.label().to_string()).collect();
    columns.push(ALL_COLUMN.into());

    let mut cells = Vec::new();
    for (row, recs) in rows {
        for k in &kinds {
            let sub: Vec<&EpisodeRecord> = recs.iter().copied().filter(|r| r.context.task.kind == *k).collect();
            if !sub.is_empty() {
                cells.push(cell(row.clone(), k.label().to_string(), &sub));
            }
        }
        cells.push(cell(row, ALL_COLUMN.into(), &recs));
    }
    Ok(MetricsTable { version: METRICS_VERSION, keys: keys.to_vec(), columns, cells })
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
    PlotData,
}

impl FromStr for ReportFormat {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "structured" | "json" => Ok(ReportFormat::Structured),
            "plot-data" | "csv" => Ok(ReportFormat::PlotData),
            _ => Err(MetricsError::UnsupportedFormat(s.into())),
        }
    }
}

fn row_label(row: &[String]) -> String {
    if row.is_empty() {
        "all".into()
    } else {
        row.join(" / ")
    }
}

/// Success-rate grid followed by an efficiency block.
pub fn render_text(table: &MetricsTable) -> String {
    let rows = table.rows();
    let label_w = rows.iter().map(|r| row_label(r).len()).max().unwrap_or(0).max(6);
    let col_w = table.columns.iter().map(|c| c.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    out.push_str("Success rate (%)\n");
    out.push_str(&format!("{:<label_w$}", "Method"));
    for c in &table.columns {
        out.push_str(&format!(" | {c:>col_w$}"));
    }
    out.push('\n');
    for row in &rows {
        out.push_str(&format!("{:<label_w$}", row_label(row)));
        for c in &table.columns {
            let v = table.cell(row, c).map_or("-".to_string(), |m| format!("{:.1}", m.success_rate));
            out.push_str(&format!(" | {v:>col_w$}"));
        }
        out.push('\n');
    }
    out.push_str("\nEfficiency (All)\n");
    out.push_str(&format!(
        "{:<label_w$} | {:>8} | {:>12} | {:>12} | {:>12} | {:>9} | {:>8}\n",
        "Method", "Episodes", "Length[Succ]", "Length[All]", "#Actions", "Questions", "Reward"
    ));
    for row in &rows {
        let Some(m) = table.total(row) else { continue };
        let opt = |v: Option<MeanStd>| v.map_or("-".to_string(), |v| v.render());
        out.push_str(&format!(
            "{:<label_w$} | {:>8} | {:>12} | {:>12} | {:>12} | {:>9} | {:>8.2}\n",
            row_label(row),
            m.episodes,
            opt(m.length_succ),
            m.length_all.render(),
            opt(m.actions_succ),
            m.questions_succ.map_or("-".to_string(), |q| format!("{q:.2}")),
            m.reward_mean
        ));
    }
    out.push('\n');
    out.push_str(STD_NOTE);
    out.push('\n');
    out
}

/// Metric names used in plot data.
pub const PLOT_METRICS: [&str; 9] = [
    "success_rate",
    "length_succ_mean",
    "length_succ_std",
    "length_all_mean",
    "length_all_std",
    "actions_succ_mean",
    "actions_succ_std",
    "questions_succ_mean",
    "reward_mean",
];

/// Looks a named metric up in a cell.
pub fn metric_value(c: &CellMetrics, name: &str) -> Result<Option<f64>, MetricsError> {
    Ok(match name {
        "success_rate" => Some(c.success_rate),
        "episodes" => Some(c.episodes as f64),
        "length_succ_mean" => c.length_succ.map(|m| m.mean),
        "length_succ_std" => c.length_succ.map(|m| m.std),
        "length_all_mean" => Some(c.length_all.mean),
        "length_all_std" => Some(c.length_all.std),
        "actions_succ_mean" => c.actions_succ.map(|m| m.mean),
        "actions_succ_std" => c.actions_succ.map(|m| m.std),
        "actions_all_mean" => Some(c.actions_all.mean),
        "questions_succ_mean" => c.questions_succ,
        "reward_mean" => Some(c.reward_mean),
        _ => return Err(MetricsError::UnknownMetric(name.into())),
    })
}

/// One CSV row per (group, column, metric); undefined metrics are omitted.
pub fn write_plot_data<W: Write>(w: W, table: &MetricsTable) -> Result<(), MetricsError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["group", "column", "metric", "value"])?;
    for c in &table.cells {
        for m in PLOT_METRICS {
            if let Some(v) = metric_value(c, m)? {
                csv.write_record([row_label(&c.row), c.column.clone(), m.to_string(), v.to_string()])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn emit_report<W: Write>(mut w: W, table: &MetricsTable, format: ReportFormat) -> Result<(), MetricsError> {
    if table.cells.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    match format {
        ReportFormat::Text => w.write_all(render_text(table).as_bytes())?,
        ReportFormat::Structured => {
            serde_json::to_writer_pretty(&mut w, table)?;
            w.write_all(b"\n")?;
        }
        ReportFormat::PlotData => write_plot_data(&mut w, table)?,
    }
    Ok(())
}

pub fn parse_structured(text: &str) -> Result<MetricsTable, MetricsError> {
    Ok(serde_json::from_str(text)?)
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// A bound checked against the `All` cell of every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

impl FromStr for Threshold {
    type Err = MetricsError;
    /// `metric>=v` or `metric<=v`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MetricsError::UnknownMetric(s.to_string());
        if let Some((m, v)) = s.split_once(">=") {
            let v = v.trim().parse().map_err(|_| bad())?;
            return Ok(Threshold { metric: m.trim().into(), min: Some(v), max: None });
        }
        if let Some((m, v)) = s.split_once("<=") {
            let v = v.trim().parse().map_err(|_| bad())?;
            return Ok(Threshold { metric: m.trim().into(), min: None, max: Some(v) });
        }
        Err(bad())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub row: String,
    pub metric: String,
    pub value: Option<f64>,
    pub pass: bool,
}

pub fn check_thresholds(table: &MetricsTable, thresholds: &[Threshold]) -> Result<Vec<ThresholdResult>, MetricsError> {
    let mut out = Vec::new();
    for row in table.rows() {
        let Some(c) = table.total(&row) else { continue };
        for t in thresholds {
            let value = metric_value(c, &t.metric)?;
            let pass = value.is_some_and(|v| t.min.is_none_or(|m| v >= m) && t.max.is_none_or(|m| v <= m));
            out.push(ThresholdResult { row: row_label(&row), metric: t.metric.clone(), value, pass });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rounds_half_up() {
        assert_eq!(percent(2, 3), 66.7);
        assert_eq!(percent(1, 3), 33.3);
        assert_eq!(percent(1, 8), 12.5);
        assert_eq!(percent(1, 16), 6.3);
        assert_eq!(percent(3, 16), 18.8);
        assert_eq!(percent(0, 5), 0.0);
        assert_eq!(percent(5, 5), 100.0);
    }

    #[test]
    fn mean_std_is_population() {
        let m = MeanStd::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!((m.mean, m.std), (5.0, 2.0));
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn thresholds_parse() {
        let t: Threshold = "success_rate>=90".parse().unwrap();
        assert_eq!(t.min, Some(90.0));
        assert!("success_rate=90".parse::<Threshold>().is_err());
    }

    #[test]
    fn formats_parse() {
        assert_eq!("plot-data".parse::<ReportFormat>().unwrap(), ReportFormat::PlotData);
        assert!(matches!("xml".parse::<ReportFormat>(), Err(MetricsError::UnsupportedFormat(_))));
    }
}
