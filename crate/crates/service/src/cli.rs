//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error and
//! 3 when `eval` thresholds are not met.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use askloop_core::fixtures::{replay_fixture, Fixture, FixtureError};
use askloop_core::ftdata::{build_corpus, export_corpus, FtError, DEFAULT_AUGMENT};
use askloop_core::harness::{run_episode, run_many, Policy};
use askloop_core::household::LayoutPool;
use askloop_core::metrics::{check_thresholds, compute_metrics, emit_report, GroupKey, MetricsError, ReportFormat, Threshold};
use askloop_core::oracle::{probe_accuracy, NoiseMode, NoisyOracle};
use askloop_core::policies::{CandidateMode, HttpEndpoint, PolicyKind, PromptBundle, RemotePolicy};
use askloop_core::records::{load_records, save_records, RecordsError};
use askloop_core::scenario::{ScenarioError, ScenarioSpec};
use askloop_core::seeding::derive_seed;
use askloop_core::mdp::StepError;
use askloop_core::{Context, EnvKind, EpisodeLimits, EpisodeRecord, Oracle, RuleOracle, Variant};

use crate::server::{serve, AppState};
use crate::session::SessionConfig;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Records(#[from] RecordsError),
    #[error(transparent)]
    Data(#[from] FtError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("prompt: {0}")]
    Prompt(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "askloop", version, about = "Simulate, evaluate and serve agents that can ask before acting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a context and write it as JSON.
    Gen(GenArgs),
    /// Run episodes and write a records file.
    Run(RunArgs),
    /// Collect corrupted demonstrations and export training datasets.
    Ftdata(FtdataArgs),
    /// Aggregate records into a report.
    Eval(EvalArgs),
    /// Measure oracle accuracy on where-is probes.
    ProbeOracle(ProbeArgs),
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long, default_value = "household", value_parser = parse_env)]
    pub env: EnvKind,
    #[arg(long, default_value = "standard", value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long, default_value = "id", value_parser = parse_pool)]
    pub pool: LayoutPool,
    /// Tabletop task (1, 2 or 3).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub task: u8,
    /// Red blocks (tabletop tasks 1 and 3).
    #[arg(long, default_value_t = 3)]
    pub x: u32,
    /// Bases (tabletop tasks 2 and 3).
    #[arg(long, default_value_t = 3)]
    pub y: u32,
}

impl ScenarioArgs {
    pub fn spec(&self) -> ScenarioSpec {
        match self.env {
            EnvKind::Household => ScenarioSpec::household(self.variant, self.pool),
            EnvKind::Tabletop => ScenarioSpec::tabletop(self.task, self.x, self.y),
        }
    }
}

fn parse_env(s: &str) -> Result<EnvKind, String> {
    match s {
        "household" => Ok(EnvKind::Household),
        "tabletop" => Ok(EnvKind::Tabletop),
        _ => Err(format!("unknown env `{s}`")),
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse::<Variant>().map_err(|_| format!("unknown variant `{s}`"))
}

fn parse_pool(s: &str) -> Result<LayoutPool, String> {
    s.parse::<LayoutPool>().map_err(|_| format!("unknown pool `{s}`"))
}

/// Seed list from `a..b` and `a..=b` (both inclusive), `a,b,c`, or a single seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    parse_seed_list(s).map(Seeds)
}

fn parse_seed_list(s: &str) -> Result<Vec<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad seed `{t}`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if b < a {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleChoice {
    Rule,
    Noisy,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value = "rule")]
    pub oracle: OracleChoice,
    /// Probability of a noisy reply.
    #[arg(long, default_value_t = 0.275)]
    pub noise_q: f64,
    #[arg(long, default_value = "unhelpful", value_parser = parse_noise_mode)]
    pub noise_mode: NoiseMode,
}

fn parse_noise_mode(s: &str) -> Result<NoiseMode, String> {
    match s {
        "unhelpful" => Ok(NoiseMode::Unhelpful),
        "wrong-target" => Ok(NoiseMode::WrongTarget),
        _ => Err(format!("unknown noise mode `{s}`")),
    }
}

impl OracleArgs {
    pub fn build(&self, ctx: &Context, seed: u64) -> Box<dyn Oracle> {
        match self.oracle {
            OracleChoice::Rule => Box::new(RuleOracle::new(ctx)),
            OracleChoice::Noisy => Box::new(NoisyOracle::new(
                RuleOracle::new(ctx),
                self.noise_q,
                self.noise_mode,
                derive_seed(seed, "cli-oracle", ctx.seed),
                ctx.task.object_class.clone(),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "scripted-aba")]
    pub policy: String,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value = "0..9", value_parser = parse_seeds)]
    pub seeds: Seeds,
    /// Horizon.
    #[arg(long = "T", alias = "horizon", default_value_t = 50)]
    pub horizon: usize,
    /// Stop multiround episodes after this many tasks.
    #[arg(long)]
    pub max_tasks: Option<u32>,
    /// Completion endpoint URL for the remote policy.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Prompt bundle file for the remote policy; the bundled one otherwise.
    #[arg(long)]
    pub prompt: Option<PathBuf>,
    /// Number of in-context examples to keep.
    #[arg(long)]
    pub k: Option<usize>,
    /// Score admissible actions instead of free generation.
    #[arg(long)]
    pub score_admissible: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FtdataArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_AUGMENT)]
    pub augment: usize,
    #[arg(long = "T", alias = "horizon", default_value_t = 50)]
    pub horizon: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Records files to aggregate.
    #[arg(long, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// Replay a bundled fixture instead of reading records.
    #[arg(long)]
    pub fixture: Option<String>,
    /// text, structured or plot-data.
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Comma-separated row keys: policy, env, variant, layout.
    #[arg(long, default_value = "policy")]
    pub group: String,
    /// Bounds on the All column, e.g. `success_rate>=90`.
    #[arg(long)]
    pub threshold: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value_t = 8)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 5)]
    pub questions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ASKLOOP_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, default_value_t = 1800)]
    pub idle_timeout_secs: u64,
    /// Completion endpoint for sessions using the remote policy.
    #[arg(long)]
    pub endpoint: Option<String>,
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn write_out(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn gen(a: &GenArgs) -> Result<i32, CliError> {
    let ctx = a.scenario.spec().context(a.seed)?;
    let mut text = serde_json::to_string_pretty(&ctx)?;
    text.push('\n');
    write_out(a.out.as_ref(), text.as_bytes())?;
    Ok(0)
}

fn remote_policy(a: &RunArgs) -> Result<RemotePolicy, CliError> {
    let url = a.endpoint.clone().ok_or_else(|| CliError::Usage("--policy remote needs --endpoint".into()))?;
    let mut bundle = match &a.prompt {
        Some(p) => PromptBundle::load(p).map_err(|e| CliError::Prompt(e.to_string()))?,
        None => PromptBundle::builtin(a.scenario.env),
    };
    if let Some(k) = a.k {
        bundle = bundle.with_k(k);
    }
    let mut p = RemotePolicy::new(Box::new(HttpEndpoint::new(url).with_retries(3, Duration::from_millis(500))), bundle);
    if a.score_admissible {
        p = p.with_candidates(CandidateMode::Admissible);
    }
    Ok(p)
}

fn run(a: &RunArgs) -> Result<i32, CliError> {
    let kind: PolicyKind = a.policy.parse().map_err(CliError::Usage)?;
    let spec = a.scenario.spec();
    let contexts = a.seeds.0.iter().map(|s| spec.context(*s)).collect::<Result<Vec<_>, _>>()?;
    let limits = EpisodeLimits { horizon: a.horizon, max_tasks: a.max_tasks, ..EpisodeLimits::default() };
    let records: Vec<EpisodeRecord> = if kind == PolicyKind::Remote {
        let mut policy = remote_policy(a)?;
        let mut out = Vec::new();
        for ctx in &contexts {
            let mut oracle = a.oracle.build(ctx, ctx.seed);
            out.push(run_episode(ctx, &mut policy as &mut dyn Policy, oracle.as_mut(), limits)?);
        }
        out
    } else {
        run_many(
            &contexts,
            |_| kind.build_local().expect("local policy"),
            |ctx| a.oracle.build(ctx, ctx.seed),
            limits,
        )
        .into_iter()
        .collect::<Result<_, _>>()?
    };
    save_records(&a.out, &records)?;
    let wins = records.iter().filter(|r| r.success()).count();
    eprintln!("{} episodes, {} successful, written to {}", records.len(), wins, a.out.display());
    Ok(0)
}

fn ftdata(a: &FtdataArgs) -> Result<i32, CliError> {
    let limits = EpisodeLimits { horizon: a.horizon, ..EpisodeLimits::default() };
    let spec = a.scenario.spec();
    let corpus = build_corpus(&spec, a.n, a.p, a.seed, a.augment, limits)?;
    let m = export_corpus(&a.out, &corpus, &spec, a.n, a.p, a.seed, a.augment)?;
    eprintln!(
        "{} episodes, {} policy records ({} masked), {} qa records, written to {}",
        m.counts.episodes,
        m.counts.policy_records,
        m.counts.masked_records,
        m.counts.qa_records,
        a.out.display()
    );
    Ok(0)
}

fn eval(a: &EvalArgs) -> Result<i32, CliError> {
    let format: ReportFormat = a.format.parse().map_err(|e: MetricsError| CliError::Usage(e.to_string()))?;
    let keys = a
        .group
        .split(',')
        .filter(|k| !k.trim().is_empty())
        .map(|k| k.trim().parse::<GroupKey>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let thresholds = a
        .threshold
        .iter()
        .map(|t| t.parse::<Threshold>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut records = Vec::new();
    if let Some(name) = &a.fixture {
        let fx = Fixture::builtin(name).map_err(|e| CliError::Usage(e.to_string()))?;
        records.push(replay_fixture(&fx)?.record);
    }
    for p in &a.records {
        records.extend(load_records(p)?);
    }
    if records.is_empty() {
        return Err(CliError::Usage("give --records or --fixture".into()));
    }
    let table = compute_metrics(&records, &keys)?;
    let mut buf = Vec::new();
    emit_report(&mut buf, &table, format)?;
    write_out(a.out.as_ref(), &buf)?;
    let results = check_thresholds(&table, &thresholds)?;
    let mut ok = true;
    for r in &results {
        let v = r.value.map_or("-".to_string(), |v| format!("{v}"));
        eprintln!("{} {} {} = {}", if r.pass { "PASS" } else { "FAIL" }, r.row, r.metric, v);
        ok &= r.pass;
    }
    Ok(if ok { 0 } else { EXIT_THRESHOLD })
}

fn probe(a: &ProbeArgs) -> Result<i32, CliError> {
    let spec = ScenarioSpec::household(Variant::Standard, LayoutPool::Id);
    let scenarios = (0..a.scenarios as u64)
        .map(|i| spec.context(derive_seed(a.seed, "probe-scenario", i)))
        .collect::<Result<Vec<_>, _>>()?;
    let report = probe_accuracy(&scenarios, a.questions, a.seed, |ctx| a.oracle.build(ctx, a.seed));
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(0)
}

fn serve_cmd(a: &ServeArgs) -> Result<i32, CliError> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.addr).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        let app = AppState::new(SessionConfig { endpoint: a.endpoint.clone() }, Duration::from_secs(a.idle_timeout_secs));
        serve(listener, app).await
    })?;
    Ok(0)
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Ftdata(a) => ftdata(a),
        Command::Eval(a) => eval(a),
        Command::ProbeOracle(a) => probe(a),
        Command::Serve(a) => serve_cmd(a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..99").unwrap().0.len(), 100);
        assert_eq!(parse_seeds("3..=4").unwrap().0, vec![3, 4]);
        assert_eq!(parse_seeds("1,5").unwrap().0, vec![1, 5]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
