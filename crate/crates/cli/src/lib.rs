//! Command-line front end: `run`, `score` and `report`.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O while writing outputs),
//! 2 configuration or input error, 3 generator unavailable without
//! `--fallback-rules`. Every error is also printed to standard error as one
//! JSON object on a single line.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use llema::crystal::{parse_cif, parse_formula, Structure, StructureSource};
use llema::evolve::{run_campaign, CampaignConfig, EvolveError};
use llema::generate::{GenerateError, Generator, LlmGenerator, ReplayGenerator, RetryPolicy, RuleBasedGenerator};
use llema::metrics::summarize;
use llema::oracle::{needed_properties, Oracle, ReferenceDb, RemoteReference, RemoteSurrogate, SyntheticSurrogate, DB_COLUMNS};
use llema::report::{read_records, summary_json, write_campaign, write_metrics, SUMMARY_FILE};
use llema::tasks::{load_task, score_structure, Task, TaskError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GENERATOR_UNAVAILABLE: i32 = 3;

/// Model used by `--generator llm` without an explicit name.
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

#[derive(Debug, Parser)]
#[command(name = "llema", version, about = "Constrained evolutionary search for inorganic materials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an evolutionary campaign and write its output files.
    Run(Box<RunArgs>),
    /// Predict and score a single CIF structure.
    Score(ScoreArgs),
    /// Recompute metrics from a candidates.jsonl record stream.
    Report(ReportArgs),
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Builtin task name or path to a task TOML file.
    #[arg(long)]
    pub task: Option<String>,
    /// `rules`, `replay:PATH`, `llm` or `llm:MODEL`.
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub islands: Option<usize>,
    /// Demonstrations drawn from each pool.
    #[arg(long)]
    pub demos: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reference database CSV; the bundled fixture when omitted.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Iterations per convergence-trace window.
    #[arg(long)]
    pub window: Option<usize>,
    /// `none` or `synthetic[:SEED]`.
    #[arg(long)]
    pub surrogate: Option<String>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub schedule_n: Option<usize>,
    #[arg(long)]
    pub seeds_per_island: Option<usize>,
    #[arg(long)]
    pub pool_capacity: Option<usize>,
    /// Sampling temperature sent to the LLM.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Overwrite an existing summary.json.
    #[arg(long)]
    #[serde(default)]
    pub force: bool,
    /// Continue with the rule-based generator if the configured one is
    /// unavailable.
    #[arg(long)]
    #[serde(default)]
    pub fallback_rules: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// CIF file to score.
    pub cif: PathBuf,
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long)]
    pub surrogate: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// candidates.jsonl written by `run`.
    pub records: PathBuf,
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Directory for summary.json, pareto.csv and coverage.csv; defaults to
    /// the directory holding the records.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An error with its exit code and a stable reason code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit: i32,
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    fn config(code: &'static str, message: impl fmt::Display) -> Self {
        Self { exit: EXIT_CONFIG, code, message: message.to_string() }
    }

    fn failure(code: &'static str, message: impl fmt::Display) -> Self {
        Self { exit: EXIT_FAILURE, code, message: message.to_string() }
    }

    /// The one-line JSON diagnostic.
    pub fn diagnostic(&self) -> String {
        json!({"level": "error", "code": self.code, "message": self.message, "exit": self.exit}).to_string()
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        let code = match e {
            TaskError::UnknownTask(_) => "UnknownTask",
            TaskError::InvalidConstraint(_) => "InvalidConstraint",
            TaskError::Parse { .. } => "TaskParse",
        };
        CliError::config(code, e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Rules,
    Replay(PathBuf),
    Llm(String),
}

impl GeneratorSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.split_once(':') {
            None if s == "rules" => Ok(Self::Rules),
            None if s == "llm" => Ok(Self::Llm(DEFAULT_MODEL.into())),
            Some(("replay", path)) if !path.is_empty() => Ok(Self::Replay(path.into())),
            Some(("llm", model)) if !model.is_empty() => Ok(Self::Llm(model.into())),
            _ => Err(CliError::config("InvalidGenerator", format!("unknown generator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurrogateSpec {
    None,
    Synthetic(u64),
}

impl SurrogateSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::config("InvalidSurrogate", format!("unknown surrogate `{s}`"));
        match s.split_once(':') {
            None if s == "none" => Ok(Self::None),
            None if s == "synthetic" => Ok(Self::Synthetic(0)),
            Some(("synthetic", seed)) => seed.parse().map(Self::Synthetic).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Fully resolved options of `run`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub generator: GeneratorSpec,
    pub db: Option<PathBuf>,
    pub surrogate: SurrogateSpec,
    pub campaign: CampaignConfig,
    pub out: PathBuf,
    pub force: bool,
}

fn read_file_config(path: &Path) -> Result<RunArgs, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config("ConfigFile", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config("ConfigFile", format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Merges flags over the optional config file over the defaults.
    pub fn resolve(flags: &RunArgs) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => read_file_config(path)?,
            None => RunArgs::default(),
        };
        macro_rules! pick {
            ($field:ident) => {
                flags.$field.clone().or(file.$field.clone())
            };
        }
        let task_ref = pick!(task).ok_or_else(|| CliError::config("MissingOption", "--task is required"))?;
        let task = load_task(&task_ref)?;
        let generator = GeneratorSpec::parse(&pick!(generator).unwrap_or_else(|| "rules".into()))?;
        let surrogate = SurrogateSpec::parse(&pick!(surrogate).unwrap_or_else(|| "none".into()))?;
        let out = pick!(out).ok_or_else(|| CliError::config("MissingOption", "--out is required"))?;

        let defaults = CampaignConfig::default();
        let campaign = CampaignConfig {
            islands: pick!(islands).unwrap_or(defaults.islands),
            iterations: pick!(iterations).unwrap_or(defaults.iterations),
            batch: pick!(batch).unwrap_or(defaults.batch),
            demos_per_pool: pick!(demos).unwrap_or(defaults.demos_per_pool),
            t0: pick!(t0).unwrap_or(defaults.t0),
            schedule_n: pick!(schedule_n).unwrap_or(defaults.schedule_n),
            seed: pick!(seed).unwrap_or(defaults.seed),
            seeds_per_island: pick!(seeds_per_island).unwrap_or(defaults.seeds_per_island),
            pool_capacity: pick!(pool_capacity).or(defaults.pool_capacity),
            temperature: pick!(temperature).unwrap_or(defaults.temperature),
            fallback_rules: flags.fallback_rules || file.fallback_rules,
            window: pick!(window).unwrap_or(defaults.window),
        };
        campaign.validate().map_err(|e| CliError::config("InvalidConfig", e))?;
        Ok(Self {
            task,
            generator,
            db: pick!(db),
            surrogate,
            campaign,
            out,
            force: flags.force || file.force,
        })
    }
}

fn load_db(path: Option<&Path>) -> Result<ReferenceDb, CliError> {
    match path {
        Some(p) => ReferenceDb::from_path(p).map_err(|e| CliError::config("InvalidDb", format!("{}: {e}", p.display()))),
        None => Ok(ReferenceDb::fixture()),
    }
}

/// Reference database plus the configured surrogate; the remote reference
/// and remote surrogate are attached when their environment variables are
/// set.
pub fn build_oracle(db: Option<&Path>, surrogate: SurrogateSpec) -> Result<Oracle, CliError> {
    let mut oracle = Oracle::new(load_db(db)?);
    if let Some(remote) = RemoteReference::from_env() {
        oracle = oracle.with_remote(remote);
    }
    if let SurrogateSpec::Synthetic(seed) = surrogate {
        oracle = oracle.with_surrogate(SyntheticSurrogate::new(seed));
    }
    if let Some(remote) = RemoteSurrogate::from_env(DB_COLUMNS.to_vec()) {
        oracle = oracle.with_surrogate(remote);
    }
    Ok(oracle)
}

fn rules_generator(seed: u64, db: &ReferenceDb) -> RuleBasedGenerator {
    let parents = db
        .iter()
        .filter_map(|(f, _)| Structure::placeholder(&parse_formula(f).ok()?, StructureSource::Reference).ok())
        .collect();
    RuleBasedGenerator::new(seed).with_cold_start(parents)
}

fn unavailable(reason: impl fmt::Display) -> CliError {
    CliError { exit: EXIT_GENERATOR_UNAVAILABLE, code: "GeneratorUnavailable", message: reason.to_string() }
}

fn build_generator(cfg: &RunConfig, db: &ReferenceDb) -> Result<Box<dyn Generator>, CliError> {
    match &cfg.generator {
        GeneratorSpec::Rules => Ok(Box::new(rules_generator(cfg.campaign.seed, db))),
        GeneratorSpec::Replay(path) => ReplayGenerator::open(path)
            .map(|g| Box::new(g) as Box<dyn Generator>)
            .map_err(|e| CliError::config("ReplayFile", e)),
        GeneratorSpec::Llm(model) => match LlmGenerator::from_env(model.clone(), RetryPolicy::default()) {
            Ok(g) => Ok(Box::new(g)),
            Err(e) if cfg.campaign.fallback_rules => {
                log::warn!("{e}; using the rule-based generator");
                Ok(Box::new(rules_generator(cfg.campaign.seed, db)))
            }
            Err(e) => Err(unavailable(e)),
        },
    }
}

fn report_result(result: Result<(), CliError>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let summary = cfg.out.join(SUMMARY_FILE);
    if summary.exists() && !cfg.force {
        return Err(CliError::config(
            "OutputExists",
            format!("{} exists; pass --force to overwrite", summary.display()),
        ));
    }
    let oracle = build_oracle(cfg.db.as_deref(), cfg.surrogate)?;
    let mut generator = build_generator(cfg, oracle.db())?;
    let result = run_campaign(&cfg.task, &mut *generator, &oracle, &cfg.campaign).map_err(|e| match e {
        EvolveError::InvalidConfig(m) => CliError::config("InvalidConfig", m),
        EvolveError::Generator(GenerateError::GeneratorUnavailable(m)) => unavailable(m),
        EvolveError::Generator(e) => CliError::failure("Generator", e),
    })?;
    write_campaign(&cfg.out, &cfg.task, &result).map_err(|e| CliError::failure("Io", e))?;
    let m = &result.metrics;
    println!(
        "{} records, hit rate {:.2}%, stability {:.2}%, written to {}",
        m.records,
        m.hit_rate,
        m.stability_rate,
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    report_result(RunConfig::resolve(args).and_then(|cfg| run(&cfg)))
}

pub fn score(args: &ScoreArgs) -> Result<serde_json::Value, CliError> {
    let task = load_task(&args.task)?;
    let surrogate = SurrogateSpec::parse(args.surrogate.as_deref().unwrap_or("none"))?;
    let text = std::fs::read_to_string(&args.cif)
        .map_err(|e| CliError::config("CifFile", format!("{}: {e}", args.cif.display())))?;
    let structure = parse_cif(&text).map_err(|e| CliError::config(e.code(), format!("{}: {e}", args.cif.display())))?;
    let oracle = build_oracle(args.db.as_deref(), surrogate)?;
    let properties = oracle.predict(&structure, &needed_properties(&task));
    let score = score_structure(&properties, &structure, &task);
    Ok(json!({
        "formula": structure.reduced_formula(),
        "task": task.name(),
        "properties": properties,
        "score": score,
    }))
}

pub fn cmd_score(args: &ScoreArgs) -> i32 {
    report_result(score(args).map(|v| println!("{}", serde_json::to_string_pretty(&v).expect("json serializes"))))
}

pub fn report(args: &ReportArgs) -> Result<String, CliError> {
    let task = load_task(&args.task)?;
    let records = read_records(&args.records).map_err(|e| CliError::config("Records", e))?;
    let db = load_db(args.db.as_deref())?;
    let window = args.window.unwrap_or(CampaignConfig::default().window);
    if window == 0 {
        return Err(CliError::config("InvalidConfig", "window must be at least 1"));
    }
    let metrics = summarize(&records, &task, &db, window);
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => args.records.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    write_metrics(&out, &records, &task, &metrics).map_err(|e| CliError::failure("Io", e))?;
    Ok(summary_json(&metrics))
}

pub fn cmd_report(args: &ReportArgs) -> i32 {
    report_result(report(args).map(|s| print!("{s}")))
}

/// Parses `argv` and dispatches. Clap usage errors exit with code 2.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let err = CliError::config("Usage", e.to_string().lines().next().unwrap_or_default());
            eprintln!("{}", err.diagnostic());
            return err.exit;
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Score(a) => cmd_score(a),
        Command::Report(a) => cmd_report(a),
    }
}
