//! Command-line flags, the optional TOML config file, and their merge into
//! fully resolved specs.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use recode_core::policy::llm::LlmConfig;
use recode_core::trace::Price;
use recode_core::{EngineConfig, GridHouseConfig, ScriptTable};
use serde::Deserialize;

use crate::CliError;

pub const API_KEY_VAR: &str = "RECODE_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";

#[derive(Debug, Parser)]
#[command(name = "recode", version, about = "Run recursive code-expansion agents and build datasets from their traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run episodes and write one trace file per episode.
    Run(RunArgs),
    /// Repeat a run batch for several max-depth values and print a CSV.
    Sweep(SweepArgs),
    /// Filter traces by reward percentile and write SFT pairs as JSON lines.
    Dataset(DatasetArgs),
    /// Price the token meters of stored traces.
    Cost(CostArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// `grid:<house.json>` or `external:<shell command>`.
    #[arg(long)]
    pub env: Option<String>,
    /// `scripted:<table.json>` or `llm`.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub retries: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallel: Option<usize>,
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    /// Task text for external environments, which only report observations.
    #[arg(long)]
    pub instruction: Option<String>,
    /// TOML file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated max-depth values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<usize>,
    /// Write the CSV here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub trace_dir: PathBuf,
    #[arg(long, default_value_t = 40.0)]
    pub percentile: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CostArgs {
    #[arg(long)]
    pub trace_dir: PathBuf,
    /// Dollars per million prompt tokens.
    #[arg(long)]
    pub price_in: Price,
    /// Dollars per million completion tokens.
    #[arg(long)]
    pub price_out: Price,
}

/// Keys accepted in the config file; flags win over them.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    env: Option<String>,
    policy: Option<String>,
    model: Option<String>,
    endpoint: Option<String>,
    max_depth: Option<usize>,
    retries: Option<usize>,
    max_steps: Option<usize>,
    episodes: Option<usize>,
    seed: Option<u64>,
    parallel: Option<usize>,
    trace_dir: Option<PathBuf>,
    instruction: Option<String>,
}

#[derive(Debug, Clone)]
pub enum EnvSpec {
    Grid(GridHouseConfig),
    External { command: String, instruction: String },
}

#[derive(Debug, Clone)]
pub enum PolicySpec {
    Scripted(ScriptTable),
    Llm(LlmConfig),
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub env: EnvSpec,
    pub policy: PolicySpec,
    pub engine: EngineConfig,
    pub trace_dir: PathBuf,
    pub episodes: usize,
    pub parallel: usize,
}

fn read(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {what} {}: {e}", path.display())))
}

impl RunArgs {
    fn merged(&self) -> Result<RunArgs, CliError> {
        let file: FileConfig = match &self.config {
            Some(path) => toml::from_str(&read(path, "config file")?)
                .map_err(|e| CliError::usage(format!("invalid config file {}: {e}", path.display())))?,
            None => FileConfig::default(),
        };
        Ok(RunArgs {
            env: self.env.clone().or(file.env),
            policy: self.policy.clone().or(file.policy),
            model: self.model.clone().or(file.model),
            endpoint: self.endpoint.clone().or(file.endpoint),
            max_depth: self.max_depth.or(file.max_depth),
            retries: self.retries.or(file.retries),
            max_steps: self.max_steps.or(file.max_steps),
            episodes: self.episodes.or(file.episodes),
            seed: self.seed.or(file.seed),
            parallel: self.parallel.or(file.parallel),
            trace_dir: self.trace_dir.clone().or(file.trace_dir),
            instruction: self.instruction.clone().or(file.instruction),
            config: None,
        })
    }

    /// Load every referenced file and check the combination.
    pub fn resolve(&self) -> Result<RunSpec, CliError> {
        let a = self.merged()?;
        let env = match a.env.as_deref() {
            Some(s) => match s.split_once(':') {
                Some(("grid", path)) => {
                    let path = Path::new(path);
                    let cfg = GridHouseConfig::from_json(&read(path, "house file")?)
                        .map_err(|e| CliError::usage(format!("invalid house file {}: {e}", path.display())))?;
                    cfg.validate()
                        .map_err(|e| CliError::usage(format!("invalid house file {}: {e}", path.display())))?;
                    EnvSpec::Grid(cfg)
                }
                Some(("external", command)) if !command.trim().is_empty() => EnvSpec::External {
                    command: command.to_string(),
                    instruction: a
                        .instruction
                        .clone()
                        .ok_or_else(|| CliError::usage("--instruction is required with an external env"))?,
                },
                _ => return Err(CliError::usage(format!("--env must be grid:PATH or external:COMMAND, got '{s}'"))),
            },
            None => return Err(CliError::usage("--env is required")),
        };
        let policy = match a.policy.as_deref() {
            Some("llm") => {
                let model = a
                    .model
                    .clone()
                    .ok_or_else(|| CliError::usage("--model is required with --policy llm"))?;
                let endpoint = a.endpoint.clone().unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());
                PolicySpec::Llm(LlmConfig {
                    api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
                    timeout: Duration::from_secs(60),
                    ..LlmConfig::new(endpoint, model)
                })
            }
            Some(s) => match s.split_once(':') {
                Some(("scripted", path)) => {
                    let path = Path::new(path);
                    let table = ScriptTable::from_json(&read(path, "script file")?)
                        .map_err(|e| CliError::usage(format!("invalid script file {}: {e}", path.display())))?;
                    PolicySpec::Scripted(table)
                }
                _ => return Err(CliError::usage(format!("--policy must be scripted:PATH or llm, got '{s}'"))),
            },
            None => return Err(CliError::usage("--policy is required")),
        };
        let defaults = EngineConfig::default();
        let engine = EngineConfig {
            max_depth: a.max_depth.unwrap_or(defaults.max_depth),
            max_retries: a.retries.unwrap_or(defaults.max_retries),
            max_env_steps: a.max_steps.unwrap_or(defaults.max_env_steps),
            rng_seed: a.seed.unwrap_or(defaults.rng_seed),
            ..defaults
        };
        engine.validate().map_err(|e| CliError::usage(e.to_string()))?;
        let episodes = a.episodes.unwrap_or(1);
        let parallel = a.parallel.unwrap_or(1);
        if episodes == 0 || parallel == 0 {
            return Err(CliError::usage("--episodes and --parallel must be at least 1"));
        }
        Ok(RunSpec {
            env,
            policy,
            engine,
            trace_dir: a.trace_dir.unwrap_or_else(|| PathBuf::from("traces")),
            episodes,
            parallel,
        })
    }
}
