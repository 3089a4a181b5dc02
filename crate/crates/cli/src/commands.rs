//! The four subcommands.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use recode_core::policy::llm::LlmPolicy;
use recode_core::trace::dataset::{pairs_to_jsonl, stats_table};
use recode_core::trace::{cost_report, dataset_stats, extract_pairs, filter_percentile, CostReport, Price};
use recode_core::{
    run_episode, Env, EpisodeTrace, ExternalEnv, GridHouse, Policy, PromptSet, ScriptedPolicy, Termination,
};

use crate::options::{EnvSpec, PolicySpec, RunSpec, SweepArgs};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub id: String,
    pub path: Option<PathBuf>,
    /// The finished trace, or why the episode could not start.
    pub trace: Result<EpisodeTrace, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub episodes: Vec<EpisodeResult>,
    pub mean_reward: f64,
}

impl BatchSummary {
    /// Runtime failure when any episode broke on its environment or policy.
    pub fn check(&self) -> Result<(), CliError> {
        let broken = self
            .episodes
            .iter()
            .filter(|e| match &e.trace {
                Ok(t) => matches!(t.termination, Termination::EnvError | Termination::PolicyError),
                Err(_) => true,
            })
            .count();
        if broken > 0 {
            return Err(CliError::runtime(format!(
                "{broken} of {} episode(s) failed on the environment or policy",
                self.episodes.len()
            )));
        }
        Ok(())
    }
}

fn prompts() -> PromptSet {
    PromptSet::gridhouse()
}

fn run_one(spec: &RunSpec, index: usize) -> Result<EpisodeTrace, String> {
    let mut env: Box<dyn Env> = match &spec.env {
        EnvSpec::Grid(cfg) => Box::new(GridHouse::new(cfg.clone()).map_err(|e| e.to_string())?),
        EnvSpec::External { command, instruction } => {
            Box::new(ExternalEnv::spawn(command, instruction).map_err(|e| e.to_string())?)
        }
    };
    let mut policy: Box<dyn Policy> = match &spec.policy {
        PolicySpec::Scripted(table) => Box::new(ScriptedPolicy::new(table.clone())),
        PolicySpec::Llm(cfg) => Box::new(LlmPolicy::new(cfg.clone()).map_err(|e| e.to_string())?),
    };
    let mut engine = spec.engine.clone();
    engine.rng_seed = engine.rng_seed.wrapping_add(index as u64);
    let mut trace = run_episode(&mut policy, &mut env, &prompts(), &engine);
    trace.id = episode_id(index);
    Ok(trace)
}

fn episode_id(index: usize) -> String {
    format!("episode-{index:04}")
}

/// Run the batch, writing each trace as soon as it finishes.
pub fn cmd_run(spec: &RunSpec, out: &mut dyn Write) -> Result<BatchSummary, CliError> {
    fs::create_dir_all(&spec.trace_dir)
        .map_err(|e| CliError::usage(format!("cannot create trace dir {}: {e}", spec.trace_dir.display())))?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<EpisodeResult>>> = Mutex::new(vec![None; spec.episodes]);
    let write_error: Mutex<Option<String>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..spec.parallel.min(spec.episodes) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= spec.episodes {
                    break;
                }
                let trace = run_one(spec, i);
                let mut path = None;
                if let Ok(t) = &trace {
                    let p = spec.trace_dir.join(format!("{}.json", t.id));
                    match fs::write(&p, t.to_json()) {
                        Ok(()) => path = Some(p),
                        Err(e) => *write_error.lock().unwrap() = Some(format!("cannot write {}: {e}", p.display())),
                    }
                }
                results.lock().unwrap()[i] = Some(EpisodeResult {
                    id: episode_id(i),
                    path,
                    trace,
                });
            });
        }
    });
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(CliError::runtime(e));
    }
    let episodes: Vec<EpisodeResult> = results.into_inner().unwrap().into_iter().flatten().collect();
    let io = |e: std::io::Error| CliError::runtime(format!("cannot write report: {e}"));
    for e in &episodes {
        match &e.trace {
            Ok(t) => writeln!(
                out,
                "{}  reward {:.2}  {:?}  nodes {}  steps {}",
                e.id,
                t.reward,
                t.termination,
                t.root.preorder().len(),
                t.transcript.len()
            ),
            Err(msg) => writeln!(out, "{}  error: {msg}", e.id),
        }
        .map_err(io)?;
    }
    let rewards: Vec<f64> = episodes
        .iter()
        .map(|e| e.trace.as_ref().map(|t| t.reward).unwrap_or(0.0))
        .collect();
    let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
    writeln!(out, "mean reward {mean_reward:.4} over {} episode(s)", episodes.len()).map_err(io)?;
    Ok(BatchSummary { episodes, mean_reward })
}

pub const SWEEP_HEADER: &str = "max_depth,mean_reward,episodes,status";

/// One run batch per max-depth value; cells whose batch broke are marked failed.
pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.values.is_empty() {
        return Err(CliError::usage("--values needs at least one max-depth value"));
    }
    let base = args.run.resolve()?;
    let mut csv = format!("{SWEEP_HEADER}\n");
    for &depth in &args.values {
        let mut spec = base.clone();
        spec.engine.max_depth = depth;
        spec.trace_dir = base.trace_dir.join(format!("depth-{depth}"));
        if let Err(e) = spec.engine.validate() {
            return Err(CliError::usage(e.to_string()));
        }
        let row = match cmd_run(&spec, &mut std::io::sink()) {
            Ok(s) if s.check().is_ok() => format!("{depth},{:.6},{},ok\n", s.mean_reward, s.episodes.len()),
            Ok(s) => format!("{depth},{:.6},{},failed\n", s.mean_reward, s.episodes.len()),
            Err(e) => {
                tracing::warn!(depth, error = %e, "sweep cell failed");
                format!("{depth},,0,failed\n")
            }
        };
        csv.push_str(&row);
    }
    if let Some(path) = &args.out {
        fs::write(path, &csv).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    out.write_all(csv.as_bytes())
        .map_err(|e| CliError::runtime(format!("cannot write report: {e}")))
}

/// Traces in `dir` (sorted by file name) and how many files were skipped.
pub fn load_traces(dir: &Path) -> Result<(Vec<EpisodeTrace>, usize), CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::usage(format!("cannot read trace dir {}: {e}", dir.display())))?;
    let files: BTreeSet<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    let mut traces = Vec::new();
    let mut skipped = 0;
    for path in files {
        let loaded = fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| EpisodeTrace::from_json(&text).map_err(|e| e.to_string()));
        match loaded {
            Ok(t) => traces.push(t),
            Err(e) => {
                tracing::warn!(file = %path.display(), error = %e, "skipping trace");
                skipped += 1;
            }
        }
    }
    if traces.is_empty() {
        return Err(CliError::runtime(format!("no valid traces in {}", dir.display())));
    }
    Ok((traces, skipped))
}

/// Returns the number of pairs written.
pub fn cmd_dataset(dir: &Path, percentile: f64, out_path: &Path, out: &mut dyn Write) -> Result<usize, CliError> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(CliError::usage(format!("--percentile must be in (0, 100], got {percentile}")));
    }
    let (traces, skipped) = load_traces(dir)?;
    let kept = filter_percentile(&traces, percentile).map_err(|e| CliError::runtime(e.to_string()))?;
    let pairs: Vec<_> = kept.iter().flat_map(|t| extract_pairs(t)).collect();
    fs::write(out_path, pairs_to_jsonl(&pairs))
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out_path.display())))?;
    let io = |e: std::io::Error| CliError::runtime(format!("cannot write report: {e}"));
    writeln!(
        out,
        "kept {} of {} trajectories (top {percentile}%)",
        kept.len(),
        traces.len()
    )
    .map_err(io)?;
    if skipped > 0 {
        writeln!(out, "warning: skipped {skipped} unreadable trace file(s)").map_err(io)?;
    }
    match dataset_stats(&pairs) {
        Ok(stats) => write!(out, "{}", stats_table(&[("recode", &stats)])).map_err(io)?,
        Err(_) => writeln!(out, "no successful expansions in the kept trajectories").map_err(io)?,
    }
    Ok(pairs.len())
}

pub fn cmd_cost(dir: &Path, price_in: Price, price_out: Price, out: &mut dyn Write) -> Result<CostReport, CliError> {
    let (traces, skipped) = load_traces(dir)?;
    let report = cost_report(&traces, price_in, price_out);
    let io = |e: std::io::Error| CliError::runtime(format!("cannot write report: {e}"));
    for c in &report.per_trace {
        let mark = if c.estimated { " (estimated)" } else { "" };
        writeln!(
            out,
            "{}  prompt {}  completion {}  {}{mark}",
            c.id, c.prompt_tokens, c.completion_tokens, c.cost
        )
        .map_err(io)?;
    }
    if skipped > 0 {
        writeln!(out, "warning: skipped {skipped} unreadable trace file(s)").map_err(io)?;
    }
    writeln!(out, "total {}  mean {} over {} trace(s)", report.total, report.mean, report.per_trace.len()).map_err(io)?;
    if report.any_estimated {
        writeln!(out, "token counts are estimated for at least one trace").map_err(io)?;
    }
    Ok(report)
}
