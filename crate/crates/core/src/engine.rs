//! Recursive expansion of placeholder calls into executed code.
//!
//! The root task becomes `solve(instruction, observation)`. Each node asks the
//! policy for a code block, then runs its top-level statements in order:
//! plain statements go to the interpreter, placeholder calls become child
//! nodes that are expanded depth-first before the next statement runs.

use std::time::Instant;

use recode_minilang::{
    parse, print_stmt, validate, ActionExecutor, CodeUnit, ExecError, Halt, Interpreter, Namespace, PlaceholderCall,
    Stmt,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{bind_arguments, commit_outputs, render_context, BindError, VisibleContext, DEFAULT_MAX_VALUE_CHARS};
use crate::envs::Env;
use crate::policy::response::{EXECUTE_CLOSE, EXECUTE_OPEN};
use crate::policy::{build_prompt, parse_response, Policy, PolicyError, PolicyRequest, PromptSet};
use crate::trace::{
    Attempt, DecisionNode, EpisodeTrace, Event, Limits, Meters, NodeStatus, Outcome, TaskInfo, Termination,
    TranscriptStep, SCHEMA,
};

pub const ROOT_NAME: &str = "solve";
pub const ROOT_SIGNATURE: &str = "solve(instruction, observation)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub max_depth: usize,
    pub max_retries: usize,
    pub max_env_steps: usize,
    pub rng_seed: u64,
    pub max_value_chars: usize,
    /// Names executed as environment actions.
    pub primitives: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_depth: 10,
            max_retries: 3,
            max_env_steps: 200,
            rng_seed: 0,
            max_value_chars: DEFAULT_MAX_VALUE_CHARS,
            primitives: vec!["run".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid engine config: {0}")]
pub struct ConfigError(pub String);

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_depth < 1 {
            return Err(ConfigError("max_depth must be at least 1".into()));
        }
        if self.max_env_steps < 1 {
            return Err(ConfigError("max_env_steps must be at least 1".into()));
        }
        if self.max_value_chars < 64 {
            return Err(ConfigError("max_value_chars must be at least 64".into()));
        }
        if self.primitives.is_empty() {
            return Err(ConfigError("at least one primitive is required".into()));
        }
        Ok(())
    }
}

/// Bind the task into the namespace and return the unexpanded root.
pub fn text2code(instruction: &str, observation: &str, ns: &mut Namespace) -> DecisionNode {
    ns.set("instruction", recode_minilang::Value::str(instruction));
    ns.set("observation", recode_minilang::Value::str(observation));
    DecisionNode {
        id: 0,
        name: ROOT_NAME.into(),
        signature: ROOT_SIGNATURE.into(),
        depth: 0,
        status: NodeStatus::Interrupted,
        attempts: Vec::new(),
    }
}

/// Text appended to the next request after a failed attempt.
pub fn build_error_context(attempt: &Attempt) -> String {
    let (code, error) = match &attempt.outcome {
        Outcome::FormatFail => (
            attempt.response_raw.as_str(),
            format!("FormatFail: the response must contain the code between {EXECUTE_OPEN} and {EXECUTE_CLOSE} tags."),
        ),
        Outcome::ParseFail { line, message }
        | Outcome::ValidateFail { line, message }
        | Outcome::RunFail { line, message } => {
            (attempt.code.as_str(), format!("{} at line {line}: {message}", attempt.outcome.class()))
        }
        Outcome::MissingOutput { name } => (
            attempt.code.as_str(),
            format!("MissingOutput: the code finished without assigning '{name}', which the caller expects as an output variable."),
        ),
        other => (attempt.code.as_str(), other.class().to_string()),
    };
    format!(
        "Your previous implementation of this function failed.\n[Failed code]\n{}\n[Error]\n{error}\nFix the problem and answer again in the same format.",
        code.trim_matches('\n')
    )
}

#[derive(Debug, Clone, PartialEq)]
enum Stop {
    EnvDone,
    Abort(Termination, String),
}

/// Forwards `run` calls to the environment and records them.
struct StepSink<'e> {
    env: &'e mut dyn Env,
    transcript: &'e mut Vec<TranscriptStep>,
    meters: &'e mut Meters,
    clock: &'e mut u64,
    stop: &'e mut Option<Stop>,
    new_steps: &'e mut Vec<usize>,
    max_steps: usize,
}

impl ActionExecutor for StepSink<'_> {
    fn execute(&mut self, action: &str) -> Result<String, Halt> {
        if self.stop.is_some() {
            return Err(Halt);
        }
        if self.meters.env_steps >= self.max_steps as u64 {
            *self.stop = Some(Stop::Abort(
                Termination::StepBudget,
                format!("step budget of {} exhausted", self.max_steps),
            ));
            return Err(Halt);
        }
        let step = match self.env.step(action) {
            Ok(s) => s,
            Err(e) => {
                *self.stop = Some(Stop::Abort(Termination::EnvError, e.to_string()));
                return Err(Halt);
            }
        };
        *self.clock += 1;
        self.meters.env_steps += 1;
        self.new_steps.push(self.transcript.len());
        self.transcript.push(TranscriptStep {
            seq: *self.clock,
            action: action.to_string(),
            observation: step.observation.clone(),
            reward: step.reward,
            done: step.done,
        });
        if step.done {
            *self.stop = Some(Stop::EnvDone);
            return Err(Halt);
        }
        Ok(step.observation)
    }
}

enum AttemptEnd {
    Ok,
    Retry(Outcome),
    Stopped,
}

struct Engine<'a> {
    cfg: &'a EngineConfig,
    policy: &'a mut dyn Policy,
    env: &'a mut dyn Env,
    prompts: &'a PromptSet,
    ns: Namespace,
    transcript: Vec<TranscriptStep>,
    meters: Meters,
    clock: u64,
    next_id: usize,
    stop: Option<Stop>,
    new_steps: Vec<usize>,
}

impl Engine<'_> {
    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn with_sink<R>(&mut self, f: impl FnOnce(&mut Namespace, &mut StepSink<'_>, &[String]) -> R) -> R {
        let mut sink = StepSink {
            env: &mut *self.env,
            transcript: &mut self.transcript,
            meters: &mut self.meters,
            clock: &mut self.clock,
            stop: &mut self.stop,
            new_steps: &mut self.new_steps,
            max_steps: self.cfg.max_env_steps,
        };
        f(&mut self.ns, &mut sink, &self.cfg.primitives)
    }

    fn exec_stmt(&mut self, stmt: &Stmt) -> Result<(), ExecError> {
        self.with_sink(|ns, sink, prims| Interpreter::new(ns, sink).with_primitives(prims).exec(stmt))
    }

    fn bind(&mut self, call: &PlaceholderCall) -> Result<VisibleContext, BindError> {
        self.with_sink(|ns, sink, _| bind_arguments(call, ns, sink))
    }

    fn drain_steps(&mut self, attempt: &mut Attempt) {
        attempt.events.extend(self.new_steps.drain(..).map(Event::Step));
    }

    fn abort(&mut self, why: Termination, detail: String) {
        if self.stop.is_none() {
            self.stop = Some(Stop::Abort(why, detail));
        }
    }

    fn expand(
        &mut self,
        name: String,
        signature: String,
        depth: usize,
        visible: Vec<String>,
        targets: &[String],
    ) -> DecisionNode {
        let id = self.next_id;
        self.next_id += 1;
        let mut node = DecisionNode {
            id,
            name,
            signature,
            depth,
            status: NodeStatus::Interrupted,
            attempts: Vec::new(),
        };
        if depth >= self.cfg.max_depth {
            node.status = NodeStatus::DepthLimited;
            self.abort(
                Termination::DepthLimited,
                format!("'{}' at depth {depth} hit max_depth {}", node.name, self.cfg.max_depth),
            );
            return node;
        }
        let ctx = VisibleContext::from_names(visible.iter().map(String::as_str), &self.ns);
        let mut error_block = None;
        for _ in 0..=self.cfg.max_retries {
            let request = PolicyRequest {
                name: node.name.clone(),
                signature: node.signature.clone(),
                variables: render_context(&ctx.refresh(&self.ns), self.cfg.max_value_chars),
                error_block: error_block.take(),
            };
            let mut attempt = Attempt::new(self.tick(), request);
            let reply = build_prompt(&attempt.request, self.prompts)
                .map_err(PolicyError::from)
                .and_then(|messages| {
                    self.meters.policy_calls += 1;
                    self.policy.complete(&attempt.request, &messages)
                });
            let reply = match reply {
                Ok(r) => r,
                Err(e) => {
                    attempt.outcome = Outcome::PolicyError { message: e.to_string() };
                    node.attempts.push(attempt);
                    node.status = NodeStatus::Failed;
                    let why = match e {
                        PolicyError::Transport { .. } => Termination::EnvError,
                        _ => Termination::PolicyError,
                    };
                    self.abort(why, e.to_string());
                    return node;
                }
            };
            self.meters.prompt_tokens += reply.usage.prompt_tokens;
            self.meters.completion_tokens += reply.usage.completion_tokens;
            self.meters.tokens_estimated |= reply.usage.estimated;
            attempt.response_raw = reply.raw;
            attempt.usage = reply.usage;
            attempt.transport = reply.transport;

            match self.run_attempt(&mut attempt, depth, targets) {
                AttemptEnd::Ok => {
                    attempt.outcome = Outcome::Ok;
                    node.attempts.push(attempt);
                    node.status = NodeStatus::Expanded;
                    return node;
                }
                AttemptEnd::Stopped => {
                    if self.stop == Some(Stop::EnvDone) {
                        attempt.outcome = Outcome::Ok;
                        attempt.stopped_early = true;
                        node.status = NodeStatus::Expanded;
                    } else {
                        attempt.outcome = Outcome::Aborted;
                        node.status = NodeStatus::Interrupted;
                    }
                    node.attempts.push(attempt);
                    return node;
                }
                AttemptEnd::Retry(outcome) => {
                    tracing::debug!(node = id, outcome = outcome.class(), "attempt failed");
                    attempt.outcome = outcome;
                    error_block = Some(build_error_context(&attempt));
                    node.attempts.push(attempt);
                }
            }
        }
        node.status = NodeStatus::Failed;
        self.abort(
            Termination::Failed,
            format!("'{}' failed after {} attempts", node.name, node.attempts.len()),
        );
        node
    }

    fn run_attempt(&mut self, attempt: &mut Attempt, depth: usize, targets: &[String]) -> AttemptEnd {
        let Ok(resp) = parse_response(&attempt.response_raw) else {
            return AttemptEnd::Retry(Outcome::FormatFail);
        };
        attempt.think = resp.think;
        attempt.code = resp.code;
        let ast = match parse(&attempt.code) {
            Ok(a) => a,
            Err(e) => {
                return AttemptEnd::Retry(Outcome::ParseFail {
                    line: e.line,
                    message: e.message,
                })
            }
        };
        let units = match validate(&ast, &self.cfg.primitives) {
            Ok(u) => u,
            Err(e) => {
                return AttemptEnd::Retry(Outcome::ValidateFail {
                    line: e.line,
                    message: e.message,
                })
            }
        };
        for unit in units {
            match unit {
                CodeUnit::Plain { stmt, .. } => {
                    let result = self.exec_stmt(&stmt);
                    self.drain_steps(attempt);
                    match result {
                        Ok(()) => {}
                        Err(ExecError::Runtime(e)) => {
                            return AttemptEnd::Retry(Outcome::RunFail {
                                line: e.line,
                                message: e.message,
                            })
                        }
                        Err(ExecError::Halted(_)) => return AttemptEnd::Stopped,
                    }
                }
                CodeUnit::Placeholder(call) => {
                    let bound = self.bind(&call);
                    self.drain_steps(attempt);
                    let ctx = match bound {
                        Ok(c) => c,
                        Err(BindError::Runtime(e)) => {
                            return AttemptEnd::Retry(Outcome::RunFail {
                                line: e.line,
                                message: e.message,
                            })
                        }
                        Err(BindError::Halted) => return AttemptEnd::Stopped,
                    };
                    let child = self.expand(
                        call.name.clone(),
                        print_stmt(&call.stmt),
                        depth + 1,
                        ctx.names(),
                        &call.targets,
                    );
                    attempt.events.push(Event::Child(child));
                    if self.stop.is_some() {
                        return AttemptEnd::Stopped;
                    }
                }
            }
        }
        match commit_outputs(targets, &self.ns) {
            Ok(()) => AttemptEnd::Ok,
            Err(e) => AttemptEnd::Retry(Outcome::MissingOutput { name: e.name }),
        }
    }
}

/// Run one episode from reset to termination and return its trace.
pub fn run_episode(
    policy: &mut dyn Policy,
    env: &mut dyn Env,
    prompts: &PromptSet,
    config: &EngineConfig,
) -> EpisodeTrace {
    let started = Instant::now();
    let remote = policy.is_remote();
    let mut ns = Namespace::new(config.rng_seed);
    let limits = Limits {
        max_depth: config.max_depth,
        max_retries: config.max_retries,
        max_env_steps: config.max_env_steps,
    };
    let mut task = TaskInfo {
        instruction: String::new(),
        env_id: env.env_id(),
        config_hash: env.config_hash(),
        available_actions: prompts.available_actions.clone(),
    };
    let finish = |root, transcript: Vec<TranscriptStep>, meters: Meters, stop: Option<Stop>, task| {
        let reward = transcript.last().map(|s: &TranscriptStep| s.reward).unwrap_or(0.0);
        let (termination, detail) = match stop {
            Some(Stop::Abort(t, d)) => (t, Some(d)),
            Some(Stop::EnvDone) if reward >= 1.0 => (Termination::Solved, None),
            Some(Stop::EnvDone) => (Termination::EnvDone, None),
            None if reward >= 1.0 => (Termination::Solved, None),
            None => (Termination::Completed, None),
        };
        let mut meters = meters;
        if remote {
            meters.wall_ms = started.elapsed().as_millis() as u64;
        }
        EpisodeTrace {
            schema: SCHEMA.into(),
            id: "episode".into(),
            task,
            seed: config.rng_seed,
            limits,
            root,
            transcript,
            reward,
            termination,
            termination_detail: detail,
            meters,
        }
    };

    let reset = match env.reset() {
        Ok(r) => r,
        Err(e) => {
            let root = text2code("", "", &mut ns);
            let stop = Some(Stop::Abort(Termination::EnvError, e.to_string()));
            return finish(root, Vec::new(), Meters::default(), stop, task);
        }
    };
    task.instruction = reset.instruction.clone();
    let root = text2code(&reset.instruction, &reset.observation, &mut ns);

    let mut engine = Engine {
        cfg: config,
        policy,
        env,
        prompts,
        ns,
        transcript: Vec::new(),
        meters: Meters::default(),
        clock: 0,
        next_id: 0,
        stop: None,
        new_steps: Vec::new(),
    };
    let root = engine.expand(
        root.name,
        root.signature,
        0,
        vec!["instruction".into(), "observation".into()],
        &[],
    );
    finish(root, engine.transcript, engine.meters, engine.stop, task)
}
