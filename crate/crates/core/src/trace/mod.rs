//! Episode traces: the decision tree with every attempt, the environment
//! transcript, meters, and the versioned JSON form.

pub mod cost;
pub mod dataset;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{PolicyRequest, Usage};

pub use cost::{cost_report, CostReport, Money, Price, TraceCost};
pub use dataset::{dataset_stats, extract_pairs, filter_percentile, DatasetError, DatasetStats, SftPair};

pub const SCHEMA: &str = "recode-trace/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Expanded,
    Failed,
    DepthLimited,
    /// A descendant aborted the episode while this node was executing.
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    ParseFail { line: usize, message: String },
    ValidateFail { line: usize, message: String },
    RunFail { line: usize, message: String },
    MissingOutput { name: String },
    FormatFail,
    PolicyError { message: String },
    /// Cut short because the episode aborted below this attempt.
    Aborted,
}

impl Outcome {
    pub fn class(&self) -> &'static str {
        match self {
            Outcome::Ok => "Ok",
            Outcome::ParseFail { .. } => "ParseFail",
            Outcome::ValidateFail { .. } => "ValidateFail",
            Outcome::RunFail { .. } => "RunFail",
            Outcome::MissingOutput { .. } => "MissingOutput",
            Outcome::FormatFail => "FormatFail",
            Outcome::PolicyError { .. } => "PolicyError",
            Outcome::Aborted => "Aborted",
        }
    }

    /// Outcomes that trigger another attempt of the same node.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Outcome::ParseFail { .. }
                | Outcome::ValidateFail { .. }
                | Outcome::RunFail { .. }
                | Outcome::MissingOutput { .. }
                | Outcome::FormatFail
        )
    }
}

/// Things that happened while an attempt's code ran, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// Index into the episode transcript.
    Step(usize),
    Child(DecisionNode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    /// Position on the episode clock shared with transcript steps.
    pub seq: u64,
    pub request: PolicyRequest,
    pub response_raw: String,
    pub think: String,
    pub code: String,
    pub outcome: Outcome,
    /// Execution stopped because the environment reported done.
    #[serde(default)]
    pub stopped_early: bool,
    pub usage: Usage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<serde_json::Value>,
    pub events: Vec<Event>,
}

impl Attempt {
    pub fn new(seq: u64, request: PolicyRequest) -> Self {
        Attempt {
            seq,
            request,
            response_raw: String::new(),
            think: String::new(),
            code: String::new(),
            outcome: Outcome::Aborted,
            stopped_early: false,
            usage: Usage::default(),
            transport: None,
            events: Vec::new(),
        }
    }

    pub fn children(&self) -> impl Iterator<Item = &DecisionNode> {
        self.events.iter().filter_map(|e| match e {
            Event::Child(n) => Some(n),
            Event::Step(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionNode {
    /// Creation order within the episode; the root is 0.
    pub id: usize,
    pub name: String,
    pub signature: String,
    pub depth: usize,
    pub status: NodeStatus,
    pub attempts: Vec<Attempt>,
}

impl DecisionNode {
    /// Children across all attempts, in creation order.
    pub fn children(&self) -> impl Iterator<Item = &DecisionNode> {
        self.attempts.iter().flat_map(|a| a.children())
    }

    /// Pre-order walk of the subtree.
    pub fn preorder(&self) -> Vec<&DecisionNode> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a DecisionNode, out: &mut Vec<&'a DecisionNode>) {
            out.push(n);
            for c in n.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn ok_attempt(&self) -> Option<&Attempt> {
        self.attempts.iter().find(|a| a.outcome == Outcome::Ok)
    }

    pub fn max_depth(&self) -> usize {
        self.preorder().iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub seq: u64,
    pub action: String,
    pub observation: String,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Final reward reached 1.
    Solved,
    /// The environment ended the episode below full reward.
    EnvDone,
    /// The root block ran to the end without the environment finishing.
    Completed,
    Failed,
    DepthLimited,
    StepBudget,
    EnvError,
    PolicyError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meters {
    pub policy_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub tokens_estimated: bool,
    pub env_steps: u64,
    /// Zero for offline policies so traces stay reproducible.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub instruction: String,
    pub env_id: String,
    pub config_hash: String,
    /// Action list the prompts were built with, kept so SFT inputs can be rebuilt.
    pub available_actions: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_depth: usize,
    pub max_retries: usize,
    pub max_env_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub schema: String,
    pub id: String,
    pub task: TaskInfo,
    pub seed: u64,
    pub limits: Limits,
    pub root: DecisionNode,
    pub transcript: Vec<TranscriptStep>,
    pub reward: f64,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination_detail: Option<String>,
    pub meters: Meters,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("trace is not valid JSON: {0}")]
    Json(String),
    #[error("unsupported trace schema {found:?}, expected \"{SCHEMA}\"")]
    Version { found: Option<String> },
    #[error("trace does not match schema: {0}")]
    Shape(String),
}

impl EpisodeTrace {
    pub fn expanded_count(&self) -> usize {
        self.root
            .preorder()
            .iter()
            .filter(|n| n.status == NodeStatus::Expanded)
            .count()
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the types.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(SCHEMA) => {}
            other => {
                return Err(SchemaError::Version {
                    found: other.map(String::from),
                })
            }
        }
        serde_json::from_value(value).map_err(|e| SchemaError::Shape(e.to_string()))
    }
}
