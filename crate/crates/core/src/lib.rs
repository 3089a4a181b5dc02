//! Agent runtime that expands placeholder calls recursively: a policy writes
//! code for each placeholder, plain statements run against an environment,
//! and the whole episode is kept as a decision tree.

pub mod context;
pub mod engine;
pub mod envs;
pub mod policy;
pub mod trace;

pub use context::{bind_arguments, commit_outputs, render_context, MissingOutputError, VisibleContext};
pub use engine::{build_error_context, run_episode, text2code, EngineConfig};
pub use envs::{Env, EnvError, EnvStep, ExternalEnv, GridHouse, GridHouseConfig};
pub use policy::{Policy, PolicyError, PolicyRequest, PromptSet, ScriptTable, ScriptedPolicy};
pub use trace::{DecisionNode, EpisodeTrace, NodeStatus, Outcome, Termination};
