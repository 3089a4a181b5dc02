//! The expansion oracle: turns a placeholder signature plus its visible
//! variables into a raw reply containing think and execute blocks.

pub mod llm;
pub mod prompt;
pub mod response;
pub mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llm::{LlmConfig, LlmPolicy};
pub use prompt::{build_prompt, Message, PromptSet, TemplateError};
pub use response::{parse_response, wrap, FormatFail, PolicyResponse};
pub use scripted::{ScriptTable, ScriptedPolicy};

/// What the policy is asked to expand. Deliberately carries no tree or history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRequest {
    /// Function name of the placeholder, used by scripted policies.
    pub name: String,
    /// The placeholder statement as printed, e.g. `obj_ID = find_and_take(obj, all_location_IDs)`.
    pub signature: String,
    /// Rendered variable listing.
    pub variables: String,
    /// Present on retries only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_block: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// True when the counts come from the byte heuristic.
    pub estimated: bool,
}

impl Usage {
    pub fn estimate(messages: &[Message], completion: &str) -> Self {
        Usage {
            prompt_tokens: messages.iter().map(|m| estimate_tokens(&m.content)).sum(),
            completion_tokens: estimate_tokens(completion),
            estimated: true,
        }
    }
}

/// Token estimate used when exact counts are unavailable: ceil(bytes / 4).
pub fn estimate_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyReply {
    pub raw: String,
    pub usage: Usage,
    /// Request/response bodies and per-attempt transport log, when there was a wire.
    pub transport: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("no script for placeholder '{name}'")]
    NoScript { name: String },
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion: {0}")]
    Protocol(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

pub trait Policy: Send {
    /// One expansion attempt. `messages` is the assembled prompt for `req`.
    fn complete(&mut self, req: &PolicyRequest, messages: &[Message]) -> Result<PolicyReply, PolicyError>;

    /// True if replies depend on wall-clock time or the network.
    fn is_remote(&self) -> bool {
        false
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn complete(&mut self, req: &PolicyRequest, messages: &[Message]) -> Result<PolicyReply, PolicyError> {
        (**self).complete(req, messages)
    }

    fn is_remote(&self) -> bool {
        (**self).is_remote()
    }
}
