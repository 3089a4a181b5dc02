//! Environment contract plus the built-in house and the stdio adapter.

pub mod external;
pub mod gridhouse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::ExternalEnv;
pub use gridhouse::{ConfigError, GridHouse, GridHouseConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvStep {
    pub observation: String,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvErrorKind {
    Transport,
    Protocol,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("environment {kind:?} error: {message}")]
pub struct EnvError {
    pub kind: EnvErrorKind,
    pub message: String,
}

impl EnvError {
    pub fn transport(message: impl Into<String>) -> Self {
        EnvError {
            kind: EnvErrorKind::Transport,
            message: message.into(),
        }
    }

    pub fn protocol(message: impl Into<String>) -> Self {
        EnvError {
            kind: EnvErrorKind::Protocol,
            message: message.into(),
        }
    }
}

/// Initial state of an episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reset {
    pub instruction: String,
    pub observation: String,
}

pub trait Env: Send {
    fn reset(&mut self) -> Result<Reset, EnvError>;
    fn step(&mut self, action: &str) -> Result<EnvStep, EnvError>;
    /// Short identifier recorded in traces, e.g. `gridhouse`.
    fn env_id(&self) -> String;
    /// Hex digest identifying the configuration.
    fn config_hash(&self) -> String;
}

impl<E: Env + ?Sized> Env for Box<E> {
    fn reset(&mut self) -> Result<Reset, EnvError> {
        (**self).reset()
    }
    fn step(&mut self, action: &str) -> Result<EnvStep, EnvError> {
        (**self).step(action)
    }
    fn env_id(&self) -> String {
        (**self).env_id()
    }
    fn config_hash(&self) -> String {
        (**self).config_hash()
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
