use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EXECUTE_OPEN: &str = "<execute>";
pub const EXECUTE_CLOSE: &str = "</execute>";
pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyResponse {
    pub raw: String,
    pub think: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("response has no {EXECUTE_OPEN}...{EXECUTE_CLOSE} block")]
pub struct FormatFail;

fn between<'a>(raw: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = raw.find(open)? + open.len();
    let len = raw[start..].find(close)?;
    Some(&raw[start..start + len])
}

/// Pull think and code out of a raw reply: the exact text between the first
/// tag pair of each kind. Text outside the tags is ignored.
pub fn parse_response(raw: &str) -> Result<PolicyResponse, FormatFail> {
    let code = between(raw, EXECUTE_OPEN, EXECUTE_CLOSE).ok_or(FormatFail)?;
    let think = between(raw, THINK_OPEN, THINK_CLOSE).unwrap_or("");
    Ok(PolicyResponse {
        raw: raw.to_string(),
        think: think.to_string(),
        code: code.to_string(),
    })
}

/// Inverse of `parse_response` for tag-free parts.
pub fn wrap(think: &str, code: &str) -> String {
    format!("{THINK_OPEN}{think}{THINK_CLOSE}\n\n{EXECUTE_OPEN}{code}{EXECUTE_CLOSE}")
}
