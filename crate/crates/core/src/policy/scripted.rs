//! Deterministic policy driven by a table of canned replies.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::response::wrap;
use super::{Message, Policy, PolicyError, PolicyReply, PolicyRequest, Usage};

/// A canned reply: either the raw text or its two parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Raw(String),
    Parts {
        #[serde(default)]
        think: String,
        code: String,
    },
}

impl ScriptEntry {
    pub fn raw(&self) -> String {
        match self {
            ScriptEntry::Raw(s) => s.clone(),
            ScriptEntry::Parts { think, code } => wrap(think, code),
        }
    }
}

/// Replies keyed by placeholder function name, consumed in order. When a
/// name's list runs out, or the name is absent, the fallback answers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptTable {
    #[serde(default)]
    pub scripts: BTreeMap<String, Vec<ScriptEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<ScriptEntry>,
}

impl ScriptTable {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ScriptTable::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn with(mut self, name: &str, entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        self.scripts.entry(name.to_string()).or_default().extend(entries);
        self
    }

    pub fn with_fallback(mut self, entry: ScriptEntry) -> Self {
        self.fallback = Some(entry);
        self
    }
}

/// Cursor state is per instance, so build one policy per episode.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    table: ScriptTable,
    cursors: HashMap<String, usize>,
}

impl ScriptedPolicy {
    pub fn new(table: ScriptTable) -> Self {
        ScriptedPolicy {
            table,
            cursors: HashMap::new(),
        }
    }
}

impl Policy for ScriptedPolicy {
    fn complete(&mut self, req: &PolicyRequest, messages: &[Message]) -> Result<PolicyReply, PolicyError> {
        let cursor = self.cursors.entry(req.name.clone()).or_insert(0);
        let entry = match self.table.scripts.get(&req.name).and_then(|l| l.get(*cursor)) {
            Some(e) => {
                *cursor += 1;
                e
            }
            None => self
                .table
                .fallback
                .as_ref()
                .ok_or_else(|| PolicyError::NoScript { name: req.name.clone() })?,
        };
        let raw = entry.raw();
        Ok(PolicyReply {
            usage: Usage::estimate(messages, &raw),
            raw,
            transport: None,
        })
    }
}
