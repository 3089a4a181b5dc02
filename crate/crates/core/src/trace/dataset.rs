//! Turning traces into supervised pairs: percentile filtering, extraction
//! and corpus statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EpisodeTrace, NodeStatus};
use crate::policy::prompt::{build_system, build_user, PromptSet};
use crate::policy::estimate_tokens;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftPair {
    pub input: String,
    pub output: String,
    pub trajectory_id: String,
    pub node_id: usize,
    pub reward: f64,
    /// Exact prompt plus completion tokens, when the policy reported them.
    #[serde(skip)]
    pub exact_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("no input to work on")]
    EmptyInput,
    #[error("percentile must be in (0, 100], got {0}")]
    BadPercentile(f64),
}

/// One pair per Expanded node, from its successful attempt, in pre-order.
/// The input is the prompt as the policy saw it minus the examples section.
pub fn extract_pairs(trace: &EpisodeTrace) -> Vec<SftPair> {
    let prompts = PromptSet::new(&trace.task.available_actions, "").without_examples();
    let system = build_system(&prompts).expect("built-in template fills");
    trace
        .root
        .preorder()
        .into_iter()
        .filter(|n| n.status == NodeStatus::Expanded)
        .filter_map(|n| {
            let a = n.ok_attempt()?;
            let user = build_user(&a.request, &prompts).expect("built-in template fills");
            Some(SftPair {
                input: format!("{system}\n\n{user}"),
                output: a.response_raw.clone(),
                trajectory_id: trace.id.clone(),
                node_id: n.id,
                reward: trace.reward,
                exact_tokens: (!a.usage.estimated).then_some(a.usage.prompt_tokens + a.usage.completion_tokens),
            })
        })
        .collect()
}

/// Keep the top `p` percent of traces by final reward.
///
/// Order is reward descending, then id ascending; `k = max(1, round(p·N/100))`.
pub fn filter_percentile(traces: &[EpisodeTrace], p: f64) -> Result<Vec<&EpisodeTrace>, DatasetError> {
    if traces.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(DatasetError::BadPercentile(p));
    }
    let mut sorted: Vec<&EpisodeTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| b.reward.total_cmp(&a.reward).then_with(|| a.id.cmp(&b.id)));
    let k = ((p * traces.len() as f64 / 100.0).round() as usize).max(1);
    sorted.truncate(k);
    Ok(sorted)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub pair_count: usize,
    pub token_count: u64,
    /// True when every pair carried exact usage counts.
    pub tokens_exact: bool,
    pub trajectories: usize,
    /// Mean final reward of the contributing trajectories, in percent.
    pub avg_reward: f64,
    /// Population standard deviation of those rewards, in percent.
    pub reward_std: f64,
}

pub fn dataset_stats(pairs: &[SftPair]) -> Result<DatasetStats, DatasetError> {
    if pairs.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let tokens_exact = pairs.iter().all(|p| p.exact_tokens.is_some());
    let token_count = if tokens_exact {
        pairs.iter().filter_map(|p| p.exact_tokens).sum()
    } else {
        pairs
            .iter()
            .map(|p| estimate_tokens(&p.input) + estimate_tokens(&p.output))
            .sum()
    };
    let rewards: BTreeMap<&str, f64> = pairs.iter().map(|p| (p.trajectory_id.as_str(), p.reward)).collect();
    let n = rewards.len() as f64;
    let mean = rewards.values().sum::<f64>() / n;
    let var = rewards.values().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(DatasetStats {
        pair_count: pairs.len(),
        token_count,
        tokens_exact,
        trajectories: rewards.len(),
        avg_reward: mean * 100.0,
        reward_std: var.sqrt() * 100.0,
    })
}

fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Fixed-column table, one row per labelled dataset.
pub fn stats_table(rows: &[(&str, &DatasetStats)]) -> String {
    let mut out = format!("{:<16}{:>12}{:>14}{:>20}\n", "Dataset", "Data Pairs", "Tokens", "Avg. Reward%");
    for (label, s) in rows {
        let tokens = if s.tokens_exact {
            thousands(s.token_count)
        } else {
            format!("~{}", thousands(s.token_count))
        };
        out.push_str(&format!(
            "{:<16}{:>12}{:>14}{:>20}\n",
            label,
            thousands(s.pair_count as u64),
            tokens,
            format!("{:.2} ± {:.2}", s.avg_reward, s.reward_std)
        ));
    }
    out
}

pub fn pairs_to_jsonl(pairs: &[SftPair]) -> String {
    pairs
        .iter()
        .map(|p| serde_json::to_string(p).expect("pair serializes") + "\n")
        .collect()
}
