//! Percentile filtering, pair extraction, corpus statistics and cost.

mod common;

use proptest::prelude::*;
use recode_core::policy::prompt::{ALFWORLD_COOL_EXAMPLES, GRIDHOUSE_EXAMPLES, SYSTEM_TEMPLATE};
use recode_core::policy::{wrap, Usage};
use recode_core::trace::cost::{cost_report, Money, Price};
use recode_core::trace::dataset::pairs_to_jsonl;
use recode_core::trace::{
    dataset_stats, extract_pairs, filter_percentile, Attempt, Event, Limits, Meters, TaskInfo,
};
use recode_core::{DecisionNode, EngineConfig, EpisodeTrace, NodeStatus, Outcome, PolicyRequest, PromptSet, Termination};

fn node(id: usize, depth: usize, status: NodeStatus) -> DecisionNode {
    let mut a = Attempt::new(
        id as u64,
        PolicyRequest {
            name: format!("step_{id}"),
            signature: format!("step_{id}()"),
            variables: String::new(),
            error_block: None,
        },
    );
    a.response_raw = wrap("\nthink\n", &format!("\nrun('look {id}')\n"));
    a.usage.estimated = true;
    a.outcome = if status == NodeStatus::Expanded {
        Outcome::Ok
    } else {
        Outcome::FormatFail
    };
    DecisionNode {
        id,
        name: format!("step_{id}"),
        signature: format!("step_{id}()"),
        depth,
        status,
        attempts: vec![a],
    }
}

/// A root with `expanded - 1` expanded children and one failed child.
fn synthetic(id: &str, reward: f64, expanded: usize) -> EpisodeTrace {
    let mut root = node(0, 0, NodeStatus::Expanded);
    for i in 1..expanded {
        root.attempts[0].events.push(Event::Child(node(i, 1, NodeStatus::Expanded)));
    }
    root.attempts[0].events.push(Event::Child(node(expanded, 1, NodeStatus::Failed)));
    EpisodeTrace {
        schema: recode_core::trace::SCHEMA.into(),
        id: id.into(),
        task: TaskInfo {
            instruction: "Your task is to: look around.".into(),
            env_id: "gridhouse".into(),
            config_hash: "0".repeat(64),
            available_actions: PromptSet::gridhouse().available_actions,
        },
        seed: 0,
        limits: Limits {
            max_depth: 10,
            max_retries: 3,
            max_env_steps: 200,
        },
        root,
        transcript: Vec::new(),
        reward,
        termination: Termination::Completed,
        termination_detail: None,
        meters: Meters::default(),
    }
}

const NODE_COUNTS: [usize; 10] = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3];

/// Rewards 0.1 … 1.0 with the node counts above.
fn ten() -> Vec<EpisodeTrace> {
    (0..10)
        .map(|i| synthetic(&format!("ep-{i:02}"), (i + 1) as f64 / 10.0, NODE_COUNTS[i]))
        .collect()
}

fn kept_ids(traces: &[EpisodeTrace], p: f64) -> Vec<String> {
    filter_percentile(traces, p).unwrap().iter().map(|t| t.id.clone()).collect()
}

#[test]
fn forty_percent_keeps_four() {
    let traces = ten();
    let kept = filter_percentile(&traces, 40.0).unwrap();
    let ids: Vec<&str> = kept.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["ep-09", "ep-08", "ep-07", "ep-06"]);
    let pairs: Vec<_> = kept.iter().flat_map(|t| extract_pairs(t)).collect();
    // counts of ep-09..ep-06: 3 + 5 + 6 + 2
    assert_eq!(pairs.len(), 16);
    let stats = dataset_stats(&pairs).unwrap();
    assert_eq!(stats.trajectories, 4);
    assert!((stats.avg_reward - 85.0).abs() < 1e-9);
    // population std of {70, 80, 90, 100}
    assert!((stats.reward_std - 125f64.sqrt()).abs() < 1e-9);
}

#[test]
fn kept_sets_grow_with_p() {
    let traces = ten();
    let sizes: Vec<usize> = [10.0, 20.0, 30.0, 40.0]
        .iter()
        .map(|&p| {
            filter_percentile(&traces, p)
                .unwrap()
                .iter()
                .map(|t| extract_pairs(t).len())
                .sum()
        })
        .collect();
    assert_eq!(sizes, [3, 8, 14, 16]);
    for w in [10.0, 20.0, 30.0, 40.0].windows(2) {
        let small = kept_ids(&traces, w[0]);
        let large = kept_ids(&traces, w[1]);
        assert!(small.iter().all(|id| large.contains(id)));
    }
}

#[test]
fn ties_break_by_id() {
    let traces = vec![synthetic("b", 1.0, 1), synthetic("a", 1.0, 1), synthetic("c", 1.0, 1)];
    assert_eq!(kept_ids(&traces, 33.0), ["a"]);
    assert_eq!(kept_ids(&traces, 1.0), ["a"]);
    assert_eq!(kept_ids(&traces, 100.0), ["a", "b", "c"]);
    assert!(filter_percentile(&traces, 0.0).is_err());
    assert!(filter_percentile(&traces, 100.5).is_err());
    assert!(filter_percentile(&traces, f64::NAN).is_err());
}

#[test]
fn failed_nodes_give_no_pairs() {
    let t = synthetic("x", 1.0, 3);
    assert_eq!(t.root.preorder().len(), 4);
    assert_eq!(extract_pairs(&t).len(), 3);
}

#[test]
fn pair_inputs_drop_the_examples() {
    let example_lines: Vec<&str> = ALFWORLD_COOL_EXAMPLES
        .lines()
        .chain(GRIDHOUSE_EXAMPLES.lines())
        .map(str::trim)
        .filter(|l| !l.is_empty() && !SYSTEM_TEMPLATE.contains(l))
        .collect();
    assert!(example_lines.len() > 150);
    let trace = common::case_study(&EngineConfig::default());
    let pairs = extract_pairs(&trace);
    for (pair, n) in pairs.iter().zip(trace.root.preorder()) {
        let user_start = pair.input.find("The current function to expand is:\n").unwrap();
        let system = &pair.input[..user_start];
        for line in &example_lines {
            assert!(!system.contains(line), "example line leaked: {line}");
        }
        assert!(!pair.input.contains("(End of Examples)"));
        // the policy did see the examples
        let seen = recode_core::policy::build_prompt(&n.attempts[0].request, &PromptSet::gridhouse()).unwrap();
        assert!(seen[0].content.contains(example_lines[0]));
        assert_eq!(&pair.input[user_start..], seen[1].content);
    }
}

#[test]
fn retried_nodes_pair_with_the_successful_attempt() {
    let table = recode_core::ScriptTable::default()
        .with("solve", [common::code("x = ("), common::code("run('look')")]);
    let t = common::run(table, common::house("case_study_house.json"), &EngineConfig::default());
    let pairs = extract_pairs(&t);
    assert_eq!(pairs.len(), 1);
    assert!(pairs[0].output.contains("run('look')"));
    // the input is the prompt the policy answered, error block included
    assert!(pairs[0].input.ends_with(t.root.attempts[1].request.error_block.as_deref().unwrap()));
}

#[test]
fn jsonl_has_one_line_per_pair() {
    let pairs = extract_pairs(&synthetic("ep", 0.5, 4));
    let text = pairs_to_jsonl(&pairs);
    assert_eq!(text.lines().count(), 4);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["trajectory_id"], "ep");
    assert_eq!(first["reward"], 0.5);
}

#[test]
fn reference_cost() {
    let mut t = synthetic("ep", 1.0, 1);
    t.meters = Meters {
        prompt_tokens: 1_000,
        completion_tokens: 500,
        ..Meters::default()
    };
    let report = cost_report(&[t], "0.15".parse().unwrap(), "0.60".parse().unwrap());
    // 1000 × 0.15 / 1e6 + 500 × 0.60 / 1e6 = 0.00015 + 0.0003
    assert_eq!(report.total, Money { pico: 450_000_000 });
    assert_eq!(report.total.to_string(), "$0.00045");
    assert_eq!(report.mean.to_string(), "$0.00045");
    assert!(!report.any_estimated);
}

#[test]
fn cost_sums_over_traces() {
    let traces: Vec<_> = (0..3)
        .map(|i| {
            let mut t = synthetic(&format!("ep-{i}"), 1.0, 1);
            t.meters.prompt_tokens = 1_000 * (i + 1);
            t.meters.completion_tokens = 500;
            t.meters.tokens_estimated = i == 2;
            t
        })
        .collect();
    let price_in: Price = "$2.50".parse().unwrap();
    let price_out: Price = "10".parse().unwrap();
    let report = cost_report(&traces, price_in, price_out);
    // 6000 × 2.5 / 1e6 + 1500 × 10 / 1e6 = 0.015 + 0.015
    assert_eq!(report.total.to_string(), "$0.03");
    assert_eq!(report.mean.to_string(), "$0.01");
    assert!(report.any_estimated);
    assert_eq!(report.per_trace[0].cost.to_string(), "$0.0075");
}

#[test]
fn exact_usage_feeds_token_counts() {
    let mut t = synthetic("ep", 1.0, 2);
    t.root.attempts[0].usage = Usage {
        prompt_tokens: 100,
        completion_tokens: 20,
        estimated: false,
    };
    let pairs = extract_pairs(&t);
    assert_eq!(pairs[0].exact_tokens, Some(120));
    assert_eq!(pairs[1].exact_tokens, None);
}

proptest! {
    #[test]
    fn percentile_is_monotone(
        rewards in prop::collection::vec(0u8..=10, 1..30),
        p1 in 1u32..=100,
        p2 in 1u32..=100,
    ) {
        let traces: Vec<_> = rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| synthetic(&format!("t{i:03}"), r as f64 / 10.0, 1))
            .collect();
        let (lo, hi) = (p1.min(p2) as f64, p1.max(p2) as f64);
        let small = kept_ids(&traces, lo);
        let large = kept_ids(&traces, hi);
        prop_assert!(small.iter().all(|id| large.contains(id)));
        prop_assert_eq!(&large[..small.len()], &small[..]);
        let k = ((hi * traces.len() as f64 / 100.0).round() as usize).max(1);
        prop_assert_eq!(large.len(), k);
        // nothing dropped beats anything kept
        let worst_kept = filter_percentile(&traces, hi).unwrap().last().unwrap().reward;
        let kept = filter_percentile(&traces, hi).unwrap();
        for t in &traces {
            if !kept.iter().any(|k| k.id == t.id) {
                prop_assert!(t.reward <= worst_kept);
            }
        }
    }
}
