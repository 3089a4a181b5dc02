#![allow(dead_code)]

use std::path::PathBuf;

use recode_core::policy::scripted::ScriptEntry;
use recode_core::{run_episode, EngineConfig, EpisodeTrace, GridHouse, PromptSet, ScriptTable, ScriptedPolicy};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn house(name: &str) -> GridHouse {
    GridHouse::from_json(&fixture(name)).unwrap()
}

pub fn script(name: &str) -> ScriptTable {
    ScriptTable::from_json(&fixture(name)).unwrap()
}

/// A reply holding only an execute block.
pub fn code(src: &str) -> ScriptEntry {
    ScriptEntry::Raw(format!("<execute>\n{src}\n</execute>"))
}

pub fn run(table: ScriptTable, mut env: GridHouse, cfg: &EngineConfig) -> EpisodeTrace {
    let mut policy = ScriptedPolicy::new(table);
    run_episode(&mut policy, &mut env, &PromptSet::gridhouse(), cfg)
}

pub fn case_study(cfg: &EngineConfig) -> EpisodeTrace {
    run(script("case_study_script.json"), house("case_study_house.json"), cfg)
}
