//! The JSON-lines subprocess adapter, driven by small shell scripts.

mod common;

use common::code;
use recode_core::envs::EnvErrorKind;
use recode_core::{Env, EngineConfig, ExternalEnv, PromptSet, ScriptTable, ScriptedPolicy, Termination};

/// Echoes each action back; `finish` ends the episode.
const ECHO: &str = r#"
while IFS= read -r line; do
  case "$line" in
    *'"reset"'*) echo '{"observation":"You are in a hallway."}' ;;
    *'"finish"'*) echo '{"observation":"Done.","reward":1.0,"done":true}' ;;
    *) action=$(printf '%s' "$line" | sed 's/.*"action":"\([^"]*\)".*/\1/')
       echo "{\"observation\":\"You did: $action\",\"reward\":0.0,\"done\":false}" ;;
  esac
done
"#;

#[test]
fn round_trip_over_stdio() {
    let mut env = ExternalEnv::spawn(ECHO, "walk the hallway").unwrap();
    let reset = env.reset().unwrap();
    assert_eq!(reset.instruction, "walk the hallway");
    assert_eq!(reset.observation, "You are in a hallway.");
    let s = env.step("go to door 1").unwrap();
    assert_eq!(s.observation, "You did: go to door 1");
    assert_eq!((s.reward, s.done), (0.0, false));
    let s = env.step("finish").unwrap();
    assert_eq!((s.reward, s.done), (1.0, true));
    assert_eq!(env.env_id(), "external");
    assert_eq!(env.config_hash().len(), 64);
}

#[test]
fn drives_a_whole_episode() {
    let table = ScriptTable::default().with("solve", [code("obs = run('go to door 1')\nif 'door' in obs:\n    run('finish')")]);
    let mut policy = ScriptedPolicy::new(table);
    let mut env = ExternalEnv::spawn(ECHO, "walk the hallway").unwrap();
    let t = recode_core::run_episode(&mut policy, &mut env, &PromptSet::gridhouse(), &EngineConfig::default());
    assert_eq!(t.termination, Termination::Solved);
    assert_eq!(t.transcript.len(), 2);
    assert_eq!(t.task.instruction, "walk the hallway");
}

#[test]
fn exited_child_is_a_transport_error() {
    let mut env = ExternalEnv::spawn("read -r line; exit 0", "x").unwrap();
    let err = env.reset().unwrap_err();
    assert_eq!(err.kind, EnvErrorKind::Transport);
}

#[test]
fn missing_reward_is_a_protocol_error() {
    let script = r#"read -r line; echo '{"observation":"start"}'; read -r line; echo '{"observation":"x","done":false}'"#;
    let mut env = ExternalEnv::spawn(script, "x").unwrap();
    env.reset().unwrap();
    let err = env.step("look").unwrap_err();
    assert_eq!(err.kind, EnvErrorKind::Protocol);
    assert!(err.message.contains("reward"), "{}", err.message);
}

#[test]
fn non_json_reply_is_a_protocol_error() {
    let mut env = ExternalEnv::spawn("read -r line; echo hello", "x").unwrap();
    assert_eq!(env.reset().unwrap_err().kind, EnvErrorKind::Protocol);
}

#[test]
fn env_failure_mid_episode_ends_it() {
    let script = r#"read -r line; echo '{"observation":"start"}'; read -r line; exit 3"#;
    let table = ScriptTable::default().with("solve", [code("run('look')\nrun('look')")]);
    let mut policy = ScriptedPolicy::new(table);
    let mut env = ExternalEnv::spawn(script, "x").unwrap();
    let t = recode_core::run_episode(&mut policy, &mut env, &PromptSet::gridhouse(), &EngineConfig::default());
    assert_eq!(t.termination, Termination::EnvError);
    assert!(t.transcript.is_empty());
}
