//! Adapter for environments running as a child process that speaks
//! newline-delimited JSON on stdio.
//!
//! ```text
//! > {"op":"reset"}
//! < {"observation": "..."}
//! > {"op":"step","action":"go to desk 1"}
//! < {"observation": "...", "reward": 0.0, "done": false}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde_json::{json, Value as Json};

use super::{sha256_hex, Env, EnvError, EnvStep, Reset};

pub struct ExternalEnv {
    command: String,
    instruction: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalEnv {
    /// Spawn `command` through `sh -c`. The process owns the environment
    /// state; `instruction` is passed to the root expansion as-is.
    pub fn spawn(command: &str, instruction: &str) -> Result<Self, EnvError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EnvError::transport(format!("cannot spawn '{command}': {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalEnv {
            command: command.to_string(),
            instruction: instruction.to_string(),
            child,
            stdin,
            stdout,
        })
    }

    fn exchange(&mut self, msg: &Json) -> Result<Json, EnvError> {
        let mut line = serde_json::to_string(msg).expect("message serializes");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| EnvError::transport(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| EnvError::transport(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(EnvError::transport("environment process closed its output"));
        }
        let value: Json =
            serde_json::from_str(reply.trim_end()).map_err(|e| EnvError::protocol(format!("reply is not JSON: {e}")))?;
        if !value.is_object() {
            return Err(EnvError::protocol("reply is not a JSON object"));
        }
        Ok(value)
    }
}

fn field<'a, T>(reply: &'a Json, name: &str, get: impl Fn(&'a Json) -> Option<T>) -> Result<T, EnvError> {
    reply
        .get(name)
        .and_then(get)
        .ok_or_else(|| EnvError::protocol(format!("reply lacks a valid \"{name}\" field")))
}

impl Env for ExternalEnv {
    fn reset(&mut self) -> Result<Reset, EnvError> {
        let reply = self.exchange(&json!({"op": "reset"}))?;
        Ok(Reset {
            instruction: self.instruction.clone(),
            observation: field(&reply, "observation", Json::as_str)?.to_string(),
        })
    }

    fn step(&mut self, action: &str) -> Result<EnvStep, EnvError> {
        let reply = self.exchange(&json!({"op": "step", "action": action}))?;
        Ok(EnvStep {
            observation: field(&reply, "observation", Json::as_str)?.to_string(),
            reward: field(&reply, "reward", Json::as_f64)?,
            done: field(&reply, "done", Json::as_bool)?,
        })
    }

    fn env_id(&self) -> String {
        "external".into()
    }

    fn config_hash(&self) -> String {
        sha256_hex(self.command.as_bytes())
    }
}

impl Drop for ExternalEnv {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
