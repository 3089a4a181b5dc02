//! Prompt templates and their assembly into chat messages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PolicyRequest;

pub const SYSTEM_TEMPLATE: &str = include_str!("../../assets/system_prompt.txt");
pub const USER_TEMPLATE: &str = include_str!("../../assets/user_prompt.txt");
pub const ALFWORLD_COOL_EXAMPLES: &str = include_str!("../../assets/alfworld_cool_examples.txt");
pub const GRIDHOUSE_EXAMPLES: &str = include_str!("../../assets/gridhouse_examples.txt");
pub const GRIDHOUSE_ACTIONS: &str = include_str!("../../assets/gridhouse_actions.txt");

/// Shown in place of an empty variable listing.
pub const NO_VARIABLES: &str = "(none)";

const EXAMPLES_BEGIN: &str = "\n\n---\nHere are some examples";
const EXAMPLES_END: &str = "(End of Examples)\n---";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Message {
            role: role.into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template placeholder {{{0}}} has no value")]
    Unfilled(String),
}

/// Everything needed to turn a request into messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub system_template: String,
    pub user_template: String,
    pub available_actions: String,
    pub examples: String,
    pub include_examples: bool,
}

impl PromptSet {
    pub fn new(available_actions: &str, examples: &str) -> Self {
        PromptSet {
            system_template: trim_newlines(SYSTEM_TEMPLATE).to_string(),
            user_template: trim_newlines(USER_TEMPLATE).to_string(),
            available_actions: trim_newlines(available_actions).to_string(),
            examples: trim_newlines(examples).to_string(),
            include_examples: true,
        }
    }

    /// The built-in house: its action list plus both example sets.
    pub fn gridhouse() -> Self {
        let examples = format!(
            "{}\n\n\n\n\n{}",
            trim_newlines(ALFWORLD_COOL_EXAMPLES),
            trim_newlines(GRIDHOUSE_EXAMPLES)
        );
        PromptSet::new(GRIDHOUSE_ACTIONS, &examples)
    }

    pub fn without_examples(&self) -> Self {
        PromptSet {
            include_examples: false,
            ..self.clone()
        }
    }
}

fn trim_newlines(s: &str) -> &str {
    s.trim_matches('\n')
}

/// Remove the examples section, including the rules around it.
pub fn strip_examples(system_template: &str) -> String {
    match (system_template.find(EXAMPLES_BEGIN), system_template.find(EXAMPLES_END)) {
        (Some(b), Some(e)) if b < e => {
            let mut out = system_template[..b].to_string();
            out.push_str(&system_template[e + EXAMPLES_END.len()..]);
            out
        }
        _ => system_template.to_string(),
    }
}

/// Substitute `{name}` placeholders in one pass. Every placeholder in the
/// template must have a value; inserted text is not scanned again.
pub fn fill(template: &str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            match values.iter().find(|(k, _)| *k == name) {
                Some((_, v)) => out.push_str(v),
                None => return Err(TemplateError::Unfilled(name.to_string())),
            }
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// The user turn: signature, variables, and on retries the error block.
pub fn build_user(req: &PolicyRequest, prompts: &PromptSet) -> Result<String, TemplateError> {
    let variables = if req.variables.is_empty() {
        NO_VARIABLES
    } else {
        req.variables.as_str()
    };
    let mut user = fill(
        &prompts.user_template,
        &[("task", req.signature.as_str()), ("variables", variables)],
    )?;
    if let Some(err) = &req.error_block {
        user.push_str("\n\n");
        user.push_str(err);
    }
    Ok(user)
}

pub fn build_system(prompts: &PromptSet) -> Result<String, TemplateError> {
    if prompts.include_examples {
        fill(
            &prompts.system_template,
            &[
                ("available_actions", prompts.available_actions.as_str()),
                ("examples", prompts.examples.as_str()),
            ],
        )
    } else {
        fill(
            &strip_examples(&prompts.system_template),
            &[("available_actions", prompts.available_actions.as_str())],
        )
    }
}

/// System and user messages for one expansion request.
pub fn build_prompt(req: &PolicyRequest, prompts: &PromptSet) -> Result<Vec<Message>, TemplateError> {
    Ok(vec![
        Message::new("system", build_system(prompts)?),
        Message::new("user", build_user(req, prompts)?),
    ])
}

/// One `[Input]` / `[Output]` pair of an examples asset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub input: String,
    pub output: String,
}

pub fn split_examples(text: &str) -> Vec<Example> {
    text.split("[Input]\n")
        .filter(|chunk| !chunk.trim().is_empty())
        .filter_map(|chunk| {
            let (input, output) = chunk.split_once("[Output]\n")?;
            Some(Example {
                input: input.trim().to_string(),
                output: output.trim().to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(signature: &str, variables: &str, error_block: Option<&str>) -> PolicyRequest {
        PolicyRequest {
            name: "solve".into(),
            signature: signature.into(),
            variables: variables.into(),
            error_block: error_block.map(String::from),
        }
    }

    #[test]
    fn templates_are_shipped_verbatim() {
        assert!(SYSTEM_TEMPLATE.starts_with("You are the EXPAND step in the LLM Agent loop."));
        assert!(SYSTEM_TEMPLATE.contains("encluded with <think> and </think>"));
        assert!(SYSTEM_TEMPLATE.contains("{available_actions}"));
        assert_eq!(trim_newlines(SYSTEM_TEMPLATE).lines().last(), Some("---"));
    }

    #[test]
    fn root_request_renders_signature_block() {
        let msgs = build_prompt(
            &req(
                "solve(instruction, observation)",
                "- instruction (str): Your task is to: put a cool mug in shelf.",
                None,
            ),
            &PromptSet::gridhouse(),
        )
        .unwrap();
        assert_eq!(msgs[0].role, "system");
        assert!(msgs[0].content.contains("1. go to {recep}"));
        assert!(msgs[0].content.contains("cool_with(obj_ID, cooling_location_ID)"));
        assert!(msgs[1]
            .content
            .starts_with("The current function to expand is:\nsolve(instruction, observation)\nThe variables you can use is:\n"));
    }

    #[test]
    fn empty_variables_marker() {
        let user = build_user(&req("deeper()", "", None), &PromptSet::gridhouse()).unwrap();
        assert_eq!(
            user,
            "The current function to expand is:\ndeeper()\nThe variables you can use is:\n(none)"
        );
    }

    #[test]
    fn retry_appends_error_after_variables() {
        let user = build_user(&req("f(x)", "- x (int): 1", Some("ERR")), &PromptSet::gridhouse()).unwrap();
        assert!(user.ends_with("- x (int): 1\n\nERR"));
    }

    #[test]
    fn examples_can_be_removed() {
        let p = PromptSet::gridhouse();
        let sys = build_system(&p.without_examples()).unwrap();
        assert!(!sys.contains("[Input]"));
        assert!(!sys.contains("End of Examples"));
        assert!(sys.ends_with("inside loop or condition structures."));
        assert!(sys.contains("1. go to {recep}"));
    }

    #[test]
    fn unfilled_placeholder_is_an_error() {
        assert_eq!(
            fill("a {task} {other}", &[("task", "t")]),
            Err(TemplateError::Unfilled("other".into()))
        );
        assert_eq!(fill("{a}{b}", &[("a", "{b}"), ("b", "x")]).unwrap(), "{b}x");
        assert_eq!(fill("f'{X}' {1} {", &[]).unwrap(), "f'{X}' {1} {");
    }

    #[test]
    fn example_sets_split_into_pairs() {
        let cool = split_examples(ALFWORLD_COOL_EXAMPLES);
        assert_eq!(cool.len(), 4);
        assert!(cool[0].input.contains("solve(instruction, observation)"));
        assert!(cool[3].output.ends_with("</execute>"));
        assert_eq!(split_examples(GRIDHOUSE_EXAMPLES).len(), 7);
    }
}
