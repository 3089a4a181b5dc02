//! What a child expansion gets to see: the argument-derived slice of the
//! shared namespace, rendered as the variable listing of the prompt.

use recode_minilang::{ActionExecutor, ExecError, Expr, Interpreter, Namespace, PlaceholderCall, RuntimeError, Value};
use thiserror::Error;

pub const DEFAULT_MAX_VALUE_CHARS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ContextEntry {
    pub name: String,
    pub type_label: String,
    pub value: Value,
}

/// Variables visible to one expansion, in argument order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VisibleContext {
    pub entries: Vec<ContextEntry>,
}

impl VisibleContext {
    /// Context exposing `names`, read from `ns`. Unbound names are skipped.
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>, ns: &Namespace) -> Self {
        let mut entries: Vec<ContextEntry> = Vec::new();
        for name in names {
            if entries.iter().any(|e| e.name == name) {
                continue;
            }
            if let Some(v) = ns.get(name) {
                entries.push(ContextEntry {
                    name: name.to_string(),
                    type_label: v.type_label(),
                    value: v.clone(),
                });
            }
        }
        VisibleContext { entries }
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// Re-read the same names, picking up rebinds and in-place list mutation.
    pub fn refresh(&self, ns: &Namespace) -> Self {
        VisibleContext::from_names(self.entries.iter().map(|e| e.name.as_str()), ns)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Why binding a placeholder's arguments stopped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    /// The action executor halted while a keyword argument was evaluated.
    #[error("halted while binding arguments")]
    Halted,
}

/// Bind the arguments of a placeholder call and return what the child sees.
///
/// Positional identifiers expose their own binding. Keyword arguments are
/// evaluated and written into `ns` under the keyword. Any other positional
/// argument is evaluated and bound as `argN`, N being its 1-based position.
pub fn bind_arguments(
    call: &PlaceholderCall,
    ns: &mut Namespace,
    actions: &mut dyn ActionExecutor,
) -> Result<VisibleContext, BindError> {
    let line = call.stmt.line;
    let mut names: Vec<String> = Vec::new();
    let mut literals: Vec<(String, Value)> = Vec::new();
    let mut kwargs: Vec<(String, Value)> = Vec::new();
    {
        let mut interp = Interpreter::new(ns, actions);
        for (i, arg) in call.args.iter().enumerate() {
            match arg {
                Expr::Ident(name) => {
                    if !interp.namespace().contains(name) {
                        return Err(RuntimeError::new(line, format!("NameError: name '{name}' is not defined")).into());
                    }
                    names.push(name.clone());
                }
                other => {
                    let v = interp.eval(other, line).map_err(bind_err)?;
                    let name = format!("arg{}", i + 1);
                    literals.push((name.clone(), v));
                    names.push(name);
                }
            }
        }
        for (k, e) in &call.kwargs {
            let v = interp.eval(e, line).map_err(bind_err)?;
            kwargs.push((k.clone(), v));
            names.push(k.clone());
        }
    }
    for (k, v) in literals.into_iter().chain(kwargs) {
        ns.set(k, v);
    }
    Ok(VisibleContext::from_names(names.iter().map(String::as_str), ns))
}

fn bind_err(e: ExecError) -> BindError {
    match e {
        ExecError::Runtime(r) => BindError::Runtime(r),
        ExecError::Halted(_) => BindError::Halted,
    }
}

/// Render a value as it appears after `name (type): `. Returns the text and
/// whether it was cut.
pub fn render_value(v: &Value, max_value_chars: usize) -> (String, bool) {
    let full = v.to_display();
    let total = full.chars().count();
    if total <= max_value_chars {
        return (full, false);
    }
    let mut out: String = full.chars().take(max_value_chars).collect();
    out.push_str(&format!("…[truncated {} chars]", total - max_value_chars));
    (out, true)
}

/// One `- name (type): value` line per entry; empty context renders as "".
pub fn render_context(ctx: &VisibleContext, max_value_chars: usize) -> String {
    ctx.entries
        .iter()
        .map(|e| {
            let (value, _) = render_value(&e.value, max_value_chars);
            format!("- {} ({}): {}", e.name, e.type_label, value)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected output variable '{name}' was not assigned")]
pub struct MissingOutputError {
    pub name: String,
}

/// Check that an expansion assigned every output variable of its call.
pub fn commit_outputs(targets: &[String], ns: &Namespace) -> Result<(), MissingOutputError> {
    match targets.iter().find(|t| !ns.contains(t)) {
        Some(name) => Err(MissingOutputError { name: name.clone() }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use recode_minilang::{parse, validate, CodeUnit, Halt};

    fn call(src: &str) -> PlaceholderCall {
        let ast = parse(src).unwrap();
        match validate(&ast, &["run".to_string()]).unwrap().remove(0) {
            CodeUnit::Placeholder(p) => p,
            other => panic!("{other:?}"),
        }
    }

    fn no_actions() -> impl FnMut(&str) -> Result<String, Halt> {
        |_: &str| -> Result<String, Halt> { panic!("no actions expected") }
    }

    #[test]
    fn identifiers_expose_their_names() {
        let mut ns = Namespace::new(0);
        ns.set("obj", Value::str("mug"));
        ns.set("all_location_IDs", Value::list(vec![Value::str("cabinet 1"), Value::str("fridge 1")]));
        ns.set("unrelated", Value::Int(3));
        let ctx = bind_arguments(&call("obj_ID = find_and_take(obj, all_location_IDs)"), &mut ns, &mut no_actions())
            .unwrap();
        assert_eq!(
            render_context(&ctx, 2000),
            "- obj (str): mug\n- all_location_IDs (list[str]): ['cabinet 1', 'fridge 1']"
        );
    }

    #[test]
    fn literals_become_positional_names() {
        let mut ns = Namespace::new(0);
        ns.set("all_location_IDs", Value::list(vec![]));
        let ctx = bind_arguments(&call("find_and_take('alarmclock', all_location_IDs)"), &mut ns, &mut no_actions())
            .unwrap();
        assert_eq!(ctx.names(), ["arg1", "all_location_IDs"]);
        assert_eq!(ns.get("arg1"), Some(&Value::str("alarmclock")));
        let ctx = bind_arguments(&call("f(all_location_IDs, 'x', 2)"), &mut ns, &mut no_actions()).unwrap();
        assert_eq!(ctx.names(), ["all_location_IDs", "arg2", "arg3"]);
    }

    #[test]
    fn keywords_are_registered() {
        let mut ns = Namespace::new(0);
        let ctx = bind_arguments(&call("f(k='v')"), &mut ns, &mut no_actions()).unwrap();
        assert_eq!(render_context(&ctx, 2000), "- k (str): v");
        assert_eq!(ns.get("k"), Some(&Value::str("v")));
    }

    #[test]
    fn unbound_identifier_is_an_error() {
        let mut ns = Namespace::new(0);
        let err = bind_arguments(&call("f(obj)"), &mut ns, &mut no_actions()).unwrap_err();
        assert_eq!(
            err,
            BindError::Runtime(RuntimeError::new(1, "NameError: name 'obj' is not defined"))
        );
    }

    #[test]
    fn keyword_may_issue_actions() {
        let mut ns = Namespace::new(0);
        let mut seen = Vec::new();
        let mut hook = |a: &str| -> Result<String, Halt> {
            seen.push(a.to_string());
            Ok("You are carrying: a mug 1.".into())
        };
        let ctx = bind_arguments(&call("check(inv=run('inventory'))"), &mut ns, &mut hook).unwrap();
        assert_eq!(seen, ["inventory"]);
        assert_eq!(render_context(&ctx, 2000), "- inv (str): You are carrying: a mug 1.");
    }

    #[test]
    fn empty_context_renders_empty() {
        assert_eq!(render_context(&VisibleContext::default(), 2000), "");
    }

    #[test]
    fn long_values_are_truncated() {
        let mut ns = Namespace::new(0);
        ns.set("s", Value::str("x".repeat(10_000)));
        let ctx = VisibleContext::from_names(["s"], &ns);
        let out = render_context(&ctx, 2000);
        assert!(out.ends_with("…[truncated 8000 chars]"));
        assert_eq!(out.chars().filter(|c| *c == 'x').count(), 2000);
        let (_, cut) = render_value(&Value::str("short"), 64);
        assert!(!cut);
    }

    #[test]
    fn refresh_sees_mutation() {
        let mut ns = Namespace::new(0);
        ns.set("xs", Value::list(vec![Value::Int(1)]));
        let ctx = VisibleContext::from_names(["xs"], &ns);
        if let Some(Value::List(l)) = ns.get("xs") {
            l.with_mut(|v| v.push(Value::Int(2)));
        }
        ns.set("xs2", Value::Int(0));
        assert_eq!(render_context(&ctx.refresh(&ns), 100), "- xs (list[int]): [1, 2]");
    }

    #[test]
    fn outputs_must_exist() {
        let mut ns = Namespace::new(0);
        assert!(commit_outputs(&[], &ns).is_ok());
        assert_eq!(
            commit_outputs(&["obj_ID".into()], &ns),
            Err(MissingOutputError { name: "obj_ID".into() })
        );
        ns.set("obj_ID", Value::str("mug 1"));
        assert!(commit_outputs(&["obj_ID".into()], &ns).is_ok());
    }
}
