//! Classify the top-level statements of a block into code units.

use crate::ast::{Ast, Expr, Stmt, StmtKind, Target};
use crate::builtins;
use crate::error::ValidationError;
use crate::parser::MODULES;

/// A placeholder call at the top level of a block, e.g.
/// `obj_ID = find_and_take(obj, all_location_IDs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceholderCall {
    pub name: String,
    pub args: Vec<Expr>,
    pub kwargs: Vec<(String, Expr)>,
    /// Output variables the expansion is expected to assign.
    pub targets: Vec<String>,
    pub stmt: Stmt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodeUnit {
    Placeholder(PlaceholderCall),
    /// Anything executed directly. `primitive` marks statements that contain a
    /// primitive action call somewhere inside.
    Plain { stmt: Stmt, primitive: bool },
}

impl CodeUnit {
    pub fn line(&self) -> usize {
        match self {
            CodeUnit::Placeholder(p) => p.stmt.line,
            CodeUnit::Plain { stmt, .. } => stmt.line,
        }
    }

    pub fn is_placeholder(&self) -> bool {
        matches!(self, CodeUnit::Placeholder(_))
    }
}

/// Name, positional args, keyword args and assignment targets of a placeholder call.
type PlaceholderParts<'s> = (String, Vec<Expr>, Vec<(String, Expr)>, Option<&'s [Target]>);

struct Classifier<'a> {
    primitives: &'a [String],
}

impl Classifier<'_> {
    fn is_primitive(&self, name: &str) -> bool {
        self.primitives.iter().any(|p| p == name)
    }

    /// Bare call names that would be expanded by the policy.
    fn is_placeholder_name(&self, name: &str) -> bool {
        !self.is_primitive(name) && builtins::lookup(name).is_none()
    }

    fn check_expr(&self, e: &Expr, line: usize, in_control: bool) -> Result<bool, ValidationError> {
        let mut primitive = false;
        let mut err = None;
        e.walk(&mut |sub| {
            if err.is_some() {
                return;
            }
            if let Expr::Call { callee, .. } = sub {
                match &callee.module {
                    Some(_) => {
                        if builtins::lookup(&callee.dotted()).is_none() {
                            err = Some(ValidationError::new(
                                line,
                                format!("unknown function '{}'", callee.dotted()),
                            ));
                        }
                    }
                    None if self.is_primitive(&callee.name) => primitive = true,
                    None if self.is_placeholder_name(&callee.name) => {
                        err = Some(if in_control {
                            ValidationError::new(
                                line,
                                format!("placeholder inside control flow: '{}'", callee.name),
                            )
                        } else {
                            ValidationError::new(
                                line,
                                format!(
                                    "placeholder call '{}' must be a standalone statement",
                                    callee.name
                                ),
                            )
                        });
                    }
                    None => {}
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(primitive),
        }
    }

    fn check_targets(&self, targets: &[Target], line: usize) -> Result<Vec<String>, ValidationError> {
        targets
            .iter()
            .map(|t| match t {
                Target::Name(n) => self.check_bindable(n, line).map(|_| n.clone()),
                Target::Invalid(_) => Err(ValidationError::new(
                    line,
                    "assignment target must be a plain variable name",
                )),
            })
            .collect()
    }

    fn check_bindable(&self, name: &str, line: usize) -> Result<(), ValidationError> {
        if self.is_primitive(name) || builtins::lookup(name).is_some() || MODULES.contains(&name) {
            return Err(ValidationError::new(
                line,
                format!("cannot assign to builtin name '{name}'"),
            ));
        }
        Ok(())
    }

    /// Check a statement nested anywhere; returns whether it issues primitives.
    fn check_stmt(&self, s: &Stmt, in_control: bool) -> Result<bool, ValidationError> {
        let line = s.line;
        Ok(match &s.kind {
            StmtKind::Comment(_) | StmtKind::Import(_) | StmtKind::Break | StmtKind::Continue => false,
            StmtKind::Expr(e) => self.check_expr(e, line, in_control)?,
            StmtKind::Assign { targets, value } => {
                self.check_targets(targets, line)?;
                self.check_expr(value, line, in_control)?
            }
            StmtKind::For { var, iter, body } => {
                self.check_bindable(var, line)?;
                let mut p = self.check_expr(iter, line, in_control)?;
                for b in body {
                    p |= self.check_stmt(b, true)?;
                }
                p
            }
            StmtKind::If { branches, else_body } => {
                let mut p = false;
                for (cond, body) in branches {
                    p |= self.check_expr(cond, line, in_control)?;
                    for b in body {
                        p |= self.check_stmt(b, true)?;
                    }
                }
                for b in else_body.iter().flatten() {
                    p |= self.check_stmt(b, true)?;
                }
                p
            }
        })
    }

    fn placeholder_of<'s>(&self, s: &'s Stmt) -> Option<PlaceholderParts<'s>> {
        let (call, targets) = match &s.kind {
            StmtKind::Expr(e) => (e, None),
            StmtKind::Assign { targets, value } => (value, Some(targets.as_slice())),
            _ => return None,
        };
        match call {
            Expr::Call {
                callee,
                args,
                kwargs,
            } if callee.module.is_none() && self.is_placeholder_name(&callee.name) => {
                Some((callee.name.clone(), args.clone(), kwargs.clone(), targets))
            }
            _ => None,
        }
    }
}

/// Split a parsed block into code units.
///
/// Each top-level statement becomes one unit. A statement whose whole expression
/// is a call to a name that is neither a builtin nor a primitive is a
/// placeholder; placeholder calls anywhere else (inside loops, conditionals or
/// larger expressions) are rejected.
pub fn validate(ast: &Ast, primitives: &[String]) -> Result<Vec<CodeUnit>, ValidationError> {
    let c = Classifier { primitives };
    let mut units = Vec::with_capacity(ast.statements.len());
    for s in &ast.statements {
        if let Some((name, args, kwargs, targets)) = c.placeholder_of(s) {
            let targets = match targets {
                Some(t) => c.check_targets(t, s.line)?,
                None => Vec::new(),
            };
            for a in args.iter().chain(kwargs.iter().map(|(_, e)| e)) {
                c.check_expr(a, s.line, false)?;
            }
            for (k, _) in &kwargs {
                c.check_bindable(k, s.line)?;
            }
            units.push(CodeUnit::Placeholder(PlaceholderCall {
                name,
                args,
                kwargs,
                targets,
                stmt: s.clone(),
            }));
            continue;
        }
        let primitive = c.check_stmt(s, false)?;
        units.push(CodeUnit::Plain {
            stmt: s.clone(),
            primitive,
        });
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn prims() -> Vec<String> {
        vec!["run".to_string()]
    }

    fn units(src: &str) -> Result<Vec<CodeUnit>, ValidationError> {
        validate(&parse(src).unwrap(), &prims())
    }

    #[test]
    fn placeholder_with_two_outputs() {
        let u = units("obj_ID, all_location_IDs = find_and_take('alarmclock', all_location_IDs)").unwrap();
        let CodeUnit::Placeholder(p) = &u[0] else { panic!() };
        assert_eq!(p.name, "find_and_take");
        assert_eq!(p.targets, ["obj_ID", "all_location_IDs"]);
    }

    #[test]
    fn primitive_is_plain() {
        let u = units("run('open refrigerator')").unwrap();
        assert_eq!(
            u,
            vec![CodeUnit::Plain {
                stmt: parse("run('open refrigerator')").unwrap().statements[0].clone(),
                primitive: true
            }]
        );
    }

    #[test]
    fn placeholder_in_loop_rejected() {
        let e = units("for x in items:\n    get_ingredients()").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("placeholder inside control flow"));
        let e = units("if ready:\n    cook_meal()\nelse:\n    run('wait')").unwrap_err();
        assert!(e.message.contains("control flow"));
    }

    #[test]
    fn nested_placeholder_rejected() {
        let e = units("x = len(find_things())").unwrap_err();
        assert!(e.message.contains("standalone"));
        let e = units("do_it(other_thing())").unwrap_err();
        assert!(e.message.contains("standalone"));
    }

    #[test]
    fn non_identifier_target_rejected() {
        let e = units("xs[0] = 1").unwrap_err();
        assert!(e.message.contains("plain variable"));
        let e = units("xs[0] = make_thing()").unwrap_err();
        assert!(e.message.contains("plain variable"));
    }

    #[test]
    fn builtins_are_not_placeholders() {
        let u = units("n = len(xs)\nprint(n)\nys = re.findall(r'\\d', s)").unwrap();
        assert!(u.iter().all(|u| !u.is_placeholder()));
    }

    #[test]
    fn unknown_module_function_rejected() {
        let e = units("x = re.sub('a', 'b', s)").unwrap_err();
        assert!(e.message.contains("re.sub"));
    }

    #[test]
    fn self_recursive_solve_is_placeholder() {
        let u = units("run(\"teleport to art studio\")\nobs = run(\"look around\")\nsolve(instruction, obs)").unwrap();
        assert!(u[2].is_placeholder());
        assert!(!u[0].is_placeholder());
    }

    #[test]
    fn shadowing_builtins_rejected() {
        assert!(units("run = 1").is_err());
        assert!(units("for len in xs:\n    x = 1").is_err());
    }
}
