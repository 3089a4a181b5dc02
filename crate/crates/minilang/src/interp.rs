//! Tree-walking interpreter for validated plain statements.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

use crate::ast::{BinOp, Callee, Expr, FPart, Stmt, StmtKind, Target};
use crate::builtins::{self, Builtin, DEFAULT_PRIMITIVES};
use crate::error::{ExecError, Halt, RuntimeError};
use crate::namespace::Namespace;
use crate::value::{ListRef, MatchValue, Value};

/// Receives every primitive action issued by executing code.
pub trait ActionExecutor {
    /// Perform `action` and return the observation, or stop execution.
    fn execute(&mut self, action: &str) -> Result<String, Halt>;
}

impl<F> ActionExecutor for F
where
    F: FnMut(&str) -> Result<String, Halt>,
{
    fn execute(&mut self, action: &str) -> Result<String, Halt> {
        self(action)
    }
}

/// Resource caps that keep every block's execution finite and bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_statements: u64,
    pub max_items: usize,
    pub max_str_bytes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_statements: 1_000_000,
            max_items: 1_000_000,
            max_str_bytes: 16 * 1024 * 1024,
        }
    }
}

enum Flow {
    Normal,
    Break,
    Continue,
}

type Res<T> = Result<T, ExecError>;

pub struct Interpreter<'a> {
    ns: &'a mut Namespace,
    actions: &'a mut dyn ActionExecutor,
    primitives: Vec<String>,
    limits: Limits,
    executed: u64,
    regex_cache: HashMap<String, Regex>,
}

impl<'a> Interpreter<'a> {
    pub fn new(ns: &'a mut Namespace, actions: &'a mut dyn ActionExecutor) -> Self {
        Interpreter {
            ns,
            actions,
            primitives: DEFAULT_PRIMITIVES.iter().map(|s| s.to_string()).collect(),
            limits: Limits::default(),
            executed: 0,
            regex_cache: HashMap::new(),
        }
    }

    pub fn with_primitives(mut self, primitives: &[String]) -> Self {
        self.primitives = primitives.to_vec();
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn namespace(&mut self) -> &mut Namespace {
        self.ns
    }

    /// Execute one top-level statement.
    pub fn exec(&mut self, stmt: &Stmt) -> Res<()> {
        match self.stmt(stmt)? {
            Flow::Normal => Ok(()),
            // the parser rejects break/continue outside loops
            Flow::Break | Flow::Continue => Err(rt(stmt.line, "SyntaxError: 'break' outside loop")),
        }
    }

    pub fn exec_block(&mut self, stmts: &[Stmt]) -> Res<()> {
        for s in stmts {
            self.exec(s)?;
        }
        Ok(())
    }

    /// Evaluate an expression in the context of statement line `line`.
    pub fn eval(&mut self, expr: &Expr, line: usize) -> Res<Value> {
        self.expr(expr, line)
    }

    fn stmt(&mut self, stmt: &Stmt) -> Res<Flow> {
        let line = stmt.line;
        self.executed += 1;
        if self.executed > self.limits.max_statements {
            return Err(rt(line, "RuntimeError: execution step limit exceeded"));
        }
        match &stmt.kind {
            StmtKind::Comment(_) | StmtKind::Import(_) => Ok(Flow::Normal),
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Expr(e) => {
                self.expr(e, line)?;
                Ok(Flow::Normal)
            }
            StmtKind::Assign { targets, value } => {
                let v = self.expr(value, line)?;
                self.assign(targets, v, line)?;
                Ok(Flow::Normal)
            }
            StmtKind::For { var, iter, body } => {
                let items: Vec<Value> = match self.expr(iter, line)? {
                    Value::List(l) => l.snapshot(),
                    Value::Str(s) => s.chars().map(|c| Value::Str(c.to_string())).collect(),
                    other => {
                        return Err(rt(
                            line,
                            format!("TypeError: '{}' object is not iterable", other.type_name()),
                        ))
                    }
                };
                for item in items {
                    self.ns.set(var.clone(), item);
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Continue | Flow::Normal => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::If { branches, else_body } => {
                for (cond, body) in branches {
                    if self.expr(cond, line)?.truthy() {
                        return self.block(body);
                    }
                }
                match else_body {
                    Some(body) => self.block(body),
                    None => Ok(Flow::Normal),
                }
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Res<Flow> {
        for s in stmts {
            match self.stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn assign(&mut self, targets: &[Target], value: Value, line: usize) -> Res<()> {
        let names = targets
            .iter()
            .map(|t| match t {
                Target::Name(n) => Ok(n.clone()),
                Target::Invalid(_) => Err(rt(line, "SyntaxError: cannot assign to expression")),
            })
            .collect::<Res<Vec<_>>>()?;
        if names.len() == 1 {
            self.ns.set(names[0].clone(), value);
            return Ok(());
        }
        let items = match &value {
            Value::List(l) => l.snapshot(),
            Value::Str(s) => s.chars().map(|c| Value::Str(c.to_string())).collect(),
            other => {
                return Err(rt(
                    line,
                    format!("TypeError: cannot unpack non-iterable {} object", other.type_name()),
                ))
            }
        };
        if items.len() != names.len() {
            return Err(rt(
                line,
                format!(
                    "ValueError: expected {} values to unpack, got {}",
                    names.len(),
                    items.len()
                ),
            ));
        }
        for (n, v) in names.into_iter().zip(items) {
            self.ns.set(n, v);
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr, line: usize) -> Res<Value> {
        Ok(match e {
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Int(i) => Value::Int(*i),
            Expr::Float(f) => Value::Float(*f),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::None => Value::None,
            Expr::FStr(parts) => {
                let mut out = String::new();
                for p in parts {
                    match p {
                        FPart::Lit(s) => out.push_str(s),
                        FPart::Expr(e) => out.push_str(&self.expr(e, line)?.to_display()),
                    }
                }
                self.check_str(&out, line)?;
                Value::Str(out)
            }
            Expr::List(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for i in items {
                    vals.push(self.expr(i, line)?);
                }
                Value::list(vals)
            }
            Expr::Ident(name) => match self.ns.get(name) {
                Some(v) => v.clone(),
                None => {
                    return Err(rt(line, format!("NameError: name '{name}' is not defined")));
                }
            },
            Expr::Call {
                callee,
                args,
                kwargs,
            } => self.call(callee, args, kwargs, line)?,
            Expr::Index { target, index } => {
                let t = self.expr(target, line)?;
                let i = self.expr(index, line)?;
                index_value(&t, &i, line)?
            }
            Expr::Slice { target, start, end } => {
                let t = self.expr(target, line)?;
                let s = match start {
                    Some(s) => Some(self.expr(s, line)?),
                    None => None,
                };
                let en = match end {
                    Some(x) => Some(self.expr(x, line)?),
                    None => None,
                };
                slice_value(&t, s.as_ref(), en.as_ref(), line)?
            }
            Expr::BinOp { op, lhs, rhs } => {
                let a = self.expr(lhs, line)?;
                let b = self.expr(rhs, line)?;
                let v = binop(*op, &a, &b, line)?;
                match &v {
                    Value::Str(s) => self.check_str(s, line)?,
                    Value::List(l) => self.check_len(l.len(), line)?,
                    _ => {}
                }
                v
            }
            Expr::Not(inner) => Value::Bool(!self.expr(inner, line)?.truthy()),
            Expr::MethodCall { recv, name, args } => {
                let r = self.expr(recv, line)?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.expr(a, line)?);
                }
                self.method(r, name, vals, line)?
            }
        })
    }

    fn check_len(&self, n: usize, line: usize) -> Res<()> {
        if n > self.limits.max_items {
            return Err(rt(line, "MemoryError: list exceeds the size limit"));
        }
        Ok(())
    }

    fn check_str(&self, s: &str, line: usize) -> Res<()> {
        if s.len() > self.limits.max_str_bytes {
            return Err(rt(line, "MemoryError: string exceeds the size limit"));
        }
        Ok(())
    }

    fn call(
        &mut self,
        callee: &Callee,
        args: &[Expr],
        kwargs: &[(String, Expr)],
        line: usize,
    ) -> Res<Value> {
        let dotted = callee.dotted();
        let is_primitive = callee.module.is_none() && self.primitives.contains(&dotted);
        let builtin = builtins::lookup(&dotted);
        if !is_primitive && builtin.is_none() {
            return Err(rt(
                line,
                match callee.module {
                    Some(_) => format!("AttributeError: unknown function '{dotted}'"),
                    None => format!(
                        "NameError: placeholder '{dotted}' must be called as a standalone statement"
                    ),
                },
            ));
        }
        if !kwargs.is_empty() {
            return Err(rt(
                line,
                format!("TypeError: {dotted}() got an unexpected keyword argument '{}'", kwargs[0].0),
            ));
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.expr(a, line)?);
        }
        if is_primitive {
            let action = match vals.as_slice() {
                [Value::Str(s)] => s.clone(),
                [other] => {
                    return Err(rt(
                        line,
                        format!("TypeError: {dotted}() argument must be str, not {}", other.type_name()),
                    ))
                }
                _ => {
                    return Err(rt(
                        line,
                        format!("TypeError: {dotted}() takes exactly one argument ({} given)", vals.len()),
                    ))
                }
            };
            let obs = self.actions.execute(&action)?;
            return Ok(Value::Str(obs));
        }
        self.builtin(builtin.expect("checked above"), vals, line)
    }

    fn builtin(&mut self, b: Builtin, args: Vec<Value>, line: usize) -> Res<Value> {
        let name = b.name();
        let arity = |n: usize| -> Res<()> {
            if args.len() != n {
                return Err(rt(
                    line,
                    format!("TypeError: {name}() takes {n} argument(s) ({} given)", args.len()),
                ));
            }
            Ok(())
        };
        match b {
            Builtin::Print => Ok(Value::None),
            Builtin::Len => {
                arity(1)?;
                match &args[0] {
                    Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
                    Value::List(l) => Ok(Value::Int(l.len() as i64)),
                    other => Err(rt(
                        line,
                        format!("TypeError: object of type '{}' has no len()", other.type_name()),
                    )),
                }
            }
            Builtin::Str => {
                if args.is_empty() {
                    return Ok(Value::str(""));
                }
                arity(1)?;
                Ok(Value::Str(args[0].to_display()))
            }
            Builtin::Int => {
                arity(1)?;
                match &args[0] {
                    Value::Int(i) => Ok(Value::Int(*i)),
                    Value::Bool(b) => Ok(Value::Int(*b as i64)),
                    Value::Float(f) if f.is_finite() && f.trunc().abs() < 9.2e18 => {
                        Ok(Value::Int(f.trunc() as i64))
                    }
                    Value::Float(_) => Err(rt(line, "OverflowError: cannot convert float to integer")),
                    Value::Str(s) => s.trim().parse::<i64>().map(Value::Int).map_err(|_| {
                        rt(
                            line,
                            format!(
                                "ValueError: invalid literal for int() with base 10: {}",
                                crate::value::py_str_repr(s)
                            ),
                        )
                    }),
                    other => Err(rt(
                        line,
                        format!(
                            "TypeError: int() argument must be a string or a number, not '{}'",
                            other.type_name()
                        ),
                    )),
                }
            }
            Builtin::Range => {
                let ints = args
                    .iter()
                    .map(|a| match a {
                        Value::Int(i) => Ok(*i),
                        Value::Bool(b) => Ok(*b as i64),
                        other => Err(rt(
                            line,
                            format!(
                                "TypeError: '{}' object cannot be interpreted as an integer",
                                other.type_name()
                            ),
                        )),
                    })
                    .collect::<Res<Vec<i64>>>()?;
                let (start, stop, step) = match ints.as_slice() {
                    [stop] => (0, *stop, 1),
                    [start, stop] => (*start, *stop, 1),
                    [start, stop, step] => (*start, *stop, *step),
                    _ => {
                        return Err(rt(
                            line,
                            format!("TypeError: range expected 1 to 3 arguments, got {}", ints.len()),
                        ))
                    }
                };
                if step == 0 {
                    return Err(rt(line, "ValueError: range() arg 3 must not be zero"));
                }
                let span = if step > 0 {
                    (stop as i128 - start as i128).max(0)
                } else {
                    (start as i128 - stop as i128).max(0)
                };
                let count = (span + step.unsigned_abs() as i128 - 1) / step.unsigned_abs() as i128;
                if count > self.limits.max_items as i128 {
                    return Err(rt(line, "MemoryError: range exceeds the size limit"));
                }
                let items = (0..count as i64).map(|k| Value::Int(start + k * step)).collect();
                Ok(Value::list(items))
            }
            Builtin::ReFindall | Builtin::ReSearch | Builtin::ReMatch => {
                arity(2)?;
                let (Value::Str(pat), Value::Str(text)) = (&args[0], &args[1]) else {
                    return Err(rt(
                        line,
                        format!(
                            "TypeError: {name}() expects (str, str), got ({}, {})",
                            args[0].type_name(),
                            args[1].type_name()
                        ),
                    ));
                };
                let anchored = b == Builtin::ReMatch;
                let re = self.regex(pat, anchored, line)?;
                match b {
                    Builtin::ReFindall => Ok(findall(&re, text)),
                    _ => Ok(match re.captures(text) {
                        Some(caps) => Value::Match(MatchValue {
                            groups: caps.iter().map(|g| g.map(|m| m.as_str().to_string())).collect(),
                        }),
                        None => Value::None,
                    }),
                }
            }
            Builtin::RandomShuffle => {
                arity(1)?;
                let Value::List(l) = &args[0] else {
                    return Err(rt(
                        line,
                        format!("TypeError: random.shuffle() expects a list, not {}", args[0].type_name()),
                    ));
                };
                let rng = &mut self.ns.rng;
                l.with_mut(|v| v.shuffle(rng));
                Ok(Value::None)
            }
            Builtin::RandomChoice => {
                arity(1)?;
                let items = match &args[0] {
                    Value::List(l) => l.snapshot(),
                    Value::Str(s) => s.chars().map(|c| Value::Str(c.to_string())).collect(),
                    other => {
                        return Err(rt(
                            line,
                            format!("TypeError: random.choice() expects a sequence, not {}", other.type_name()),
                        ))
                    }
                };
                if items.is_empty() {
                    return Err(rt(line, "IndexError: cannot choose from an empty sequence"));
                }
                let i = self.ns.rng.random_range(0..items.len());
                Ok(items[i].clone())
            }
        }
    }

    fn regex(&mut self, pat: &str, anchored: bool, line: usize) -> Res<Regex> {
        let key = if anchored { format!("A:{pat}") } else { format!("S:{pat}") };
        if let Some(r) = self.regex_cache.get(&key) {
            return Ok(r.clone());
        }
        let source = if anchored { format!(r"\A(?:{pat})") } else { pat.to_string() };
        let re = Regex::new(&source).map_err(|e| {
            let detail = e.to_string();
            let last = detail.lines().last().unwrap_or("invalid pattern").trim().to_string();
            rt(
                line,
                format!("re.error: cannot compile pattern {}: {last}", crate::value::py_str_repr(pat)),
            )
        })?;
        self.regex_cache.insert(key, re.clone());
        Ok(re)
    }

    fn method(&mut self, recv: Value, name: &str, args: Vec<Value>, line: usize) -> Res<Value> {
        let bad_arity = |n: &str| {
            rt(
                line,
                format!("TypeError: {name}() takes {n} argument(s) ({} given)", args.len()),
            )
        };
        match recv {
            Value::None => {
                if name == "group" || name == "groups" {
                    Err(rt(
                        line,
                        format!("AttributeError: {name}() on no-match: the regex search returned None"),
                    ))
                } else {
                    Err(rt(line, format!("AttributeError: 'NoneType' object has no attribute '{name}'")))
                }
            }
            Value::Match(m) => match name {
                "group" => {
                    let idx = match args.as_slice() {
                        [] => 0,
                        [Value::Int(i)] if *i >= 0 => *i as usize,
                        [_] => return Err(rt(line, "IndexError: no such group")),
                        _ => return Err(bad_arity("0 or 1")),
                    };
                    match m.groups.get(idx) {
                        Some(Some(s)) => Ok(Value::Str(s.clone())),
                        Some(None) => Ok(Value::None),
                        None => Err(rt(line, "IndexError: no such group")),
                    }
                }
                "groups" => {
                    if !args.is_empty() {
                        return Err(bad_arity("0"));
                    }
                    Ok(Value::list(
                        m.groups
                            .iter()
                            .skip(1)
                            .map(|g| g.clone().map(Value::Str).unwrap_or(Value::None))
                            .collect(),
                    ))
                }
                _ => Err(no_attr("re.Match", name, line)),
            },
            Value::Str(s) => self.str_method(&s, name, args, line),
            Value::List(l) => self.list_method(&l, name, args, line),
            other => Err(no_attr(other.type_name(), name, line)),
        }
    }

    fn str_method(&mut self, s: &str, name: &str, args: Vec<Value>, line: usize) -> Res<Value> {
        let strs: Vec<&str> = args
            .iter()
            .filter_map(|a| match a {
                Value::Str(x) => Some(x.as_str()),
                _ => None,
            })
            .collect();
        let all_str = strs.len() == args.len();
        let want = |n: usize| -> Res<()> {
            if args.len() != n {
                return Err(rt(
                    line,
                    format!("TypeError: str.{name}() takes {n} argument(s) ({} given)", args.len()),
                ));
            }
            if !all_str && name != "join" {
                return Err(rt(line, format!("TypeError: str.{name}() arguments must be str")));
            }
            Ok(())
        };
        let v = match name {
            "lower" => {
                want(0)?;
                Value::Str(s.to_lowercase())
            }
            "upper" => {
                want(0)?;
                Value::Str(s.to_uppercase())
            }
            "strip" | "lstrip" | "rstrip" => {
                let chars: Option<Vec<char>> = match args.len() {
                    0 => None,
                    1 => {
                        want(1)?;
                        Some(strs[0].chars().collect())
                    }
                    _ => return Err(rt(line, format!("TypeError: str.{name}() takes at most 1 argument"))),
                };
                let pred = |c: char| match &chars {
                    Some(set) => set.contains(&c),
                    None => c.is_whitespace(),
                };
                Value::Str(
                    match name {
                        "strip" => s.trim_matches(pred),
                        "lstrip" => s.trim_start_matches(pred),
                        _ => s.trim_end_matches(pred),
                    }
                    .to_string(),
                )
            }
            "split" => {
                let parts: Vec<Value> = match args.len() {
                    0 => s.split_whitespace().map(Value::str).collect(),
                    1 => {
                        want(1)?;
                        if strs[0].is_empty() {
                            return Err(rt(line, "ValueError: empty separator"));
                        }
                        s.split(strs[0]).map(Value::str).collect()
                    }
                    _ => return Err(rt(line, "TypeError: str.split() takes at most 1 argument")),
                };
                Value::list(parts)
            }
            "startswith" => {
                want(1)?;
                Value::Bool(s.starts_with(strs[0]))
            }
            "endswith" => {
                want(1)?;
                Value::Bool(s.ends_with(strs[0]))
            }
            "replace" => {
                want(2)?;
                let out = s.replace(strs[0], strs[1]);
                self.check_str(&out, line)?;
                Value::Str(out)
            }
            "find" => {
                want(1)?;
                match s.find(strs[0]) {
                    Some(byte) => Value::Int(s[..byte].chars().count() as i64),
                    None => Value::Int(-1),
                }
            }
            "count" => {
                want(1)?;
                if strs[0].is_empty() {
                    Value::Int(s.chars().count() as i64 + 1)
                } else {
                    Value::Int(s.matches(strs[0]).count() as i64)
                }
            }
            "join" => {
                want(1)?;
                let Value::List(l) = &args[0] else {
                    return Err(rt(line, "TypeError: can only join a list of str"));
                };
                let mut pieces = Vec::new();
                for (i, item) in l.snapshot().into_iter().enumerate() {
                    match item {
                        Value::Str(x) => pieces.push(x),
                        other => {
                            return Err(rt(
                                line,
                                format!(
                                    "TypeError: sequence item {i}: expected str instance, {} found",
                                    other.type_name()
                                ),
                            ))
                        }
                    }
                }
                let out = pieces.join(s);
                self.check_str(&out, line)?;
                Value::Str(out)
            }
            _ => return Err(no_attr("str", name, line)),
        };
        Ok(v)
    }

    fn list_method(&mut self, l: &ListRef, name: &str, args: Vec<Value>, line: usize) -> Res<Value> {
        let want = |n: usize| -> Res<()> {
            if args.len() != n {
                return Err(rt(
                    line,
                    format!("TypeError: list.{name}() takes {n} argument(s) ({} given)", args.len()),
                ));
            }
            Ok(())
        };
        let no_cycle = |v: &Value| -> Res<()> {
            if let Value::List(inner) = v {
                if inner.reaches(l) {
                    return Err(rt(line, "ValueError: cannot insert a list into itself"));
                }
            }
            Ok(())
        };
        match name {
            "append" => {
                want(1)?;
                no_cycle(&args[0])?;
                self.check_len(l.len() + 1, line)?;
                l.with_mut(|v| v.push(args[0].clone()));
                Ok(Value::None)
            }
            "extend" => {
                want(1)?;
                let items = match &args[0] {
                    Value::List(other) => other.snapshot(),
                    Value::Str(s) => s.chars().map(|c| Value::Str(c.to_string())).collect(),
                    other => {
                        return Err(rt(
                            line,
                            format!("TypeError: '{}' object is not iterable", other.type_name()),
                        ))
                    }
                };
                for it in &items {
                    no_cycle(it)?;
                }
                self.check_len(l.len() + items.len(), line)?;
                l.with_mut(|v| v.extend(items));
                Ok(Value::None)
            }
            "insert" => {
                want(2)?;
                let Value::Int(i) = args[0] else {
                    return Err(rt(line, "TypeError: list.insert() index must be an integer"));
                };
                no_cycle(&args[1])?;
                self.check_len(l.len() + 1, line)?;
                l.with_mut(|v| {
                    let n = v.len() as i64;
                    let pos = if i < 0 { (i + n).max(0) } else { i.min(n) };
                    v.insert(pos as usize, args[1].clone());
                });
                Ok(Value::None)
            }
            "remove" => {
                want(1)?;
                let items = l.snapshot();
                match items.iter().position(|x| x.py_eq(&args[0])) {
                    Some(i) => {
                        l.with_mut(|v| {
                            v.remove(i);
                        });
                        Ok(Value::None)
                    }
                    None => Err(rt(
                        line,
                        format!("ValueError: list.remove(x): {} not in list", args[0].repr()),
                    )),
                }
            }
            "index" => {
                want(1)?;
                match l.snapshot().iter().position(|x| x.py_eq(&args[0])) {
                    Some(i) => Ok(Value::Int(i as i64)),
                    None => Err(rt(line, format!("ValueError: {} is not in list", args[0].repr()))),
                }
            }
            "count" => {
                want(1)?;
                Ok(Value::Int(
                    l.snapshot().iter().filter(|x| x.py_eq(&args[0])).count() as i64,
                ))
            }
            "pop" => {
                let n = l.len() as i64;
                let idx = match args.as_slice() {
                    [] => -1,
                    [Value::Int(i)] => *i,
                    [_] => return Err(rt(line, "TypeError: list.pop() index must be an integer")),
                    _ => return Err(rt(line, "TypeError: list.pop() takes at most 1 argument")),
                };
                if n == 0 {
                    return Err(rt(line, "IndexError: pop from empty list"));
                }
                let real = if idx < 0 { idx + n } else { idx };
                if real < 0 || real >= n {
                    return Err(rt(line, "IndexError: pop index out of range"));
                }
                Ok(l.with_mut(|v| v.remove(real as usize)))
            }
            _ => Err(no_attr("list", name, line)),
        }
    }
}

fn rt(line: usize, msg: impl Into<String>) -> ExecError {
    ExecError::Runtime(RuntimeError::new(line, msg))
}

fn no_attr(ty: &str, name: &str, line: usize) -> ExecError {
    rt(line, format!("AttributeError: '{ty}' object has no attribute '{name}'"))
}

fn findall(re: &Regex, text: &str) -> Value {
    let groups = re.captures_len() - 1;
    let mut out = Vec::new();
    for caps in re.captures_iter(text) {
        let get = |i: usize| Value::Str(caps.get(i).map(|m| m.as_str()).unwrap_or("").to_string());
        out.push(match groups {
            0 => get(0),
            1 => get(1),
            n => Value::list((1..=n).map(get).collect()),
        });
    }
    Value::list(out)
}

fn as_index(v: &Value, line: usize, what: &str) -> Res<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        Value::Bool(b) => Ok(*b as i64),
        other => Err(rt(
            line,
            format!("TypeError: {what} indices must be integers, not {}", other.type_name()),
        )),
    }
}

fn index_value(target: &Value, index: &Value, line: usize) -> Res<Value> {
    match target {
        Value::List(l) => {
            let items = l.snapshot();
            let i = as_index(index, line, "list")?;
            let n = items.len() as i64;
            let real = if i < 0 { i + n } else { i };
            if real < 0 || real >= n {
                return Err(rt(line, "IndexError: list index out of range"));
            }
            Ok(items[real as usize].clone())
        }
        Value::Str(s) => {
            let i = as_index(index, line, "string")?;
            let n = s.chars().count() as i64;
            let real = if i < 0 { i + n } else { i };
            if real < 0 || real >= n {
                return Err(rt(line, "IndexError: string index out of range"));
            }
            Ok(Value::Str(s.chars().nth(real as usize).unwrap().to_string()))
        }
        other => Err(rt(
            line,
            format!("TypeError: '{}' object is not subscriptable", other.type_name()),
        )),
    }
}

fn slice_bounds(n: i64, start: Option<&Value>, end: Option<&Value>, line: usize) -> Res<(usize, usize)> {
    let norm = |v: Option<&Value>, default: i64| -> Res<i64> {
        match v {
            None | Some(Value::None) => Ok(default),
            Some(x) => {
                let i = as_index(x, line, "slice")?;
                Ok(if i < 0 { (i + n).max(0) } else { i.min(n) })
            }
        }
    };
    let s = norm(start, 0)?;
    let e = norm(end, n)?;
    Ok((s as usize, e.max(s) as usize))
}

fn slice_value(target: &Value, start: Option<&Value>, end: Option<&Value>, line: usize) -> Res<Value> {
    match target {
        Value::List(l) => {
            let items = l.snapshot();
            let (s, e) = slice_bounds(items.len() as i64, start, end, line)?;
            Ok(Value::list(items[s..e].to_vec()))
        }
        Value::Str(st) => {
            let chars: Vec<char> = st.chars().collect();
            let (s, e) = slice_bounds(chars.len() as i64, start, end, line)?;
            Ok(Value::Str(chars[s..e].iter().collect()))
        }
        other => Err(rt(
            line,
            format!("TypeError: '{}' object is not subscriptable", other.type_name()),
        )),
    }
}

fn binop(op: BinOp, a: &Value, b: &Value, line: usize) -> Res<Value> {
    use Value::*;
    let unsupported = || {
        rt(
            line,
            format!(
                "TypeError: unsupported operand type(s) for {}: '{}' and '{}'",
                op.symbol(),
                a.type_name(),
                b.type_name()
            ),
        )
    };
    let num = |v: &Value| -> Option<Result<i64, f64>> {
        match v {
            Int(i) => Some(Ok(*i)),
            Bool(x) => Some(Ok(*x as i64)),
            Float(f) => Some(Err(*f)),
            _ => Option::None,
        }
    };
    match op {
        BinOp::Eq => Ok(Bool(a.py_eq(b))),
        BinOp::NotEq => Ok(Bool(!a.py_eq(b))),
        BinOp::In | BinOp::NotIn => {
            let found = match b {
                Str(hay) => match a {
                    Str(needle) => hay.contains(needle.as_str()),
                    other => {
                        return Err(rt(
                            line,
                            format!(
                                "TypeError: 'in <string>' requires string as left operand, not {}",
                                other.type_name()
                            ),
                        ))
                    }
                },
                List(l) => l.snapshot().iter().any(|x| x.py_eq(a)),
                other => {
                    return Err(rt(
                        line,
                        format!("TypeError: argument of type '{}' is not iterable", other.type_name()),
                    ))
                }
            };
            Ok(Bool(if op == BinOp::In { found } else { !found }))
        }
        BinOp::Add | BinOp::Sub => {
            if op == BinOp::Add {
                match (a, b) {
                    (Str(x), Str(y)) => return Ok(Str(format!("{x}{y}"))),
                    (List(x), List(y)) => {
                        let mut items = x.snapshot();
                        items.extend(y.snapshot());
                        return Ok(Value::list(items));
                    }
                    _ => {}
                }
            }
            let (Some(x), Some(y)) = (num(a), num(b)) else {
                return Err(unsupported());
            };
            match (x, y) {
                (Ok(i), Ok(j)) => {
                    let r = if op == BinOp::Add { i.checked_add(j) } else { i.checked_sub(j) };
                    r.map(Int)
                        .ok_or_else(|| rt(line, "OverflowError: integer result exceeds 64 bits"))
                }
                (x, y) => {
                    let f = |v: Result<i64, f64>| match v {
                        Ok(i) => i as f64,
                        Err(f) => f,
                    };
                    Ok(Float(if op == BinOp::Add { f(x) + f(y) } else { f(x) - f(y) }))
                }
            }
        }
    }
}

/// Execute a single statement against `ns`, sending primitive actions to `actions`.
pub fn exec_plain(stmt: &Stmt, ns: &mut Namespace, actions: &mut dyn ActionExecutor) -> Result<(), ExecError> {
    Interpreter::new(ns, actions).exec(stmt)
}
