//! Recursive-descent parser for the agent code grammar. See `docs/minilang.md`.

use crate::ast::{Ast, BinOp, Callee, Expr, FPart, Stmt, StmtKind, Target};
use crate::error::SyntaxError;
use crate::lexer::{tokenize, RawFPart, Tok, Token};

/// Modules whose functions may be called with dotted syntax and imported.
pub const MODULES: &[&str] = &["re", "random"];

const FORBIDDEN: &[(&str, &str)] = &[
    ("def", "function definitions with `def` are not allowed"),
    ("class", "class definitions are not allowed"),
    ("while", "`while` loops are not allowed"),
    ("lambda", "`lambda` expressions are not allowed"),
    ("try", "`try` statements are not allowed"),
    ("except", "`except` is not allowed"),
    ("finally", "`finally` is not allowed"),
    ("with", "`with` statements are not allowed"),
    ("return", "`return` is not allowed; assign output variables instead"),
    ("yield", "`yield` is not allowed"),
    ("global", "`global` is not allowed"),
    ("nonlocal", "`nonlocal` is not allowed"),
    ("del", "`del` is not allowed"),
    ("raise", "`raise` is not allowed"),
    ("assert", "`assert` is not allowed"),
    ("async", "`async` is not allowed"),
    ("await", "`await` is not allowed"),
    ("pass", "`pass` is not supported"),
    ("from", "`from ... import` is not supported"),
    ("and", "operator `and` is not supported"),
    ("or", "operator `or` is not supported"),
    ("is", "operator `is` is not supported"),
    ("as", "`as` is not supported"),
];

const KEYWORDS: &[&str] = &[
    "for", "in", "if", "elif", "else", "not", "break", "continue", "import", "True", "False", "None",
];

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || FORBIDDEN.iter().any(|(k, _)| *k == word)
}

/// Parse a code block into an [`Ast`].
pub fn parse(source: &str) -> Result<Ast, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        loop_depth: 0,
    };
    let mut statements = Vec::new();
    while !p.at(&Tok::Eof) {
        if p.at(&Tok::Indent) {
            return Err(p.error("unexpected indent"));
        }
        statements.push(p.statement()?);
    }
    Ok(Ast { statements })
}

/// Parse a single expression (used for f-string interpolations).
pub fn parse_expr(source: &str, line: usize) -> Result<Expr, SyntaxError> {
    let mut tokens = tokenize(source.trim()).map_err(|e| SyntaxError::new(line, e.message))?;
    for t in &mut tokens {
        t.line = line;
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        loop_depth: 0,
    };
    let e = p.expr()?;
    if !(p.at(&Tok::Newline) || p.at(&Tok::Eof)) {
        return Err(p.error("unexpected token in expression"));
    }
    p.eat(&Tok::Newline);
    if !p.at(&Tok::Eof) {
        return Err(p.error("unexpected token in expression"));
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    loop_depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].tok
    }

    fn peek_at(&self, off: usize) -> &Tok {
        &self.tokens[(self.pos + off).min(self.tokens.len() - 1)].tok
    }

    fn line(&self) -> usize {
        self.tokens[self.pos.min(self.tokens.len() - 1)].line
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.line(), msg)
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Str(_) | Tok::FStr(_) => "string literal".into(),
            Tok::Int(i) => format!("'{i}'"),
            Tok::Float(f) => format!("'{f}'"),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Comment(_) => "comment".into(),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), SyntaxError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{op}', found {}", self.describe())))
        }
    }

    fn expect_newline(&mut self) -> Result<(), SyntaxError> {
        if self.eat(&Tok::Newline) || self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.error(format!("expected end of line, found {}", self.describe())))
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Name(n) if !is_reserved(&n) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error(format!("expected a name, found {}", self.describe()))),
        }
    }

    fn forbidden_check(&self) -> Result<(), SyntaxError> {
        if let Tok::Name(n) = self.peek() {
            if let Some((_, msg)) = FORBIDDEN.iter().find(|(k, _)| k == n) {
                return Err(self.error(*msg));
            }
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<Stmt, SyntaxError> {
        let line = self.line();
        if let Tok::Comment(text) = self.peek().clone() {
            self.pos += 1;
            self.expect_newline()?;
            return Ok(Stmt {
                line,
                kind: StmtKind::Comment(text),
            });
        }
        self.forbidden_check()?;
        if self.eat_kw("for") {
            let var = self.name()?;
            if self.at_op(",") {
                return Err(self.error("tuple unpacking in `for` is not supported"));
            }
            if !self.eat_kw("in") {
                return Err(self.error(format!("expected 'in', found {}", self.describe())));
            }
            let iter = self.expr()?;
            self.expect_op(":")?;
            self.loop_depth += 1;
            let body = self.suite();
            self.loop_depth -= 1;
            return Ok(Stmt {
                line,
                kind: StmtKind::For {
                    var,
                    iter,
                    body: body?,
                },
            });
        }
        if self.eat_kw("if") {
            let mut branches = Vec::new();
            let cond = self.expr()?;
            self.expect_op(":")?;
            branches.push((cond, self.suite()?));
            let mut else_body = None;
            loop {
                if self.eat_kw("elif") {
                    let cond = self.expr()?;
                    self.expect_op(":")?;
                    branches.push((cond, self.suite()?));
                } else if self.eat_kw("else") {
                    self.expect_op(":")?;
                    else_body = Some(self.suite()?);
                    break;
                } else {
                    break;
                }
            }
            return Ok(Stmt {
                line,
                kind: StmtKind::If { branches, else_body },
            });
        }
        if self.at_kw("elif") || self.at_kw("else") {
            return Err(self.error(format!("{} without a matching `if`", self.describe())));
        }
        self.simple_statement()
    }

    fn simple_statement(&mut self) -> Result<Stmt, SyntaxError> {
        let line = self.line();
        self.forbidden_check()?;
        if self.at_kw("for") || self.at_kw("if") {
            return Err(self.error("compound statement not allowed here"));
        }
        if self.eat_kw("break") || self.eat_kw("continue") {
            let word = match &self.tokens[self.pos - 1].tok {
                Tok::Name(n) => n.clone(),
                _ => unreachable!(),
            };
            if self.loop_depth == 0 {
                return Err(SyntaxError::new(line, format!("'{word}' outside loop")));
            }
            self.expect_newline()?;
            let kind = if word == "break" {
                StmtKind::Break
            } else {
                StmtKind::Continue
            };
            return Ok(Stmt { line, kind });
        }
        if self.eat_kw("import") {
            let module = self.name()?;
            if !MODULES.contains(&module.as_str()) {
                return Err(SyntaxError::new(
                    line,
                    format!("import of '{module}' is not allowed (only re, random)"),
                ));
            }
            if self.at_op(",") || self.at_kw("as") {
                return Err(self.error("only `import <module>` is supported"));
            }
            self.expect_newline()?;
            return Ok(Stmt {
                line,
                kind: StmtKind::Import(module),
            });
        }

        let mut exprs = vec![self.expr()?];
        while self.eat_op(",") {
            exprs.push(self.expr()?);
        }
        if self.eat_op("=") {
            let targets = exprs
                .into_iter()
                .map(|e| match e {
                    Expr::Ident(n) => Target::Name(n),
                    other => Target::Invalid(other),
                })
                .collect();
            let value = self.expr()?;
            if self.at_op(",") {
                return Err(self.error("tuple expressions are not supported"));
            }
            if self.at_op("=") {
                return Err(self.error("chained assignment is not supported"));
            }
            self.expect_newline()?;
            return Ok(Stmt {
                line,
                kind: StmtKind::Assign { targets, value },
            });
        }
        if exprs.len() > 1 {
            return Err(SyntaxError::new(line, "tuple expressions are not supported"));
        }
        self.expect_newline()?;
        Ok(Stmt {
            line,
            kind: StmtKind::Expr(exprs.pop().unwrap()),
        })
    }

    /// Block after `:`: an indented block, or one simple statement on the same line.
    fn suite(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        if !self.eat(&Tok::Newline) {
            return Ok(vec![self.simple_statement()?]);
        }
        if !self.eat(&Tok::Indent) {
            return Err(self.error("expected an indented block"));
        }
        let mut body = Vec::new();
        while !self.eat(&Tok::Dedent) {
            if self.at(&Tok::Eof) {
                break;
            }
            if self.at(&Tok::Indent) {
                return Err(self.error("unexpected indent"));
            }
            body.push(self.statement()?);
        }
        if body.iter().all(|s| matches!(s.kind, StmtKind::Comment(_))) {
            return Err(self.error("expected an indented block"));
        }
        Ok(body)
    }

    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw("not") {
            let inner = self.expr()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<BinOp> {
        match self.peek() {
            Tok::Op("==") => {
                self.pos += 1;
                Some(BinOp::Eq)
            }
            Tok::Op("!=") => {
                self.pos += 1;
                Some(BinOp::NotEq)
            }
            Tok::Name(n) if n == "in" => {
                self.pos += 1;
                Some(BinOp::In)
            }
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.pos += 2;
                Some(BinOp::NotIn)
            }
            _ => None,
        }
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.additive()?;
        let Some(op) = self.comp_op() else {
            return Ok(lhs);
        };
        let rhs = self.additive()?;
        if self.comp_op().is_some() {
            return Err(self.error("chained comparisons are not supported"));
        }
        Ok(Expr::BinOp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    fn additive(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            let rhs = self.unary()?;
            lhs = Expr::BinOp {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.at_op("-") {
            let lit = match self.peek_at(1) {
                Tok::Int(i) => Expr::Int(-*i),
                Tok::Float(f) => Expr::Float(-*f),
                _ => return Err(self.error("unary minus is only supported on numeric literals")),
            };
            self.pos += 2;
            return self.trailers(lit);
        }
        if self.at_op("+") {
            return Err(self.error("unary plus is not supported"));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let line = self.line();
        if let Tok::Name(n) = self.peek().clone() {
            if MODULES.contains(&n.as_str()) && matches!(self.peek_at(1), Tok::Op(".")) {
                self.pos += 2;
                let name = self.name()?;
                if !self.at_op("(") {
                    return Err(SyntaxError::new(line, format!("'{n}.{name}' must be called")));
                }
                let (args, kwargs) = self.call_args()?;
                let call = Expr::Call {
                    callee: Callee {
                        module: Some(n),
                        name,
                    },
                    args,
                    kwargs,
                };
                return self.trailers(call);
            }
            if !is_reserved(&n) && matches!(self.peek_at(1), Tok::Op("(")) {
                self.pos += 1;
                let (args, kwargs) = self.call_args()?;
                let call = Expr::Call {
                    callee: Callee::bare(n),
                    args,
                    kwargs,
                };
                return self.trailers(call);
            }
        }
        let atom = self.atom()?;
        self.trailers(atom)
    }

    fn trailers(&mut self, mut e: Expr) -> Result<Expr, SyntaxError> {
        loop {
            if self.eat_op("[") {
                e = self.subscript(e)?;
            } else if self.eat_op(".") {
                let name = self.name()?;
                if !self.at_op("(") {
                    return Err(self.error(format!(
                        "attribute access '.{name}' is only supported as a method call"
                    )));
                }
                let (args, kwargs) = self.call_args()?;
                if !kwargs.is_empty() {
                    return Err(self.error("keyword arguments are not supported in method calls"));
                }
                e = Expr::MethodCall {
                    recv: Box::new(e),
                    name,
                    args,
                };
            } else if self.at_op("(") {
                return Err(self.error("only named functions can be called"));
            } else {
                return Ok(e);
            }
        }
    }

    fn subscript(&mut self, target: Expr) -> Result<Expr, SyntaxError> {
        let start = if self.at_op(":") { None } else { Some(self.expr()?) };
        if self.eat_op(":") {
            let end = if self.at_op("]") { None } else { Some(self.expr()?) };
            if self.at_op(":") {
                return Err(self.error("slice steps are not supported"));
            }
            self.expect_op("]")?;
            return Ok(Expr::Slice {
                target: Box::new(target),
                start: start.map(Box::new),
                end: end.map(Box::new),
            });
        }
        self.expect_op("]")?;
        Ok(Expr::Index {
            target: Box::new(target),
            index: Box::new(start.expect("non-slice subscript has an index")),
        })
    }

    #[allow(clippy::type_complexity)]
    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(String, Expr)>), SyntaxError> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        while !self.eat_op(")") {
            let is_kw = matches!(self.peek(), Tok::Name(n) if !is_reserved(n))
                && matches!(self.peek_at(1), Tok::Op("="));
            if is_kw {
                let name = self.name()?;
                self.pos += 1;
                if kwargs.iter().any(|(k, _)| *k == name) {
                    return Err(self.error(format!("keyword argument repeated: {name}")));
                }
                kwargs.push((name, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error("positional argument follows keyword argument"));
                }
                args.push(self.expr()?);
                if self.at_kw("for") {
                    return Err(self.error("comprehensions and generator expressions are not supported"));
                }
            }
            if !self.eat_op(",") {
                self.expect_op(")")?;
                break;
            }
        }
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let line = self.line();
        let tok = self.peek().clone();
        let e = match tok {
            Tok::Str(s) => {
                self.pos += 1;
                if matches!(self.peek(), Tok::Str(_) | Tok::FStr(_)) {
                    return Err(self.error("implicit string concatenation is not supported"));
                }
                Expr::Str(s)
            }
            Tok::FStr(raw) => {
                self.pos += 1;
                if matches!(self.peek(), Tok::Str(_) | Tok::FStr(_)) {
                    return Err(self.error("implicit string concatenation is not supported"));
                }
                let mut parts = Vec::with_capacity(raw.len());
                for p in raw {
                    match p {
                        RawFPart::Lit(s) => parts.push(FPart::Lit(s)),
                        RawFPart::Expr(src) => parts.push(FPart::Expr(parse_expr(&src, line)?)),
                    }
                }
                Expr::FStr(parts)
            }
            Tok::Int(i) => {
                self.pos += 1;
                Expr::Int(i)
            }
            Tok::Float(f) => {
                self.pos += 1;
                Expr::Float(f)
            }
            Tok::Name(n) => match n.as_str() {
                "True" => {
                    self.pos += 1;
                    Expr::Bool(true)
                }
                "False" => {
                    self.pos += 1;
                    Expr::Bool(false)
                }
                "None" => {
                    self.pos += 1;
                    Expr::None
                }
                _ => {
                    self.forbidden_check()?;
                    if is_reserved(&n) {
                        return Err(self.error(format!("unexpected keyword '{n}'")));
                    }
                    self.pos += 1;
                    Expr::Ident(n)
                }
            },
            Tok::Op("[") => {
                self.pos += 1;
                let mut items = Vec::new();
                while !self.eat_op("]") {
                    items.push(self.expr()?);
                    if self.at_kw("for") {
                        return Err(self.error("comprehensions are not supported"));
                    }
                    if !self.eat_op(",") {
                        self.expect_op("]")?;
                        break;
                    }
                }
                Expr::List(items)
            }
            Tok::Op("(") => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.at_kw("for") {
                    return Err(self.error("generator expressions are not supported"));
                }
                if self.at_op(",") {
                    return Err(self.error("tuple expressions are not supported"));
                }
                self.expect_op(")")?;
                inner
            }
            _ => return Err(self.error(format!("unexpected {}", self.describe()))),
        };
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(src: &str) -> StmtKind {
        let ast = parse(src).unwrap();
        assert_eq!(ast.statements.len(), 1, "{ast:?}");
        ast.statements[0].kind.clone()
    }

    #[test]
    fn run_call_statement() {
        let k = one("run('go to dresser 1')");
        assert_eq!(
            k,
            StmtKind::Expr(Expr::Call {
                callee: Callee::bare("run"),
                args: vec![Expr::Str("go to dresser 1".into())],
                kwargs: vec![],
            })
        );
    }

    #[test]
    fn empty_source_has_no_statements() {
        assert!(parse("").unwrap().statements.is_empty());
        assert!(parse("\n\n   \n").unwrap().statements.is_empty());
    }

    #[test]
    fn forbidden_constructs_rejected() {
        for (src, line) in [
            ("def f(): pass", 1),
            ("x = 1\nwhile x:\n    x = 0", 2),
            ("class A:\n    x = 1", 1),
            ("f = lambda x: x", 1),
            ("try:\n    x = 1\nexcept:\n    x = 2", 1),
            ("xs = [a for a in b]", 1),
            ("return 1", 1),
            ("x = a and b", 1),
            ("import os", 1),
            ("x = {}", 1),
            ("x += 1", 1),
        ] {
            let err = parse(src).unwrap_err();
            assert_eq!(err.line, line, "{src}: {err}");
        }
    }

    #[test]
    fn multi_target_assignment() {
        let k = one("obj_ID, all_location_IDs = find_and_take('alarmclock', all_location_IDs)");
        let StmtKind::Assign { targets, value } = k else { panic!() };
        assert_eq!(
            targets,
            vec![
                Target::Name("obj_ID".into()),
                Target::Name("all_location_IDs".into())
            ]
        );
        assert!(matches!(value, Expr::Call { .. }));
    }

    #[test]
    fn dotted_calls_and_methods() {
        let k = one(r"obj_ID = re.search(rf'\b{obj} \d+\b', obs).group()");
        let StmtKind::Assign { value, .. } = k else { panic!() };
        let Expr::MethodCall { recv, name, args } = value else { panic!() };
        assert_eq!(name, "group");
        assert!(args.is_empty());
        let Expr::Call { callee, .. } = *recv else { panic!() };
        assert_eq!(callee.dotted(), "re.search");
    }

    #[test]
    fn slice_and_index() {
        let k = one("a = b[b.index(c):]");
        let StmtKind::Assign { value, .. } = k else { panic!() };
        assert!(matches!(value, Expr::Slice { end: None, .. }));
        let k = one("a = b[-1]");
        let StmtKind::Assign { value, .. } = k else { panic!() };
        let Expr::Index { index, .. } = value else { panic!() };
        assert_eq!(*index, Expr::Int(-1));
    }

    #[test]
    fn not_in_and_precedence() {
        let k = one("x = not 'a' in b");
        let StmtKind::Assign { value, .. } = k else { panic!() };
        assert!(matches!(value, Expr::Not(inner) if matches!(*inner, Expr::BinOp { op: BinOp::In, .. })));
        let k = one("x = a not in b + c");
        let StmtKind::Assign { value, .. } = k else { panic!() };
        let Expr::BinOp { op, rhs, .. } = value else { panic!() };
        assert_eq!(op, BinOp::NotIn);
        assert!(matches!(*rhs, Expr::BinOp { op: BinOp::Add, .. }));
    }

    #[test]
    fn break_outside_loop_rejected() {
        assert!(parse("break").is_err());
        assert!(parse("for a in b:\n    if a:\n        break").is_ok());
    }

    #[test]
    fn comments_kept_as_statements() {
        let ast = parse("# plan\nrun('look')  # trailing\n").unwrap();
        assert_eq!(ast.statements[0].kind, StmtKind::Comment(" plan".into()));
        assert_eq!(ast.statements.len(), 2);
        assert_eq!(ast.statements[1].line, 2);
    }

    #[test]
    fn inline_if_body() {
        let ast = parse("if a: run('x')").unwrap();
        let StmtKind::If { branches, .. } = &ast.statements[0].kind else { panic!() };
        assert_eq!(branches[0].1.len(), 1);
    }

    #[test]
    fn invalid_target_is_kept_for_validation() {
        let k = one("xs[0] = 1");
        let StmtKind::Assign { targets, .. } = k else { panic!() };
        assert!(matches!(targets[0], Target::Invalid(_)));
    }

    #[test]
    fn keyword_arguments() {
        let k = one("f(a, k='v')");
        let StmtKind::Expr(Expr::Call { args, kwargs, .. }) = k else { panic!() };
        assert_eq!(args, vec![Expr::Ident("a".into())]);
        assert_eq!(kwargs, vec![("k".to_string(), Expr::Str("v".into()))]);
    }
}
