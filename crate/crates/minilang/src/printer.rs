//! Canonical source rendering. Parsing the output yields the same tree.

use crate::ast::{Ast, Expr, FPart, Stmt, StmtKind, Target};
use crate::value::py_float_repr;

const INDENT: &str = "    ";

pub fn print_ast(ast: &Ast) -> String {
    print_block(&ast.statements)
}

pub fn print_block(stmts: &[Stmt]) -> String {
    let mut out = String::new();
    for s in stmts {
        write_stmt(&mut out, s, 0);
    }
    out
}

/// Render one statement (with nested blocks) without a trailing newline.
pub fn print_stmt(stmt: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, stmt, 0);
    out.truncate(out.trim_end_matches('\n').len());
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0, 0);
    out
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    out.push_str(&pad);
    match &s.kind {
        StmtKind::Comment(text) => {
            out.push('#');
            out.push_str(text);
        }
        StmtKind::Import(m) => {
            out.push_str("import ");
            out.push_str(m);
        }
        StmtKind::Break => out.push_str("break"),
        StmtKind::Continue => out.push_str("continue"),
        StmtKind::Expr(e) => write_expr(out, e, 0, 0),
        StmtKind::Assign { targets, value } => {
            for (i, t) in targets.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match t {
                    Target::Name(n) => out.push_str(n),
                    Target::Invalid(e) => write_expr(out, e, LEVEL_POSTFIX, 0),
                }
            }
            out.push_str(" = ");
            write_expr(out, value, 0, 0);
        }
        StmtKind::For { var, iter, body } => {
            out.push_str("for ");
            out.push_str(var);
            out.push_str(" in ");
            write_expr(out, iter, 0, 0);
            out.push_str(":\n");
            write_body(out, body, depth + 1);
            return;
        }
        StmtKind::If { branches, else_body } => {
            for (i, (cond, body)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(&pad);
                    out.push_str("elif ");
                } else {
                    out.push_str("if ");
                }
                write_expr(out, cond, 0, 0);
                out.push_str(":\n");
                write_body(out, body, depth + 1);
            }
            if let Some(body) = else_body {
                out.push_str(&pad);
                out.push_str("else:\n");
                write_body(out, body, depth + 1);
            }
            return;
        }
    }
    out.push('\n');
}

fn write_body(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, s, depth);
    }
}

const LEVEL_NOT: u8 = 1;
const LEVEL_CMP: u8 = 2;
const LEVEL_ADD: u8 = 3;
const LEVEL_POSTFIX: u8 = 4;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Not(_) => LEVEL_NOT,
        Expr::BinOp { op, .. } if op.is_comparison() => LEVEL_CMP,
        Expr::BinOp { .. } => LEVEL_ADD,
        _ => LEVEL_POSTFIX,
    }
}

/// Write `e` so that it parses back at precedence `min`. `fdepth` counts
/// enclosing f-strings, which decides the quote character.
fn write_expr(out: &mut String, e: &Expr, min: u8, fdepth: usize) {
    let paren = level(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Str(s) => write_str(out, s, fdepth),
        Expr::FStr(parts) => {
            let quote = if fdepth == 0 { '\'' } else { '"' };
            out.push('f');
            out.push(quote);
            for p in parts {
                match p {
                    FPart::Lit(s) => {
                        for c in s.chars() {
                            match c {
                                '{' => out.push_str("{{"),
                                '}' => out.push_str("}}"),
                                c => escape_char(out, c, fdepth, quote),
                            }
                        }
                    }
                    FPart::Expr(inner) => {
                        out.push('{');
                        write_expr(out, inner, 0, fdepth + 1);
                        out.push('}');
                    }
                }
            }
            out.push(quote);
        }
        Expr::Int(i) => out.push_str(&i.to_string()),
        Expr::Float(f) => {
            if f.is_infinite() {
                out.push_str(if *f > 0.0 { "1e999" } else { "-1e999" });
            } else {
                out.push_str(&py_float_repr(*f));
            }
        }
        Expr::Bool(true) => out.push_str("True"),
        Expr::Bool(false) => out.push_str("False"),
        Expr::None => out.push_str("None"),
        Expr::Ident(n) => out.push_str(n),
        Expr::List(items) => {
            out.push('[');
            write_args(out, items, fdepth);
            out.push(']');
        }
        Expr::Call {
            callee,
            args,
            kwargs,
        } => {
            out.push_str(&callee.dotted());
            out.push('(');
            write_args(out, args, fdepth);
            for (i, (k, v)) in kwargs.iter().enumerate() {
                if i > 0 || !args.is_empty() {
                    out.push_str(", ");
                }
                out.push_str(k);
                out.push('=');
                write_expr(out, v, 0, fdepth);
            }
            out.push(')');
        }
        Expr::Index { target, index } => {
            write_expr(out, target, LEVEL_POSTFIX, fdepth);
            out.push('[');
            write_expr(out, index, 0, fdepth);
            out.push(']');
        }
        Expr::Slice { target, start, end } => {
            write_expr(out, target, LEVEL_POSTFIX, fdepth);
            out.push('[');
            if let Some(s) = start {
                write_expr(out, s, 0, fdepth);
            }
            out.push(':');
            if let Some(x) = end {
                write_expr(out, x, 0, fdepth);
            }
            out.push(']');
        }
        Expr::MethodCall { recv, name, args } => {
            write_expr(out, recv, LEVEL_POSTFIX, fdepth);
            out.push('.');
            out.push_str(name);
            out.push('(');
            write_args(out, args, fdepth);
            out.push(')');
        }
        Expr::BinOp { op, lhs, rhs } => {
            let (l, r) = if op.is_comparison() {
                (LEVEL_ADD, LEVEL_ADD)
            } else {
                (LEVEL_ADD, LEVEL_POSTFIX)
            };
            write_expr(out, lhs, l, fdepth);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, r, fdepth);
        }
        Expr::Not(inner) => {
            out.push_str("not ");
            write_expr(out, inner, LEVEL_NOT, fdepth);
        }
    }
    if paren {
        out.push(')');
    }
}

fn write_args(out: &mut String, items: &[Expr], fdepth: usize) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, 0, fdepth);
    }
}

fn write_str(out: &mut String, s: &str, fdepth: usize) {
    let quote = if fdepth == 0 { '\'' } else { '"' };
    out.push(quote);
    for c in s.chars() {
        escape_char(out, c, fdepth, quote);
    }
    out.push(quote);
}

/// Inside an f-string expression both quote characters are escaped, so the
/// enclosing literal never ends early.
fn escape_char(out: &mut String, c: char, fdepth: usize, quote: char) {
    match c {
        '\\' => out.push_str("\\\\"),
        '\n' => out.push_str("\\n"),
        '\r' => out.push_str("\\r"),
        '\t' => out.push_str("\\t"),
        '\'' | '"' if c == quote || fdepth > 0 => {
            out.push('\\');
            out.push(c);
        }
        c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
        c => out.push(c),
    }
}
