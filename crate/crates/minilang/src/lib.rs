//! A small Python-like language for agent code blocks: lexer, parser,
//! validator, printer and a sandboxed interpreter.

pub mod ast;
pub mod builtins;
pub mod error;
pub mod interp;
pub mod lexer;
pub mod namespace;
pub mod parser;
pub mod printer;
pub mod validate;
pub mod value;

pub use ast::{Ast, BinOp, Callee, Expr, FPart, Stmt, StmtKind, Target};
pub use builtins::{Builtin, DEFAULT_PRIMITIVES};
pub use error::{ExecError, Halt, RuntimeError, SyntaxError, ValidationError};
pub use interp::{exec_plain, ActionExecutor, Interpreter, Limits};
pub use namespace::Namespace;
pub use parser::{parse, parse_expr};
pub use printer::{print_ast, print_block, print_expr, print_stmt};
pub use validate::{validate, CodeUnit, PlaceholderCall};
pub use value::{ListRef, MatchValue, Value};
