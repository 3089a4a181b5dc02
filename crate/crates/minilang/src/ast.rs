//! Syntax tree for agent code blocks.

/// A parsed code block: top-level statements in source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub statements: Vec<Stmt>,
}

impl Ast {
    /// Copy of the tree with every line number reset to zero, for structural comparison.
    pub fn without_lines(&self) -> Ast {
        Ast {
            statements: strip_lines(&self.statements),
        }
    }
}

fn strip_lines(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|s| {
            let kind = match &s.kind {
                StmtKind::For { var, iter, body } => StmtKind::For {
                    var: var.clone(),
                    iter: iter.clone(),
                    body: strip_lines(body),
                },
                StmtKind::If { branches, else_body } => StmtKind::If {
                    branches: branches
                        .iter()
                        .map(|(c, b)| (c.clone(), strip_lines(b)))
                        .collect(),
                    else_body: else_body.as_ref().map(|b| strip_lines(b)),
                },
                other => other.clone(),
            };
            Stmt { line: 0, kind }
        })
        .collect()
}

/// A statement with its 1-based starting line.
#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub line: usize,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign { targets: Vec<Target>, value: Expr },
    Expr(Expr),
    For { var: String, iter: Expr, body: Vec<Stmt> },
    If { branches: Vec<(Expr, Vec<Stmt>)>, else_body: Option<Vec<Stmt>> },
    Break,
    Continue,
    Import(String),
    Comment(String),
}

/// Left-hand side of an assignment. Only plain names are executable;
/// anything else is kept so the validator can report it.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Name(String),
    Invalid(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    In,
    NotIn,
    Eq,
    NotEq,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::In => "in",
            BinOp::NotIn => "not in",
            BinOp::Eq => "==",
            BinOp::NotEq => "!=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    pub fn is_comparison(self) -> bool {
        !matches!(self, BinOp::Add | BinOp::Sub)
    }
}

/// Call target: a bare name, or a module-qualified name such as `re.search`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Callee {
    pub module: Option<String>,
    pub name: String,
}

impl Callee {
    pub fn bare(name: impl Into<String>) -> Self {
        Callee {
            module: None,
            name: name.into(),
        }
    }

    pub fn dotted(&self) -> String {
        match &self.module {
            Some(m) => format!("{m}.{}", self.name),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FPart {
    Lit(String),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Str(String),
    FStr(Vec<FPart>),
    Int(i64),
    Float(f64),
    Bool(bool),
    None,
    List(Vec<Expr>),
    Ident(String),
    Call {
        callee: Callee,
        args: Vec<Expr>,
        kwargs: Vec<(String, Expr)>,
    },
    Index {
        target: Box<Expr>,
        index: Box<Expr>,
    },
    Slice {
        target: Box<Expr>,
        start: Option<Box<Expr>>,
        end: Option<Box<Expr>>,
    },
    BinOp {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Not(Box<Expr>),
    MethodCall {
        recv: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    /// Visit this expression and every sub-expression, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::FStr(parts) => {
                for p in parts {
                    if let FPart::Expr(e) = p {
                        e.walk(f);
                    }
                }
            }
            Expr::List(items) => items.iter().for_each(|e| e.walk(f)),
            Expr::Call { args, kwargs, .. } => {
                args.iter().for_each(|e| e.walk(f));
                kwargs.iter().for_each(|(_, e)| e.walk(f));
            }
            Expr::Index { target, index } => {
                target.walk(f);
                index.walk(f);
            }
            Expr::Slice { target, start, end } => {
                target.walk(f);
                if let Some(s) = start {
                    s.walk(f);
                }
                if let Some(e) = end {
                    e.walk(f);
                }
            }
            Expr::BinOp { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Not(e) => e.walk(f),
            Expr::MethodCall { recv, args, .. } => {
                recv.walk(f);
                args.iter().for_each(|e| e.walk(f));
            }
            Expr::Str(_)
            | Expr::Int(_)
            | Expr::Float(_)
            | Expr::Bool(_)
            | Expr::None
            | Expr::Ident(_) => {}
        }
    }
}
