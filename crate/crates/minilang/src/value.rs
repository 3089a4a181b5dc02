//! Runtime values.
//!
//! Lists are the only mutable value and are shared by reference, so a mutation
//! through one binding is visible through every other binding of the same list.
//! The interpreter refuses to insert a list into itself, which keeps every value
//! acyclic and lets rendering and equality recurse without guards.

use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;

#[derive(Clone, Default)]
pub struct ListRef(Arc<Mutex<Vec<Value>>>);

impl ListRef {
    pub fn new(items: Vec<Value>) -> Self {
        ListRef(Arc::new(Mutex::new(items)))
    }

    /// Clone of the current contents (element lists stay shared).
    pub fn snapshot(&self) -> Vec<Value> {
        self.0.lock().clone()
    }

    pub fn len(&self) -> usize {
        self.0.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_mut<R>(&self, f: impl FnOnce(&mut Vec<Value>) -> R) -> R {
        f(&mut self.0.lock())
    }

    pub fn ptr_eq(&self, other: &ListRef) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// True if `needle` is this list or is reachable from it.
    pub fn reaches(&self, needle: &ListRef) -> bool {
        if self.ptr_eq(needle) {
            return true;
        }
        self.snapshot().iter().any(|v| match v {
            Value::List(l) => l.reaches(needle),
            _ => false,
        })
    }
}

impl fmt::Debug for ListRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.snapshot().iter()).finish()
    }
}

/// Result of a successful regex match. `groups[0]` is the whole match;
/// non-participating groups are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchValue {
    pub groups: Vec<Option<String>>,
}

#[derive(Debug, Clone, Default)]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    #[default]
    None,
    List(ListRef),
    Match(MatchValue),
}

impl Value {
    pub fn list(items: Vec<Value>) -> Self {
        Value::List(ListRef::new(items))
    }

    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "str",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::None => "NoneType",
            Value::List(_) => "list",
            Value::Match(_) => "re.Match",
        }
    }

    /// Type label used in rendered variable listings, e.g. `list[str]`.
    pub fn type_label(&self) -> String {
        match self {
            Value::List(l) => {
                let items = l.snapshot();
                let Some(first) = items.first() else {
                    return "list".into();
                };
                let elem = first.type_label();
                if items.iter().all(|v| v.type_label() == elem) {
                    format!("list[{elem}]")
                } else {
                    "list".into()
                }
            }
            other => other.type_name().into(),
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Str(s) => !s.is_empty(),
            Value::Int(i) => *i != 0,
            Value::Float(f) => *f != 0.0,
            Value::Bool(b) => *b,
            Value::None => false,
            Value::List(l) => !l.is_empty(),
            Value::Match(_) => true,
        }
    }

    /// Python `repr()`.
    pub fn repr(&self) -> String {
        let mut out = String::new();
        self.write_repr(&mut out);
        out
    }

    fn write_repr(&self, out: &mut String) {
        match self {
            Value::Str(s) => out.push_str(&py_str_repr(s)),
            Value::Int(i) => out.push_str(&i.to_string()),
            Value::Float(f) => out.push_str(&py_float_repr(*f)),
            Value::Bool(true) => out.push_str("True"),
            Value::Bool(false) => out.push_str("False"),
            Value::None => out.push_str("None"),
            Value::List(l) => {
                out.push('[');
                for (i, v) in l.snapshot().iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    v.write_repr(out);
                }
                out.push(']');
            }
            Value::Match(m) => {
                let whole = m.groups.first().cloned().flatten().unwrap_or_default();
                out.push_str("<re.Match object; match=");
                out.push_str(&py_str_repr(&whole));
                out.push('>');
            }
        }
    }

    /// Python `str()`: strings render bare, everything else as `repr()`.
    pub fn to_display(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            other => other.repr(),
        }
    }

    /// Python `==`: numbers compare by value across int/float/bool.
    pub fn py_eq(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (Str(a), Str(b)) => a == b,
            (None, None) => true,
            (List(a), List(b)) => {
                if a.ptr_eq(b) {
                    return true;
                }
                let (a, b) = (a.snapshot(), b.snapshot());
                a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.py_eq(y))
            }
            (Match(a), Match(b)) => a == b,
            _ => match (self.as_number(), other.as_number()) {
                (Some(Num::I(a)), Some(Num::I(b))) => a == b,
                (Some(a), Some(b)) => a.as_f64() == b.as_f64(),
                _ => false,
            },
        }
    }

    fn as_number(&self) -> Option<Num> {
        match self {
            Value::Int(i) => Some(Num::I(*i)),
            Value::Bool(b) => Some(Num::I(*b as i64)),
            Value::Float(f) => Some(Num::F(*f)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy)]
enum Num {
    I(i64),
    F(f64),
}

impl Num {
    fn as_f64(self) -> f64 {
        match self {
            Num::I(i) => i as f64,
            Num::F(f) => f,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        // structural equality that also distinguishes types (used by tests and traces)
        use Value::*;
        match (self, other) {
            (Str(a), Str(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (None, None) => true,
            (List(a), List(b)) => a.snapshot() == b.snapshot(),
            (Match(a), Match(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_display())
    }
}

/// Python `repr()` of a string: single quotes unless the text contains a single
/// quote and no double quote.
pub fn py_str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Python `repr()` of a float: shortest round-trip digits, scientific notation
/// outside `1e-4 <= |x| < 1e16`.
pub fn py_float_repr(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if f == 0.0 {
        return if f.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    // `{:e}` yields the shortest round-trip mantissa, e.g. "1.2345e-5"
    let sci = format!("{f:e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if !(-4..16).contains(&exp) {
        let mut m = digits[..1].to_string();
        if digits.len() > 1 {
            m.push('.');
            m.push_str(&digits[1..]);
        }
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if (point as usize) >= digits.len() {
        format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}
