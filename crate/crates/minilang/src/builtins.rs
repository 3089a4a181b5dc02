//! The closed set of callable builtins. Any bare call whose name is not listed
//! here (and is not a primitive action) is a placeholder.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Len,
    Str,
    Int,
    Range,
    Print,
    ReFindall,
    ReSearch,
    ReMatch,
    RandomShuffle,
    RandomChoice,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Len => "len",
            Builtin::Str => "str",
            Builtin::Int => "int",
            Builtin::Range => "range",
            Builtin::Print => "print",
            Builtin::ReFindall => "re.findall",
            Builtin::ReSearch => "re.search",
            Builtin::ReMatch => "re.match",
            Builtin::RandomShuffle => "random.shuffle",
            Builtin::RandomChoice => "random.choice",
        }
    }
}

const ALL: &[Builtin] = &[
    Builtin::Len,
    Builtin::Str,
    Builtin::Int,
    Builtin::Range,
    Builtin::Print,
    Builtin::ReFindall,
    Builtin::ReSearch,
    Builtin::ReMatch,
    Builtin::RandomShuffle,
    Builtin::RandomChoice,
];

/// Every builtin keyed by its dotted name.
pub fn builtin_table() -> BTreeMap<&'static str, Builtin> {
    ALL.iter().map(|b| (b.name(), *b)).collect()
}

pub fn lookup(dotted: &str) -> Option<Builtin> {
    ALL.iter().copied().find(|b| b.name() == dotted)
}

/// Methods the interpreter implements on str, list and match values.
pub const STANDARD_METHODS: &[&str] = &[
    // str
    "lower", "upper", "strip", "lstrip", "rstrip", "split", "startswith", "endswith", "replace",
    "find", "count", "join",
    // list
    "append", "extend", "remove", "index", "pop", "insert",
    // match
    "group", "groups",
];

pub fn is_standard_method(name: &str) -> bool {
    STANDARD_METHODS.contains(&name)
}

/// Primitive actions dispatched to the environment. Each takes one string.
pub const DEFAULT_PRIMITIVES: &[&str] = &["run"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lookups() {
        assert_eq!(lookup("re.findall"), Some(Builtin::ReFindall));
        assert_eq!(lookup("random.shuffle"), Some(Builtin::RandomShuffle));
        assert_eq!(lookup("prepare_breakfast"), None);
        assert_eq!(builtin_table().len(), ALL.len());
    }
}
