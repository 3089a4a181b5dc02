use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::value::Value;

#[derive(Debug, Clone)]
pub struct Binding {
    pub value: Value,
    /// Position in creation order; stays fixed when the name is rebound.
    pub created: u64,
}

/// The single variable store of an episode.
///
/// Bindings are only ever added or rebound, never removed. The namespace also
/// owns the seeded RNG behind `random.shuffle` / `random.choice`.
#[derive(Debug, Clone)]
pub struct Namespace {
    bindings: IndexMap<String, Binding>,
    next_created: u64,
    seed: u64,
    pub(crate) rng: ChaCha8Rng,
}

impl Namespace {
    pub fn new(seed: u64) -> Self {
        Namespace {
            bindings: IndexMap::new(),
            next_created: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name).map(|b| &b.value)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }

    pub fn binding(&self, name: &str) -> Option<&Binding> {
        self.bindings.get(name)
    }

    /// Create or rebind `name`.
    pub fn set(&mut self, name: impl Into<String>, value: Value) {
        let name = name.into();
        if let Some(b) = self.bindings.get_mut(&name) {
            b.value = value;
            return;
        }
        let created = self.next_created;
        self.next_created += 1;
        self.bindings.insert(name, Binding { value, created });
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Names in creation order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    /// Deterministic dump of every binding, one `name = repr` line each.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, b) in &self.bindings {
            out.push_str(name);
            out.push_str(" = ");
            out.push_str(&b.value.repr());
            out.push('\n');
        }
        out
    }
}
