//! Interned identifiers shared by terms, type variables and timestamp variables.

use std::collections::HashSet;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Serialize, Serializer};

/// An interned identifier. Equality first compares pointers, so repeated
/// lookups of the same name are cheap.
#[derive(Clone, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

fn table() -> &'static Mutex<HashSet<Arc<str>>> {
    static TABLE: OnceLock<Mutex<HashSet<Arc<str>>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashSet::new()))
}

impl Symbol {
    pub fn new(name: &str) -> Symbol {
        let mut table = table().lock().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = table.get(name) {
            return Symbol(existing.clone());
        }
        let arc: Arc<str> = Arc::from(name);
        table.insert(arc.clone());
        Symbol(arc)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The name with any `%N` freshening suffix removed.
    pub fn base(&self) -> &str {
        match self.0.find('%') {
            Some(i) => &self.0[..i],
            None => &self.0,
        }
    }

    /// A symbol that cannot collide with any parsed identifier.
    pub fn fresh(base: &str) -> Symbol {
        use std::sync::atomic::{AtomicU64, Ordering};
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let base = match base.find('%') {
            Some(i) => &base[..i],
            None => base,
        };
        Symbol::new(&format!("{base}%{n}"))
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Symbol) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Symbol {
        Symbol::new(s)
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}
