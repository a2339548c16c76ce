//! The bundled example programs with their expected checker outcomes.

use crate::checker::{check_program, TypeError};
use crate::surface::{Diagnostic, Program, SourceProgram};
use crate::types::{alpha_eq, beta_normalize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    /// Checks, and each listed definition has exactly the listed type.
    /// `main` names the main expression.
    Typed(&'static [(&'static str, &'static str)]),
    /// Rejected by the checker under the named rule.
    Rejected(&'static str),
}

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub source: &'static str,
    pub expect: Expect,
}

impl Entry {
    pub fn file_name(&self) -> String {
        format!("corpus/{}.dl2", self.name)
    }

    pub fn parse(&self) -> Result<SourceProgram, Diagnostic> {
        SourceProgram::parse_file(&self.file_name(), self.source)
    }

    pub fn program(&self) -> Result<Program, Diagnostic> {
        self.parse()?.elaborate()
    }

    pub fn is_typed(&self) -> bool {
        matches!(self.expect, Expect::Typed(_))
    }
}

macro_rules! entry {
    ($name:literal, $expect:expr) => {
        Entry {
            name: $name,
            source: include_str!(concat!("../../../corpus/", $name, ".dl2")),
            expect: $expect,
        }
    };
}

const TREE_FNS: [(&str, &str); 3] = [
    ("leaf", "[d](int) ->d tree d @ d0"),
    ("node", "[d](tree d, tree d) ->d tree d @ d0"),
    ("build", "[d](int, int) ->d tree d @ d0"),
];

pub const ENTRIES: &[Entry] = &[
    entry!(
        "build",
        Expect::Typed(&[TREE_FNS[0], TREE_FNS[1], TREE_FNS[2], ("main", "tree d0")])
    ),
    entry!(
        "selectmap",
        Expect::Typed(&[
            TREE_FNS[2],
            (
                "selectmap",
                "[d dp df dt]([d'](int) ->d' bool @ dp, [d'](int) ->d' int @ df, tree dt) ->d tree d @ d0",
            ),
            ("main", "(bool * bool) @ d0"),
        ])
    ),
    entry!(
        "parfor",
        Expect::Typed(&[
            ("parfor", "[d dk](int, int, [d' | d < d'](int) ->d' unit @ dk) ->d unit @ d0"),
            ("main", "array int @ d0"),
        ])
    ),
    entry!(
        "par_prime",
        Expect::Typed(&[
            (
                "par'",
                "[d d1 d2]([d' | d < d'](unit) ->d' unit @ d1, [d' | d < d'](unit) ->d' unit @ d2) ->d unit @ d0",
            ),
            ("main", "int"),
        ])
    ),
    entry!(
        "add",
        Expect::Typed(&[
            ("add", "forall a :: * . [d d1 d2]([](a) ->d int @ d1, array a @ d2, a, a) ->d unit @ d0"),
            ("main", "array int @ d0"),
        ])
    ),
    entry!(
        "dedup",
        Expect::Typed(&[
            ("add", "forall a :: * . [d d1 d2]([](a) ->d int @ d1, array a @ d2, a, a) ->d unit @ d0"),
            (
                "dedup",
                "forall a :: * . [d d1 d2]([d' | d < d'](a) ->d' int @ d1, a, array a @ d2) ->d array a @ d @ d0",
            ),
            ("main", "array int @ d0"),
        ])
    ),
    entry!(
        "closures",
        Expect::Typed(&[
            ("newref", "forall a :: * . [d](a) ->d array a @ d @ d0"),
            ("get", "forall a :: * . [d dr](array a @ dr) ->d a @ d0"),
            ("set", "forall a :: * . [d dr](array a @ dr, a) ->d unit @ d0"),
            ("r", "array (array int @ d0) @ d0"),
            ("w", "array int @ d0"),
            ("f", "[d](unit) ->d unit @ d0"),
            ("g", "[](int) ->d0 unit @ d0"),
            ("main", "int"),
        ])
    ),
    entry!(
        "disentangled",
        Expect::Typed(&[
            ("write_max", "[d | d0 < d](array int @ d0) ->d unit @ d0"),
            ("main", "int"),
        ])
    ),
    entry!("oob", Expect::Typed(&[("main", "int")])),
    entry!("entangled", Expect::Rejected("T-CAS")),
    entry!("neg_child_store", Expect::Rejected("T-Store")),
    entry!("neg_deep_array", Expect::Rejected("T-Subtiming")),
    entry!("neg_not_very_pure", Expect::Rejected("T-TAbs")),
];

pub fn get(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Met,
    Unmet(String),
}

/// Runs the checker on an entry and compares with its expectation.
pub fn check_entry(entry: &Entry) -> Outcome {
    let src = match entry.parse() {
        Ok(p) => p,
        Err(d) => return Outcome::Unmet(format!("parse error: {d}")),
    };
    let result = src
        .elaborate()
        .map_err(|d| d.to_string())
        .and_then(|p| check_program(&p).map_err(|e: TypeError| e.to_diagnostic(p.file.as_deref()).to_string()));
    match (entry.expect, result) {
        (Expect::Typed(expected), Ok(types)) => {
            for (name, text) in expected {
                let want = match src.parse_type(text) {
                    Ok(t) => beta_normalize(&t),
                    Err(d) => return Outcome::Unmet(format!("bad expected type for {name}: {d}")),
                };
                let got = if *name == "main" { Some(&types.main) } else { types.get(name) };
                match got {
                    Some(t) if alpha_eq(t, &want) => {}
                    Some(t) => return Outcome::Unmet(format!("{name}: expected {want}, found {t}")),
                    None => return Outcome::Unmet(format!("no definition named {name}")),
                }
            }
            Outcome::Met
        }
        (Expect::Typed(_), Err(msg)) => Outcome::Unmet(msg),
        (Expect::Rejected(rule), Ok(_)) => Outcome::Unmet(format!("accepted, expected [{rule}]")),
        (Expect::Rejected(rule), Err(msg)) => {
            if msg.contains(&format!("[{rule}]")) {
                Outcome::Met
            } else {
                Outcome::Unmet(format!("expected [{rule}], got {msg}"))
            }
        }
    }
}
