use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub pass: bool,
    pub witness: Value,
}

/// Per-clause pass/fail record; the witness holds the first counterexample
/// on failure and a summary otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub clauses: BTreeMap<String, Clause>,
}

impl Certificate {
    pub fn new(name: impl Into<String>) -> Self {
        Certificate {
            name: name.into(),
            clauses: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, clause: impl Into<String>, pass: bool, witness: Value) {
        self.clauses.insert(clause.into(), Clause { pass, witness });
    }

    pub fn pass(&self) -> bool {
        self.clauses.values().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.get(name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.clauses
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Adds every clause of `other` under `prefix.`.
    pub fn merge(&mut self, prefix: &str, other: Certificate) {
        for (k, v) in other.clauses {
            self.clauses.insert(format!("{prefix}.{k}"), v);
        }
    }
}
