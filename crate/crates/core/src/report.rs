//! Structured check reports shared by the verification suites.

use crate::vector::RationalVector;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Outcome of a single named check. Failed checks always carry a witness
/// describing what broke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail { witness: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    /// Clause tag, e.g. `(*)2.5` or `a19-case1`.
    pub clause: String,
    pub status: CheckStatus,
    /// Optional witness vector attached to the outcome.
    pub vector: Option<RationalVector>,
}

impl Check {
    pub fn pass(clause: impl Into<String>) -> Self {
        Check {
            clause: clause.into(),
            status: CheckStatus::Pass,
            vector: None,
        }
    }

    pub fn fail(clause: impl Into<String>, witness: impl Into<String>) -> Self {
        Check {
            clause: clause.into(),
            status: CheckStatus::Fail {
                witness: witness.into(),
            },
            vector: None,
        }
    }

    pub fn with_vector(mut self, v: RationalVector) -> Self {
        self.vector = Some(v);
        self
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, CheckStatus::Pass)
    }
}

/// A named suite of checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Report {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn record(&mut self, clause: impl Into<String>, ok: bool, witness: impl Into<String>) {
        if ok {
            self.push(Check::pass(clause));
        } else {
            self.push(Check::fail(clause, witness));
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}", self.suite)?;
        for c in &self.checks {
            match &c.status {
                CheckStatus::Pass => writeln!(f, "  pass {}", c.clause)?,
                CheckStatus::Fail { witness } => {
                    writeln!(f, "  FAIL {} — {}", c.clause, witness)?
                }
            }
        }
        Ok(())
    }
}
