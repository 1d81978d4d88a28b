//! Structured pass/fail reports with witnesses, shared by every check.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

/// Outcome of one verification. Sampled (non-exhaustive) runs always carry
/// `exhaustive: false`; there is no silent downgrade.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: CheckStatus,
    pub exhaustive: bool,
    pub states_visited: u64,
    pub witnesses: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, exhaustive: bool) -> Self {
        CheckReport {
            check: check.into(),
            status: CheckStatus::Pass,
            exhaustive,
            states_visited: 0,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn fail(&mut self, witness: impl Into<String>) {
        self.status = CheckStatus::Fail;
        if self.witnesses.len() < 32 {
            self.witnesses.push(witness.into());
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }

    /// One human-readable line, `PASS`/`FAIL` first.
    pub fn summary_line(&self) -> String {
        let mode = if self.exhaustive { "exhaustive" } else { "NON-EXHAUSTIVE" };
        let witness = if self.witnesses.is_empty() {
            String::new()
        } else {
            format!(" [{}]", self.witnesses.join("; "))
        };
        format!(
            "{}: {} ({mode}, {} states){witness}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.check,
            self.states_visited
        )
    }
}
