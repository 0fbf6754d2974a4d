//! Machine-readable verification reports.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one named check. `max_residual` is the worst numerical residual
/// observed; witnesses describe failures (or notable samples) as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub pass: bool,
    pub witnesses: Vec<Value>,
    pub max_residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clauses: Vec<VerificationReport>,
}

/// Witnesses kept per report; later failures only update the residual.
pub const MAX_WITNESSES: usize = 8;

impl VerificationReport {
    pub fn new(check: impl Into<String>) -> Self {
        Self { check: check.into(), pass: true, witnesses: Vec::new(), max_residual: 0.0, clauses: Vec::new() }
    }

    /// Records a residual; a residual above `tol` (or NaN) fails the check and
    /// stores the witness produced by `witness`.
    pub fn residual(&mut self, value: f64, tol: f64, witness: impl FnOnce() -> Value) -> bool {
        if value.is_nan() {
            self.max_residual = f64::NAN;
        } else if !self.max_residual.is_nan() {
            self.max_residual = self.max_residual.max(value);
        }
        let ok = value <= tol;
        if !ok {
            self.fail(witness());
        }
        ok
    }

    /// Records a boolean condition.
    pub fn require(&mut self, ok: bool, witness: impl FnOnce() -> Value) -> bool {
        if !ok {
            self.fail(witness());
        }
        ok
    }

    pub fn fail(&mut self, witness: Value) {
        self.pass = false;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    pub fn note(&mut self, witness: Value) {
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    /// Adds a sub-check; the parent passes only if every clause does.
    pub fn push_clause(&mut self, clause: VerificationReport) {
        self.pass &= clause.pass;
        if clause.max_residual.is_nan() {
            self.max_residual = f64::NAN;
        } else if !self.max_residual.is_nan() {
            self.max_residual = self.max_residual.max(clause.max_residual);
        }
        self.clauses.push(clause);
    }

    /// Turns an error into a failed report instead of propagating it.
    pub fn from_error(check: impl Into<String>, err: &crate::Error) -> Self {
        let mut r = Self::new(check);
        r.fail(serde_json::json!({ "error": err.to_string() }));
        r
    }

    pub fn failed_clauses(&self) -> Vec<&str> {
        self.clauses.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect()
    }
}
