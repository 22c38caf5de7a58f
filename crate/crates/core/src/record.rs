//! One inequality check and its verdict.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// `(t, lhs, rhs)` sample of an inequality along a time sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Result of checking `lhs <= rhs` up to an explicit error budget.
///
/// The verdict is `Pass` iff `slack = rhs - lhs >= -tolerance`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub name: String,
    /// Short label of the statement being checked.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    /// Human-readable formula the tolerance was computed from.
    pub tolerance_model: String,
    pub verdict: Verdict,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TracePoint>,
    pub config_hash: String,
    /// Wall time; reported outside the deterministic part of the report.
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationRecord {
    pub fn new(
        name: impl Into<String>,
        anchor: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        tolerance_model: impl Into<String>,
    ) -> Self {
        let slack = rhs - lhs;
        let verdict = if slack >= -tolerance { Verdict::Pass } else { Verdict::Fail };
        VerificationRecord {
            name: name.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            tolerance_model: tolerance_model.into(),
            verdict,
            params: BTreeMap::new(),
            notes: Vec::new(),
            trace: Vec::new(),
            config_hash: String::new(),
            runtime: Duration::ZERO,
        }
    }

    /// Record for a plain boolean property (`lhs = 0`, `rhs = 1` on success).
    pub fn flag(name: impl Into<String>, anchor: impl Into<String>, ok: bool) -> Self {
        let rhs = if ok { 1.0 } else { -1.0 };
        Self::new(name, anchor, 0.0, rhs, 0.0, "boolean")
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn with_trace(mut self, trace: Vec<TracePoint>) -> Self {
        self.trace = trace;
        self
    }

    /// Multiply the tolerance by `k` and recompute the verdict.
    pub fn rescale_tolerance(&mut self, k: f64) {
        self.tolerance *= k;
        self.verdict = if self.slack >= -self.tolerance { Verdict::Pass } else { Verdict::Fail };
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Ratio `lhs / rhs`, with `0/0 = 0`.
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / self.rhs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_slack_and_tolerance() {
        assert!(VerificationRecord::new("a", "x", 1.0, 1.0, 0.0, "").passed());
        assert!(VerificationRecord::new("a", "x", 1.1, 1.0, 0.2, "").passed());
        assert!(!VerificationRecord::new("a", "x", 1.1, 1.0, 0.05, "").passed());
    }
}
