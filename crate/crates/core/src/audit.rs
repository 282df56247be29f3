//! Audit records shared by every property suite.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported for information; does not count as a failure.
    Info,
}

/// Concrete data exhibiting a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub note: String,
    pub data: BTreeMap<String, Vec<f64>>,
}

impl Witness {
    pub fn new(trial: usize, note: impl Into<String>) -> Self {
        Self { trial, note: note.into(), data: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, values: impl Into<Vec<f64>>) -> Self {
        self.data.insert(key.to_string(), values.into());
        self
    }

    pub fn with_scalar(self, key: &str, value: f64) -> Self {
        self.with(key, vec![value])
    }
}

/// One checked property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub name: String,
    pub anchor: String,
    pub verdict: Verdict,
    pub trials: usize,
    /// Largest observed violation (0 when every trial is within tolerance).
    pub max_residual: f64,
    pub witness: Option<Witness>,
}

impl AuditRecord {
    pub fn pass(name: impl Into<String>, anchor: impl Into<String>, trials: usize, max_residual: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            verdict: Verdict::Pass,
            trials,
            max_residual,
            witness: None,
        }
    }

    pub fn fail(
        name: impl Into<String>,
        anchor: impl Into<String>,
        trials: usize,
        max_residual: f64,
        witness: Witness,
    ) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            verdict: Verdict::Fail,
            trials,
            max_residual,
            witness: Some(witness),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Downgrades the record to informational.
    pub fn informational(mut self) -> Self {
        self.verdict = Verdict::Info;
        self
    }
}

/// Outcome of a single trial: the size of the violation (0 if none) and a
/// witness when the violation exceeds tolerance.
pub struct TrialOutcome {
    pub residual: f64,
    pub witness: Option<Witness>,
}

impl TrialOutcome {
    pub fn ok(residual: f64) -> Self {
        Self { residual, witness: None }
    }
}

/// Runs `trials` independent trials in parallel and folds them in trial
/// order: the reported witness is the one with the lowest trial index.
pub fn run_trials<F>(name: &str, anchor: &str, trials: usize, trial: F) -> AuditRecord
where
    F: Fn(usize) -> TrialOutcome + Sync,
{
    let outcomes: Vec<TrialOutcome> = (0..trials).into_par_iter().map(&trial).collect();
    let mut max_residual: f64 = 0.0;
    let mut witness = None;
    for outcome in outcomes {
        if outcome.residual.is_nan() {
            max_residual = f64::NAN;
        } else if !max_residual.is_nan() {
            max_residual = max_residual.max(outcome.residual);
        }
        if witness.is_none() {
            witness = outcome.witness;
        }
    }
    match witness {
        Some(w) => AuditRecord::fail(name, anchor, trials, max_residual, w),
        None => AuditRecord::pass(name, anchor, trials, max_residual),
    }
}

/// Largest componentwise violation of `lhs <= rhs`.
pub fn leq_violation(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).map(|(a, b)| (a - b).max(0.0)).fold(0.0, nan_max)
}

/// Largest componentwise `|lhs - rhs|`.
pub fn eq_violation(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, nan_max)
}

/// `max` that propagates NaN, so broken evaluations never look like passes.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// A residual counts as a violation when it exceeds `tol` or is NaN.
pub fn violates(residual: f64, tol: f64) -> bool {
    residual.is_nan() || residual > tol
}
