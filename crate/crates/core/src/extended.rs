//! Extended reals for conjugates and support functions.
//!
//! `+inf` never appears as a bare float: it is always a tag carrying the
//! probe along which the objective was seen (or shown) to diverge.

use serde::Serialize;

/// Objective level above which a growing probe sequence is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceCertificate {
    /// Direction of the probe (in the primal space of the sup).
    pub direction: Vec<f64>,
    /// `(probe scale, objective value)` pairs; empty when the divergence
    /// follows from an analytic rule.
    pub probes: Vec<(f64, f64)>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConjugateValue {
    Finite { value: f64 },
    Infinite { certificate: DivergenceCertificate },
}

impl ConjugateValue {
    pub fn finite(value: f64) -> Self {
        Self::Finite { value }
    }

    pub fn infinite(direction: Vec<f64>, probes: Vec<(f64, f64)>, reason: impl Into<String>) -> Self {
        Self::Infinite { certificate: DivergenceCertificate { direction, probes, reason: reason.into() } }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite { value } => Some(*value),
            Self::Infinite { .. } => None,
        }
    }

    /// `f64` view, `+inf` for the infinite tag.
    pub fn as_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }

    pub fn certificate(&self) -> Option<&DivergenceCertificate> {
        match self {
            Self::Finite { .. } => None,
            Self::Infinite { certificate } => Some(certificate),
        }
    }

    /// Adds a finite offset; infinity absorbs it.
    pub fn offset(self, delta: f64) -> Self {
        match self {
            Self::Finite { value } => Self::Finite { value: value + delta },
            inf => inf,
        }
    }
}
