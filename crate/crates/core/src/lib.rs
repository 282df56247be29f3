//! Finite-scenario engine for scalar, vector-valued and set-valued risk
//! measures, together with property audits for their axioms.
//!
//! Every space is finite with strictly positive masses, so "almost surely"
//! means "on every outcome" and all expectations are finite sums.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod conditional;
pub mod duality;
pub mod error;
pub mod extended;
pub mod io;
pub mod optimize;
pub mod prob;
pub mod sampling;
pub mod scalar;
pub mod sets;
pub mod setrisk;
pub mod spec;
pub mod vector;

pub use audit::{AuditRecord, Verdict, Witness};
pub use error::{Result, RiskError};
pub use extended::{ConjugateValue, DivergenceCertificate, DIVERGENCE_THRESHOLD};
pub use prob::{FiniteProbabilitySpace, Partition, RandomVector, Table};
pub use scalar::ScalarRisk;
pub use vector::{VectorFunctional, VectorRisk};
pub use conditional::{ConditionalVectorRisk, FiltrationSequence};
pub use sets::UpperConvexSet;
pub use setrisk::SetValuedRiskMeasure;
pub use spec::Spec;
