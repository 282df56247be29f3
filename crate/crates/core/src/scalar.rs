//! Univariate monetary risk measures and the sampled audit of their axioms.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::audit::{run_trials, violates, AuditRecord, TrialOutcome, Witness};
use crate::error::{Result, RiskError};
use crate::prob::FiniteProbabilitySpace;
use crate::sampling;

/// Tolerance for checks on closed-form functionals.
pub const CLOSED_FORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarRisk {
    /// `(1/beta) log E[exp(-beta X)]`
    Entropic { beta: f64 },
    /// `max(-X)`
    WorstCase,
    /// `-E[X]`
    NegExpectation,
    /// Average of `-X` over its worst `alpha`-mass tail.
    Avar { alpha: f64 },
}

impl ScalarRisk {
    pub fn entropic(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(RiskError::InvalidParameter(format!("entropic beta must be > 0, got {beta}")));
        }
        Ok(Self::Entropic { beta })
    }

    pub fn avar(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(RiskError::InvalidParameter(format!("avar alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self::Avar { alpha })
    }

    pub fn eval(&self, space: &FiniteProbabilitySpace, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), space.outcomes());
        match *self {
            Self::Entropic { beta } => entropic(space.probabilities(), x, beta),
            Self::WorstCase => x.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max),
            Self::NegExpectation => -space.expectation(x),
            Self::Avar { alpha } => avar(space.probabilities(), x, alpha),
        }
    }
}

/// Entropic risk in log-sum-exp form.
pub fn entropic(probs: &[f64], x: &[f64], beta: f64) -> f64 {
    let exps: Vec<f64> = x.iter().map(|v| -beta * v).collect();
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = probs.iter().zip(&exps).map(|(p, a)| p * (a - top).exp()).sum();
    (top + sum.ln()) / beta
}

/// Tail average of losses with the boundary atom split fractionally.
pub fn avar(probs: &[f64], x: &[f64], alpha: f64) -> f64 {
    let mut order: Vec<usize> = (0..x.len()).collect();
    // largest losses (most negative positions) first
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut remaining = alpha;
    let mut acc = 0.0;
    for k in order {
        if remaining <= 0.0 {
            break;
        }
        let take = probs[k].min(remaining);
        acc += take * -x[k];
        remaining -= take;
    }
    // when alpha is 1 the tail may be short by rounding in the masses
    let covered = alpha - remaining.max(0.0);
    acc / covered
}

impl fmt::Display for ScalarRisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Entropic { beta } => write!(f, "entropic:beta={beta}"),
            Self::WorstCase => write!(f, "worst_case"),
            Self::NegExpectation => write!(f, "neg_expectation"),
            Self::Avar { alpha } => write!(f, "avar:alpha={alpha}"),
        }
    }
}

impl FromStr for ScalarRisk {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| RiskError::Parse { input: s.to_string(), reason: reason.to_string() };
        let s = s.trim();
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), Some(p.trim())),
            None => (s, None),
        };
        let param = |name: &str| -> Result<f64> {
            let p = params.ok_or_else(|| bad(&format!("missing {name}=...")))?;
            let value = p
                .strip_prefix(name)
                .and_then(|r| r.trim_start().strip_prefix('='))
                .ok_or_else(|| bad(&format!("expected {name}=<number>")))?;
            value.trim().parse::<f64>().map_err(|_| bad(&format!("{name} is not a number")))
        };
        match kind {
            "entropic" => Self::entropic(param("beta")?),
            "avar" => Self::avar(param("alpha")?),
            "worst_case" | "neg_expectation" if params.is_some() => Err(bad("takes no parameters")),
            "worst_case" => Ok(Self::WorstCase),
            "neg_expectation" => Ok(Self::NegExpectation),
            _ => Err(bad("unknown scalar functional")),
        }
    }
}

/// Anything mapping a univariate position on a finite space to a real.
pub trait UnivariateFunctional: Sync {
    fn evaluate(&self, space: &FiniteProbabilitySpace, x: &[f64]) -> f64;
}

impl UnivariateFunctional for ScalarRisk {
    fn evaluate(&self, space: &FiniteProbabilitySpace, x: &[f64]) -> f64 {
        self.eval(space, x)
    }
}

impl<F> UnivariateFunctional for F
where
    F: Fn(&FiniteProbabilitySpace, &[f64]) -> f64 + Sync,
{
    fn evaluate(&self, space: &FiniteProbabilitySpace, x: &[f64]) -> f64 {
        self(space, x)
    }
}

/// Axioms of a monetary risk measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarProperty {
    Monotonicity,
    CashSubadditivity,
    CashAdditivity,
    CashPreserving,
    Convexity,
}

impl ScalarProperty {
    pub const ALL: [ScalarProperty; 5] = [
        Self::Monotonicity,
        Self::CashSubadditivity,
        Self::CashAdditivity,
        Self::CashPreserving,
        Self::Convexity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Monotonicity => "monotonicity",
            Self::CashSubadditivity => "cash-subadditivity",
            Self::CashAdditivity => "cash-additivity",
            Self::CashPreserving => "cash-preserving",
            Self::Convexity => "convexity",
        }
    }
}

impl FromStr for ScalarProperty {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| RiskError::UnknownProperty(s.to_string()))
    }
}

/// Samples `trials` instances of `property` and checks it within
/// [`CLOSED_FORM_TOL`].
///
/// `m` ranges over all of the real line for the cash properties, as in the
/// definition; positions are uniform on `[-10, 10]`.
pub fn audit_scalar_property(
    rho: &dyn UnivariateFunctional,
    property: ScalarProperty,
    trials: usize,
    seed: u64,
) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let anchor = format!("Def 2.1 / {}", property.name());
    let tol = CLOSED_FORM_TOL;
    let record = run_trials(property.name(), &anchor, trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sampling::space(&mut rng);
        let n = space.outcomes();
        let x = sampling::values(&mut rng, n);
        match property {
            ScalarProperty::Monotonicity => {
                let bump: Vec<f64> = sampling::nonnegative_vector(&mut rng, space.clone(), 1).column(0);
                let y: Vec<f64> = x.iter().zip(&bump).map(|(a, b)| a + b).collect();
                let (rx, ry) = (rho.evaluate(&space, &x), rho.evaluate(&space, &y));
                // X <= Y requires rho(X) >= rho(Y)
                let residual = (ry - rx).max(0.0);
                outcome(residual, tol, || {
                    Witness::new(t, "X <= Y but rho(X) < rho(Y)")
                        .with("X", x.clone())
                        .with("Y", y.clone())
                        .with("rho", vec![rx, ry])
                })
            }
            ScalarProperty::CashAdditivity | ScalarProperty::CashSubadditivity => {
                let m = sampling::uniform_value(&mut rng);
                let shifted: Vec<f64> = x.iter().map(|v| v + m).collect();
                let lhs = rho.evaluate(&space, &shifted);
                let rhs = rho.evaluate(&space, &x) - m;
                let residual = if property == ScalarProperty::CashAdditivity {
                    (lhs - rhs).abs()
                } else {
                    (lhs - rhs).max(0.0)
                };
                outcome(residual, tol, || {
                    Witness::new(t, "rho(X + m) vs rho(X) - m")
                        .with("X", x.clone())
                        .with_scalar("m", m)
                        .with("lhs_rhs", vec![lhs, rhs])
                })
            }
            ScalarProperty::CashPreserving => {
                let m = sampling::uniform_value(&mut rng);
                let value = rho.evaluate(&space, &vec![m; n]);
                let residual = (value + m).abs();
                outcome(residual, tol, || {
                    Witness::new(t, "rho(m) != -m").with_scalar("m", m).with_scalar("rho", value)
                })
            }
            ScalarProperty::Convexity => {
                let y = sampling::values(&mut rng, n);
                let lambda = sampling::unit_interval_open(&mut rng);
                let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
                let lhs = rho.evaluate(&space, &mix);
                let rhs = lambda * rho.evaluate(&space, &x) + (1.0 - lambda) * rho.evaluate(&space, &y);
                let residual = (lhs - rhs).max(0.0);
                outcome(residual, tol, || {
                    Witness::new(t, "convexity inequality violated")
                        .with("X", x.clone())
                        .with("Y", y.clone())
                        .with_scalar("lambda", lambda)
                        .with("lhs_rhs", vec![lhs, rhs])
                })
            }
        }
    });
    Ok(record)
}

fn outcome(residual: f64, tol: f64, witness: impl FnOnce() -> Witness) -> TrialOutcome {
    if violates(residual, tol) {
        TrialOutcome { residual, witness: Some(witness()) }
    } else {
        TrialOutcome::ok(residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::Verdict;

    fn uniform2() -> FiniteProbabilitySpace {
        FiniteProbabilitySpace::uniform(2).unwrap()
    }

    #[test]
    fn entropic_closed_form() {
        let s = uniform2();
        let rho = ScalarRisk::entropic(1.0).unwrap();
        let expected = ((1.0 + std::f64::consts::E) / 2.0).ln();
        assert!((rho.eval(&s, &[0.0, -1.0]) - expected).abs() < 1e-12);
        assert!((expected - 0.620115).abs() < 1e-6);
        assert!((rho.eval(&s, &[3.5, 3.5]) + 3.5).abs() < 1e-12);
    }

    #[test]
    fn entropic_is_stable_for_large_beta() {
        let s = uniform2();
        for beta in [10.0, 100.0, 1e4] {
            let v = ScalarRisk::entropic(beta).unwrap().eval(&s, &[0.0, -1.0]);
            assert!(v.is_finite());
            assert!((v - 1.0).abs() <= 2f64.ln() / beta + 1e-15);
        }
    }

    #[test]
    fn avar_tail_average() {
        let s = FiniteProbabilitySpace::new(vec![0.25, 0.25, 0.5]).unwrap();
        let x = [-4.0, 2.0, 0.0];
        // alpha = 1 is the negative mean
        let full = ScalarRisk::avar(1.0).unwrap().eval(&s, &x);
        assert!((full - ScalarRisk::NegExpectation.eval(&s, &x)).abs() < 1e-12);
        // alpha = 0.5: all of the -4 atom plus half of the 0 atom's slice
        let half = ScalarRisk::avar(0.5).unwrap().eval(&s, &x);
        assert!((half - (0.25 * 4.0 + 0.25 * 0.0) / 0.5).abs() < 1e-12);
        // tiny alpha approaches the worst case
        let tiny = ScalarRisk::avar(1e-6).unwrap().eval(&s, &x);
        assert!((tiny - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cash_preserving_on_constants() {
        let s = FiniteProbabilitySpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        for rho in [
            ScalarRisk::entropic(0.7).unwrap(),
            ScalarRisk::WorstCase,
            ScalarRisk::NegExpectation,
            ScalarRisk::avar(0.3).unwrap(),
        ] {
            for m in [-7.25, 0.0, 3.0] {
                assert!((rho.eval(&s, &[m; 3]) + m).abs() <= 1e-12, "{rho} at {m}");
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ScalarRisk::entropic(0.0).is_err());
        assert!(ScalarRisk::entropic(-1.0).is_err());
        assert!(ScalarRisk::avar(0.0).is_err());
        assert!(ScalarRisk::avar(1.5).is_err());
        assert!(ScalarRisk::avar(1.0).is_ok());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["entropic:beta=1", "worst_case", "neg_expectation", "avar:alpha=0.05"] {
            let rho: ScalarRisk = s.parse().unwrap();
            assert_eq!(rho.to_string().parse::<ScalarRisk>().unwrap(), rho);
        }
        assert_eq!("entropic:beta=1.0".parse::<ScalarRisk>().unwrap(), ScalarRisk::Entropic { beta: 1.0 });
        assert!("entropic".parse::<ScalarRisk>().is_err());
        assert!("avar:alpha=2".parse::<ScalarRisk>().is_err());
        assert!("median".parse::<ScalarRisk>().is_err());
    }

    #[test]
    fn audits() {
        let ent = ScalarRisk::entropic(1.0).unwrap();
        let rec = audit_scalar_property(&ent, ScalarProperty::CashAdditivity, 500, 1).unwrap();
        assert_eq!(rec.verdict, Verdict::Pass, "{rec:?}");
        let rec = audit_scalar_property(&ScalarRisk::WorstCase, ScalarProperty::Convexity, 500, 2).unwrap();
        assert_eq!(rec.verdict, Verdict::Pass, "{rec:?}");

        let squared = |s: &FiniteProbabilitySpace, x: &[f64]| ent.eval(s, x).powi(2);
        let rec = audit_scalar_property(&squared, ScalarProperty::CashAdditivity, 500, 3).unwrap();
        assert_eq!(rec.verdict, Verdict::Fail);
        assert!(rec.witness.is_some());
    }

    #[test]
    fn every_kind_passes_every_axiom() {
        for rho in [
            ScalarRisk::entropic(2.0).unwrap(),
            ScalarRisk::WorstCase,
            ScalarRisk::NegExpectation,
            ScalarRisk::avar(0.25).unwrap(),
        ] {
            for p in ScalarProperty::ALL {
                let rec = audit_scalar_property(&rho, p, 300, 9).unwrap();
                assert!(rec.passed(), "{rho} {p:?}: {rec:?}");
            }
        }
    }

    #[test]
    fn property_names() {
        assert_eq!("cash_additivity".parse::<ScalarProperty>().unwrap(), ScalarProperty::CashAdditivity);
        assert!(matches!("lsc".parse::<ScalarProperty>(), Err(RiskError::UnknownProperty(_))));
        assert!(audit_scalar_property(&ScalarRisk::WorstCase, ScalarProperty::Convexity, 0, 0).is_err());
    }

    #[test]
    fn avar_monotone_in_alpha() {
        for t in 0..100 {
            let mut rng = sampling::trial_rng(5, t);
            let s = sampling::space(&mut rng);
            let x = sampling::values(&mut rng, s.outcomes());
            let mut prev = f64::INFINITY;
            for k in 1..=20 {
                let v = ScalarRisk::avar(k as f64 / 20.0).unwrap().eval(&s, &x);
                assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}
