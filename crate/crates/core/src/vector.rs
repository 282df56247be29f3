//! Vector-valued risk measures: evaluation, axiom audits, the
//! marginal-domination refuter and the copula-invariance harness.
//!
//! The harness checks the separability theorem on finite instances: a
//! monotone, convex functional whose components are dominated by functions
//! of their own coordinate cannot see the joint law of its input, so
//! comonotone and countermonotone couplings with equal marginals must map
//! to the same value.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::audit::{eq_violation, leq_violation, run_trials, violates, AuditRecord, TrialOutcome, Verdict, Witness};
use crate::error::{Result, RiskError};
use crate::extended::DIVERGENCE_THRESHOLD;
use crate::prob::{comonotone_pair, FiniteProbabilitySpace, RandomVector};
use crate::sampling;
use crate::scalar::{entropic, ScalarRisk, CLOSED_FORM_TOL};

/// A map from `N`-dimensional random vectors to `R^N`.
pub trait VectorFunctional: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn evaluate(&self, x: &RandomVector) -> Result<Vec<f64>>;

    /// Space the functional is tied to, if it only accepts inputs on one
    /// fixed space. Audits then sample on that space.
    fn space(&self) -> Option<&Arc<FiniteProbabilitySpace>> {
        None
    }
}

type CustomFn = dyn Fn(&RandomVector) -> Result<Vec<f64>> + Send + Sync;

/// A black-box functional registered by name.
#[derive(Clone)]
pub struct CustomFunctional {
    name: String,
    dim: usize,
    space: Option<Arc<FiniteProbabilitySpace>>,
    f: Arc<CustomFn>,
}

impl CustomFunctional {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&RandomVector) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), dim, space: None, f: Arc::new(f) }
    }

    pub fn on_space(mut self, space: Arc<FiniteProbabilitySpace>) -> Self {
        self.space = Some(space);
        self
    }
}

impl fmt::Debug for CustomFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunctional").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

#[derive(Debug, Clone)]
pub enum VectorRisk {
    /// Component `i` is `rho_i(X_i)`.
    Separable(Vec<ScalarRisk>),
    /// Every component is `(1/beta) log E[exp(-beta sum_j w_j X_j)]`.
    AggregateEntropic { beta: f64, weights: Vec<f64> },
    Custom(CustomFunctional),
}

impl VectorRisk {
    pub fn separable(components: Vec<ScalarRisk>) -> Result<Self> {
        if components.is_empty() {
            return Err(RiskError::InvalidParameter("separable functional needs N >= 1 components".into()));
        }
        Ok(Self::Separable(components))
    }

    pub fn aggregate_entropic(beta: f64, weights: Vec<f64>) -> Result<Self> {
        ScalarRisk::entropic(beta)?;
        if weights.is_empty() {
            return Err(RiskError::InvalidParameter("aggregate needs at least one weight".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(RiskError::InvalidParameter(format!("weights must be nonnegative: {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(RiskError::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::AggregateEntropic { beta, weights })
    }

    pub fn custom(f: CustomFunctional) -> Self {
        Self::Custom(f)
    }

    pub fn eval(&self, x: &RandomVector) -> Result<Vec<f64>> {
        if x.dim() != self.dim() {
            return Err(RiskError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        match self {
            Self::Separable(rhos) => {
                Ok(rhos.iter().enumerate().map(|(i, rho)| rho.eval(x.space(), &x.column(i))).collect())
            }
            Self::AggregateEntropic { beta, weights } => {
                let agg: Vec<f64> = (0..x.outcomes())
                    .map(|k| weights.iter().enumerate().map(|(j, w)| w * x.get(k, j)).sum())
                    .collect();
                let value = entropic(x.space().probabilities(), &agg, *beta);
                Ok(vec![value; weights.len()])
            }
            Self::Custom(c) => {
                let out = (c.f)(x)?;
                if out.len() != c.dim {
                    return Err(RiskError::DimensionMismatch { expected: c.dim, got: out.len() });
                }
                Ok(out)
            }
        }
    }
}

impl VectorFunctional for VectorRisk {
    fn name(&self) -> String {
        self.to_string()
    }

    fn dim(&self) -> usize {
        match self {
            Self::Separable(r) => r.len(),
            Self::AggregateEntropic { weights, .. } => weights.len(),
            Self::Custom(c) => c.dim,
        }
    }

    fn evaluate(&self, x: &RandomVector) -> Result<Vec<f64>> {
        self.eval(x)
    }

    fn space(&self) -> Option<&Arc<FiniteProbabilitySpace>> {
        match self {
            Self::Custom(c) => c.space.as_ref(),
            _ => None,
        }
    }
}

impl fmt::Display for VectorRisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Separable(rhos) => {
                let inner: Vec<String> = rhos.iter().map(ToString::to_string).collect();
                write!(f, "separable:[{}]", inner.join(","))
            }
            Self::AggregateEntropic { beta, weights } => {
                let w: Vec<String> = weights.iter().map(ToString::to_string).collect();
                write!(f, "aggregate_entropic:beta={beta},weights={}", w.join(","))
            }
            Self::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

/// `separable(rho_1, ..., rho_N)`.
pub fn build_separable(components: Vec<ScalarRisk>) -> Result<VectorRisk> {
    VectorRisk::separable(components)
}

/// Named custom functionals available to spec strings (`custom:NAME`).
#[derive(Debug, Clone, Default)]
pub struct FunctionalRegistry {
    entries: BTreeMap<String, CustomFunctional>,
}

impl FunctionalRegistry {
    /// Registry preloaded with `neg_mean` (`-E[X_i]` per component) and
    /// `mean` (`E[X_i]`, deliberately non-monotone), both two-dimensional.
    pub fn with_builtins() -> Self {
        let mut reg = Self::default();
        reg.register(CustomFunctional::new("neg_mean", 2, |x| Ok(x.mean().iter().map(|v| -v).collect())));
        reg.register(CustomFunctional::new("mean", 2, |x| Ok(x.mean())));
        reg
    }

    pub fn register(&mut self, f: CustomFunctional) {
        self.entries.insert(f.name.clone(), f);
    }

    pub fn get(&self, name: &str) -> Option<&CustomFunctional> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Axioms of a vector-valued risk measure, in the componentwise order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorProperty {
    Monotonicity,
    CashSubadditivity,
    CashAdditivity,
    CashPreserving,
    Convexity,
    /// Scales to test; empty means draw `lambda` uniformly from `[0, 3]`.
    PositiveHomogeneity(Vec<f64>),
}

impl VectorProperty {
    pub fn name(&self) -> String {
        match self {
            Self::Monotonicity => "monotonicity".into(),
            Self::CashSubadditivity => "cash-subadditivity".into(),
            Self::CashAdditivity => "cash-additivity".into(),
            Self::CashPreserving => "cash-preserving".into(),
            Self::Convexity => "convexity".into(),
            Self::PositiveHomogeneity(l) if l.is_empty() => "positive-homogeneity".into(),
            Self::PositiveHomogeneity(l) => {
                let l: Vec<String> = l.iter().map(ToString::to_string).collect();
                format!("positive-homogeneity(lambda={})", l.join(","))
            }
        }
    }

    /// Parses `monotonicity`, `cash_additivity`, ...,
    /// `positive_homogeneity[:lambda=0,1,2]`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let key = head.to_ascii_lowercase().replace('_', "-");
        let prop = match key.as_str() {
            "monotonicity" => Self::Monotonicity,
            "cash-subadditivity" => Self::CashSubadditivity,
            "cash-additivity" => Self::CashAdditivity,
            "cash-preserving" => Self::CashPreserving,
            "convexity" => Self::Convexity,
            "positive-homogeneity" => {
                let lambdas = match tail {
                    None => Vec::new(),
                    Some(t) => {
                        let list = t.trim().strip_prefix("lambda=").ok_or_else(|| RiskError::Parse {
                            input: s.to_string(),
                            reason: "expected lambda=<list>".into(),
                        })?;
                        crate::spec::parse_list(list)?
                    }
                };
                if lambdas.iter().any(|l| *l < 0.0) {
                    return Err(RiskError::InvalidParameter("lambda must be >= 0".into()));
                }
                return Ok(Self::PositiveHomogeneity(lambdas));
            }
            _ => return Err(RiskError::UnknownProperty(s.to_string())),
        };
        if tail.is_some() {
            return Err(RiskError::Parse { input: s.to_string(), reason: "takes no parameters".into() });
        }
        Ok(prop)
    }

    fn anchor(&self) -> String {
        let bullet = match self {
            Self::PositiveHomogeneity(_) => "positive homogeneity".to_string(),
            other => other.name().replace('-', " "),
        };
        format!("Def 3.1 / {bullet}")
    }
}

fn sample_space(r: &dyn VectorFunctional, rng: &mut impl rand::Rng) -> Arc<FiniteProbabilitySpace> {
    match r.space() {
        Some(s) => s.clone(),
        None => sampling::space(rng),
    }
}

fn deterministic_space(r: &dyn VectorFunctional) -> Arc<FiniteProbabilitySpace> {
    match r.space() {
        Some(s) => s.clone(),
        None => FiniteProbabilitySpace::uniform(1).expect("one outcome").shared(),
    }
}

fn eval_or_nan(r: &dyn VectorFunctional, x: &RandomVector) -> Vec<f64> {
    r.evaluate(x).unwrap_or_else(|_| vec![f64::NAN; r.dim()])
}

/// Sampled check of one vector axiom at tolerance 1e-9 componentwise.
pub fn audit_vector_property(
    r: &dyn VectorFunctional,
    property: &VectorProperty,
    trials: usize,
    seed: u64,
) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let dim = r.dim();
    let tol = CLOSED_FORM_TOL;
    let name = property.name();
    let anchor = property.anchor();
    Ok(run_trials(&name, &anchor, trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sample_space(r, &mut rng);
        let x = sampling::random_vector(&mut rng, space.clone(), dim);
        let witness = |note: &str, lhs: &[f64], rhs: &[f64]| {
            Witness::new(t, note)
                .with("X", x.table().values().to_vec())
                .with("lhs", lhs.to_vec())
                .with("rhs", rhs.to_vec())
        };
        match property {
            VectorProperty::Monotonicity => {
                let bump = sampling::nonnegative_vector(&mut rng, space.clone(), dim);
                let y = x.zip_map(&bump, |a, b| a + b).expect("same space");
                let (rx, ry) = (eval_or_nan(r, &x), eval_or_nan(r, &y));
                // X <= Y requires r(Y) <= r(X)
                let residual = leq_violation(&ry, &rx);
                check(residual, tol, || {
                    witness("X <= Y but r(Y) is not <= r(X)", &ry, &rx).with("bump", bump.table().values().to_vec())
                })
            }
            VectorProperty::CashAdditivity | VectorProperty::CashSubadditivity => {
                let m = sampling::values(&mut rng, dim);
                let lhs = eval_or_nan(r, &x.shift(&m).expect("dim"));
                let rhs: Vec<f64> = eval_or_nan(r, &x).iter().zip(&m).map(|(a, b)| a - b).collect();
                let residual = if *property == VectorProperty::CashAdditivity {
                    eq_violation(&lhs, &rhs)
                } else {
                    leq_violation(&lhs, &rhs)
                };
                check(residual, tol, || witness("r(X + m) against r(X) - m", &lhs, &rhs).with("m", m.clone()))
            }
            VectorProperty::CashPreserving => {
                let m = sampling::values(&mut rng, dim);
                let c = RandomVector::constant(space.clone(), &m).expect("dim");
                let lhs = eval_or_nan(r, &c);
                let rhs: Vec<f64> = m.iter().map(|v| -v).collect();
                let residual = eq_violation(&lhs, &rhs);
                check(residual, tol, || witness("r(m) != -m", &lhs, &rhs).with("m", m.clone()))
            }
            VectorProperty::Convexity => {
                let y = sampling::random_vector(&mut rng, space.clone(), dim);
                let lambda = sampling::unit_interval_open(&mut rng);
                let lhs = eval_or_nan(r, &x.mix(&y, lambda).expect("same space"));
                let (rx, ry) = (eval_or_nan(r, &x), eval_or_nan(r, &y));
                let rhs: Vec<f64> = rx.iter().zip(&ry).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
                let residual = leq_violation(&lhs, &rhs);
                check(residual, tol, || {
                    witness("convexity inequality violated", &lhs, &rhs)
                        .with("Y", y.table().values().to_vec())
                        .with_scalar("lambda", lambda)
                })
            }
            VectorProperty::PositiveHomogeneity(lambdas) => {
                let lambda = if lambdas.is_empty() {
                    rand::Rng::random_range(&mut rng, 0.0..=3.0)
                } else {
                    lambdas[t % lambdas.len()]
                };
                let lhs = eval_or_nan(r, &x.scale(lambda));
                let rhs: Vec<f64> = eval_or_nan(r, &x).iter().map(|v| lambda * v).collect();
                let residual = eq_violation(&lhs, &rhs);
                check(residual, tol, || witness("r(lambda X) != lambda r(X)", &lhs, &rhs).with_scalar("lambda", lambda))
            }
        }
    }))
}

fn check(residual: f64, tol: f64, witness: impl FnOnce() -> Witness) -> TrialOutcome {
    if violates(residual, tol) {
        TrialOutcome { residual, witness: Some(witness()) }
    } else {
        TrialOutcome::ok(residual)
    }
}

/// Default probe magnitudes for the domination refuter.
pub const DEFAULT_L_SCHEDULE: [f64; 3] = [10.0, 100.0, 1000.0];

/// Largest probe magnitude reached when extending a growing schedule.
pub const MAX_PROBE_MAGNITUDE: f64 = 1e12;

/// Values of `r_i` at `m = -L e_j` (`j != i`, `m_i = 0`) along a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalDominationWitness {
    pub component: usize,
    pub other: usize,
    pub magnitudes: Vec<f64>,
    pub values: Vec<f64>,
}

/// `f_i(m_i) = intercept - m_i`, valid for cash-subadditive components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineDominator {
    pub component: usize,
    /// `r_i(0)`.
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DominationVerdict {
    /// No divergence seen; a necessary condition, not a proof of existence.
    DominatedConsistent {
        component: usize,
        /// Largest `r_i` value seen along the probes.
        sup_observed: f64,
        /// Reported when `r_i(m) <= r_i(0) - m_i` at every probe.
        dominator: Option<AffineDominator>,
    },
    Refuted(MarginalDominationWitness),
}

impl DominationVerdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, Self::Refuted(_))
    }

    pub fn to_record(&self) -> AuditRecord {
        match self {
            Self::DominatedConsistent { component, .. } => AuditRecord::pass(
                format!("marginal domination (component {component})"),
                "Def 3.1 / marginal domination",
                1,
                0.0,
            ),
            Self::Refuted(w) => AuditRecord::fail(
                format!("marginal domination (component {})", w.component),
                "Def 3.1 / marginal domination",
                1,
                w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Witness::new(0, format!("r_{} diverges along -L e_{}", w.component, w.other))
                    .with("L", w.magnitudes.clone())
                    .with("r_i", w.values.clone()),
            ),
        }
    }
}

/// One-sided refuter of the marginal domination property for component `i`.
///
/// Probes `r_i(-L e_j)` over the schedule; while the values keep increasing
/// the schedule is extended by factors of ten up to [`MAX_PROBE_MAGNITUDE`].
/// Crossing [`DIVERGENCE_THRESHOLD`] refutes the existence of any dominator,
/// since `f_i(0)` would have to exceed every probe value.
pub fn marginal_domination_diagnostic(
    r: &dyn VectorFunctional,
    i: usize,
    schedule: &[f64],
) -> Result<DominationVerdict> {
    let dim = r.dim();
    if i >= dim {
        return Err(RiskError::DimensionMismatch { expected: dim, got: i + 1 });
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) || schedule[0] <= 0.0 {
        return Err(RiskError::InvalidParameter("L schedule must be nonempty, positive and increasing".into()));
    }
    let space = deterministic_space(r);
    let component_at = |m: &[f64]| -> f64 {
        let c = RandomVector::constant(space.clone(), m).expect("dim");
        eval_or_nan(r, &c)[i]
    };
    let mut sup_observed = f64::NEG_INFINITY;
    for j in (0..dim).filter(|&j| j != i) {
        let mut magnitudes = Vec::new();
        let mut values = Vec::new();
        let probe = |l: f64| {
            let mut m = vec![0.0; dim];
            m[j] = -l;
            component_at(&m)
        };
        for &l in schedule {
            magnitudes.push(l);
            values.push(probe(l));
        }
        let increasing = |vals: &[f64]| {
            vals.windows(2).all(|w| w[1] > w[0] + CLOSED_FORM_TOL * w[0].abs().max(1.0))
        };
        let mut l = *magnitudes.last().expect("nonempty");
        while increasing(&values)
            && values.len() >= 2
            && values.last().copied().unwrap_or(f64::NAN) <= DIVERGENCE_THRESHOLD
            && l * 10.0 <= MAX_PROBE_MAGNITUDE
        {
            l *= 10.0;
            magnitudes.push(l);
            values.push(probe(l));
        }
        let last = *values.last().expect("nonempty");
        if last.is_nan() || (increasing(&values) && last > DIVERGENCE_THRESHOLD) {
            return Ok(DominationVerdict::Refuted(MarginalDominationWitness {
                component: i,
                other: j,
                magnitudes,
                values,
            }));
        }
        sup_observed = values.iter().copied().fold(sup_observed, f64::max);
    }
    let at_zero = component_at(&vec![0.0; dim]);
    sup_observed = sup_observed.max(at_zero);

    // affine dominator f_i(m_i) = r_i(0) - m_i, checked at every probe
    let mut affine_ok = true;
    for j in 0..dim {
        for &l in schedule {
            for sign in [-1.0, 1.0] {
                let mut m = vec![0.0; dim];
                m[j] = sign * l;
                let bound = at_zero - m[i];
                let v = component_at(&m);
                if violates(v - bound, CLOSED_FORM_TOL * bound.abs().max(1.0)) {
                    affine_ok = false;
                }
            }
        }
    }
    Ok(DominationVerdict::DominatedConsistent {
        component: i,
        sup_observed,
        dominator: affine_ok.then_some(AffineDominator { component: i, intercept: at_zero }),
    })
}

/// How the copula test draws symmetric marginals.
#[derive(Debug, Clone)]
pub enum MarginalGenerator {
    /// Fresh symmetric law per trial (on the functional's own space if it
    /// has one).
    RandomSymmetric,
    /// One fixed `Z` on a fixed space.
    Fixed { space: Arc<FiniteProbabilitySpace>, z: Vec<f64> },
}

/// Comonotone `(Z, ..., Z)` against `(Z, -Z, ..., -Z)` for symmetric `Z`:
/// identical marginals, different joint laws. Returns the two values and the
/// componentwise discrepancy.
pub fn coupling_discrepancy(
    r: &dyn VectorFunctional,
    space: Arc<FiniteProbabilitySpace>,
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let dim = r.dim();
    if !crate::prob::is_symmetric_law(&space, z) {
        return Err(RiskError::AsymmetricLaw(format!("{z:?}")));
    }
    let neg: Vec<f64> = z.iter().map(|v| -v).collect();
    let (x, y) = if dim == 2 {
        (comonotone_pair(z, space.clone())?, crate::prob::countermonotone_pair(z, space)?)
    } else {
        let co: Vec<Vec<f64>> = (0..dim).map(|_| z.to_vec()).collect();
        let counter: Vec<Vec<f64>> = (0..dim).map(|j| if j == 0 { z.to_vec() } else { neg.clone() }).collect();
        (RandomVector::from_columns(space.clone(), &co)?, RandomVector::from_columns(space, &counter)?)
    };
    let rx = r.evaluate(&x)?;
    let ry = r.evaluate(&y)?;
    let d = eq_violation(&rx, &ry);
    Ok((rx, ry, d))
}

/// Copula invariance: `r` must agree on couplings with equal marginals.
pub fn copula_invariance_test(
    r: &dyn VectorFunctional,
    generator: &MarginalGenerator,
    trials: usize,
    seed: u64,
) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let anchor = "Thm 3.1 / separability (copula invariance)";
    Ok(run_trials("copula invariance", anchor, trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let (space, z) = match generator {
            MarginalGenerator::Fixed { space, z } => (space.clone(), z.clone()),
            MarginalGenerator::RandomSymmetric => {
                let space = match r.space() {
                    Some(s) => s.clone(),
                    None => sampling::symmetric_space(&mut rng),
                };
                let z = sampling::symmetric_values(&mut rng, &space);
                (space, z)
            }
        };
        match coupling_discrepancy(r, space.clone(), &z) {
            Ok((rx, ry, d)) => check(d, CLOSED_FORM_TOL, || {
                Witness::new(t, "comonotone and countermonotone couplings disagree")
                    .with("Z", z.clone())
                    .with("p", space.probabilities().to_vec())
                    .with("r_comonotone", rx.clone())
                    .with("r_countermonotone", ry.clone())
            }),
            Err(e) => TrialOutcome {
                residual: f64::NAN,
                witness: Some(Witness::new(t, format!("evaluation failed: {e}")).with("Z", z.clone())),
            },
        }
    }))
}

/// Outcome of the separability harness on one functional.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem31Verdict {
    pub functional: String,
    pub hypotheses: Vec<AuditRecord>,
    pub domination: Vec<DominationVerdict>,
    pub hypotheses_hold: bool,
    /// Names of the hypotheses that failed.
    pub refuted: Vec<String>,
    /// Pass/fail when the hypotheses hold; informational otherwise.
    pub invariance: AuditRecord,
    /// Hypotheses hold but invariance failed: an implementation error, since
    /// the theorem forbids it.
    pub contradiction: bool,
}

impl Theorem31Verdict {
    /// All records in report order.
    pub fn records(&self) -> Vec<AuditRecord> {
        let mut out = self.hypotheses.clone();
        out.push(self.invariance.clone());
        out
    }

    pub fn refuted_domination(&self) -> bool {
        self.domination.iter().any(DominationVerdict::is_refuted)
    }
}

/// Checks monotonicity, convexity and marginal domination; if they hold,
/// copula invariance must hold too.
pub fn theorem31_harness(r: &dyn VectorFunctional, trials: usize, seed: u64) -> Result<Theorem31Verdict> {
    let mut hypotheses = vec![
        audit_vector_property(r, &VectorProperty::Monotonicity, trials, seed)?,
        audit_vector_property(r, &VectorProperty::Convexity, trials, seed.wrapping_add(1))?,
    ];
    let mut domination = Vec::new();
    for i in 0..r.dim() {
        let verdict = marginal_domination_diagnostic(r, i, &DEFAULT_L_SCHEDULE)?;
        hypotheses.push(verdict.to_record());
        domination.push(verdict);
    }
    hypotheses.push(
        AuditRecord::pass(
            "lower semicontinuity",
            "Thm 3.1 / lower semicontinuity (automatic on finite spaces)",
            0,
            0.0,
        )
        .informational(),
    );
    let refuted: Vec<String> =
        hypotheses.iter().filter(|h| h.verdict == Verdict::Fail).map(|h| h.name.clone()).collect();
    let hypotheses_hold = refuted.is_empty();
    let mut invariance =
        copula_invariance_test(r, &MarginalGenerator::RandomSymmetric, trials, seed.wrapping_add(2))?;
    let contradiction = hypotheses_hold && !invariance.passed();
    if !hypotheses_hold {
        invariance = invariance.informational();
    }
    Ok(Theorem31Verdict {
        functional: r.name(),
        hypotheses,
        domination,
        hypotheses_hold,
        refuted,
        invariance,
        contradiction,
    })
}
