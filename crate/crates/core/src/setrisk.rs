//! Set-valued risk measures, the vector-based identity and capital
//! allocation.
//!
//! Two kinds are provided. `VectorBased` is `R(X) = r(X) + C`. The systemic
//! `AggregateHalfspace` is `R(X) = { m : rho(wbar^T (X + m)) <= 0 }` for
//! the entropic `rho`, i.e. the halfspace `wbar^T m >= rho(wbar^T X)`. Its
//! recession cone is a halfspace, so it is not vector-based and it sees the
//! copula of `X`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::audit::{run_trials, AuditRecord, TrialOutcome, Witness};
use crate::error::{Result, RiskError};
use crate::extended::ConjugateValue;
use crate::prob::{FiniteProbabilitySpace, RandomVector};
use crate::sampling;
use crate::scalar::{entropic, ScalarRisk};
use crate::sets::{Direction, Support, UpperConvexSet, INCLUSION_TOL};
use crate::vector::{theorem31_harness, CustomFunctional, Theorem31Verdict, VectorFunctional, VectorRisk};

/// Shift towards the interior used for membership spot checks of boundary
/// points.
const NUDGE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum SetValuedRiskMeasure {
    VectorBased { r: VectorRisk, c: UpperConvexSet },
    AggregateHalfspace { beta: f64, weights: Vec<f64> },
}

impl SetValuedRiskMeasure {
    pub fn vector_based(r: VectorRisk, c: UpperConvexSet) -> Result<Self> {
        if r.dim() != c.dim() {
            return Err(RiskError::DimensionMismatch { expected: r.dim(), got: c.dim() });
        }
        Ok(Self::VectorBased { r, c })
    }

    pub fn aggregate_halfspace(beta: f64, weights: Vec<f64>) -> Result<Self> {
        ScalarRisk::entropic(beta)?;
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(RiskError::InvalidParameter(format!("weights must be positive, got {weights:?}")));
        }
        Ok(Self::AggregateHalfspace { beta, weights })
    }

    /// Entropic marginals with `beta = (1, 1)` over the flagship offset set.
    pub fn flagship() -> Self {
        let ent = ScalarRisk::entropic(1.0).expect("valid");
        Self::VectorBased { r: VectorRisk::separable(vec![ent, ent]).expect("valid"), c: UpperConvexSet::flagship() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::VectorBased { r, .. } => r.dim(),
            Self::AggregateHalfspace { weights, .. } => weights.len(),
        }
    }

    fn space(&self) -> Option<&Arc<FiniteProbabilitySpace>> {
        match self {
            Self::VectorBased { r, .. } => VectorFunctional::space(r),
            Self::AggregateHalfspace { .. } => None,
        }
    }

    /// `rho(wbar^T X)` for the aggregate kind.
    fn aggregate_level(beta: f64, weights: &[f64], x: &RandomVector) -> f64 {
        let agg: Vec<f64> =
            (0..x.outcomes()).map(|k| weights.iter().enumerate().map(|(j, w)| w * x.get(k, j)).sum()).collect();
        entropic(x.space().probabilities(), &agg, beta)
    }

    /// `R(X)` as an explicit upper set.
    pub fn value_set(&self, x: &RandomVector) -> Result<UpperConvexSet> {
        if x.dim() != self.dim() {
            return Err(RiskError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        match self {
            Self::VectorBased { r, c } => c.clone().shifted(r.eval(x)?),
            Self::AggregateHalfspace { beta, weights } => {
                UpperConvexSet::halfspace(weights.clone(), Self::aggregate_level(*beta, weights, x))
            }
        }
    }
}

impl fmt::Display for SetValuedRiskMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VectorBased { r, c } => write!(f, "svrm:vector_based:r={r};C={c}"),
            Self::AggregateHalfspace { beta, weights } => {
                let w: Vec<String> = weights.iter().map(ToString::to_string).collect();
                write!(f, "svrm:aggregate_halfspace:beta={beta};weights={}", w.join(","))
            }
        }
    }
}

pub fn sv_membership(r: &SetValuedRiskMeasure, x: &RandomVector, m: &[f64]) -> Result<bool> {
    r.value_set(x)?.membership(m)
}

/// `sigma_{R(X)}(w)` for `w` in `R^N_- \ {0}`.
pub fn sv_support(r: &SetValuedRiskMeasure, x: &RandomVector, w: &[f64]) -> Result<Support> {
    if w.len() != r.dim() {
        return Err(RiskError::DimensionMismatch { expected: r.dim(), got: w.len() });
    }
    if w.iter().any(|&v| !(v <= 0.0)) || w.iter().all(|&v| v == 0.0) {
        return Err(RiskError::InvalidParameter(format!("w must lie in R^N_- \\ {{0}}, got {w:?}")));
    }
    r.value_set(x)?.sigma(w)
}

/// Axioms of a set-valued risk measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetProperty {
    Monotonicity,
    CashAdditivity,
    FinitenessAtZero,
    Convexity,
}

impl SetProperty {
    pub const ALL: [SetProperty; 4] =
        [Self::Monotonicity, Self::CashAdditivity, Self::FinitenessAtZero, Self::Convexity];

    pub fn name(self) -> &'static str {
        match self {
            Self::Monotonicity => "monotonicity",
            Self::CashAdditivity => "cash-additivity",
            Self::FinitenessAtZero => "finiteness-at-zero",
            Self::Convexity => "convexity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL.into_iter().find(|p| p.name() == key).ok_or_else(|| RiskError::UnknownProperty(s.to_string()))
    }

    fn anchor(self) -> String {
        format!("Def 4.4 / {}", self.name().replace('-', " "))
    }
}

/// How far `sigma_large >= sigma_small` fails; `+inf` if only the smaller
/// set has infinite support.
fn inclusion_gap(large: &ConjugateValue, small: &ConjugateValue) -> f64 {
    match (large.value(), small.value()) {
        (None, _) => 0.0,
        (Some(_), None) => f64::INFINITY,
        (Some(a), Some(b)) => (b - a).max(0.0),
    }
}

/// Moves a boundary point `m` slightly into the interior, relative to its size.
pub fn nudged(m: &[f64]) -> Vec<f64> {
    m.iter().map(|v| v + NUDGE * (1.0 + v.abs())).collect()
}

/// Worst inclusion gap and, when positive, the direction and reason.
type InclusionGap = (f64, Option<(Vec<f64>, &'static str)>);

/// Checks `large ⊇ small` on the grid: support inequalities plus membership
/// of the nudged attainment points of `small`. Returns the worst gap and
/// the offending direction.
fn check_inclusion(
    large: &UpperConvexSet,
    small: &UpperConvexSet,
    grid: &[Direction],
) -> Result<InclusionGap> {
    let mut worst = 0.0;
    let mut at = None;
    for d in grid {
        let (sl, ss) = (large.sigma(&d.w)?, small.sigma(&d.w)?);
        let gap = inclusion_gap(&sl.value, &ss.value);
        if gap > worst {
            worst = gap;
            at = Some((d.w.clone(), "support inequality"));
        }
        if let Some(a) = &ss.attainment {
            if !large.membership(&nudged(a))? && worst <= INCLUSION_TOL {
                worst = f64::INFINITY;
                at = Some((d.w.clone(), "attainment point of the smaller set is outside"));
            }
        }
    }
    Ok((worst, at))
}

fn sample_space(r: &SetValuedRiskMeasure, rng: &mut impl rand::Rng) -> Arc<FiniteProbabilitySpace> {
    match r.space() {
        Some(s) => s.clone(),
        None => sampling::space(rng),
    }
}

fn inclusion_outcome(
    t: usize,
    result: Result<InclusionGap>,
    data: impl FnOnce(Witness) -> Witness,
) -> TrialOutcome {
    match result {
        Ok((gap, at)) if gap > INCLUSION_TOL => {
            let (w, note) = at.expect("gap has a direction");
            TrialOutcome { residual: gap, witness: Some(data(Witness::new(t, note).with("w", w))) }
        }
        Ok((gap, _)) => TrialOutcome::ok(gap),
        Err(e) => TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, format!("evaluation failed: {e}"))) },
    }
}

/// Sampled audit of one axiom; inclusions are compared through support
/// functions on `grid` at tolerance 1e-8.
pub fn audit_set_property(
    r: &SetValuedRiskMeasure,
    property: SetProperty,
    trials: usize,
    seed: u64,
    grid: &[Direction],
) -> Result<AuditRecord> {
    if trials == 0 || grid.is_empty() {
        return Err(RiskError::InvalidParameter("need trials >= 1 and a nonempty grid".into()));
    }
    let dim = r.dim();
    let name = property.name();
    let anchor = property.anchor();
    if property == SetProperty::FinitenessAtZero {
        return finiteness_at_zero(r, name, &anchor);
    }
    Ok(run_trials(name, &anchor, trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sample_space(r, &mut rng);
        let x = sampling::random_vector(&mut rng, space.clone(), dim);
        match property {
            SetProperty::Monotonicity => {
                let d = sampling::nonnegative_vector(&mut rng, space, dim);
                let larger = x.zip_map(&d, |a, b| a + b).expect("same space");
                let result = (|| check_inclusion(&r.value_set(&larger)?, &r.value_set(&x)?, grid))();
                inclusion_outcome(t, result, |w| w.with("X", x.table().values()).with("X+D", larger.table().values()))
            }
            SetProperty::CashAdditivity => {
                let m = sampling::values(&mut rng, dim);
                let result = (|| {
                    let shifted = r.value_set(&x.shift(&m)?)?;
                    let minus: Vec<f64> = m.iter().map(|v| -v).collect();
                    let moved = r.value_set(&x)?.shifted(minus)?;
                    let (a, wa) = check_inclusion(&shifted, &moved, grid)?;
                    let (b, wb) = check_inclusion(&moved, &shifted, grid)?;
                    Ok(if a >= b { (a, wa) } else { (b, wb) })
                })();
                inclusion_outcome(t, result, |w| w.with("X", x.table().values()).with("m", m.clone()))
            }
            SetProperty::Convexity => {
                let y = sampling::random_vector(&mut rng, space, dim);
                let lambda = sampling::unit_interval_open(&mut rng);
                let mixed = x.mix(&y, lambda).expect("same space");
                let result = (|| {
                    let (sx, sy, sz) = (r.value_set(&x)?, r.value_set(&y)?, r.value_set(&mixed)?);
                    let mut worst: (f64, Option<(Vec<f64>, &'static str)>) = (0.0, None);
                    for d in grid {
                        let (a, b, z) = (sx.sigma(&d.w)?, sy.sigma(&d.w)?, sz.sigma(&d.w)?);
                        let combo = match (a.value.value(), b.value.value()) {
                            (Some(p), Some(q)) => ConjugateValue::finite(lambda * p + (1.0 - lambda) * q),
                            _ => ConjugateValue::infinite(d.w.clone(), Vec::new(), "a summand is infinite"),
                        };
                        let gap = inclusion_gap(&z.value, &combo);
                        if gap > worst.0 {
                            worst = (gap, Some((d.w.clone(), "support inequality")));
                        }
                        if let (Some(pa), Some(pb)) = (&a.attainment, &b.attainment) {
                            let point: Vec<f64> =
                                pa.iter().zip(pb).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
                            if !sz.membership(&nudged(&point))? && worst.0 <= INCLUSION_TOL {
                                worst = (f64::INFINITY, Some((d.w.clone(), "mixed attainment point is outside")));
                            }
                        }
                    }
                    Ok(worst)
                })();
                inclusion_outcome(t, result, |w| {
                    w.with("X", x.table().values()).with("Y", y.table().values()).with_scalar("lambda", lambda)
                })
            }
            SetProperty::FinitenessAtZero => unreachable!(),
        }
    }))
}

/// `R(0)` has a member and a non-member.
fn finiteness_at_zero(r: &SetValuedRiskMeasure, name: &str, anchor: &str) -> Result<AuditRecord> {
    let space = match r.space() {
        Some(s) => s.clone(),
        None => FiniteProbabilitySpace::uniform(1)?.shared(),
    };
    let zero = RandomVector::zeros(space, r.dim());
    let set = r.value_set(&zero)?;
    let inside = set.seed_point();
    if !set.membership(&inside)? {
        return Ok(AuditRecord::fail(name, anchor, 1, f64::INFINITY, Witness::new(0, "no member of R(0) found")));
    }
    let mut t = 1.0;
    while t <= 1e12 {
        let outside: Vec<f64> = inside.iter().map(|v| v - t).collect();
        if !set.membership(&outside)? {
            return Ok(AuditRecord::pass(name, anchor, 1, 0.0));
        }
        t *= 10.0;
    }
    Ok(AuditRecord::fail(name, anchor, 1, f64::INFINITY, Witness::new(0, "R(0) contains every probe").with("inside", inside)))
}

/// Result of the vector-based identity check.
#[derive(Debug, Clone, Serialize)]
pub struct StrongSeparabilityVerdict {
    /// `sigma_{R(X)}(w) = w^T (rbar_i(X_i))_i + sigma_C(w)` with
    /// `rbar_i(X_i) = r_i(X_i e_i)`.
    pub identity: AuditRecord,
    pub harness: Theorem31Verdict,
}

/// `r` evaluated on `X_i e_i`, one component at a time.
pub fn marginal_rebuilt(r: &VectorRisk, x: &RandomVector) -> Result<Vec<f64>> {
    let zeros = vec![0.0; x.outcomes()];
    (0..x.dim())
        .map(|i| {
            let cols: Vec<Vec<f64>> = (0..x.dim()).map(|j| if j == i { x.column(j) } else { zeros.clone() }).collect();
            Ok(r.eval(&RandomVector::from_columns(x.space().clone(), &cols)?)?[i])
        })
        .collect()
}

pub fn strong_separability_check(
    r: &SetValuedRiskMeasure,
    trials: usize,
    seed: u64,
    grid: &[Direction],
) -> Result<StrongSeparabilityVerdict> {
    let SetValuedRiskMeasure::VectorBased { r: rv, c } = r else {
        return Err(RiskError::Precondition("strong separability check needs a vector-based measure".into()));
    };
    if trials == 0 || grid.is_empty() {
        return Err(RiskError::InvalidParameter("need trials >= 1 and a nonempty grid".into()));
    }
    let base: Vec<Support> = grid.iter().map(|d| c.sigma(&d.w)).collect::<Result<_>>()?;
    let identity = run_trials("strong separability identity", "Thm 4.2 / strong separability", trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sample_space(r, &mut rng);
        let x = sampling::random_vector(&mut rng, space, rv.dim());
        let result = (|| -> Result<(f64, Vec<f64>)> {
            let rebuilt = marginal_rebuilt(rv, &x)?;
            let set = r.value_set(&x)?;
            let mut worst = (0.0, Vec::new());
            for (d, sc) in grid.iter().zip(&base) {
                let Some(sc) = sc.value.value() else { continue };
                let lhs = set.sigma(&d.w)?.value.as_f64();
                let rhs = d.w.iter().zip(&rebuilt).map(|(a, b)| a * b).sum::<f64>() + sc;
                let gap = (lhs - rhs).abs();
                if !(gap <= worst.0) {
                    worst = (gap, d.w.clone());
                }
            }
            Ok(worst)
        })();
        match result {
            Ok((gap, w)) if gap > INCLUSION_TOL || gap.is_nan() => TrialOutcome {
                residual: gap,
                witness: Some(Witness::new(t, "identity fails against marginal-rebuilt r").with("w", w).with("X", x.table().values())),
            },
            Ok((gap, _)) => TrialOutcome::ok(gap),
            Err(e) => TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, format!("evaluation failed: {e}"))) },
        }
    });
    let harness = theorem31_harness(rv, trials, seed.wrapping_add(10))?;
    Ok(StrongSeparabilityVerdict { identity, harness })
}

/// Minimizer of `v^T m` over `R(X)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub m: Vec<f64>,
    pub total: f64,
    /// `sigma_{R(X)}(-v)`.
    pub support: f64,
}

/// Efficient allocation for weights `v` in `R^N_+ \ {0}`.
///
/// Errors with `Unbounded` when `-v` is outside the support domain and with
/// `NotAttained` when the infimum is finite but only approached.
pub fn efficient_allocation(r: &SetValuedRiskMeasure, x: &RandomVector, v: &[f64]) -> Result<Allocation> {
    if v.len() != r.dim() {
        return Err(RiskError::DimensionMismatch { expected: r.dim(), got: v.len() });
    }
    if v.iter().any(|&a| !(a >= 0.0 && a.is_finite())) || v.iter().all(|&a| a == 0.0) {
        return Err(RiskError::InvalidParameter(format!("v must lie in R^N_+ \\ {{0}}, got {v:?}")));
    }
    let minus: Vec<f64> = v.iter().map(|a| -a).collect();
    let set = r.value_set(x)?;
    let support = set.sigma(&minus)?;
    let Some(s) = support.value.value() else {
        return Err(RiskError::Unbounded { direction: minus });
    };
    let m = match (r, support.attainment) {
        (SetValuedRiskMeasure::AggregateHalfspace { beta, weights }, _) => {
            // v is proportional to wbar here; take the v-ray through the
            // boundary hyperplane.
            let level = SetValuedRiskMeasure::aggregate_level(*beta, weights, x);
            let scale = level / weights.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            v.iter().map(|a| scale * a).collect()
        }
        (_, Some(m)) => m,
        (_, None) => return Err(RiskError::NotAttained { infimum: -s }),
    };
    let total = m.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(Allocation { m, total, support: s })
}

/// `X -> efficient_allocation(R, X, v)` as a vector functional.
pub fn allocation_rule(r: &SetValuedRiskMeasure, v: Vec<f64>) -> VectorRisk {
    let measure = r.clone();
    let dim = r.dim();
    let name = format!("efficient_allocation[{measure}; v={v:?}]");
    VectorRisk::custom(CustomFunctional::new(name, dim, move |x| Ok(efficient_allocation(&measure, x, &v)?.m)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub angle_deg: Option<f64>,
    pub w: Vec<f64>,
    pub sigma: ConjugateValue,
    pub attainment: Option<Vec<f64>>,
}

/// Support values of `R(X)` along a 2-D direction grid.
pub fn frontier_sample(r: &SetValuedRiskMeasure, x: &RandomVector, grid: &[Direction]) -> Result<Vec<FrontierPoint>> {
    if r.dim() != 2 {
        return Err(RiskError::Precondition("frontier sampling needs N = 2".into()));
    }
    let set = r.value_set(x)?;
    grid.iter()
        .map(|d| {
            let s = set.sigma(&d.w)?;
            Ok(FrontierPoint { angle_deg: d.angle_deg, w: d.w.clone(), sigma: s.value, attainment: s.attainment })
        })
        .collect()
}

/// CSV with columns `angle_deg,w1,w2,sigma,attain1,attain2,finite`;
/// infinite values print as `inf`, missing attainments as empty fields.
pub fn frontier_csv(points: &[FrontierPoint]) -> Result<String> {
    let mut out = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RiskError::Input(e.to_string());
    out.write_record(["angle_deg", "w1", "w2", "sigma", "attain1", "attain2", "finite"]).map_err(io)?;
    for p in points {
        let (a1, a2) = match &p.attainment {
            Some(a) => (a[0].to_string(), a[1].to_string()),
            None => (String::new(), String::new()),
        };
        out.write_record([
            p.angle_deg.map(|a| a.to_string()).unwrap_or_default(),
            p.w[0].to_string(),
            p.w[1].to_string(),
            p.sigma.value().map_or("inf".to_string(), |v| v.to_string()),
            a1,
            a2,
            p.sigma.is_finite().to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = out.into_inner().map_err(|e| RiskError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| RiskError::Input(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AllocationDiagnostic {
    /// `rule(X) in R(X)` on every trial.
    pub membership: AuditRecord,
    pub harness: Theorem31Verdict,
    /// A rule satisfying every hypothesis must be copula invariant.
    pub consistent: bool,
}

pub fn allocation_rule_diagnostic(
    rule: &dyn VectorFunctional,
    r: &SetValuedRiskMeasure,
    trials: usize,
    seed: u64,
) -> Result<AllocationDiagnostic> {
    if rule.dim() != r.dim() {
        return Err(RiskError::DimensionMismatch { expected: r.dim(), got: rule.dim() });
    }
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let membership = run_trials("allocation membership", "Def 4.8 / capital allocation rule", trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = match rule.space() {
            Some(s) => s.clone(),
            None => sample_space(r, &mut rng),
        };
        let x = sampling::random_vector(&mut rng, space, r.dim());
        match rule.evaluate(&x).and_then(|m| Ok((sv_membership(r, &x, &nudged(&m))?, m))) {
            Ok((true, _)) => TrialOutcome::ok(0.0),
            Ok((false, m)) => TrialOutcome {
                residual: f64::INFINITY,
                witness: Some(Witness::new(t, "rule(X) is outside R(X)").with("X", x.table().values()).with("m", m)),
            },
            Err(e) => TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, format!("evaluation failed: {e}"))) },
        }
    });
    let harness = theorem31_harness(rule, trials, seed.wrapping_add(20))?;
    let consistent = !harness.contradiction;
    Ok(AllocationDiagnostic { membership, harness, consistent })
}
