//! Conditional vector-valued risk measures on finite filtrations.
//!
//! A sub-sigma-algebra is a [`Partition`] of the outcomes; a conditional
//! functional maps a random vector to one that is constant on every cell.
//! The cellwise kind applies a static functional to each cell under the
//! conditional law, which is what `E[. | G]` means on a finite space.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::audit::{eq_violation, leq_violation, run_trials, violates, AuditRecord, TrialOutcome, Witness};
use crate::error::{Result, RiskError};
use crate::extended::DIVERGENCE_THRESHOLD;
use crate::prob::{FiniteProbabilitySpace, Partition, RandomVector, Table};
use crate::sampling;
use crate::scalar::{ScalarRisk, CLOSED_FORM_TOL};
use crate::vector::{CustomFunctional, MarginalDominationWitness, VectorFunctional, VectorRisk, MAX_PROBE_MAGNITUDE};

type ConditionalFn = dyn Fn(&RandomVector) -> Result<RandomVector> + Send + Sync;

#[derive(Clone)]
pub enum ConditionalKind {
    /// A static functional applied under the conditional law of each cell.
    Cellwise(VectorRisk),
    /// A black box; its output is checked for measurability.
    Custom { name: String, dim: usize, f: Arc<ConditionalFn> },
}

#[derive(Clone)]
pub struct ConditionalVectorRisk {
    kind: ConditionalKind,
    partition: Partition,
}

impl fmt::Debug for ConditionalVectorRisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConditionalVectorRisk({self})")
    }
}

impl fmt::Display for ConditionalVectorRisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConditionalKind::Cellwise(r) => write!(f, "conditional[{r}] on {} cells", self.partition.cells().len()),
            ConditionalKind::Custom { name, .. } => write!(f, "conditional custom:{name}"),
        }
    }
}

impl ConditionalVectorRisk {
    pub fn cellwise(r: VectorRisk, partition: Partition) -> Self {
        Self { kind: ConditionalKind::Cellwise(r), partition }
    }

    /// `r_i(X) = rho_i(X_i | G)`.
    pub fn separable(components: Vec<ScalarRisk>, partition: Partition) -> Result<Self> {
        Ok(Self::cellwise(VectorRisk::separable(components)?, partition))
    }

    /// Componentwise conditional entropic risk with parameters `betas`.
    pub fn entropic(betas: &[f64], partition: Partition) -> Result<Self> {
        let comps = betas.iter().map(|&b| ScalarRisk::entropic(b)).collect::<Result<Vec<_>>>()?;
        Self::separable(comps, partition)
    }

    /// The aggregate entropic functional applied within each cell.
    pub fn aggregate(beta: f64, weights: Vec<f64>, partition: Partition) -> Result<Self> {
        Ok(Self::cellwise(VectorRisk::aggregate_entropic(beta, weights)?, partition))
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        partition: Partition,
        f: impl Fn(&RandomVector) -> Result<RandomVector> + Send + Sync + 'static,
    ) -> Self {
        Self { kind: ConditionalKind::Custom { name: name.into(), dim, f: Arc::new(f) }, partition }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ConditionalKind::Cellwise(r) => r.dim(),
            ConditionalKind::Custom { dim, .. } => *dim,
        }
    }
}

/// `r(X)`, constant on every cell of the partition.
pub fn eval_conditional(r: &ConditionalVectorRisk, x: &RandomVector) -> Result<RandomVector> {
    let n = r.partition.outcomes();
    if x.outcomes() != n {
        return Err(RiskError::DimensionMismatch { expected: n, got: x.outcomes() });
    }
    if x.dim() != r.dim() {
        return Err(RiskError::DimensionMismatch { expected: r.dim(), got: x.dim() });
    }
    match &r.kind {
        ConditionalKind::Cellwise(inner) => {
            let mut table = Table::zeros(n, x.dim());
            for cell in r.partition.cells() {
                let value = if cell.len() == n {
                    inner.eval(x)?
                } else {
                    let space = x.space().restrict(cell)?.shared();
                    let rows: Vec<Vec<f64>> = cell.iter().map(|&k| x.table().row(k).to_vec()).collect();
                    inner.eval(&RandomVector::from_rows(space, &rows)?)?
                };
                for &k in cell {
                    for (j, v) in value.iter().enumerate() {
                        table.set(k, j, *v);
                    }
                }
            }
            RandomVector::new(x.space().clone(), table)
        }
        ConditionalKind::Custom { name, f, .. } => {
            let out = f(x)?;
            if out.outcomes() != n || out.dim() != x.dim() {
                return Err(RiskError::DimensionMismatch { expected: x.dim(), got: out.dim() });
            }
            if !r.partition.is_measurable(&out) {
                return Err(RiskError::Precondition(format!("output of `{name}` is not constant on the cells")));
            }
            Ok(out)
        }
    }
}

fn sample_cells(rng: &mut impl Rng, partition: &Partition) -> Vec<usize> {
    (0..partition.cells().len()).filter(|_| rng.random_bool(0.5)).collect()
}

/// Outcome index where two outputs differ most, mapped to its cell.
fn worst_cell(partition: &Partition, a: &RandomVector, b: &RandomVector) -> (usize, usize, f64) {
    let mut worst = (0, 0, 0.0);
    for k in 0..a.outcomes() {
        for j in 0..a.dim() {
            let d = (a.get(k, j) - b.get(k, j)).abs();
            if !(d <= worst.2) {
                worst = (partition.cell_of(k), j, d);
            }
        }
    }
    worst
}

fn failed(t: usize, e: RiskError) -> TrialOutcome {
    TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, format!("evaluation failed: {e}"))) }
}

/// `r(1_A X + 1_{A^c} Y) = 1_A r(X) + 1_{A^c} r(Y)` for unions `A` of cells.
pub fn audit_locality(r: &ConditionalVectorRisk, trials: usize, seed: u64) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let n = r.partition.outcomes();
    Ok(run_trials("locality", "Sec 4.2 / locality", trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sampling::space_with(&mut rng, n);
        let x = sampling::random_vector(&mut rng, space.clone(), r.dim());
        let y = sampling::random_vector(&mut rng, space, r.dim());
        let cells = sample_cells(&mut rng, &r.partition);
        let event = r.partition.event(&cells);
        let result = (|| {
            let lhs = eval_conditional(r, &x.paste(&y, &event)?)?;
            let rhs = eval_conditional(r, &x)?.paste(&eval_conditional(r, &y)?, &event)?;
            Ok::<_, RiskError>((lhs, rhs))
        })();
        match result {
            Ok((lhs, rhs)) => {
                let (cell, j, d) = worst_cell(&r.partition, &lhs, &rhs);
                if violates(d, CLOSED_FORM_TOL) {
                    let cells_f: Vec<f64> = cells.iter().map(|&c| c as f64).collect();
                    TrialOutcome {
                        residual: d,
                        witness: Some(
                            Witness::new(t, format!("pasting fails in cell {cell}, component {j}"))
                                .with("A_cells", cells_f)
                                .with_scalar("cell", cell as f64)
                                .with("X", x.table().values())
                                .with("Y", y.table().values()),
                        ),
                    }
                } else {
                    TrialOutcome::ok(d)
                }
            }
            Err(e) => failed(t, e),
        }
    }))
}

/// `X_i = Y_i` must give `r_i(X) = r_i(Y)` on every cell.
pub fn conditional_separability_diagnostic(r: &ConditionalVectorRisk, trials: usize, seed: u64) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let n = r.partition.outcomes();
    let dim = r.dim();
    Ok(run_trials("conditional separability", "Thm 4.10 / conditional separability", trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sampling::space_with(&mut rng, n);
        let x = sampling::random_vector(&mut rng, space.clone(), dim);
        let mut worst = TrialOutcome::ok(0.0);
        for i in 0..dim {
            let other = sampling::random_vector(&mut rng, space.clone(), dim);
            let y = other.with_column(i, &x.column(i)).expect("shape");
            let (rx, ry) = match (eval_conditional(r, &x), eval_conditional(r, &y)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return failed(t, e),
            };
            for (c, cell) in r.partition.cells().iter().enumerate() {
                let k = cell[0];
                let d = (rx.get(k, i) - ry.get(k, i)).abs();
                if !(d <= worst.residual) {
                    let witness = violates(d, CLOSED_FORM_TOL).then(|| {
                        Witness::new(t, format!("r_{i} differs on cell {c} although X_{i} = Y_{i}"))
                            .with_scalar("cell", c as f64)
                            .with_scalar("component", i as f64)
                            .with("X", x.table().values())
                            .with("Y", y.table().values())
                            .with("r_i(X), r_i(Y)", vec![rx.get(k, i), ry.get(k, i)])
                    });
                    worst = TrialOutcome { residual: d, witness };
                }
            }
        }
        worst
    }))
}

/// `X -> E[r(X)]` on the space of `space`, as a static functional.
pub fn expectation_projection(r: &ConditionalVectorRisk, space: Arc<FiniteProbabilitySpace>) -> Result<VectorRisk> {
    if space.outcomes() != r.partition.outcomes() {
        return Err(RiskError::DimensionMismatch { expected: r.partition.outcomes(), got: space.outcomes() });
    }
    let inner = r.clone();
    let name = format!("E[{r}]");
    let f = CustomFunctional::new(name, r.dim(), move |x| Ok(eval_conditional(&inner, x)?.mean())).on_space(space);
    Ok(VectorRisk::custom(f))
}

/// Conditional axioms; shifts `m` are constant on cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionalProperty {
    Monotonicity,
    CashSubadditivity,
    CashAdditivity,
    CashPreserving,
    Convexity,
}

impl ConditionalProperty {
    pub const ALL: [ConditionalProperty; 5] =
        [Self::Monotonicity, Self::CashSubadditivity, Self::CashAdditivity, Self::CashPreserving, Self::Convexity];

    pub fn name(self) -> &'static str {
        match self {
            Self::Monotonicity => "monotonicity",
            Self::CashSubadditivity => "conditional cash-subadditivity",
            Self::CashAdditivity => "conditional cash-additivity",
            Self::CashPreserving => "conditional cash-preserving",
            Self::Convexity => "convexity",
        }
    }

    fn anchor(self) -> String {
        format!("Sec 4.2 / {}", self.name().replace('-', " "))
    }
}

/// A random `G`-measurable vector.
fn measurable_shift(rng: &mut impl Rng, space: Arc<FiniteProbabilitySpace>, partition: &Partition, dim: usize) -> RandomVector {
    let per_cell: Vec<Vec<f64>> = partition.cells().iter().map(|_| sampling::values(rng, dim)).collect();
    let rows: Vec<Vec<f64>> = (0..partition.outcomes()).map(|k| per_cell[partition.cell_of(k)].clone()).collect();
    RandomVector::from_rows(space, &rows).expect("shape")
}

pub fn audit_conditional_property(
    r: &ConditionalVectorRisk,
    property: ConditionalProperty,
    trials: usize,
    seed: u64,
) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let n = r.partition.outcomes();
    let dim = r.dim();
    let tol = CLOSED_FORM_TOL;
    Ok(run_trials(property.name(), &property.anchor(), trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sampling::space_with(&mut rng, n);
        let x = sampling::random_vector(&mut rng, space.clone(), dim);
        let ev = |z: &RandomVector| eval_conditional(r, z).map(|v| v.table().values().to_vec());
        let result: Result<(f64, Witness)> = (|| match property {
            ConditionalProperty::Monotonicity => {
                let d = sampling::nonnegative_vector(&mut rng, space.clone(), dim);
                let larger = x.zip_map(&d, |a, b| a + b)?;
                let (a, b) = (ev(&larger)?, ev(&x)?);
                Ok((leq_violation(&a, &b), Witness::new(t, "X >= Y but r(X) > r(Y)").with("X", larger.table().values()).with("Y", x.table().values())))
            }
            ConditionalProperty::CashSubadditivity | ConditionalProperty::CashAdditivity => {
                let m = measurable_shift(&mut rng, space.clone(), &r.partition, dim);
                let shifted = x.zip_map(&m, |a, b| a + b)?;
                let lhs = ev(&shifted)?;
                let rhs: Vec<f64> = ev(&x)?.iter().zip(m.table().values()).map(|(a, b)| a - b).collect();
                let v = if property == ConditionalProperty::CashAdditivity { eq_violation(&lhs, &rhs) } else { leq_violation(&lhs, &rhs) };
                Ok((v, Witness::new(t, "shift by G-measurable m").with("X", x.table().values()).with("m", m.table().values())))
            }
            ConditionalProperty::CashPreserving => {
                let m = measurable_shift(&mut rng, space.clone(), &r.partition, dim);
                let lhs = ev(&m)?;
                let rhs: Vec<f64> = m.table().values().iter().map(|v| -v).collect();
                Ok((eq_violation(&lhs, &rhs), Witness::new(t, "r(m) != -m").with("m", m.table().values())))
            }
            ConditionalProperty::Convexity => {
                let y = sampling::random_vector(&mut rng, space.clone(), dim);
                let lambda = sampling::unit_interval_open(&mut rng);
                let lhs = ev(&x.mix(&y, lambda)?)?;
                let rhs: Vec<f64> = ev(&x)?.iter().zip(ev(&y)?).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
                Ok((leq_violation(&lhs, &rhs), Witness::new(t, "convexity inequality fails").with("X", x.table().values()).with("Y", y.table().values()).with_scalar("lambda", lambda)))
            }
        })();
        match result {
            Ok((v, w)) if violates(v, tol) => TrialOutcome { residual: v, witness: Some(w) },
            Ok((v, _)) => TrialOutcome::ok(v),
            Err(e) => failed(t, e),
        }
    }))
}

/// Per-cell refuter of conditional marginal domination: probes constant
/// `m = -L e_j` and reports the first cell where `r_i` diverges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalDomination {
    pub component: usize,
    /// `(cell, witness)` of a diverging cell.
    pub refuted: Option<(usize, MarginalDominationWitness)>,
    /// Largest `r_i` value seen per cell.
    pub sup_observed: Vec<f64>,
}

pub fn conditional_domination_diagnostic(
    r: &ConditionalVectorRisk,
    space: Arc<FiniteProbabilitySpace>,
    i: usize,
    schedule: &[f64],
) -> Result<ConditionalDomination> {
    let dim = r.dim();
    if i >= dim {
        return Err(RiskError::DimensionMismatch { expected: dim, got: i + 1 });
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) || schedule[0] <= 0.0 {
        return Err(RiskError::InvalidParameter("schedule must be positive and increasing".into()));
    }
    let cells = r.partition.cells().len();
    let mut sup_observed = vec![f64::NEG_INFINITY; cells];
    for j in (0..dim).filter(|&j| j != i) {
        let mut magnitudes = schedule.to_vec();
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut k = 0;
        while k < magnitudes.len() {
            let l = magnitudes[k];
            let mut m = vec![0.0; dim];
            m[j] = -l;
            let out = eval_conditional(r, &RandomVector::constant(space.clone(), &m)?)?;
            values.push(r.partition.cells().iter().map(|cell| out.get(cell[0], i)).collect());
            k += 1;
            if k == magnitudes.len() && l * 10.0 <= MAX_PROBE_MAGNITUDE {
                let last = &values[values.len() - 1];
                let growing = values.len() >= 2
                    && last.iter().zip(&values[values.len() - 2]).any(|(a, b)| a > b && *a <= DIVERGENCE_THRESHOLD);
                if growing {
                    magnitudes.push(l * 10.0);
                }
            }
        }
        for c in 0..cells {
            let series: Vec<f64> = values.iter().map(|v| v[c]).collect();
            for &v in &series {
                sup_observed[c] = sup_observed[c].max(v);
            }
            if series.iter().any(|&v| v > DIVERGENCE_THRESHOLD) {
                let witness = MarginalDominationWitness { component: i, other: j, magnitudes: magnitudes.clone(), values: series };
                return Ok(ConditionalDomination { component: i, refuted: Some((c, witness)), sup_observed });
            }
        }
    }
    Ok(ConditionalDomination { component: i, refuted: None, sup_observed })
}

/// Fatou spot check: `r_i(X) <= liminf r_i(X^n)` along three bounded
/// sequences converging outcome by outcome (from above, from below and
/// alternating). The liminf is read at `n = 1e12`.
pub fn fatou_probe(r: &ConditionalVectorRisk, trials: usize, seed: u64) -> Result<AuditRecord> {
    if trials == 0 {
        return Err(RiskError::InvalidParameter("trials must be >= 1".into()));
    }
    let n = r.partition.outcomes();
    let dim = r.dim();
    const TAIL: f64 = 1e12;
    Ok(run_trials("Fatou property", "Sec 4.2 / Fatou property", trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sampling::space_with(&mut rng, n);
        let x = sampling::random_vector(&mut rng, space.clone(), dim);
        let z = sampling::random_vector(&mut rng, space, dim);
        let sequences: [(&str, f64); 3] = [("above", 1.0), ("below", -1.0), ("alternating", -1.0)];
        let base = match eval_conditional(r, &x) {
            Ok(v) => v,
            Err(e) => return failed(t, e),
        };
        let mut worst = TrialOutcome::ok(0.0);
        for (label, sign) in sequences {
            let xn = x.zip_map(&z, |a, b| a + sign * b.abs() / TAIL).expect("same space");
            let value = match eval_conditional(r, &xn) {
                Ok(v) => v,
                Err(e) => return failed(t, e),
            };
            let v = leq_violation(base.table().values(), value.table().values());
            if !(v <= worst.residual) {
                let witness = violates(v, CLOSED_FORM_TOL)
                    .then(|| Witness::new(t, format!("liminf along the {label} sequence is below r(X)")).with("X", x.table().values()));
                worst = TrialOutcome { residual: v, witness };
            }
        }
        worst
    }))
}

/// Partitions `P_0, ..., P_T` with `P_0` trivial, `P_T` discrete and each
/// refining the previous one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiltrationSequence {
    partitions: Vec<Partition>,
}

impl FiltrationSequence {
    pub fn new(partitions: Vec<Partition>) -> Result<Self> {
        let (first, last) = match (partitions.first(), partitions.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(RiskError::InvalidPartition("filtration needs at least one stage".into())),
        };
        if first.cells().len() != 1 {
            return Err(RiskError::InvalidPartition("first stage must be trivial".into()));
        }
        if last.cells().len() != last.outcomes() {
            return Err(RiskError::InvalidPartition("last stage must be discrete".into()));
        }
        for (s, w) in partitions.windows(2).enumerate() {
            if !w[1].refines(&w[0]) {
                return Err(RiskError::InvalidPartition(format!("stage {} does not refine stage {s}", s + 1)));
            }
        }
        Ok(Self { partitions })
    }

    /// Uniform binary tree of the given depth: stage `t` splits outcomes by
    /// their first `t` bits.
    pub fn binary_tree(depth: usize) -> Self {
        let n = 1usize << depth;
        let partitions = (0..=depth)
            .map(|t| {
                let width = n >> t;
                Partition::new((0..(1usize << t)).map(|c| (c * width..(c + 1) * width).collect()).collect(), n)
                    .expect("valid tree")
            })
            .collect();
        Self { partitions }
    }

    pub fn stages(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn stage(&self, t: usize) -> Result<&Partition> {
        self.partitions.get(t).ok_or(RiskError::StageOutOfRange { index: t, stages: self.partitions.len() })
    }
}

/// The conditional entropic functional at every stage of a filtration.
pub fn entropic_family(filtration: &FiltrationSequence, betas: &[f64]) -> Result<Vec<ConditionalVectorRisk>> {
    filtration.partitions().iter().map(|p| ConditionalVectorRisk::entropic(betas, p.clone())).collect()
}

/// `max |r^s(X) - r^s(-r^t(X))|` over all entries.
pub fn time_consistency_check(family: &[ConditionalVectorRisk], x: &RandomVector, s: usize, t: usize) -> Result<f64> {
    let stages = family.len();
    for idx in [s, t] {
        if idx >= stages {
            return Err(RiskError::StageOutOfRange { index: idx, stages });
        }
    }
    if s > t {
        return Err(RiskError::Precondition(format!("need s <= t, got s = {s}, t = {t}")));
    }
    let direct = eval_conditional(&family[s], x)?;
    let inner = eval_conditional(&family[t], x)?.scale(-1.0);
    let nested = eval_conditional(&family[s], &inner)?;
    Ok(eq_violation(direct.table().values(), nested.table().values()))
}
