//! Fenchel conjugates of scalar components on finite spaces and the dual
//! structure behind the separability theorem.
//!
//! Pairing is probability weighted: `<U, X> = sum_w p(w) U(w)^T X(w)`.
//! A dual `U` is feasible for component `i` when `U <= 0`, `E[U_j] = 0` for
//! every `j != i`, and `E[U_i]` lies in the domain of the dominator's
//! conjugate. On a space without null outcomes, the middle condition forces
//! `U_j = 0` outcome by outcome, which is what makes `r_i` blind to `X_j`.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{run_trials, violates, AuditRecord, TrialOutcome, Witness};
use crate::error::{Result, RiskError};
use crate::extended::{ConjugateValue, DivergenceCertificate, DIVERGENCE_THRESHOLD};
use crate::prob::{FiniteProbabilitySpace, RandomVector, Table};
use crate::sampling;
use crate::scalar::{ScalarRisk, CLOSED_FORM_TOL};

/// Tolerance of the feasibility flags.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Element of the dual of bounded random vectors: an `outcomes x N` table.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    space: Arc<FiniteProbabilitySpace>,
    table: Table,
}

impl DualVector {
    pub fn new(space: Arc<FiniteProbabilitySpace>, table: Table) -> Result<Self> {
        if table.rows() != space.outcomes() {
            return Err(RiskError::DimensionMismatch { expected: space.outcomes(), got: table.rows() });
        }
        if let Some(v) = table.values().iter().find(|v| !v.is_finite()) {
            return Err(RiskError::InvalidParameter(format!("non-finite dual entry {v}")));
        }
        Ok(Self { space, table })
    }

    pub fn from_columns(space: Arc<FiniteProbabilitySpace>, columns: &[Vec<f64>]) -> Result<Self> {
        let x = RandomVector::from_columns(space, columns)?;
        Self::new(x.space().clone(), x.table().clone())
    }

    pub fn zeros(space: Arc<FiniteProbabilitySpace>, dim: usize) -> Self {
        let n = space.outcomes();
        Self { space, table: Table::zeros(n, dim) }
    }

    /// `U` with column `i` set to `column` and all others zero.
    pub fn single(space: Arc<FiniteProbabilitySpace>, dim: usize, i: usize, column: &[f64]) -> Result<Self> {
        let cols: Vec<Vec<f64>> =
            (0..dim).map(|j| if j == i { column.to_vec() } else { vec![0.0; space.outcomes()] }).collect();
        Self::from_columns(space, &cols)
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.table.column(j)
    }

    /// `E[U_j]`.
    pub fn expectation(&self, j: usize) -> f64 {
        self.space.expectation(&self.column(j))
    }

    /// `E[U^T X]`.
    pub fn pairing(&self, x: &RandomVector) -> Result<f64> {
        if x.dim() != self.dim() || x.outcomes() != self.table.rows() {
            return Err(RiskError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        let mut total = 0.0;
        for k in 0..x.outcomes() {
            let inner: f64 = (0..self.dim()).map(|j| self.table.get(k, j) * x.get(k, j)).sum();
            total += self.space.prob(k) * inner;
        }
        Ok(total)
    }
}

/// Description of `dom f_i^*`, supplied by the caller since the dominator
/// is only known to exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainInterval {
    Point { at: f64 },
    Interval { lo: f64, hi: f64 },
    Real,
}

impl DomainInterval {
    /// Domain of `(c - t)^*`: the cash-additive case, `{-1}`.
    pub const CASH_ADDITIVE: DomainInterval = DomainInterval::Point { at: -1.0 };

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        match *self {
            Self::Point { at } => (v - at).abs() <= tol,
            Self::Interval { lo, hi } => v >= lo - tol && v <= hi + tol,
            Self::Real => v.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualFeasibility {
    pub component: usize,
    pub nonpositive: bool,
    pub off_expectations_zero: bool,
    pub marginal_conjugate_domain: bool,
}

impl DualFeasibility {
    pub fn feasible(&self) -> bool {
        self.nonpositive && self.off_expectations_zero && self.marginal_conjugate_domain
    }
}

pub fn dual_feasibility(u: &DualVector, i: usize, dom: DomainInterval) -> Result<DualFeasibility> {
    if i >= u.dim() {
        return Err(RiskError::DimensionMismatch { expected: u.dim(), got: i + 1 });
    }
    let nonpositive = u.table.values().iter().all(|&v| v <= 0.0);
    let off_expectations_zero =
        (0..u.dim()).filter(|&j| j != i).all(|j| u.expectation(j).abs() <= FEASIBILITY_TOL);
    let marginal_conjugate_domain = dom.contains(u.expectation(i), FEASIBILITY_TOL);
    Ok(DualFeasibility { component: i, nonpositive, off_expectations_zero, marginal_conjugate_domain })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffDiagonalCheck {
    pub holds: bool,
    /// `tol / min_w p(w)`.
    pub bound: f64,
    pub max_abs: f64,
    /// `(component, outcome, value)` of the largest offending entry.
    pub witness: Option<(usize, usize, f64)>,
}

/// For `U_j <= 0` with `|E[U_j]| <= tol`, every entry satisfies
/// `|U_j(w)| <= tol / min p`; checks that bound on all `j != i`.
pub fn offdiagonal_zero_check(u: &DualVector, i: usize, tol: f64) -> Result<OffDiagonalCheck> {
    if i >= u.dim() {
        return Err(RiskError::DimensionMismatch { expected: u.dim(), got: i + 1 });
    }
    let bound = tol / u.space.min_prob();
    let mut max_abs: f64 = 0.0;
    let mut witness = None;
    for j in (0..u.dim()).filter(|&j| j != i) {
        let col = u.column(j);
        if let Some(k) = col.iter().position(|&v| v > 0.0) {
            return Err(RiskError::Precondition(format!("U_{j} has positive entry {} at outcome {k}", col[k])));
        }
        let e = u.expectation(j);
        if e.abs() > tol {
            return Err(RiskError::Precondition(format!("|E[U_{j}]| = {} exceeds {tol}", e.abs())));
        }
        for (k, &v) in col.iter().enumerate() {
            if v.abs() > max_abs {
                max_abs = v.abs();
                if v.abs() > bound * (1.0 + 1e-12) {
                    witness = Some((j, k, v));
                }
            }
        }
    }
    Ok(OffDiagonalCheck { holds: witness.is_none(), bound, max_abs, witness })
}

/// Esscher tilt attaining the entropic dual: `-exp(-beta X) / E[exp(-beta X)]`.
pub fn entropic_dual_oracle(beta: f64, space: &FiniteProbabilitySpace, x: &[f64]) -> Result<Vec<f64>> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(RiskError::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    let top = x.iter().map(|v| -beta * v).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = x.iter().map(|v| (-beta * v - top).exp()).collect();
    let norm = space.expectation(&weights);
    Ok(weights.iter().map(|w| -w / norm).collect())
}

/// Conjugate of the entropic component at `U_i e_i` with `E[U_i] = -1`:
/// `(1/beta) E[(-U_i) log(-U_i)]`, with `0 log 0 = 0`.
pub fn relative_entropy_penalty(beta: f64, space: &FiniteProbabilitySpace, u: &[f64]) -> f64 {
    let terms: Vec<f64> = u.iter().map(|&v| if v == 0.0 { 0.0 } else { -v * (-v).ln() }).collect();
    space.expectation(&terms) / beta
}

/// A dual element together with the value of `r_i^*` at it.
#[derive(Debug, Clone)]
pub struct DualCandidate {
    pub u: DualVector,
    pub conjugate: f64,
}

impl DualCandidate {
    /// The Esscher maximizer for an entropic component `i`.
    pub fn entropic_oracle(beta: f64, i: usize, x: &RandomVector) -> Result<Self> {
        let col = entropic_dual_oracle(beta, x.space(), &x.column(i))?;
        let conjugate = relative_entropy_penalty(beta, x.space(), &col);
        Ok(Self { u: DualVector::single(x.space().clone(), x.dim(), i, &col)?, conjugate })
    }

    /// `U_i = -q` for a probability density `q` (E[q] = 1, q >= 0), with
    /// the entropic conjugate.
    pub fn entropic_density(beta: f64, i: usize, dim: usize, space: Arc<FiniteProbabilitySpace>, q: &[f64]) -> Result<Self> {
        let col: Vec<f64> = q.iter().map(|v| -v).collect();
        let conjugate = relative_entropy_penalty(beta, &space, &col);
        Ok(Self { u: DualVector::single(space, dim, i, &col)?, conjugate })
    }
}

/// `r_i(X) - max_U (<U, X> - r_i^*(U))` over a family of feasible duals.
/// Nonnegative by weak duality; zero when the family holds a maximizer.
pub fn biconjugate_residual(
    ri: &dyn Fn(&RandomVector) -> f64,
    i: usize,
    x: &RandomVector,
    family: &[DualCandidate],
    dom: DomainInterval,
) -> Result<f64> {
    if family.is_empty() {
        return Err(RiskError::InvalidParameter("empty dual family".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for (k, cand) in family.iter().enumerate() {
        let flags = dual_feasibility(&cand.u, i, dom)?;
        if !flags.feasible() {
            return Err(RiskError::InfeasibleDual(format!("family member {k}: {flags:?}")));
        }
        best = best.max(cand.u.pairing(x)? - cand.conjugate);
    }
    Ok(ri(x) - best)
}

/// Any positive entry makes `r_i^*(U) = +inf` for monotone `r_i`: the
/// conjugate dominates the support function of the positive cone.
pub fn positive_entry_certificate(u: &DualVector) -> Option<DivergenceCertificate> {
    if u.table.values().iter().any(|&v| v > 0.0) {
        let direction = u.table.values().iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
        Some(DivergenceCertificate {
            direction,
            probes: Vec::new(),
            reason: "U has a positive entry; X = t 1_{U > 0} gives <U, X> - r_i(X) >= t E[U^+] - r_i(0)".into(),
        })
    } else {
        None
    }
}

/// Brute-force grid for the conjugate sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    /// Initial half-width `B` of the box `[-B, B]^(outcomes x N)`.
    pub bound: f64,
    /// Points per axis (odd values include the origin).
    pub resolution: usize,
    /// Largest allowed number of grid points per sweep.
    pub budget: u128,
    pub max_doublings: usize,
    /// Local zoom sweeps around the best point once the box is settled.
    pub zoom_rounds: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { bound: 1.0, resolution: 5, budget: 2_000_000, max_doublings: 40, zoom_rounds: 0 }
    }
}

/// `sup_X (<U, X> - r_i(X))` over grids of growing boxes.
///
/// The box is doubled while the running max keeps increasing; three
/// consecutive increases ending above [`DIVERGENCE_THRESHOLD`] certify
/// `+inf` along the maximizing grid point.
pub fn conjugate_bruteforce(
    ri: &(dyn Fn(&RandomVector) -> f64 + Sync),
    u: &DualVector,
    grid: &GridConfig,
) -> Result<ConjugateValue> {
    if !(grid.bound > 0.0) || grid.resolution < 2 {
        return Err(RiskError::InvalidParameter("grid needs bound > 0 and resolution >= 2".into()));
    }
    let d = u.table.rows() * u.dim();
    let needed = (grid.resolution as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if needed > grid.budget {
        return Err(RiskError::BudgetExceeded { needed, budget: grid.budget });
    }
    let (n, dim) = (u.table.rows(), u.dim());
    let objective = |point: &[f64]| -> f64 {
        let x = RandomVector::new(u.space.clone(), Table::new(n, dim, point.to_vec()).expect("shape"))
            .expect("finite");
        let v = u.pairing(&x).expect("shape") - ri(&x);
        if v.is_nan() { f64::NEG_INFINITY } else { v }
    };
    let sweep = |centre: &[f64], half: f64| -> (f64, Vec<f64>) {
        let res = grid.resolution;
        let coord = |digit: usize| -half + 2.0 * half * digit as f64 / (res - 1) as f64;
        let point_of = |mut idx: u128| -> Vec<f64> {
            let mut p = centre.to_vec();
            for c in p.iter_mut() {
                *c += coord((idx % res as u128) as usize);
                idx /= res as u128;
            }
            p
        };
        let (value, idx) = (0..needed as u64)
            .into_par_iter()
            .map(|idx| (objective(&point_of(idx as u128)), idx))
            .reduce(
                || (f64::NEG_INFINITY, u64::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        (value, point_of(idx as u128))
    };

    let origin = vec![0.0; d];
    let mut half = grid.bound;
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let mut best = (f64::NEG_INFINITY, origin.clone(), half);
    let increasing = |w: &[(f64, f64)]| w.windows(2).all(|p| p[1].1 > p[0].1 + 1e-9 * p[0].1.abs().max(1.0));
    for doubling in 0..=grid.max_doublings {
        let (value, point) = sweep(&origin, half);
        probes.push((half, value));
        if value > best.0 {
            best = (value, point.clone(), half);
        }
        if probes.len() >= 3 {
            let tail = &probes[probes.len() - 3..];
            if increasing(tail) {
                if value > DIVERGENCE_THRESHOLD {
                    let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    return Ok(ConjugateValue::infinite(
                        point.iter().map(|v| v / norm).collect(),
                        probes,
                        "running max grew across box doublings past the divergence threshold",
                    ));
                }
            } else {
                break;
            }
        }
        if doubling < grid.max_doublings {
            half *= 2.0;
        }
    }

    let (mut value, mut centre, box_half) = best;
    let mut cell = 2.0 * box_half / (grid.resolution - 1) as f64;
    for _ in 0..grid.zoom_rounds {
        let (v, p) = sweep(&centre, cell);
        if v > value {
            value = v;
            centre = p;
        }
        cell *= 2.0 / (grid.resolution - 1) as f64;
    }
    Ok(ConjugateValue::finite(value))
}

/// At most this many trials of the positive-entry suite also run the
/// brute-force conjugate, which costs one grid sweep per box doubling.
pub const BRUTEFORCE_CROSSCHECKS: usize = 10;

fn scaled_to_mean(space: &FiniteProbabilitySpace, v: &[f64], mean: f64) -> Vec<f64> {
    let e = space.expectation(v);
    v.iter().map(|a| a * mean / e).collect()
}

/// Dual-side checks for a separable functional, on random spaces of up to
/// six outcomes:
/// - duals accepted as feasible for component `i` carry columns `j != i`
///   of sup-norm at most the tolerance;
/// - the Esscher dual attains `r_i(X)` for entropic components;
/// - a dual with a positive entry is certified `+inf`, cross-checked by the
///   brute-force sup on two-outcome spaces.
pub fn audit_dual_structure(components: &[ScalarRisk], trials: usize, seed: u64) -> Result<Vec<AuditRecord>> {
    if trials == 0 || components.is_empty() {
        return Err(RiskError::InvalidParameter("need trials >= 1 and at least one component".into()));
    }
    let dim = components.len();
    let tol = CLOSED_FORM_TOL;
    let mut records = Vec::new();

    records.push(run_trials("off-diagonal duals vanish", "Thm 3.1 proof / feasible duals vanish off the diagonal", trials, |t| {
        let mut rng = sampling::trial_rng(seed, t as u64);
        let space = sampling::space(&mut rng);
        let i = rng.random_range(0..dim);
        let q: Vec<f64> = (0..space.outcomes()).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut cols = vec![scaled_to_mean(&space, &q, -1.0)];
        let mut worst = TrialOutcome::ok(0.0);
        for _ in 1..dim {
            // nonpositive with |E| below the feasibility tolerance
            let v: Vec<f64> = (0..space.outcomes()).map(|_| rng.random_range(0.0..1.0)).collect();
            let delta = rng.random_range(0.0..FEASIBILITY_TOL);
            cols.push(scaled_to_mean(&space, &v, -delta));
        }
        cols.swap(0, i);
        let u = DualVector::from_columns(space.clone(), &cols).expect("shape");
        match (dual_feasibility(&u, i, DomainInterval::CASH_ADDITIVE), offdiagonal_zero_check(&u, i, FEASIBILITY_TOL)) {
            (Ok(flags), Ok(check)) => {
                if !flags.feasible() || !check.holds || violates(check.max_abs, tol) {
                    worst = TrialOutcome {
                        residual: check.max_abs,
                        witness: Some(
                            Witness::new(t, format!("feasible dual for component {i} has large off-diagonal entries"))
                                .with("U", u.table().values())
                                .with_scalar("component", i as f64),
                        ),
                    };
                } else {
                    worst.residual = check.max_abs;
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                worst = TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, format!("check failed: {e}"))) }
            }
        }
        // a sign-changing off-diagonal column must be rejected
        if dim > 1 {
            let j = (i + 1) % dim;
            let mut bad = cols.clone();
            bad[j] = (0..space.outcomes()).map(|k| if k % 2 == 0 { -0.5 } else { 0.5 }).collect();
            let u = DualVector::from_columns(space, &bad).expect("shape");
            if dual_feasibility(&u, i, DomainInterval::CASH_ADDITIVE).map(|f| f.feasible()).unwrap_or(true) {
                worst = TrialOutcome {
                    residual: 0.5,
                    witness: Some(Witness::new(t, "sign-changing dual accepted as feasible").with("U", u.table().values())),
                };
            }
        }
        worst
    }));

    let entropic: Vec<(usize, f64)> = components
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            ScalarRisk::Entropic { beta } => Some((i, *beta)),
            _ => None,
        })
        .collect();
    let biconj_name = "Esscher dual attains the biconjugate";
    let biconj_anchor = "Thm 3.1 proof / dual representation of r_i";
    if entropic.is_empty() {
        records.push(AuditRecord::pass(biconj_name, biconj_anchor, 0, 0.0).informational());
    } else {
        records.push(run_trials(biconj_name, biconj_anchor, trials, |t| {
            let mut rng = sampling::trial_rng(seed.wrapping_add(1), t as u64);
            let space = sampling::space(&mut rng);
            let x = sampling::random_vector(&mut rng, space.clone(), dim);
            let (i, beta) = entropic[rng.random_range(0..entropic.len())];
            let rho = components[i];
            let ri = |z: &RandomVector| rho.eval(z.space(), &z.column(i));
            // the oracle plus a few other densities
            let mut family = match DualCandidate::entropic_oracle(beta, i, &x) {
                Ok(c) => vec![c],
                Err(e) => return TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, e.to_string())) },
            };
            for _ in 0..3 {
                let q: Vec<f64> = (0..space.outcomes()).map(|_| rng.random_range(0.1..1.0)).collect();
                let q = scaled_to_mean(&space, &q, 1.0);
                family.push(DualCandidate::entropic_density(beta, i, dim, space.clone(), &q).expect("shape"));
            }
            match biconjugate_residual(&ri, i, &x, &family, DomainInterval::CASH_ADDITIVE) {
                Ok(r) if violates(r.abs(), tol) => TrialOutcome {
                    residual: r.abs(),
                    witness: Some(
                        Witness::new(t, format!("biconjugate gap for component {i}"))
                            .with("X", x.table().values())
                            .with_scalar("gap", r),
                    ),
                },
                Ok(r) => TrialOutcome::ok(r.abs()),
                Err(e) => TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, e.to_string())) },
            }
        }));
    }

    records.push(run_trials("positive entry gives +inf conjugate", "Thm 3.1 proof / support function of the cone", trials, |t| {
        let mut rng = sampling::trial_rng(seed.wrapping_add(2), t as u64);
        let crosscheck = t < BRUTEFORCE_CROSSCHECKS;
        let space = if crosscheck { sampling::space_with(&mut rng, 2) } else { sampling::space(&mut rng) };
        let i = rng.random_range(0..dim);
        let mut table = Table::zeros(space.outcomes(), dim);
        for k in 0..space.outcomes() {
            table.set(k, i, -rng.random_range(0.1..1.0));
        }
        let (k, j) = (rng.random_range(0..space.outcomes()), rng.random_range(0..dim));
        table.set(k, j, rng.random_range(0.1..1.0));
        let u = DualVector::new(space, table).expect("finite");
        if positive_entry_certificate(&u).is_none() {
            return TrialOutcome { residual: 1.0, witness: Some(Witness::new(t, "no certificate for a positive entry").with("U", u.table().values())) };
        }
        if crosscheck && dim <= 2 {
            let rho = components[i];
            let ri = move |z: &RandomVector| rho.eval(z.space(), &z.column(i));
            match conjugate_bruteforce(&ri, &u, &GridConfig::default()) {
                Ok(v) if v.is_finite() => {
                    return TrialOutcome {
                        residual: 1.0,
                        witness: Some(Witness::new(t, "brute-force sup stayed finite").with("U", u.table().values())),
                    }
                }
                Ok(_) => {}
                Err(e) => return TrialOutcome { residual: f64::NAN, witness: Some(Witness::new(t, e.to_string())) },
            }
        }
        TrialOutcome::ok(0.0)
    }));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Arc<FiniteProbabilitySpace> {
        FiniteProbabilitySpace::uniform(n).unwrap().shared()
    }

    #[test]
    fn oracle_examples() {
        let s = uniform(2);
        assert_eq!(entropic_dual_oracle(1.0, &s, &[0.0, 0.0]).unwrap(), vec![-1.0, -1.0]);
        let e = std::f64::consts::E;
        let u = entropic_dual_oracle(1.0, &s, &[0.0, -1.0]).unwrap();
        assert!((u[0] + 2.0 / (1.0 + e)).abs() < 1e-12);
        assert!((u[1] + 2.0 * e / (1.0 + e)).abs() < 1e-12);
        assert!((s.expectation(&u) + 1.0).abs() < 1e-15);
        // attainment: <U, X> - penalty = entropic value
        let x = [0.0, -1.0];
        let attained = s.expectation(&[u[0] * x[0], u[1] * x[1]]) - relative_entropy_penalty(1.0, &s, &u);
        assert!((attained - ((1.0 + e) / 2.0).ln()).abs() < 1e-12);
        assert!(entropic_dual_oracle(0.0, &s, &x).is_err());
    }

    #[test]
    fn feasibility_flags() {
        let s = uniform(2);
        let zero = DualVector::zeros(s.clone(), 2);
        let f = dual_feasibility(&zero, 0, DomainInterval::CASH_ADDITIVE).unwrap();
        assert!(f.nonpositive && f.off_expectations_zero && !f.marginal_conjugate_domain);
        let f = dual_feasibility(&zero, 0, DomainInterval::Real).unwrap();
        assert!(f.feasible());

        let density = DualVector::single(s.clone(), 2, 0, &[-0.4, -1.6]).unwrap();
        assert!(dual_feasibility(&density, 0, DomainInterval::CASH_ADDITIVE).unwrap().feasible());

        let signs = DualVector::from_columns(s, &[vec![-1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let f = dual_feasibility(&signs, 0, DomainInterval::CASH_ADDITIVE).unwrap();
        assert!(!f.nonpositive);
        assert!(f.off_expectations_zero);
    }

    #[test]
    fn offdiagonal_examples() {
        let s = FiniteProbabilitySpace::new(vec![0.2, 0.3, 0.5]).unwrap().shared();
        let u = DualVector::single(s.clone(), 2, 0, &[-1.0, -1.0, -1.0]).unwrap();
        assert!(offdiagonal_zero_check(&u, 0, 1e-12).unwrap().holds);

        let eps = 1e-3;
        let sign = DualVector::from_columns(
            s.clone(),
            &[vec![-1.0; 3], vec![-eps, eps * 0.2 / 0.3, 0.0]],
        )
        .unwrap();
        assert!(matches!(offdiagonal_zero_check(&sign, 0, 1e-9), Err(RiskError::Precondition(_))));

        let tiny = DualVector::from_columns(s, &[vec![-1.0; 3], vec![-1e-13, -3e-13, 0.0]]).unwrap();
        let check = offdiagonal_zero_check(&tiny, 0, 1e-12).unwrap();
        assert!(check.holds);
        assert!(check.max_abs <= check.bound);
    }

    #[test]
    fn residuals() {
        let s = uniform(2);
        let x = RandomVector::from_columns(s.clone(), &[vec![0.0, -1.0]]).unwrap();
        let rho = ScalarRisk::entropic(1.0).unwrap();
        let ri = |x: &RandomVector| rho.eval(x.space(), &x.column(0));
        let oracle = DualCandidate::entropic_oracle(1.0, 0, &x).unwrap();
        let res = biconjugate_residual(&ri, 0, &x, &[oracle], DomainInterval::CASH_ADDITIVE).unwrap();
        assert!(res.abs() <= 1e-12);

        let lin = |x: &RandomVector| -x.space().expectation(&x.column(0));
        let slope = DualCandidate { u: DualVector::single(s.clone(), 1, 0, &[-1.0, -1.0]).unwrap(), conjugate: 0.0 };
        assert_eq!(biconjugate_residual(&lin, 0, &x, &[slope], DomainInterval::CASH_ADDITIVE).unwrap(), 0.0);

        // a bounded-below functional with r^*(0) = -inf r = 0
        let sq = |x: &RandomVector| rho.eval(x.space(), &x.column(0)).powi(2);
        let zero = DualCandidate { u: DualVector::zeros(s.clone(), 1), conjugate: 0.0 };
        let res = biconjugate_residual(&sq, 0, &x, std::slice::from_ref(&zero), DomainInterval::Real).unwrap();
        assert!((res - sq(&x)).abs() < 1e-15 && res >= 0.0);
        assert!(matches!(
            biconjugate_residual(&sq, 0, &x, &[zero], DomainInterval::CASH_ADDITIVE),
            Err(RiskError::InfeasibleDual(_))
        ));
    }

    #[test]
    fn linear_conjugate_at_its_slope() {
        let s = uniform(2);
        let lin = |x: &RandomVector| -x.space().expectation(&x.column(0));
        let u = DualVector::from_columns(s, &[vec![-1.0, -1.0], vec![0.0, 0.0]]).unwrap();
        let v = conjugate_bruteforce(&lin, &u, &GridConfig::default()).unwrap();
        assert!(v.value().unwrap().abs() < 1e-12);
    }

    #[test]
    fn positive_entry_diverges() {
        let s = uniform(2);
        let rho = ScalarRisk::entropic(1.0).unwrap();
        let ri = |x: &RandomVector| rho.eval(x.space(), &x.column(0));
        let u = DualVector::from_columns(s, &[vec![-1.5, 0.5], vec![0.0, 0.0]]).unwrap();
        assert!(positive_entry_certificate(&u).is_some());
        let grid = GridConfig { resolution: 3, ..GridConfig::default() };
        let v = conjugate_bruteforce(&ri, &u, &grid).unwrap();
        let cert = v.certificate().expect("infinite");
        assert!(cert.probes.last().unwrap().1 > DIVERGENCE_THRESHOLD);
    }

    #[test]
    fn entropic_conjugate_matches_relative_entropy() {
        let s = uniform(2);
        let rho = ScalarRisk::entropic(1.0).unwrap();
        let ri = |x: &RandomVector| rho.eval(x.space(), &x.column(0));
        let col = entropic_dual_oracle(1.0, &s, &[0.0, -1.0]).unwrap();
        let u = DualVector::single(s.clone(), 1, 0, &col).unwrap();
        let grid = GridConfig { bound: 2.0, resolution: 41, zoom_rounds: 12, ..GridConfig::default() };
        let v = conjugate_bruteforce(&ri, &u, &grid).unwrap().value().expect("finite");
        let exact = relative_entropy_penalty(1.0, &s, &col);
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn budget_is_enforced() {
        let s = uniform(6);
        let u = DualVector::zeros(s, 3);
        let lin = |x: &RandomVector| -x.mean()[0];
        let grid = GridConfig { resolution: 5, ..GridConfig::default() };
        assert!(matches!(conjugate_bruteforce(&lin, &u, &grid), Err(RiskError::BudgetExceeded { .. })));
    }

    #[test]
    fn dual_structure_suite() {
        let ent = [ScalarRisk::entropic(1.0).unwrap(), ScalarRisk::entropic(2.0).unwrap()];
        let recs = audit_dual_structure(&ent, 40, 3).unwrap();
        assert_eq!(recs.len(), 3);
        for r in &recs {
            assert!(r.passed(), "{r:?}");
        }
        assert!(recs[0].max_residual <= 1e-9);
        let wc = audit_dual_structure(&[ScalarRisk::WorstCase, ScalarRisk::NegExpectation], 20, 0).unwrap();
        assert_eq!(wc[1].verdict, crate::audit::Verdict::Info);
        assert!(wc[0].passed() && wc[2].passed());
    }

}
