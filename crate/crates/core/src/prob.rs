//! Finite probability spaces, random vectors and partitions.
//!
//! Every outcome carries strictly positive mass, so "almost surely" is the
//! same as "for every outcome" and all a.s. statements become entry-wise
//! comparisons.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, RiskError};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Value tolerance used when comparing marginal laws.
pub const LAW_TOLERANCE: f64 = 1e-12;

/// A finite set of outcomes with strictly positive probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteProbabilitySpace {
    probabilities: Vec<f64>,
}

impl FiniteProbabilitySpace {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(RiskError::InvalidSpace("no outcomes".into()));
        }
        for (k, &p) in probabilities.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(RiskError::InvalidSpace(format!(
                    "outcome {k} has non-positive mass {p}"
                )));
            }
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(RiskError::InvalidSpace(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probabilities })
    }

    /// Equally likely outcomes.
    pub fn uniform(outcomes: usize) -> Result<Self> {
        if outcomes == 0 {
            return Err(RiskError::InvalidSpace("no outcomes".into()));
        }
        Self::new(vec![1.0 / outcomes as f64; outcomes])
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn outcomes(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probabilities[outcome]
    }

    pub fn min_prob(&self) -> f64 {
        self.probabilities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `E[x]` for a single column of values.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.outcomes());
        self.probabilities.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// The space conditioned on a set of outcomes (renormalized masses).
    pub fn restrict(&self, outcomes: &[usize]) -> Result<Self> {
        let mass: f64 = outcomes.iter().map(|&k| self.probabilities[k]).sum();
        let probs = outcomes.iter().map(|&k| self.probabilities[k] / mass).collect::<Vec<_>>();
        // renormalization can leave a rounding residue; fold it into the largest atom
        let total: f64 = probs.iter().sum();
        let mut probs = probs;
        if let Some(max_k) = (0..probs.len()).max_by(|&a, &b| probs[a].total_cmp(&probs[b])) {
            probs[max_k] += 1.0 - total;
        }
        Self::new(probs)
    }
}

/// Row-major `outcomes x dim` table of reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Table {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(RiskError::DimensionMismatch { expected: rows * cols, got: values.len() });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(RiskError::DimensionMismatch { expected: cols, got: row.len() });
            }
            values.extend_from_slice(row);
        }
        Ok(Self { rows: rows.len(), cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

/// An `N`-dimensional bounded random vector on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVector {
    space: Arc<FiniteProbabilitySpace>,
    table: Table,
}

impl RandomVector {
    pub fn new(space: Arc<FiniteProbabilitySpace>, table: Table) -> Result<Self> {
        if table.rows() != space.outcomes() {
            return Err(RiskError::DimensionMismatch {
                expected: space.outcomes(),
                got: table.rows(),
            });
        }
        if table.cols() == 0 {
            return Err(RiskError::InvalidParameter("random vector of dimension 0".into()));
        }
        if let Some(v) = table.values().iter().find(|v| !v.is_finite()) {
            return Err(RiskError::InvalidParameter(format!("non-finite entry {v}")));
        }
        Ok(Self { space, table })
    }

    pub fn from_rows(space: Arc<FiniteProbabilitySpace>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(space, Table::from_rows(rows)?)
    }

    /// Builds a vector from its columns (one per component).
    pub fn from_columns(space: Arc<FiniteProbabilitySpace>, columns: &[Vec<f64>]) -> Result<Self> {
        let n = space.outcomes();
        let dim = columns.len();
        let mut table = Table::zeros(n, dim);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(RiskError::DimensionMismatch { expected: n, got: col.len() });
            }
            for (k, &v) in col.iter().enumerate() {
                table.set(k, j, v);
            }
        }
        Self::new(space, table)
    }

    /// The deterministic vector `m` on the given space.
    pub fn constant(space: Arc<FiniteProbabilitySpace>, m: &[f64]) -> Result<Self> {
        let rows = vec![m.to_vec(); space.outcomes()];
        Self::from_rows(space, &rows)
    }

    pub fn zeros(space: Arc<FiniteProbabilitySpace>, dim: usize) -> Self {
        let n = space.outcomes();
        Self { space, table: Table::zeros(n, dim) }
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn outcomes(&self) -> usize {
        self.table.rows()
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn get(&self, outcome: usize, component: usize) -> f64 {
        self.table.get(outcome, component)
    }

    pub fn column(&self, component: usize) -> Vec<f64> {
        self.table.column(component)
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|j| self.column(j)).collect()
    }

    /// Componentwise expectation `E[X]`.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.space.expectation(&self.column(j))).collect()
    }

    pub fn is_constant(&self) -> bool {
        (1..self.outcomes()).all(|k| self.table.row(k) == self.table.row(0))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(RiskError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        if !Arc::ptr_eq(&self.space, &other.space) && *self.space != *other.space {
            return Err(RiskError::SpaceMismatch);
        }
        Ok(())
    }

    /// Entry-wise map.
    pub fn map(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let mut table = self.table.clone();
        for k in 0..self.outcomes() {
            for j in 0..self.dim() {
                table.set(k, j, f(k, j, self.get(k, j)));
            }
        }
        Self { space: self.space.clone(), table }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map(|k, j, v| f(v, other.get(k, j))))
    }

    /// `X + m` for a deterministic shift.
    pub fn shift(&self, m: &[f64]) -> Result<Self> {
        if m.len() != self.dim() {
            return Err(RiskError::DimensionMismatch { expected: self.dim(), got: m.len() });
        }
        Ok(self.map(|_, j, v| v + m[j]))
    }

    pub fn scale(&self, lambda: f64) -> Self {
        self.map(|_, _, v| lambda * v)
    }

    /// `lambda X + (1 - lambda) Y`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        self.zip_map(other, |a, b| lambda * a + (1.0 - lambda) * b)
    }

    /// `1_A X + 1_{A^c} Y` for an event given as a membership mask.
    pub fn paste(&self, other: &Self, event: &[bool]) -> Result<Self> {
        self.check_compatible(other)?;
        if event.len() != self.outcomes() {
            return Err(RiskError::DimensionMismatch { expected: self.outcomes(), got: event.len() });
        }
        Ok(self.map(|k, j, v| if event[k] { v } else { other.get(k, j) }))
    }

    /// Replaces one column.
    pub fn with_column(&self, component: usize, values: &[f64]) -> Result<Self> {
        if values.len() != self.outcomes() {
            return Err(RiskError::DimensionMismatch { expected: self.outcomes(), got: values.len() });
        }
        Ok(self.map(|k, j, v| if j == component { values[k] } else { v }))
    }
}

/// Outcome-wise componentwise order `X <= Y`.
pub fn as_leq(x: &RandomVector, y: &RandomVector) -> Result<bool> {
    x.check_compatible(y)?;
    Ok(x.table.values().iter().zip(y.table.values()).all(|(a, b)| a <= b))
}

/// Law of a univariate random variable: sorted atoms `(value, mass)`, with
/// values closer than [`LAW_TOLERANCE`] merged.
pub fn marginal_law(space: &FiniteProbabilitySpace, values: &[f64]) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> =
        values.iter().zip(space.probabilities()).map(|(&v, &p)| (v, p)).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match merged.last_mut() {
            Some(last) if (v - last.0).abs() <= LAW_TOLERANCE => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    merged
}

/// Equality of two laws up to [`LAW_TOLERANCE`] on values and masses.
pub fn same_law(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            (x.0 - y.0).abs() <= LAW_TOLERANCE && (x.1 - y.1).abs() <= LAW_TOLERANCE
        })
}

/// `Z` and `-Z` have the same law.
pub fn is_symmetric_law(space: &FiniteProbabilitySpace, z: &[f64]) -> bool {
    let neg: Vec<f64> = z.iter().map(|v| -v).collect();
    same_law(&marginal_law(space, z), &marginal_law(space, &neg))
}

/// `(Z, Z)`: both components move together.
pub fn comonotone_pair(z: &[f64], space: Arc<FiniteProbabilitySpace>) -> Result<RandomVector> {
    if z.len() != space.outcomes() {
        return Err(RiskError::DimensionMismatch { expected: space.outcomes(), got: z.len() });
    }
    RandomVector::from_columns(space, &[z.to_vec(), z.to_vec()])
}

/// `(Z, -Z)`; requires `Z` symmetric in law so both components share the
/// marginal of the comonotone pair.
pub fn countermonotone_pair(z: &[f64], space: Arc<FiniteProbabilitySpace>) -> Result<RandomVector> {
    if z.len() != space.outcomes() {
        return Err(RiskError::DimensionMismatch { expected: space.outcomes(), got: z.len() });
    }
    if !is_symmetric_law(&space, z) {
        return Err(RiskError::AsymmetricLaw(format!("{z:?}")));
    }
    let neg: Vec<f64> = z.iter().map(|v| -v).collect();
    RandomVector::from_columns(space, &[z.to_vec(), neg])
}

/// A partition of the outcome indices; models a sub-sigma-algebra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
    #[serde(skip)]
    cell_of: Vec<usize>,
}

impl Partition {
    pub fn new(cells: Vec<Vec<usize>>, outcomes: usize) -> Result<Self> {
        let mut cell_of = vec![usize::MAX; outcomes];
        for (c, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(RiskError::InvalidPartition(format!("cell {c} is empty")));
            }
            for &k in cell {
                if k >= outcomes {
                    return Err(RiskError::InvalidPartition(format!(
                        "outcome {k} out of range (outcomes: {outcomes})"
                    )));
                }
                if cell_of[k] != usize::MAX {
                    return Err(RiskError::InvalidPartition(format!(
                        "outcome {k} appears in more than one cell"
                    )));
                }
                cell_of[k] = c;
            }
        }
        if let Some(k) = cell_of.iter().position(|&c| c == usize::MAX) {
            return Err(RiskError::InvalidPartition(format!("outcome {k} is not covered")));
        }
        let cells = cells
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        Ok(Self { cells, cell_of })
    }

    pub fn trivial(outcomes: usize) -> Self {
        Self { cells: vec![(0..outcomes).collect()], cell_of: vec![0; outcomes] }
    }

    pub fn discrete(outcomes: usize) -> Self {
        Self { cells: (0..outcomes).map(|k| vec![k]).collect(), cell_of: (0..outcomes).collect() }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn outcomes(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cell_of(&self, outcome: usize) -> usize {
        self.cell_of[outcome]
    }

    /// Every cell of `self` lies inside a cell of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.outcomes() == coarser.outcomes()
            && self.cells.iter().all(|cell| {
                let target = coarser.cell_of(cell[0]);
                cell.iter().all(|&k| coarser.cell_of(k) == target)
            })
    }

    /// Outcome mask of a union of cells.
    pub fn event(&self, cells: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.outcomes()];
        for &c in cells {
            for &k in &self.cells[c] {
                mask[k] = true;
            }
        }
        mask
    }

    /// Whether `x` is constant on every cell.
    pub fn is_measurable(&self, x: &RandomVector) -> bool {
        self.cells.iter().all(|cell| cell.iter().all(|&k| x.table.row(k) == x.table.row(cell[0])))
    }
}

/// `E[X | G]`: probability-weighted cell averages.
pub fn conditional_expectation(x: &RandomVector, partition: &Partition) -> Result<RandomVector> {
    if partition.outcomes() != x.outcomes() {
        return Err(RiskError::DimensionMismatch { expected: x.outcomes(), got: partition.outcomes() });
    }
    let space = x.space();
    let mut table = Table::zeros(x.outcomes(), x.dim());
    for cell in partition.cells() {
        let mass: f64 = cell.iter().map(|&k| space.prob(k)).sum();
        for j in 0..x.dim() {
            let avg = cell.iter().map(|&k| space.prob(k) * x.get(k, j)).sum::<f64>() / mass;
            for &k in cell {
                table.set(k, j, avg);
            }
        }
    }
    RandomVector::new(space.clone(), table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Arc<FiniteProbabilitySpace> {
        FiniteProbabilitySpace::uniform(n).unwrap().shared()
    }

    #[test]
    fn space_validation() {
        assert!(FiniteProbabilitySpace::new(vec![0.5, 0.5]).is_ok());
        assert!(FiniteProbabilitySpace::new(vec![1.0]).is_ok());
        assert!(FiniteProbabilitySpace::new(vec![0.5, 0.6]).is_err());
        assert!(FiniteProbabilitySpace::new(vec![1.0, 0.0]).is_err());
        assert!(FiniteProbabilitySpace::new(vec![1.5, -0.5]).is_err());
        assert!(FiniteProbabilitySpace::new(vec![]).is_err());
        assert!(FiniteProbabilitySpace::new(vec![0.1; 10]).is_ok());
    }

    #[test]
    fn componentwise_order() {
        let s = uniform(2);
        let zero = RandomVector::zeros(s.clone(), 2);
        let neg = RandomVector::constant(s.clone(), &[-1.0, -1.0]).unwrap();
        let mixed = RandomVector::constant(s.clone(), &[1.0, -1.0]).unwrap();
        assert!(as_leq(&zero, &zero).unwrap());
        assert!(as_leq(&neg, &zero).unwrap());
        assert!(!as_leq(&mixed, &zero).unwrap());
        assert!(!as_leq(&zero, &mixed).unwrap());
        let one_dim = RandomVector::zeros(s, 1);
        assert!(as_leq(&zero, &one_dim).is_err());
    }

    #[test]
    fn couplings() {
        let s = uniform(2);
        let x = comonotone_pair(&[-1.0, 1.0], s.clone()).unwrap();
        assert_eq!(x.table().to_rows(), vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
        let x = comonotone_pair(&[2.0, -3.0], s.clone()).unwrap();
        assert_eq!(x.table().to_rows(), vec![vec![2.0, 2.0], vec![-3.0, -3.0]]);
        let y = countermonotone_pair(&[-1.0, 1.0], s.clone()).unwrap();
        assert_eq!(y.table().to_rows(), vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
        let zero = countermonotone_pair(&[0.0, 0.0], s.clone()).unwrap();
        assert!(zero.table().values().iter().all(|&v| v == 0.0));
        assert!(matches!(
            countermonotone_pair(&[-1.0, 0.0], s.clone()),
            Err(RiskError::AsymmetricLaw(_))
        ));
        assert!(comonotone_pair(&[1.0], s).is_err());
    }

    #[test]
    fn symmetric_law_merges_atoms() {
        // -1 with mass 1/2 against two atoms at +1 with mass 1/4 each
        let s = FiniteProbabilitySpace::new(vec![0.5, 0.25, 0.25]).unwrap().shared();
        assert!(is_symmetric_law(&s, &[-1.0, 1.0, 1.0]));
        assert!(countermonotone_pair(&[-1.0, 1.0, 1.0], s).is_ok());
    }

    #[test]
    fn conditional_expectation_examples() {
        let s = uniform(2);
        let x = RandomVector::from_columns(s.clone(), &[vec![0.0, 2.0]]).unwrap();
        let e = conditional_expectation(&x, &Partition::trivial(2)).unwrap();
        assert_eq!(e.column(0), vec![1.0, 1.0]);
        let e = conditional_expectation(&x, &Partition::discrete(2)).unwrap();
        assert_eq!(e, x);

        let s = FiniteProbabilitySpace::new(vec![0.25, 0.25, 0.5]).unwrap().shared();
        let x = RandomVector::from_columns(s, &[vec![0.0, 2.0, 5.0]]).unwrap();
        let g = Partition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let e = conditional_expectation(&x, &g).unwrap();
        assert_eq!(e.column(0), vec![1.0, 1.0, 5.0]);
        assert!(g.is_measurable(&e));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(Partition::new(vec![vec![0]], 2).is_err());
        assert!(Partition::new(vec![vec![0, 2]], 2).is_err());
        assert!(Partition::new(vec![vec![], vec![0, 1]], 2).is_err());
        let fine = Partition::new(vec![vec![0], vec![1], vec![2, 3]], 4).unwrap();
        let coarse = Partition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(Partition::discrete(4).refines(&Partition::trivial(4)));
    }
}
