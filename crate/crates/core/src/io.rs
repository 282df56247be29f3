//! Scenario ingestion: CSV tables and JSON scenario trees.
//!
//! Errors come back as [`RiskError::Input`] with the 1-based line number of
//! the offending row where one exists.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::conditional::FiltrationSequence;
use crate::error::{Result, RiskError};
use crate::prob::{FiniteProbabilitySpace, Partition, RandomVector, MASS_TOLERANCE};

fn input_err(msg: impl Into<String>) -> RiskError {
    RiskError::Input(msg.into())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| input_err(format!("cannot read file: {e}")))
}

/// Checks the probability column before handing it to the space constructor,
/// so the message can name a line.
fn validate_masses(probs: &[f64], lines: &[u64]) -> Result<()> {
    for (p, line) in probs.iter().zip(lines) {
        if !(p.is_finite() && *p > 0.0) {
            return Err(input_err(format!("line {line}: probability {p} must be > 0")));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        let last = lines.last().copied().unwrap_or(1);
        return Err(input_err(format!("line {last}: probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// CSV with header `prob,X1,...,XN`, one row per outcome.
pub fn parse_scenarios_str(text: &str) -> Result<(Arc<FiniteProbabilitySpace>, RandomVector)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| input_err(format!("line 1: {e}")))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let dim = names.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("prob".to_string()).chain((1..=dim).map(|i| format!("X{i}"))).collect();
    if dim == 0 || names != expected {
        return Err(input_err(format!("line 1: bad header `{}`, expected `prob,X1,...,XN`", names.join(","))));
    }
    let (mut probs, mut rows, mut lines) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            input_err(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != dim + 1 {
            return Err(input_err(format!("line {line}: expected {} fields, got {}", dim + 1, record.len())));
        }
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| input_err(format!("line {line}: non-numeric or non-finite field")))?;
        probs.push(values[0]);
        rows.push(values[1..].to_vec());
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(input_err("no scenario rows"));
    }
    validate_masses(&probs, &lines)?;
    let space = FiniteProbabilitySpace::new(probs).map_err(|e| input_err(e.to_string()))?.shared();
    let x = RandomVector::from_rows(space.clone(), &rows)?;
    Ok((space, x))
}

pub fn parse_scenarios(path: &Path) -> Result<(Arc<FiniteProbabilitySpace>, RandomVector)> {
    parse_scenarios_str(&read(path)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    probabilities: Vec<f64>,
    partitions: Vec<Vec<Vec<usize>>>,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
}

/// A scenario tree: terminal space, filtration and position.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    pub space: Arc<FiniteProbabilitySpace>,
    pub filtration: FiltrationSequence,
    pub x: RandomVector,
}

/// JSON with `probabilities`, `partitions` (cell lists per stage) and `X`
/// (one row per terminal outcome).
pub fn parse_tree_str(text: &str) -> Result<ScenarioTree> {
    let tree: TreeFile = serde_json::from_str(text).map_err(|e| input_err(format!("line {}: {e}", e.line())))?;
    let n = tree.probabilities.len();
    if n == 0 {
        return Err(input_err("tree has no outcomes"));
    }
    if tree.x.len() != n {
        return Err(input_err(format!("X has {} rows for {n} outcomes", tree.x.len())));
    }
    let space = FiniteProbabilitySpace::new(tree.probabilities).map_err(|e| input_err(e.to_string()))?.shared();
    let partitions = tree
        .partitions
        .into_iter()
        .enumerate()
        .map(|(s, cells)| Partition::new(cells, n).map_err(|e| input_err(format!("stage {s}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let filtration = FiltrationSequence::new(partitions).map_err(|e| input_err(e.to_string()))?;
    let x = RandomVector::from_rows(space.clone(), &tree.x).map_err(|e| input_err(format!("X: {e}")))?;
    Ok(ScenarioTree { space, filtration, x })
}

pub fn parse_tree(path: &Path) -> Result<ScenarioTree> {
    parse_tree_str(&read(path)?)
}
