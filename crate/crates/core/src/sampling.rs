//! Seeded sampling of spaces and positions for the property audits.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial)`, so
//! trials can run in any order (or in parallel) and still reproduce exactly.
//! Values are uniform on `[-VALUE_RANGE, VALUE_RANGE]`.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::prob::{FiniteProbabilitySpace, RandomVector, Table};

pub const VALUE_RANGE: f64 = 10.0;

/// Largest number of outcomes the samplers draw.
pub const MAX_OUTCOMES: usize = 6;

/// Generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn uniform_value(rng: &mut impl Rng) -> f64 {
    rng.random_range(-VALUE_RANGE..=VALUE_RANGE)
}

pub fn values(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| uniform_value(rng)).collect()
}

/// A space with 1..=MAX_OUTCOMES outcomes and masses bounded away from zero.
pub fn space(rng: &mut impl Rng) -> Arc<FiniteProbabilitySpace> {
    let n = rng.random_range(1..=MAX_OUTCOMES);
    space_with(rng, n)
}

pub fn space_with(rng: &mut impl Rng, n: usize) -> Arc<FiniteProbabilitySpace> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let residue = 1.0 - probs.iter().sum::<f64>();
    probs[0] += residue;
    FiniteProbabilitySpace::new(probs).expect("sampled masses are valid").shared()
}

pub fn random_vector(rng: &mut impl Rng, space: Arc<FiniteProbabilitySpace>, dim: usize) -> RandomVector {
    let n = space.outcomes();
    let table = Table::new(n, dim, values(rng, n * dim)).expect("shape");
    RandomVector::new(space, table).expect("finite entries")
}

/// Nonnegative entries on `[0, VALUE_RANGE]`, with roughly a third set to 0
/// so that order relations are tight in some coordinates.
pub fn nonnegative_vector(
    rng: &mut impl Rng,
    space: Arc<FiniteProbabilitySpace>,
    dim: usize,
) -> RandomVector {
    let n = space.outcomes();
    let vals = (0..n * dim)
        .map(|_| if rng.random_bool(1.0 / 3.0) { 0.0 } else { rng.random_range(0.0..=VALUE_RANGE) })
        .collect();
    RandomVector::new(space, Table::new(n, dim, vals).expect("shape")).expect("finite entries")
}

pub fn unit_interval_open(rng: &mut impl Rng) -> f64 {
    loop {
        let l: f64 = rng.random();
        if l > 0.0 && l < 1.0 {
            return l;
        }
    }
}

/// A draw of `Z` whose law is symmetric under `space`: outcomes with equal
/// mass are paired and receive `+z` and `-z`; unpaired outcomes get 0.
pub fn symmetric_values(rng: &mut impl Rng, space: &FiniteProbabilitySpace) -> Vec<f64> {
    let n = space.outcomes();
    let mut z = vec![0.0; n];
    let mut used = vec![false; n];
    for a in 0..n {
        if used[a] {
            continue;
        }
        if let Some(b) = (a + 1..n).find(|&b| !used[b] && space.prob(b) == space.prob(a)) {
            used[a] = true;
            used[b] = true;
            let v = uniform_value(rng);
            z[a] = v;
            z[b] = -v;
        }
    }
    z
}

/// A space built of equal-mass pairs (and possibly a central atom) so that
/// symmetric laws are plentiful.
pub fn symmetric_space(rng: &mut impl Rng) -> Arc<FiniteProbabilitySpace> {
    let pairs = rng.random_range(1..=MAX_OUTCOMES / 2);
    let centre = rng.random_bool(0.5) && 2 * pairs < MAX_OUTCOMES;
    let mut weights: Vec<f64> = Vec::new();
    for _ in 0..pairs {
        let w = rng.random_range(0.05..1.0);
        weights.push(w);
        weights.push(w);
    }
    if centre {
        weights.push(rng.random_range(0.05..1.0));
    }
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // pairs must stay exactly equal, so the residue goes to no atom: the
    // normalization error is far below the mass tolerance
    FiniteProbabilitySpace::new(probs).expect("sampled masses are valid").shared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::is_symmetric_law;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(7, 3).random();
        let b: f64 = trial_rng(7, 3).random();
        let c: f64 = trial_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn symmetric_draws_are_symmetric() {
        for t in 0..200 {
            let mut rng = trial_rng(11, t);
            let s = symmetric_space(&mut rng);
            let z = symmetric_values(&mut rng, &s);
            assert!(is_symmetric_law(&s, &z));
        }
    }
}
