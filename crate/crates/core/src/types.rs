//! Shared domain types: observation/action indices and categorical beliefs.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into an observation alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObsId(pub usize);

impl ObsId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for ObsId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "o{}", self.0)
    }
}

/// Index into an environment's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for ActionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Tolerance for categorical normalization checks.
pub const NORM_TOL: f64 = 1e-9;

/// A categorical distribution over hidden states: the agent's "mental
/// position". Entries are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Array1<f64>,
}

impl Belief {
    /// Wrap a probability vector, validating non-negativity and
    /// normalization to within [`NORM_TOL`].
    pub fn new(probs: Array1<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("belief over zero states".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "belief entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "belief sums to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalize an arbitrary non-negative vector into a belief.
    /// Returns an error if the total mass is not positive.
    pub fn normalized(mut raw: Array1<f64>) -> Result<Self> {
        let total: f64 = raw.sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize mass {total}"
            )));
        }
        raw.mapv_inplace(|p| p / total);
        Self::new(raw)
    }

    /// Uniform belief over `n` states.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "belief over zero states");
        Self { probs: Array1::from_elem(n, 1.0 / n as f64) }
    }

    /// Uniform belief over the given subset of `n` states.
    pub fn uniform_over(n: usize, support: &[usize]) -> Self {
        assert!(!support.is_empty(), "empty support");
        let mut probs = Array1::zeros(n);
        let w = 1.0 / support.len() as f64;
        for &s in support {
            probs[s] = w;
        }
        Self { probs }
    }

    /// Point mass on state `state`.
    pub fn delta(n: usize, state: usize) -> Self {
        let mut probs = Array1::zeros(n);
        probs[state] = 1.0;
        Self { probs }
    }

    #[inline]
    pub fn probs(&self) -> &Array1<f64> {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Highest-probability state, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > best_p {
                best_p = p;
                best = i;
            }
        }
        best
    }

    /// Largest single probability.
    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Shannon entropy in nats; zero-probability entries contribute zero.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Sample a state index from the categorical.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> usize {
        let u: f64 = rng.gen();
        let mut cdf = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            cdf += p;
            if u < cdf {
                return i;
            }
        }
        // Rounding may leave cdf slightly below 1; fall back to the last
        // state with positive mass.
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1)
    }
}
