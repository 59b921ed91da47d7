//! Discrete generative models for active inference, derived from trained
//! clone HMMs.
//!
//! The generative model is the usual four-matrix POMDP description:
//! likelihood `A = P(o|s)`, action-conditioned transitions
//! `B = P(s'|s,a)`, log-preferences over states `C`, and the initial-state
//! prior `D`. Conversion appends one absorbing dispreferred state that
//! receives the transition mass of actions unavailable from a source state,
//! plus a matching dispreferred observation.

mod convert;
mod io;
mod preference;

pub use convert::prune_states;
pub use io::AIF_FILE_VERSION;
pub use preference::DistanceMap;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::cscg::CloneHmm;
use crate::error::{Error, Result};
use crate::types::{ActionId, Belief, ObsId};

/// Default pruning threshold on marginal transition mass.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-4;
/// Default support cutoff for distance-map and planner graph edges.
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-3;
/// Default preference scale (log-preference units per step of distance).
pub const DEFAULT_PREFERENCE_SCALE: f64 = 1.0;
/// Action marginal mass below which an action counts as unavailable from a
/// state and routes to the dispreferred state.
pub const ILLEGAL_ACTION_EPS: f64 = 1e-12;

/// Provenance of the conversion, recorded in the model file header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConversionParams {
    pub prune_threshold: Option<f64>,
    pub support_eps: Option<f64>,
    pub preference_scale: Option<f64>,
}

/// Discrete POMDP generative model with a dispreferred absorbing state.
///
/// Index layout: real states are `0..n_states()` and the dispreferred state
/// is appended at `dispreferred_index()`; likewise for observations.
#[derive(Debug, Clone, PartialEq)]
pub struct AifModel {
    pub(crate) n_obs: usize,
    pub(crate) n_states: usize,
    pub(crate) n_actions: usize,
    /// Likelihood `[n_obs + 1][n_states + 1]`; every state column sums to 1.
    pub(crate) a: Array2<f64>,
    /// Transitions `[n_actions][n_states + 1][n_states + 1]`; every
    /// `(state, action)` row sums to 1.
    pub(crate) b: Array3<f64>,
    /// Log-preference per state.
    pub(crate) c: Array1<f64>,
    /// Prior over the initial state.
    pub(crate) d: Array1<f64>,
    /// Emission symbol of each real state.
    pub(crate) state_to_obs: Vec<ObsId>,
    pub conversion: ConversionParams,
}

impl AifModel {
    /// Number of real (non-dispreferred) states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of real observation symbols.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Index of the absorbing dispreferred state.
    pub fn dispreferred_index(&self) -> usize {
        self.n_states
    }

    /// Index of the dispreferred observation.
    pub fn dispreferred_obs(&self) -> usize {
        self.n_obs
    }

    pub fn likelihood(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn transitions(&self) -> &Array3<f64> {
        &self.b
    }

    pub fn preferences(&self) -> &Array1<f64> {
        &self.c
    }

    pub fn prior(&self) -> &Array1<f64> {
        &self.d
    }

    pub fn state_to_obs(&self) -> &[ObsId] {
        &self.state_to_obs
    }

    /// Real states emitting `obs`.
    pub fn clones_of(&self, obs: ObsId) -> Vec<usize> {
        (0..self.n_states)
            .filter(|&s| self.state_to_obs[s] == obs)
            .collect()
    }

    /// Initial belief: the prior conditioned on the first observation.
    pub fn initial_belief(&self, obs: ObsId) -> Belief {
        let mut raw = Array1::zeros(self.n_states + 1);
        for s in 0..=self.n_states {
            raw[s] = self.d[s] * self.a[[obs.index(), s]];
        }
        match Belief::normalized(raw) {
            Ok(b) => b,
            Err(_) => {
                let clones = self.clones_of(obs);
                Belief::uniform_over(self.n_states + 1, &clones)
            }
        }
    }

    /// Pure prediction: push a belief through `B` for one action without
    /// conditioning on an observation.
    pub fn predict(&self, belief: &Belief, action: ActionId) -> Belief {
        let n = self.n_states + 1;
        debug_assert_eq!(belief.len(), n);
        let a = action.index();
        let mut next = Array1::zeros(n);
        for (s, &p) in belief.probs().iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            for sp in 0..n {
                next[sp] += p * self.b[[a, s, sp]];
            }
        }
        Belief::new(next).expect("B rows are stochastic")
    }

    /// Recursive Bayes step through `B` then `A`. When the observation is
    /// impossible under the prediction the belief resets to a uniform over
    /// the observation's clone states, mirroring the clone-HMM filter.
    pub fn filter(&self, prior: &Belief, action: ActionId, obs: ObsId) -> Belief {
        let pred = self.predict(prior, action);
        let mut raw = pred.probs().clone();
        for s in 0..=self.n_states {
            raw[s] *= self.a[[obs.index(), s]];
        }
        let mass: f64 = raw.sum();
        if mass < crate::cscg::FILTER_RESET_EPS {
            let clones = self.clones_of(obs);
            if clones.is_empty() {
                return Belief::uniform(self.n_states + 1);
            }
            return Belief::uniform_over(self.n_states + 1, &clones);
        }
        raw.mapv_inplace(|p| p / mass);
        Belief::new(raw).expect("normalized by construction")
    }

    /// Exact preimage of the goal observations under the emission map,
    /// excluding the dispreferred state.
    pub fn goal_states(&self, goal_obs: &[ObsId]) -> Result<Vec<usize>> {
        goal_preimage(goal_obs, self.n_obs, |o| self.clones_of(o))
    }

    /// Structural validation of the four matrices.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states + 1;
        if self.a.dim() != (self.n_obs + 1, n) {
            return Err(Error::Validation("likelihood shape mismatch".into()));
        }
        if self.b.dim() != (self.n_actions, n, n) {
            return Err(Error::Validation("transition shape mismatch".into()));
        }
        if self.c.len() != n || self.d.len() != n || self.state_to_obs.len() != self.n_states {
            return Err(Error::Validation("vector length mismatch".into()));
        }
        for s in 0..n {
            let col: f64 = (0..=self.n_obs).map(|o| self.a[[o, s]]).sum();
            if (col - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "likelihood column for state {s} sums to {col}"
                )));
            }
        }
        if (self.a[[self.n_obs, self.n_states]] - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(
                "dispreferred state must emit the dispreferred observation".into(),
            ));
        }
        for a in 0..self.n_actions {
            for s in 0..n {
                let row: f64 = (0..n).map(|sp| self.b[[a, s, sp]]).sum();
                if (row - 1.0).abs() > 1e-9 {
                    return Err(Error::Validation(format!(
                        "transition row (state {s}, action {a}) sums to {row}"
                    )));
                }
            }
            if (self.b[[a, self.n_states, self.n_states]] - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(
                    "dispreferred state must be absorbing".into(),
                ));
            }
        }
        let dsum: f64 = self.d.sum();
        if (dsum - 1.0).abs() > 1e-9 || self.d.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation(format!("prior sums to {dsum}")));
        }
        if self.c.iter().any(|&v| !v.is_finite()) {
            return Err(Error::Validation("preferences must be finite".into()));
        }
        Ok(())
    }
}

impl CloneHmm {
    /// Active clone states of the goal observations, for planning directly
    /// on the clone graph.
    pub fn goal_states(&self, goal_obs: &[ObsId]) -> Result<Vec<usize>> {
        goal_preimage(goal_obs, self.n_obs(), |o| self.active_clones_of(o))
    }
}

fn goal_preimage(
    goal_obs: &[ObsId],
    n_obs: usize,
    clones_of: impl Fn(ObsId) -> Vec<usize>,
) -> Result<Vec<usize>> {
    if goal_obs.is_empty() {
        return Err(Error::InvalidArgument("empty goal observation set".into()));
    }
    let mut states = Vec::new();
    for &o in goal_obs {
        if o.index() >= n_obs {
            return Err(Error::InvalidArgument(format!(
                "goal observation {o} out of range (n_obs = {n_obs})"
            )));
        }
        states.extend(clones_of(o));
    }
    states.sort_unstable();
    states.dedup();
    if states.is_empty() {
        return Err(Error::NoGoalState(format!(
            "no active clone emits any of {:?}",
            goal_obs.iter().map(|o| o.index()).collect::<Vec<_>>()
        )));
    }
    Ok(states)
}
