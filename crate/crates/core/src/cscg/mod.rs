//! Clone-structured hidden Markov models.
//!
//! A clone HMM is an action-augmented HMM in which every hidden state
//! deterministically emits a single observation symbol, and each symbol owns
//! a block of "clone" states that share the emission but differ in their
//! transitions. Context then disambiguates aliased observations.
//!
//! The transition tensor stores the joint `P(s', a | s)` normalized per
//! source state: summing over both the action and the destination yields one
//! for every source. Per-action rows need not sum to one; an action whose
//! marginal mass from a state is (near) zero is treated as unavailable from
//! that state by downstream consumers.

mod em;
mod forward;
mod io;
mod viterbi;

pub use em::{sample_walk, EmOptions, EmOutcome};
pub use io::MODEL_FILE_VERSION;
pub use viterbi::RefineOptions;

use ndarray::{Array1, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{ActionId, Belief, ObsId, NORM_TOL};

/// Belief mass below which a filtering step is considered impossible and
/// the posterior resets to a uniform over the observed symbol's clones.
pub const FILTER_RESET_EPS: f64 = 1e-12;

// ---------------------------------------------------------------------------
// TrajectoryData
// ---------------------------------------------------------------------------

/// A sequence of observation-action pairs, optionally split into episodes.
///
/// `actions[t]` is the action taken between `observations[t]` and
/// `observations[t + 1]`. Episode boundaries list the indices at which a new
/// episode starts; when non-empty the first boundary is always zero and the
/// action slot crossing a boundary is a dead placeholder that no algorithm
/// reads. An empty boundary list means one continuous episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryData {
    observations: Vec<ObsId>,
    actions: Vec<ActionId>,
    boundaries: Vec<usize>,
}

impl TrajectoryData {
    pub fn new(
        observations: Vec<ObsId>,
        actions: Vec<ActionId>,
        boundaries: Vec<usize>,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("empty observation sequence".into()));
        }
        if actions.len() + 1 != observations.len() {
            return Err(Error::InvalidArgument(format!(
                "{} actions for {} observations; expected len(observations) - 1",
                actions.len(),
                observations.len()
            )));
        }
        if !boundaries.is_empty() {
            if boundaries[0] != 0 {
                return Err(Error::InvalidArgument(
                    "episode boundaries must start at index 0".into(),
                ));
            }
            for w in boundaries.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::InvalidArgument(
                        "episode boundaries must be strictly increasing".into(),
                    ));
                }
            }
            if *boundaries.last().unwrap() >= observations.len() {
                return Err(Error::InvalidArgument(
                    "episode boundary out of range".into(),
                ));
            }
        }
        Ok(Self { observations, actions, boundaries })
    }

    /// Single continuous episode.
    pub fn continuous(observations: Vec<ObsId>, actions: Vec<ActionId>) -> Result<Self> {
        Self::new(observations, actions, Vec::new())
    }

    pub fn observations(&self) -> &[ObsId] {
        &self.observations
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn n_episodes(&self) -> usize {
        self.boundaries.len().max(1)
    }

    /// Iterate `(observations, actions)` slices per episode. Within an
    /// episode the slices are aligned: `actions.len() == obs.len() - 1`.
    pub fn episodes(&self) -> impl Iterator<Item = (&[ObsId], &[ActionId])> {
        let starts: Vec<usize> =
            if self.boundaries.is_empty() { vec![0] } else { self.boundaries.clone() };
        let len = self.observations.len();
        let obs = &self.observations;
        let acts = &self.actions;
        (0..starts.len()).map(move |k| {
            let s = starts[k];
            let e = if k + 1 < starts.len() { starts[k + 1] } else { len };
            (&obs[s..e], &acts[s..e.saturating_sub(1).max(s)])
        })
    }

    /// Check every symbol and action against model ranges.
    pub fn validate_against(&self, n_obs: usize, n_actions: usize) -> Result<()> {
        for (t, o) in self.observations.iter().enumerate() {
            if o.index() >= n_obs {
                return Err(Error::InvalidArgument(format!(
                    "observation[{t}] = {} out of range (n_obs = {n_obs})",
                    o.index()
                )));
            }
        }
        for (t, a) in self.actions.iter().enumerate() {
            if a.index() >= n_actions {
                return Err(Error::InvalidArgument(format!(
                    "action[{t}] = {} out of range (n_actions = {n_actions})",
                    a.index()
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// CloneHmm
// ---------------------------------------------------------------------------

/// Action-augmented HMM with clone-structured deterministic emissions.
#[derive(Debug, Clone, PartialEq)]
pub struct CloneHmm {
    pub(crate) n_obs: usize,
    pub(crate) n_actions: usize,
    pub(crate) clones_per_obs: Vec<usize>,
    pub(crate) state_to_obs: Vec<ObsId>,
    pub(crate) block_start: Vec<usize>,
    /// Joint transition tensor `[action][from][to]`, normalized per `from`.
    pub(crate) trans: Array3<f64>,
    pub(crate) active_mask: Vec<bool>,
}

impl CloneHmm {
    /// Randomly initialized model with the same clone count for every symbol.
    pub fn new(n_obs: usize, clones_per_obs: usize, n_actions: usize, seed: u64) -> Result<Self> {
        Self::with_clone_counts(&vec![clones_per_obs; n_obs], n_actions, seed)
    }

    /// Randomly initialized model with per-symbol clone counts.
    ///
    /// The transition tensor is filled with positive draws and normalized
    /// jointly over `(action, to)` per source state, so constructions with
    /// the same seed are bit-identical.
    pub fn with_clone_counts(clones_per_obs: &[usize], n_actions: usize, seed: u64) -> Result<Self> {
        if clones_per_obs.is_empty() {
            return Err(Error::InvalidArgument("n_obs must be >= 1".into()));
        }
        if clones_per_obs.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument("every clone count must be >= 1".into()));
        }
        if n_actions == 0 {
            return Err(Error::InvalidArgument("n_actions must be >= 1".into()));
        }
        let n_obs = clones_per_obs.len();
        let n_states: usize = clones_per_obs.iter().sum();

        let mut state_to_obs = Vec::with_capacity(n_states);
        let mut block_start = Vec::with_capacity(n_obs);
        for (o, &c) in clones_per_obs.iter().enumerate() {
            block_start.push(state_to_obs.len());
            state_to_obs.extend(std::iter::repeat(ObsId(o)).take(c));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trans = Array3::zeros((n_actions, n_states, n_states));
        for a in 0..n_actions {
            for i in 0..n_states {
                for j in 0..n_states {
                    // Positive floor keeps early EM iterations away from
                    // zero-probability lock-in.
                    trans[[a, i, j]] = 0.01 + rng.gen::<f64>();
                }
            }
        }
        let mut model = Self {
            n_obs,
            n_actions,
            clones_per_obs: clones_per_obs.to_vec(),
            state_to_obs,
            block_start,
            trans,
            active_mask: vec![true; n_states],
        };
        model.normalize_rows();
        Ok(model)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.state_to_obs.len()
    }

    pub fn n_active_states(&self) -> usize {
        self.active_mask.iter().filter(|&&m| m).count()
    }

    pub fn clones_per_obs(&self) -> &[usize] {
        &self.clones_per_obs
    }

    pub fn state_to_obs(&self) -> &[ObsId] {
        &self.state_to_obs
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active_mask
    }

    pub fn trans(&self) -> &Array3<f64> {
        &self.trans
    }

    /// Joint transition probability `P(to, action | from)`.
    #[inline]
    pub fn joint(&self, action: usize, from: usize, to: usize) -> f64 {
        self.trans[[action, from, to]]
    }

    /// Contiguous index range of all clones (active or not) of `obs`.
    pub fn clone_block(&self, obs: ObsId) -> std::ops::Range<usize> {
        let start = self.block_start[obs.index()];
        start..start + self.clones_per_obs[obs.index()]
    }

    /// Active clone state indices of `obs`.
    pub fn active_clones_of(&self, obs: ObsId) -> Vec<usize> {
        self.clone_block(obs).filter(|&s| self.active_mask[s]).collect()
    }

    /// All active state indices.
    pub fn active_states(&self) -> Vec<usize> {
        (0..self.n_states()).filter(|&s| self.active_mask[s]).collect()
    }

    /// Per-symbol active clone lists, indexable by symbol.
    pub(crate) fn block_index(&self) -> Vec<Vec<usize>> {
        (0..self.n_obs).map(|o| self.active_clones_of(ObsId(o))).collect()
    }

    /// Normalize every source-state row jointly over `(action, to)`.
    /// Rows with zero total mass are left as all zeros.
    pub(crate) fn normalize_rows(&mut self) {
        let (n_a, n_s) = (self.n_actions, self.n_states());
        for i in 0..n_s {
            let mut total = 0.0;
            for a in 0..n_a {
                for j in 0..n_s {
                    total += self.trans[[a, i, j]];
                }
            }
            if total > 0.0 {
                for a in 0..n_a {
                    for j in 0..n_s {
                        self.trans[[a, i, j]] /= total;
                    }
                }
            }
        }
    }

    /// Structural validation: emission block consistency, probability
    /// bounds, and per-source joint normalization (rows of inactive or
    /// terminal states may instead carry zero mass).
    pub fn validate(&self) -> Result<()> {
        let n_states = self.n_states();
        if self.clones_per_obs.len() != self.n_obs
            || self.block_start.len() != self.n_obs
            || self.active_mask.len() != n_states
        {
            return Err(Error::Validation("inconsistent field lengths".into()));
        }
        if self.trans.dim() != (self.n_actions, n_states, n_states) {
            return Err(Error::Validation(format!(
                "transition tensor shape {:?} does not match ({}, {n_states}, {n_states})",
                self.trans.dim(),
                self.n_actions
            )));
        }
        for (o, &c) in self.clones_per_obs.iter().enumerate() {
            if c == 0 {
                return Err(Error::Validation(format!("symbol {o} owns zero clones")));
            }
            for s in self.clone_block(ObsId(o)) {
                if self.state_to_obs[s] != ObsId(o) {
                    return Err(Error::Validation(format!(
                        "state {s} is in the clone block of symbol {o} but maps to {}",
                        self.state_to_obs[s]
                    )));
                }
            }
        }
        for (idx, &p) in self.trans.iter().enumerate() {
            if !(0.0..=1.0 + NORM_TOL).contains(&p) || !p.is_finite() {
                return Err(Error::Validation(format!(
                    "transition entry {idx} = {p} outside [0, 1]"
                )));
            }
        }
        for i in 0..n_states {
            let mut total = 0.0;
            for a in 0..self.n_actions {
                for j in 0..n_states {
                    total += self.trans[[a, i, j]];
                }
            }
            let ok = (total - 1.0).abs() <= NORM_TOL || total == 0.0;
            if !ok {
                return Err(Error::Validation(format!(
                    "state {i} outgoing mass sums to {total}, expected 1 or 0"
                )));
            }
            if !self.active_mask[i] && total != 0.0 {
                return Err(Error::Validation(format!(
                    "inactive state {i} carries outgoing mass {total}"
                )));
            }
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // Belief filtering
    // -----------------------------------------------------------------------

    /// One recursive Bayes step: propagate `prior` through the joint
    /// transition under `action`, mask to the clones of `obs`, and
    /// renormalize. If the surviving mass falls below [`FILTER_RESET_EPS`]
    /// the model is surprised and the posterior resets to a uniform over the
    /// active clones of `obs`.
    pub fn filter_belief(&self, prior: &Belief, action: ActionId, obs: ObsId) -> Belief {
        let n = self.n_states();
        debug_assert_eq!(prior.len(), n);
        let a = action.index();
        let block = self.clone_block(obs);

        let mut post = Array1::<f64>::zeros(n);
        let mut mass = 0.0;
        for (i, &p) in prior.probs().iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            for j in block.clone() {
                if !self.active_mask[j] {
                    continue;
                }
                let w = p * self.trans[[a, i, j]];
                post[j] += w;
                mass += w;
            }
        }
        if mass < FILTER_RESET_EPS {
            let clones = self.active_clones_of(obs);
            if clones.is_empty() {
                // The symbol has no live clones at all; fall back to a
                // uniform over every active state.
                return Belief::uniform_over(n, &self.active_states());
            }
            return Belief::uniform_over(n, &clones);
        }
        post.mapv_inplace(|w| w / mass);
        Belief::new(post).expect("normalized by construction")
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;

    /// Hand-built deterministic model: `n` states in one cycle, each state
    /// its own symbol, one action.
    pub fn deterministic_cycle(n: usize) -> CloneHmm {
        let mut m = CloneHmm::with_clone_counts(&vec![1; n], 1, 0).unwrap();
        m.trans.fill(0.0);
        for i in 0..n {
            m.trans[[0, i, (i + 1) % n]] = 1.0;
        }
        m
    }

    /// Two symbols with two clones each, one action; clones of symbol 0
    /// route to different clones of symbol 1 so context matters.
    pub fn aliased_two_symbol() -> CloneHmm {
        let mut m = CloneHmm::with_clone_counts(&[2, 2], 1, 0).unwrap();
        m.trans.fill(0.0);
        // states: 0,1 emit symbol 0; 2,3 emit symbol 1
        m.trans[[0, 0, 2]] = 1.0;
        m.trans[[0, 1, 3]] = 1.0;
        m.trans[[0, 2, 1]] = 1.0;
        m.trans[[0, 3, 0]] = 1.0;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn new_counts_and_blocks() {
        let m = CloneHmm::new(21, 20, 3, 0).unwrap();
        assert_eq!(m.n_states(), 420);
        assert_eq!(m.clone_block(ObsId(0)), 0..20);
        assert_eq!(m.clone_block(ObsId(20)), 400..420);
        m.validate().unwrap();
    }

    #[test]
    fn new_rejects_degenerate_args() {
        assert!(CloneHmm::new(0, 3, 2, 0).is_err());
        assert!(CloneHmm::new(3, 0, 2, 0).is_err());
        assert!(CloneHmm::new(3, 3, 0, 0).is_err());
        assert!(CloneHmm::with_clone_counts(&[2, 0, 1], 2, 0).is_err());
    }

    #[test]
    fn single_state_model_normalizes_over_actions() {
        let m = CloneHmm::new(1, 1, 3, 0).unwrap();
        let total: f64 = (0..3).map(|a| m.joint(a, 0, 0)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_construction_is_bit_identical() {
        let a = CloneHmm::new(3, 2, 4, 7).unwrap();
        let b = CloneHmm::new(3, 2, 4, 7).unwrap();
        assert_eq!(a.trans, b.trans);
        let c = CloneHmm::new(3, 2, 4, 8).unwrap();
        assert_ne!(a.trans, c.trans);
    }

    #[test]
    fn joint_rows_sum_to_one() {
        let m = CloneHmm::new(4, 3, 2, 11).unwrap();
        for i in 0..m.n_states() {
            let total: f64 = (0..2).map(|a| (0..12).map(|j| m.joint(a, i, j)).sum::<f64>()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_delta_on_deterministic_chain() {
        let m = test_util::deterministic_cycle(4);
        let prior = Belief::delta(4, 1);
        let post = m.filter_belief(&prior, ActionId(0), ObsId(2));
        assert_eq!(post.probs(), &array![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn filter_matches_hand_bayes_update() {
        // 4-state aliased model, uniform prior over clones of symbol 0.
        let mut m = test_util::aliased_two_symbol();
        m.trans.fill(0.0);
        m.trans[[0, 0, 2]] = 0.75;
        m.trans[[0, 0, 3]] = 0.25;
        m.trans[[0, 1, 2]] = 0.25;
        m.trans[[0, 1, 3]] = 0.75;
        m.trans[[0, 2, 0]] = 1.0;
        m.trans[[0, 3, 1]] = 1.0;
        let prior = Belief::uniform_over(4, &[0, 1]);
        let post = m.filter_belief(&prior, ActionId(0), ObsId(1));
        // posterior over states 2,3: (.5*.75+.5*.25, .5*.25+.5*.75) = (.5, .5)
        assert!((post.probs()[2] - 0.5).abs() < 1e-12);
        assert!((post.probs()[3] - 0.5).abs() < 1e-12);

        let skewed = Belief::new(array![0.8, 0.2, 0.0, 0.0]).unwrap();
        let post = m.filter_belief(&skewed, ActionId(0), ObsId(1));
        // unnormalized: (.8*.75+.2*.25, .8*.25+.2*.75) = (.65, .35)
        assert!((post.probs()[2] - 0.65).abs() < 1e-12);
        assert!((post.probs()[3] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn filter_impossible_step_resets_to_observed_clones() {
        let m = test_util::deterministic_cycle(3);
        let prior = Belief::delta(3, 0);
        // from state 0 the only successor is 1; observing symbol 2 is
        // impossible and must reset.
        let post = m.filter_belief(&prior, ActionId(0), ObsId(2));
        assert_eq!(post.probs()[2], 1.0);
    }

    #[test]
    fn episode_iteration_splits_slices() {
        let obs: Vec<ObsId> = (0..6).map(ObsId).collect();
        let acts: Vec<ActionId> = vec![ActionId(0); 5];
        let data = TrajectoryData::new(obs, acts, vec![0, 2, 5]).unwrap();
        let eps: Vec<_> = data.episodes().collect();
        assert_eq!(eps.len(), 3);
        assert_eq!(eps[0].0.len(), 2);
        assert_eq!(eps[0].1.len(), 1);
        assert_eq!(eps[1].0.len(), 3);
        assert_eq!(eps[1].1.len(), 2);
        assert_eq!(eps[2].0.len(), 1);
        assert_eq!(eps[2].1.len(), 0);
    }

    #[test]
    fn trajectory_rejects_bad_shapes() {
        assert!(TrajectoryData::new(vec![], vec![], vec![]).is_err());
        let obs: Vec<ObsId> = (0..3).map(ObsId).collect();
        assert!(TrajectoryData::new(obs.clone(), vec![ActionId(0); 3], vec![]).is_err());
        assert!(TrajectoryData::new(obs.clone(), vec![ActionId(0); 2], vec![1]).is_err());
        assert!(TrajectoryData::new(obs.clone(), vec![ActionId(0); 2], vec![0, 2, 2]).is_err());
        assert!(TrajectoryData::new(obs, vec![ActionId(0); 2], vec![0, 5]).is_err());
    }
}
