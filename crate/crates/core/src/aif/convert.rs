//! State pruning and the clone-HMM → generative-model conversion.

use ndarray::{Array1, Array2, Array3};

use crate::cscg::CloneHmm;
use crate::error::{Error, Result};

use super::{AifModel, ConversionParams, ILLEGAL_ACTION_EPS};

/// Drop states whose marginal incoming transition mass, under a uniform
/// distribution over active source states and actions, does not exceed
/// `threshold`. Surviving rows are renormalized. A threshold of exactly
/// zero disables pruning and returns the model unchanged.
pub fn prune_states(model: &CloneHmm, threshold: f64) -> Result<CloneHmm> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "prune threshold {threshold} outside [0, 1)"
        )));
    }
    if threshold == 0.0 {
        return Ok(model.clone());
    }
    let active = model.active_states();
    if active.is_empty() {
        return Err(Error::EmptyModel("no active states to prune".into()));
    }
    let n_actions = model.n_actions();
    let weight = 1.0 / (active.len() * n_actions) as f64;

    let n_states = model.n_states();
    let mut score = vec![0.0_f64; n_states];
    for &i in &active {
        for a in 0..n_actions {
            let marginal: f64 = active.iter().map(|&j| model.joint(a, i, j)).sum();
            if marginal < ILLEGAL_ACTION_EPS {
                continue;
            }
            for &j in &active {
                score[j] += weight * model.joint(a, i, j) / marginal;
            }
        }
    }

    let retained: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&j| score[j] > threshold)
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptyModel(format!(
            "threshold {threshold} prunes every state"
        )));
    }

    let mut pruned = model.clone();
    let keep: Vec<bool> = (0..n_states).map(|s| retained.binary_search(&s).is_ok()).collect();
    pruned.active_mask = keep.clone();
    for a in 0..n_actions {
        for i in 0..n_states {
            for j in 0..n_states {
                if !keep[i] || !keep[j] {
                    pruned.trans[[a, i, j]] = 0.0;
                }
            }
        }
    }
    pruned.normalize_rows();
    Ok(pruned)
}

impl AifModel {
    /// Build the generative model from a trained (and typically refined or
    /// pruned) clone HMM.
    ///
    /// Real states are the model's active states, compacted in index order.
    /// For each `(state, action)` the joint transition row is renormalized
    /// into a conditional; when the action's marginal mass falls below
    /// [`ILLEGAL_ACTION_EPS`] the whole row becomes a point mass on the
    /// appended dispreferred state, which is absorbing under every action.
    /// The prior is uniform over the real states and preferences start at
    /// zero.
    pub fn from_clone_hmm(model: &CloneHmm) -> Result<AifModel> {
        let kept = model.active_states();
        if kept.is_empty() {
            return Err(Error::EmptyModel("model has no active states".into()));
        }
        let k = kept.len();
        let n_actions = model.n_actions();
        let n_obs = model.n_obs();
        let sd = k;

        let mut b = Array3::zeros((n_actions, k + 1, k + 1));
        for (s, &old_i) in kept.iter().enumerate() {
            for a in 0..n_actions {
                let marginal: f64 = kept.iter().map(|&old_j| model.joint(a, old_i, old_j)).sum();
                if marginal < ILLEGAL_ACTION_EPS {
                    b[[a, s, sd]] = 1.0;
                } else {
                    for (sp, &old_j) in kept.iter().enumerate() {
                        b[[a, s, sp]] = model.joint(a, old_i, old_j) / marginal;
                    }
                }
            }
        }
        for a in 0..n_actions {
            b[[a, sd, sd]] = 1.0;
        }

        let mut a_mat = Array2::zeros((n_obs + 1, k + 1));
        let mut state_to_obs = Vec::with_capacity(k);
        for (s, &old_i) in kept.iter().enumerate() {
            let o = model.state_to_obs()[old_i];
            a_mat[[o.index(), s]] = 1.0;
            state_to_obs.push(o);
        }
        a_mat[[n_obs, sd]] = 1.0;

        let mut d = Array1::zeros(k + 1);
        for s in 0..k {
            d[s] = 1.0 / k as f64;
        }

        let aif = AifModel {
            n_obs,
            n_states: k,
            n_actions,
            a: a_mat,
            b,
            c: Array1::zeros(k + 1),
            d,
            state_to_obs,
            conversion: ConversionParams::default(),
        };
        aif.validate()?;
        Ok(aif)
    }
}
