//! Scaled forward/backward recursions over clone blocks.
//!
//! Deterministic emissions confine each step's message to the clone block of
//! the observed symbol, so messages are dense only within blocks. The
//! forward pass rescales the message to sum to one at every step and
//! accumulates the scale factors in log space.
//!
//! Episode convention: the recursion starts from a uniform distribution over
//! the active clones of the episode's first observation, so that first
//! observation contributes zero to the log-likelihood.

use crate::error::Result;
use crate::types::{ActionId, ObsId};

use super::{CloneHmm, TrajectoryData};

/// Forward messages and scale factors for a single episode.
pub(crate) struct ForwardPass {
    /// `alphas[t]` is aligned with `blocks[obs_t]`.
    pub alphas: Vec<Vec<f64>>,
    /// `scales[t]` is the pre-normalization mass at step `t`
    /// (`scales[0]` is 1 by the episode-start convention).
    pub scales: Vec<f64>,
    /// Sum of `ln scales`; `-inf` when the episode is impossible.
    pub log_likelihood: f64,
}

/// Run the scaled forward recursion for one episode.
///
/// `blocks[o]` lists the active clone states of symbol `o`. Returns a pass
/// with `log_likelihood == -inf` as soon as a step leaves zero mass.
pub(crate) fn forward_episode(
    model: &CloneHmm,
    blocks: &[Vec<usize>],
    obs: &[ObsId],
    actions: &[ActionId],
) -> ForwardPass {
    let len = obs.len();
    let mut alphas: Vec<Vec<f64>> = Vec::with_capacity(len);
    let mut scales = Vec::with_capacity(len);

    let first = &blocks[obs[0].index()];
    if first.is_empty() {
        return ForwardPass { alphas, scales, log_likelihood: f64::NEG_INFINITY };
    }
    alphas.push(vec![1.0 / first.len() as f64; first.len()]);
    scales.push(1.0);
    let mut ll = 0.0;

    for t in 0..len - 1 {
        let bi = &blocks[obs[t].index()];
        let bj = &blocks[obs[t + 1].index()];
        if bj.is_empty() {
            return ForwardPass { alphas, scales, log_likelihood: f64::NEG_INFINITY };
        }
        let a = actions[t].index();
        let mut next = vec![0.0; bj.len()];
        let cur = &alphas[t];
        for (ii, &gi) in bi.iter().enumerate() {
            let w = cur[ii];
            if w <= 0.0 {
                continue;
            }
            let row = model.trans.slice(ndarray::s![a, gi, ..]);
            let row = row.as_slice().expect("row-major layout");
            for (jj, &gj) in bj.iter().enumerate() {
                next[jj] += w * row[gj];
            }
        }
        let c: f64 = next.iter().sum();
        if c <= 0.0 {
            return ForwardPass { alphas, scales, log_likelihood: f64::NEG_INFINITY };
        }
        for v in &mut next {
            *v /= c;
        }
        ll += c.ln();
        alphas.push(next);
        scales.push(c);
    }

    ForwardPass { alphas, scales, log_likelihood: ll }
}

impl CloneHmm {
    /// Log-probability of the observations given the actions under the
    /// episode-start convention above, computed by the scaled forward pass.
    ///
    /// Returns `-inf` for sequences the model assigns zero probability.
    pub fn log_likelihood(&self, data: &TrajectoryData) -> Result<f64> {
        data.validate_against(self.n_obs, self.n_actions)?;
        let blocks = self.block_index();
        let mut total = 0.0;
        for (obs, actions) in data.episodes() {
            let pass = forward_episode(self, &blocks, obs, actions);
            if pass.log_likelihood == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += pass.log_likelihood;
        }
        Ok(total)
    }
}

/// One backward step: given `beta` aligned with `blocks[obs_next]`, the
/// action taken, and the forward scale of the next step, produce the beta
/// vector aligned with `blocks[obs_cur]`.
pub(crate) fn backward_step(
    model: &CloneHmm,
    bi: &[usize],
    bj: &[usize],
    action: usize,
    beta_next: &[f64],
    scale_next: f64,
) -> Vec<f64> {
    let mut beta = vec![0.0; bi.len()];
    for (ii, &gi) in bi.iter().enumerate() {
        let row = model.trans.slice(ndarray::s![action, gi, ..]);
        let row = row.as_slice().expect("row-major layout");
        let mut acc = 0.0;
        for (jj, &gj) in bj.iter().enumerate() {
            acc += row[gj] * beta_next[jj];
        }
        beta[ii] = acc / scale_next;
    }
    beta
}

/// Brute-force check used by tests: sum over every hidden state path.
#[cfg(test)]
pub(crate) fn enumerate_log_likelihood(model: &CloneHmm, obs: &[ObsId], actions: &[ActionId]) -> f64 {
    let n = model.n_states();
    let len = obs.len();
    let first: Vec<usize> = model.active_clones_of(obs[0]);
    if first.is_empty() {
        return f64::NEG_INFINITY;
    }
    let prior = 1.0 / first.len() as f64;
    let mut total = 0.0;
    let mut path = vec![0usize; len];
    fn rec(
        model: &CloneHmm,
        obs: &[ObsId],
        actions: &[ActionId],
        t: usize,
        path: &mut Vec<usize>,
        weight: f64,
        total: &mut f64,
    ) {
        if t == obs.len() {
            *total += weight;
            return;
        }
        for s in 0..model.n_states() {
            if model.state_to_obs[s] != obs[t] || !model.active_mask[s] {
                continue;
            }
            let w = if t == 0 {
                weight
            } else {
                weight * model.joint(actions[t - 1].index(), path[t - 1], s)
            };
            if w == 0.0 {
                continue;
            }
            path[t] = s;
            rec(model, obs, actions, t + 1, path, w, total);
        }
    }
    let _ = n;
    rec(model, obs, actions, 0, &mut path, prior, &mut total);
    if total > 0.0 {
        total.ln()
    } else {
        f64::NEG_INFINITY
    }
}
