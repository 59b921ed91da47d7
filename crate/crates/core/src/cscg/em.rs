//! Baum-Welch expectation-maximization over the joint transition tensor.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::types::ObsId;

use super::forward::{backward_step, forward_episode};
use super::{CloneHmm, TrajectoryData};

/// Training options.
#[derive(Debug, Clone)]
pub struct EmOptions {
    /// Maximum number of EM updates.
    pub max_iters: usize,
    /// Smoothing mass added to every active `(action, from, to)` count
    /// before each M-step normalization.
    pub pseudocount: f64,
    /// Stop when the relative log-likelihood improvement drops below this.
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { max_iters: 200, pseudocount: 1e-2, tol: 1e-6 }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub model: CloneHmm,
    /// Log-likelihood of the parameters entering each iteration, one entry
    /// per completed update plus the final evaluation that triggered an
    /// early stop.
    pub loglik_trace: Vec<f64>,
    /// True when the tolerance criterion fired before `max_iters`.
    pub converged: bool,
}

impl CloneHmm {
    /// Train the transition tensor with Baum-Welch. Emissions are fixed by
    /// the clone structure and are never re-estimated; every M-step
    /// renormalizes each source state's row jointly over `(action, to)`.
    ///
    /// With `pseudocount == 0` the returned trace is non-decreasing (up to
    /// floating-point slack). Source states with no expected visits keep
    /// their previous row.
    pub fn train_em(&self, data: &TrajectoryData, opts: &EmOptions) -> Result<EmOutcome> {
        if opts.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(opts.pseudocount >= 0.0) {
            return Err(Error::InvalidArgument("pseudocount must be >= 0".into()));
        }
        data.validate_against(self.n_obs, self.n_actions)?;
        if data.episodes().all(|(obs, _)| obs.len() < 2) {
            return Err(Error::InvalidArgument(
                "training data holds no observation-action transitions".into(),
            ));
        }

        let mut model = self.clone();
        let n_states = model.n_states();
        let active: Vec<usize> = model.active_states();
        // Training never moves mass onto inactive states; scrub any that a
        // hand-edited model might carry so M-step rows stay consistent.
        if active.len() < n_states {
            for a in 0..model.n_actions {
                for i in 0..n_states {
                    for j in 0..n_states {
                        if !model.active_mask[i] || !model.active_mask[j] {
                            model.trans[[a, i, j]] = 0.0;
                        }
                    }
                }
            }
            model.normalize_rows();
        }
        let mut trace: Vec<f64> = Vec::new();
        let mut converged = false;

        let mut counts = Array3::<f64>::zeros((model.n_actions, n_states, n_states));
        for _ in 0..opts.max_iters {
            let blocks = model.block_index();
            counts.fill(0.0);
            let mut ll = 0.0;

            for (obs, actions) in data.episodes() {
                if obs.len() < 2 {
                    continue;
                }
                let pass = forward_episode(&model, &blocks, obs, actions);
                if pass.log_likelihood == f64::NEG_INFINITY {
                    return Err(Error::InvalidArgument(
                        "training data impossible under the current model".into(),
                    ));
                }
                ll += pass.log_likelihood;

                // Backward sweep, accumulating xi into counts on the fly.
                let last = obs.len() - 1;
                let mut beta = vec![1.0; blocks[obs[last].index()].len()];
                for t in (0..last).rev() {
                    let bi = &blocks[obs[t].index()];
                    let bj = &blocks[obs[t + 1].index()];
                    let a = actions[t].index();
                    let alpha = &pass.alphas[t];
                    let scale_next = pass.scales[t + 1];
                    for (ii, &gi) in bi.iter().enumerate() {
                        let w = alpha[ii];
                        if w <= 0.0 {
                            continue;
                        }
                        for (jj, &gj) in bj.iter().enumerate() {
                            let xi = w * model.trans[[a, gi, gj]] * beta[jj] / scale_next;
                            if xi > 0.0 {
                                counts[[a, gi, gj]] += xi;
                            }
                        }
                    }
                    beta = backward_step(&model, bi, bj, a, &beta, scale_next);
                }
            }

            // Convergence check on the likelihood of the parameters that
            // produced this E-step; stop before touching them again.
            trace.push(ll);
            if trace.len() >= 2 {
                let prev = trace[trace.len() - 2];
                let rel = (ll - prev) / prev.abs().max(1e-300);
                if rel < opts.tol {
                    converged = true;
                    break;
                }
            }

            // M-step: smooth and renormalize per source state.
            for &i in &active {
                let mut total = 0.0;
                for a in 0..model.n_actions {
                    for &j in &active {
                        counts[[a, i, j]] += opts.pseudocount;
                        total += counts[[a, i, j]];
                    }
                }
                if total > 0.0 {
                    for a in 0..model.n_actions {
                        for &j in &active {
                            model.trans[[a, i, j]] = counts[[a, i, j]] / total;
                        }
                    }
                }
                // total == 0: the state was never visited; keep its row.
            }
        }

        Ok(EmOutcome { model, loglik_trace: trace, converged })
    }
}

/// Sample an observation-action walk from the model's own generative
/// process, starting from a uniformly drawn active state.
pub fn sample_walk(
    model: &CloneHmm,
    steps: usize,
    seed: u64,
) -> (Vec<ObsId>, Vec<crate::types::ActionId>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let active = model.active_states();
    let mut state = active[rng.gen_range(0..active.len())];
    let mut obs = vec![model.state_to_obs[state]];
    let mut actions = Vec::with_capacity(steps);
    for _ in 0..steps {
        // Draw (action, next) jointly from the source row.
        let u: f64 = rng.gen();
        let mut cdf = 0.0;
        let mut chosen = None;
        'outer: for a in 0..model.n_actions {
            for j in 0..model.n_states() {
                cdf += model.trans[[a, state, j]];
                if u < cdf {
                    chosen = Some((a, j));
                    break 'outer;
                }
            }
        }
        let (a, j) = chosen.unwrap_or((model.n_actions - 1, state));
        actions.push(crate::types::ActionId(a));
        state = j;
        obs.push(model.state_to_obs[state]);
    }
    (obs, actions)
}
