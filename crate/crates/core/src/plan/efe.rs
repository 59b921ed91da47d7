//! Expected free energy over enumerated fixed-horizon policies.

use ndarray::Array1;

use crate::aif::AifModel;
use crate::error::{Error, Result};
use crate::types::{ActionId, Belief};

/// A fixed-length open-loop action sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<ActionId>,
}

impl Policy {
    pub fn new(actions: Vec<ActionId>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidArgument("empty policy".into()));
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn first(&self) -> ActionId {
        self.actions[0]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.index()).collect()
    }
}

/// All `n_actions^horizon` policies in lexicographic order.
///
/// Enumeration is exponential in the horizon, so the count is checked
/// against `cap` up front; exceeding it is a configuration error rather
/// than a silent truncation.
pub fn enumerate_policies(n_actions: usize, horizon: usize, cap: usize) -> Result<Vec<Policy>> {
    if n_actions == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "policy enumeration needs n_actions >= 1 and horizon >= 1".into(),
        ));
    }
    if cap < n_actions {
        return Err(Error::Config(format!(
            "policy cap {cap} is below the action count {n_actions}"
        )));
    }
    let mut count: usize = 1;
    for _ in 0..horizon {
        count = match count.checked_mul(n_actions) {
            Some(c) if c <= cap => c,
            _ => {
                return Err(Error::Config(format!(
                    "{n_actions}^{horizon} policies exceed the cap of {cap}; lower the horizon"
                )))
            }
        };
    }
    let mut policies = Vec::with_capacity(count);
    let mut digits = vec![0usize; horizon];
    loop {
        policies.push(Policy {
            actions: digits.iter().map(|&d| ActionId(d)).collect(),
        });
        // Increment the least significant digit last so the output is
        // lexicographic in the action sequence.
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return Ok(policies);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < n_actions {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Predicted state beliefs and observation distributions along a policy.
#[derive(Debug, Clone)]
pub struct Rollout {
    /// `state_beliefs[t]` is `Q(s_{t+1} | policy)` after `t + 1` actions.
    pub state_beliefs: Vec<Belief>,
    /// `obs_dists[t] = A · state_beliefs[t]`, including the dispreferred
    /// observation slot.
    pub obs_dists: Vec<Array1<f64>>,
}

/// Push a belief through `B` along the policy, recording predicted
/// observation distributions after each step.
pub fn rollout(model: &AifModel, belief: &Belief, policy: &Policy) -> Rollout {
    let n = model.n_states() + 1;
    let n_obs = model.n_obs() + 1;
    debug_assert_eq!(belief.len(), n);
    let mut state_beliefs = Vec::with_capacity(policy.len());
    let mut obs_dists = Vec::with_capacity(policy.len());
    let mut cur = belief.clone();
    for &action in policy.actions() {
        cur = model.predict(&cur, action);
        let mut qo = Array1::zeros(n_obs);
        for o in 0..n_obs {
            let mut acc = 0.0;
            for s in 0..n {
                acc += model.likelihood()[[o, s]] * cur.probs()[s];
            }
            qo[o] = acc;
        }
        state_beliefs.push(cur.clone());
        obs_dists.push(qo);
    }
    Rollout { state_beliefs, obs_dists }
}

/// Per-step decomposition of the expected free energy of one policy.
#[derive(Debug, Clone)]
pub struct EfeBreakdown {
    /// `G = -sum(epistemic) - sum(pragmatic)`.
    pub total: f64,
    /// Expected information gain per step; non-negative.
    pub epistemic: Vec<f64>,
    /// Expected log-preference per step.
    pub pragmatic: Vec<f64>,
}

impl EfeBreakdown {
    pub fn horizon(&self) -> usize {
        self.epistemic.len()
    }
}

/// Expected free energy of a policy from a belief.
///
/// Per step, the epistemic term is the expected KL divergence between the
/// observation-conditioned posterior and the predicted state belief, taken
/// under the predicted observation distribution (zero-probability outcomes
/// contribute nothing). The pragmatic term is the expected state
/// log-preference. The total accumulates `-epistemic - pragmatic`, so lower
/// is better.
pub fn efe(model: &AifModel, belief: &Belief, policy: &Policy) -> EfeBreakdown {
    let roll = rollout(model, belief, policy);
    let n = model.n_states() + 1;
    let n_obs = model.n_obs() + 1;
    let mut epistemic = Vec::with_capacity(policy.len());
    let mut pragmatic = Vec::with_capacity(policy.len());
    let mut total = 0.0;

    for t in 0..policy.len() {
        let qs = roll.state_beliefs[t].probs();
        let qo = &roll.obs_dists[t];

        let mut info = 0.0;
        for o in 0..n_obs {
            let po = qo[o];
            if po <= 0.0 {
                continue;
            }
            // KL[Q(s|o) || Q(s)] with Q(s|o) = A[o,s] Q(s) / Q(o).
            let mut kl = 0.0;
            for s in 0..n {
                let joint = model.likelihood()[[o, s]] * qs[s];
                if joint <= 0.0 {
                    continue;
                }
                let post = joint / po;
                kl += post * (post / qs[s]).ln();
            }
            info += po * kl;
        }

        let mut pref = 0.0;
        for s in 0..n {
            if qs[s] > 0.0 {
                pref += qs[s] * model.preferences()[s];
            }
        }

        total += -info - pref;
        epistemic.push(info);
        pragmatic.push(pref);
    }

    EfeBreakdown { total, epistemic, pragmatic }
}

/// Softmax policy posterior `Q(pi) = sigma(-gamma * G)`, computed with
/// max-subtraction for stability. `gamma = 0` yields the uniform
/// distribution regardless of the scores.
pub fn policy_posterior(g_values: &[f64], gamma: f64) -> Vec<f64> {
    assert!(!g_values.is_empty(), "no policies");
    assert!(
        g_values.iter().all(|g| g.is_finite()),
        "expected free energies must be finite"
    );
    let scored: Vec<f64> = g_values.iter().map(|&g| -gamma * g).collect();
    let max = scored.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scored.iter().map(|&x| (x - max).exp()).collect();
    let z: f64 = out.iter().sum();
    for q in &mut out {
        *q /= z;
    }
    out
}
