//! The expected-free-energy agent.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aif::AifModel;
use crate::error::Result;
use crate::types::{ActionId, Belief, ObsId};

use super::efe::{efe, enumerate_policies, policy_posterior, Policy};
use super::{ActionSelection, Agent, DecisionInfo};

/// Planner parameters. `gamma` is the softmax temperature over policies and
/// `horizon` the enumeration depth; the policy count `n_actions^horizon`
/// must stay within `max_policies`.
#[derive(Debug, Clone)]
pub struct AifConfig {
    pub gamma: f64,
    pub horizon: usize,
    pub action_selection: ActionSelection,
    pub max_policies: usize,
}

impl Default for AifConfig {
    fn default() -> Self {
        Self {
            gamma: 16.0,
            horizon: 3,
            action_selection: ActionSelection::Sample,
            max_policies: 100_000,
        }
    }
}

/// Active-inference agent: Bayes filtering through the generative model,
/// full policy enumeration, and first-action marginalization over the
/// policy posterior.
pub struct AifAgent {
    name: String,
    model: Arc<AifModel>,
    cfg: AifConfig,
    policies: Vec<Policy>,
    belief: Belief,
    rng: ChaCha8Rng,
    last: Option<DecisionInfo>,
}

impl AifAgent {
    pub fn new(
        name: impl Into<String>,
        model: Arc<AifModel>,
        cfg: AifConfig,
        seed: u64,
    ) -> Result<Self> {
        if !(cfg.gamma >= 0.0) {
            return Err(crate::error::Error::Config(format!(
                "gamma {} must be >= 0",
                cfg.gamma
            )));
        }
        let policies = enumerate_policies(model.n_actions(), cfg.horizon, cfg.max_policies)?;
        let n = model.n_states() + 1;
        Ok(Self {
            name: name.into(),
            model,
            cfg,
            policies,
            belief: Belief::uniform(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
        })
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    /// Expected free energy of every enumerated policy from the current
    /// belief, in enumeration order.
    pub fn policy_scores(&self) -> Vec<f64> {
        self.policies
            .iter()
            .map(|p| efe(&self.model, &self.belief, p).total)
            .collect()
    }
}

impl Agent for AifAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, obs: ObsId) {
        self.belief = self.model.initial_belief(obs);
        self.last = None;
    }

    fn observe(&mut self, action: ActionId, obs: ObsId) {
        self.belief = self.model.filter(&self.belief, action, obs);
    }

    fn act(&mut self) -> ActionId {
        let g = self.policy_scores();
        let q = policy_posterior(&g, self.cfg.gamma);

        // Marginal distribution over the first action of each policy.
        let n_actions = self.model.n_actions();
        let mut marginal = vec![0.0_f64; n_actions];
        for (policy, &weight) in self.policies.iter().zip(&q) {
            marginal[policy.first().index()] += weight;
        }

        let action = match self.cfg.action_selection {
            ActionSelection::Argmax => {
                let mut best = 0;
                for (a, &w) in marginal.iter().enumerate() {
                    if w > marginal[best] {
                        best = a;
                    }
                }
                ActionId(best)
            }
            ActionSelection::Sample => {
                let u: f64 = self.rng.gen();
                let mut cdf = 0.0;
                let mut chosen = n_actions - 1;
                for (a, &w) in marginal.iter().enumerate() {
                    cdf += w;
                    if u < cdf {
                        chosen = a;
                        break;
                    }
                }
                ActionId(chosen)
            }
        };

        let mut g_min = f64::INFINITY;
        let mut argmin = 0;
        for (i, &v) in g.iter().enumerate() {
            if v < g_min {
                g_min = v;
                argmin = i;
            }
        }
        self.last = Some(DecisionInfo {
            belief_entropy: self.belief.entropy(),
            g_min: Some(g_min),
            chosen_policy: Some(self.policies[argmin].indices()),
            fallback: false,
        });
        action
    }

    fn last_decision(&self) -> Option<&DecisionInfo> {
        self.last.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cscg::CloneHmm;

    /// Two aliased contexts; a "peek" action resolves which one, a "commit"
    /// action pays off only in context A.
    fn two_context_model() -> AifModel {
        // symbols: 0 = home (2 clones), 1 = cue-a, 2 = cue-b, 3 = payoff.
        let mut m = CloneHmm::with_clone_counts(&[2, 1, 1, 1], 2, 0).unwrap();
        m.trans.fill(0.0);
        // action 0 = peek: home clones reveal their context then return.
        m.trans[[0, 0, 2]] = 0.5;
        m.trans[[0, 1, 3]] = 0.5;
        m.trans[[0, 2, 0]] = 1.0;
        m.trans[[0, 3, 1]] = 1.0;
        // action 1 = commit: context A reaches the payoff, context B stalls.
        m.trans[[1, 0, 4]] = 0.5;
        m.trans[[1, 1, 1]] = 0.5;
        // payoff state loops on itself under peek.
        m.trans[[0, 4, 4]] = 1.0;
        AifModel::from_clone_hmm(&m).unwrap()
    }

    #[test]
    fn pure_exploration_prefers_the_informative_action() {
        // All-zero preferences, horizon 1, large gamma: the agent must pick
        // the action with the larger one-step information gain.
        let model = Arc::new(two_context_model());
        let cfg = AifConfig {
            gamma: 64.0,
            horizon: 1,
            action_selection: ActionSelection::Argmax,
            max_policies: 100,
        };
        let mut agent = AifAgent::new("aif", model, cfg, 0).unwrap();
        agent.reset(ObsId(0));
        // Peek splits the belief onto distinct symbols (full information);
        // commit merges context B into a self-loop, which is ambiguous.
        assert_eq!(agent.act(), ActionId(0));
    }

    #[test]
    fn beliefs_match_the_model_filter_exactly() {
        let model = Arc::new(two_context_model());
        let mut agent =
            AifAgent::new("aif", model.clone(), AifConfig::default(), 3).unwrap();
        agent.reset(ObsId(0));
        let mut reference = model.initial_belief(ObsId(0));
        for &(a, o) in &[(0usize, 1usize), (0, 0), (1, 3)] {
            agent.observe(ActionId(a), ObsId(o));
            reference = model.filter(&reference, ActionId(a), ObsId(o));
        }
        for s in 0..reference.len() {
            assert!((agent.belief().probs()[s] - reference.probs()[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_seeds_reproduce_action_sequences() {
        let model = Arc::new(two_context_model());
        let run = |seed: u64| {
            let mut agent =
                AifAgent::new("aif", model.clone(), AifConfig::default(), seed).unwrap();
            agent.reset(ObsId(0));
            (0..10).map(|_| agent.act().index()).collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn horizon_overflow_propagates_as_config_error() {
        let model = Arc::new(two_context_model());
        let cfg = AifConfig { horizon: 40, max_policies: 1000, ..Default::default() };
        assert!(AifAgent::new("aif", model, cfg, 0).is_err());
    }

    #[test]
    fn decision_info_reports_g_min_and_policy() {
        let model = Arc::new(two_context_model());
        let mut agent = AifAgent::new("aif", model, AifConfig::default(), 0).unwrap();
        agent.reset(ObsId(0));
        let _ = agent.act();
        let info = agent.last_decision().unwrap();
        assert!(info.g_min.unwrap().is_finite());
        assert_eq!(info.chosen_policy.as_ref().unwrap().len(), 3);
        assert!(info.belief_entropy > 0.0);
    }
}
