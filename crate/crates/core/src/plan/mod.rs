//! Agents: random baseline, greedy clone-graph planner, and the
//! expected-free-energy planner.
//!
//! All three sit behind one contract: `reset` takes the first observation
//! of an episode, `observe` folds an `(action, observation)` pair into the
//! internal belief, and `act` returns the next action. Agents are stateful
//! and single-threaded; run one instance per trial.

mod aif_agent;
mod efe;
mod greedy;
mod random;

pub use aif_agent::{AifAgent, AifConfig};
pub use efe::{
    efe, enumerate_policies, policy_posterior, rollout, EfeBreakdown, Policy, Rollout,
};
pub use greedy::{greedy_plan, GreedyAgent, GreedyConfig, GreedyPlanOutcome};
pub use random::RandomAgent;

use crate::types::{ActionId, ObsId};

/// How the next action is drawn from the planner's action distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSelection {
    /// Sample from the distribution (default).
    Sample,
    /// Deterministically take the highest-probability action, lowest index
    /// on ties.
    Argmax,
}

impl Default for ActionSelection {
    fn default() -> Self {
        ActionSelection::Sample
    }
}

/// Per-step diagnostics for traces and debugging.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct DecisionInfo {
    /// Entropy of the agent's belief when it acted.
    pub belief_entropy: f64,
    /// Minimum expected free energy across evaluated policies, if any.
    pub g_min: Option<f64>,
    /// Action indices of the minimizing (or chosen) policy, if any.
    pub chosen_policy: Option<Vec<usize>>,
    /// True when the agent fell back to a random action.
    pub fallback: bool,
}

/// Common contract for all agents.
pub trait Agent: Send {
    fn name(&self) -> &str;

    /// Start a new episode from its first observation.
    fn reset(&mut self, obs: ObsId);

    /// Fold the executed action and resulting observation into the belief.
    fn observe(&mut self, action: ActionId, obs: ObsId);

    /// Plan and return the next action.
    fn act(&mut self) -> ActionId;

    /// Diagnostics for the most recent `act` call.
    fn last_decision(&self) -> Option<&DecisionInfo> {
        None
    }
}
