//! Greedy planning directly on the clone graph.
//!
//! For every state the belief puts mass on, forward max-product messages
//! propagate over the transition support until a goal state first receives
//! probability; backtracking then recovers the action sequence. The agent
//! adopts the plan of a start state sampled from its belief, or of the
//! argmax state once the belief has collapsed.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cscg::CloneHmm;
use crate::error::Result;
use crate::types::{ActionId, Belief, ObsId};

use super::{Agent, DecisionInfo, Policy};

/// Belief entries below this threshold are not planned for.
pub const BELIEF_SUPPORT_EPS: f64 = 1e-9;

/// Configuration of the greedy planner and agent.
#[derive(Debug, Clone)]
pub struct GreedyConfig {
    /// Belief mass above which the belief counts as collapsed to a single
    /// state, switching to that state's plan deterministically.
    pub collapse_threshold: f64,
    /// Transition probabilities at or below this do not count as edges.
    pub support_eps: f64,
    /// Plan length budget; `None` uses the state count.
    pub max_plan_len: Option<usize>,
    /// Keep executing the current plan until an observation contradicts
    /// its predicted observation sequence, instead of replanning each step.
    pub commit_until_contradicted: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            collapse_threshold: 0.99,
            support_eps: crate::aif::DEFAULT_SUPPORT_EPS,
            max_plan_len: None,
            commit_until_contradicted: false,
        }
    }
}

/// Result of one planning pass.
#[derive(Debug, Clone)]
pub struct GreedyPlanOutcome {
    /// The adopted plan, when the sampled start state has one.
    pub chosen: Option<Policy>,
    /// Observations predicted along the adopted plan (one per action).
    pub chosen_expected_obs: Option<Vec<ObsId>>,
    /// The start state whose plan was adopted.
    pub sampled_state: Option<usize>,
    /// Every planned-for start state with the policy found from it.
    pub per_state: BTreeMap<usize, Policy>,
}

/// Forward max-product search from a single start state. Returns the action
/// sequence and the visited state path (excluding the start) of the
/// highest-probability path among those reaching a goal at the earliest
/// possible depth, or `None` within the budget. A start state already in
/// the goal set yields `None`: there is nothing to plan.
fn plan_from_state(
    model: &CloneHmm,
    start: usize,
    goals: &[usize],
    support_eps: f64,
    max_len: usize,
) -> Option<(Vec<ActionId>, Vec<usize>)> {
    if goals.binary_search(&start).is_ok() {
        return None;
    }
    let n = model.n_states();
    let n_actions = model.n_actions();
    let mut value = vec![0.0_f64; n];
    value[start] = 1.0;
    // Backpointers per depth: (predecessor, action).
    let mut back: Vec<Vec<(u32, u8)>> = Vec::new();

    for _depth in 0..max_len {
        let mut next = vec![0.0_f64; n];
        let mut ptr = vec![(u32::MAX, 0u8); n];
        for i in 0..n {
            let v = value[i];
            if v <= 0.0 {
                continue;
            }
            for a in 0..n_actions {
                let row = model.trans().slice(ndarray::s![a, i, ..]);
                let row = row.as_slice().expect("row-major layout");
                for (j, &p) in row.iter().enumerate() {
                    if p <= support_eps {
                        continue;
                    }
                    let cand = v * p;
                    if cand > next[j] {
                        next[j] = cand;
                        ptr[j] = (i as u32, a as u8);
                    }
                }
            }
        }
        back.push(ptr);

        // First depth at which any goal holds mass wins.
        let mut best_goal = None;
        let mut best_v = 0.0;
        for &g in goals {
            if next[g] > best_v {
                best_v = next[g];
                best_goal = Some(g);
            }
        }
        if let Some(goal) = best_goal {
            let mut actions = Vec::with_capacity(back.len());
            let mut states = Vec::with_capacity(back.len());
            let mut cur = goal;
            for layer in back.iter().rev() {
                let (prev, a) = layer[cur];
                actions.push(ActionId(a as usize));
                states.push(cur);
                cur = prev as usize;
            }
            actions.reverse();
            states.reverse();
            return Some((actions, states));
        }
        if next.iter().all(|&v| v <= 0.0) {
            return None;
        }
        value = next;
    }
    None
}

/// Plan for every start state the belief supports, then adopt one plan by
/// sampling a start state from the belief (or taking the argmax state when
/// the belief has collapsed past `cfg.collapse_threshold`).
pub fn greedy_plan(
    model: &CloneHmm,
    belief: &Belief,
    goals: &[usize],
    cfg: &GreedyConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GreedyPlanOutcome> {
    if goals.is_empty() {
        return Err(crate::error::Error::InvalidArgument(
            "empty goal state set".into(),
        ));
    }
    let mut goals_sorted = goals.to_vec();
    goals_sorted.sort_unstable();
    let max_len = cfg.max_plan_len.unwrap_or_else(|| model.n_states());

    let mut per_state = BTreeMap::new();
    let mut paths: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (s, &p) in belief.probs().iter().enumerate() {
        if p <= BELIEF_SUPPORT_EPS {
            continue;
        }
        if let Some((actions, states)) =
            plan_from_state(model, s, &goals_sorted, cfg.support_eps, max_len)
        {
            per_state.insert(s, Policy::new(actions).expect("non-empty by construction"));
            paths.insert(s, states);
        }
    }

    let start = if belief.max_prob() > cfg.collapse_threshold {
        belief.argmax()
    } else {
        belief.sample(rng)
    };

    let chosen = per_state.get(&start).cloned();
    let chosen_expected_obs = paths
        .get(&start)
        .map(|states| states.iter().map(|&s| model.state_to_obs()[s]).collect());
    Ok(GreedyPlanOutcome {
        chosen,
        chosen_expected_obs,
        sampled_state: Some(start),
        per_state,
    })
}

/// The greedy clone-graph agent: Bayes filtering plus per-step replanning.
pub struct GreedyAgent {
    name: String,
    model: Arc<CloneHmm>,
    goals: Vec<usize>,
    cfg: GreedyConfig,
    belief: Belief,
    rng: ChaCha8Rng,
    committed: Option<CommittedPlan>,
    last: Option<DecisionInfo>,
    fallbacks: u64,
}

struct CommittedPlan {
    actions: std::collections::VecDeque<ActionId>,
    expected_obs: std::collections::VecDeque<ObsId>,
}

impl GreedyAgent {
    pub fn new(
        name: impl Into<String>,
        model: Arc<CloneHmm>,
        goal_obs: &[ObsId],
        cfg: GreedyConfig,
        seed: u64,
    ) -> Result<Self> {
        let goals = model.goal_states(goal_obs)?;
        let n = model.n_states();
        Ok(Self {
            name: name.into(),
            model,
            goals,
            cfg,
            belief: Belief::uniform(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            committed: None,
            last: None,
            fallbacks: 0,
        })
    }

    /// Number of times the agent fell back to a random action.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    fn random_action(&mut self) -> ActionId {
        ActionId(self.rng.gen_range(0..self.model.n_actions()))
    }
}

impl Agent for GreedyAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, obs: ObsId) {
        let clones = self.model.active_clones_of(obs);
        self.belief = if clones.is_empty() {
            Belief::uniform_over(self.model.n_states(), &self.model.active_states())
        } else {
            Belief::uniform_over(self.model.n_states(), &clones)
        };
        self.committed = None;
        self.last = None;
    }

    fn observe(&mut self, action: ActionId, obs: ObsId) {
        self.belief = self.model.filter_belief(&self.belief, action, obs);
        if let Some(plan) = &mut self.committed {
            match plan.expected_obs.pop_front() {
                Some(expected) if expected == obs => {}
                _ => self.committed = None,
            }
        }
    }

    fn act(&mut self) -> ActionId {
        let entropy = self.belief.entropy();

        if self.cfg.commit_until_contradicted {
            if let Some(plan) = &mut self.committed {
                if let Some(action) = plan.actions.pop_front() {
                    self.last = Some(DecisionInfo {
                        belief_entropy: entropy,
                        ..Default::default()
                    });
                    return action;
                }
                self.committed = None;
            }
        }

        let outcome = greedy_plan(&self.model, &self.belief, &self.goals, &self.cfg, &mut self.rng)
            .expect("goals validated at construction");
        match (outcome.chosen, outcome.chosen_expected_obs) {
            (Some(policy), expected) => {
                let action = policy.first();
                if self.cfg.commit_until_contradicted {
                    let mut actions: std::collections::VecDeque<ActionId> =
                        policy.actions().iter().copied().collect();
                    actions.pop_front();
                    let mut expected_obs: std::collections::VecDeque<ObsId> =
                        expected.unwrap_or_default().into_iter().collect();
                    expected_obs.pop_front();
                    self.committed = Some(CommittedPlan { actions, expected_obs });
                }
                self.last = Some(DecisionInfo {
                    belief_entropy: entropy,
                    chosen_policy: Some(policy.indices()),
                    ..Default::default()
                });
                action
            }
            _ => {
                // No plan from the sampled hypothesis (or already at goal):
                // take a uniformly random action.
                self.fallbacks += 1;
                log::debug!(
                    "{}: no plan from state {:?}; falling back to a random action",
                    self.name,
                    outcome.sampled_state
                );
                let action = self.random_action();
                self.last = Some(DecisionInfo {
                    belief_entropy: entropy,
                    fallback: true,
                    ..Default::default()
                });
                action
            }
        }
    }

    fn last_decision(&self) -> Option<&DecisionInfo> {
        self.last.as_ref()
    }
}
