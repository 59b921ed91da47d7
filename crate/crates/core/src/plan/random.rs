//! Uniform random baseline agent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::{ActionId, ObsId};

use super::{Agent, DecisionInfo};

pub struct RandomAgent {
    name: String,
    n_actions: usize,
    rng: ChaCha8Rng,
    last: Option<DecisionInfo>,
}

impl RandomAgent {
    pub fn new(name: impl Into<String>, n_actions: usize, seed: u64) -> Self {
        assert!(n_actions > 0, "need at least one action");
        Self {
            name: name.into(),
            n_actions,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, _obs: ObsId) {}

    fn observe(&mut self, _action: ActionId, _obs: ObsId) {}

    fn act(&mut self) -> ActionId {
        let action = ActionId(self.rng.gen_range(0..self.n_actions));
        self.last = Some(DecisionInfo::default());
        action
    }

    fn last_decision(&self) -> Option<&DecisionInfo> {
        self.last.as_ref()
    }
}
