//! Uniform random-walk data collection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cscg::TrajectoryData;
use crate::error::{Error, Result};
use crate::types::ActionId;

use super::GridEnv;

/// How much data to collect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectSpec {
    /// One continuous walk of `n` observation-action pairs (episode
    /// termination is ignored; the walk just keeps moving).
    Steps(usize),
    /// `n` episodes, each ended by the environment or by its step cap.
    Episodes(usize),
}

/// Drive the environment with uniformly random actions.
///
/// Continuous walks reset the environment once (seed `seed`) and record
/// `n` pairs. Episodic collection resets with `seed + k` for episode `k`
/// and records an episode boundary at each restart.
pub fn collect_random_walk(
    env: &mut dyn GridEnv,
    spec: CollectSpec,
    seed: u64,
) -> Result<TrajectoryData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n_actions = env.n_actions();

    match spec {
        CollectSpec::Steps(n) => {
            if n == 0 {
                return Err(Error::InvalidArgument("zero steps requested".into()));
            }
            let mut obs = Vec::with_capacity(n + 1);
            let mut actions = Vec::with_capacity(n);
            obs.push(env.reset(seed));
            for _ in 0..n {
                let a = ActionId(rng.gen_range(0..n_actions));
                let r = env.step(a)?;
                actions.push(a);
                obs.push(r.obs);
            }
            TrajectoryData::continuous(obs, actions)
        }
        CollectSpec::Episodes(n) => {
            if n == 0 {
                return Err(Error::InvalidArgument("zero episodes requested".into()));
            }
            let mut obs = Vec::new();
            let mut actions = Vec::new();
            let mut boundaries = Vec::with_capacity(n);
            for episode in 0..n as u64 {
                boundaries.push(obs.len());
                if episode > 0 {
                    // Dead action slot crossing the episode boundary.
                    actions.push(ActionId(0));
                }
                obs.push(env.reset(seed + episode));
                loop {
                    let a = ActionId(rng.gen_range(0..n_actions));
                    let r = env.step(a)?;
                    actions.push(a);
                    obs.push(r.obs);
                    if r.done {
                        break;
                    }
                }
            }
            TrajectoryData::new(obs, actions, boundaries)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{AmbiguousMaze, OpenRoom, TMaze};

    #[test]
    fn steps_mode_counts_pairs() {
        let mut env = OpenRoom::new(usize::MAX);
        let data = collect_random_walk(&mut env, CollectSpec::Steps(500), 0).unwrap();
        assert_eq!(data.len(), 501);
        assert_eq!(data.actions().len(), 500);
        assert!(data.boundaries().is_empty());
    }

    #[test]
    fn steps_mode_keeps_walking_past_goal_hits() {
        // The walk must not truncate when the random agent stumbles onto a
        // goal observation.
        let mut env = AmbiguousMaze::new(usize::MAX).unwrap();
        let data = collect_random_walk(&mut env, CollectSpec::Steps(2000), 3).unwrap();
        assert_eq!(data.len(), 2001);
        let green = env.registry().expect("green");
        assert!(data.observations().contains(&green));
    }

    #[test]
    fn episodes_mode_records_one_boundary_per_episode() {
        let mut env = TMaze::new(50);
        let data = collect_random_walk(&mut env, CollectSpec::Episodes(40), 7).unwrap();
        assert_eq!(data.boundaries().len(), 40);
        assert_eq!(data.boundaries()[0], 0);
        // Every episode is at most cap + 1 observations.
        for (obs, acts) in data.episodes() {
            assert!(obs.len() <= 51);
            assert_eq!(acts.len(), obs.len() - 1);
        }
    }

    #[test]
    fn zero_requests_are_invalid() {
        let mut env = OpenRoom::new(25);
        assert!(collect_random_walk(&mut env, CollectSpec::Steps(0), 0).is_err());
        assert!(collect_random_walk(&mut env, CollectSpec::Episodes(0), 0).is_err());
    }

    #[test]
    fn collection_is_reproducible() {
        let mut a = TMaze::new(50);
        let mut b = TMaze::new(50);
        let da = collect_random_walk(&mut a, CollectSpec::Episodes(10), 5).unwrap();
        let db = collect_random_walk(&mut b, CollectSpec::Episodes(10), 5).unwrap();
        assert_eq!(da, db);
    }
}
