//! Goal distances over the transition support and distance-shaped
//! preferences.

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::AifModel;

/// Minimum number of actions from each state to the nearest goal state,
/// measured over the directed support graph of the transition tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    dist: Vec<u32>,
    sentinel: u32,
    support_eps_bits: u64,
}

impl DistanceMap {
    /// Distance of a state; equals [`DistanceMap::sentinel`] when the state
    /// cannot reach any goal.
    pub fn dist(&self, state: usize) -> u32 {
        self.dist[state]
    }

    pub fn distances(&self) -> &[u32] {
        &self.dist
    }

    /// One more than the largest finite distance.
    pub fn sentinel(&self) -> u32 {
        self.sentinel
    }

    /// Support cutoff the map was built with.
    pub fn support_eps(&self) -> f64 {
        f64::from_bits(self.support_eps_bits)
    }
}

impl AifModel {
    /// Multi-source reverse breadth-first search from the goal states over
    /// edges `(s -> s')` present whenever some action moves mass above
    /// `support_eps`. The dispreferred state is always assigned the
    /// unreachable sentinel.
    pub fn distance_map(&self, goals: &[usize], support_eps: f64) -> Result<DistanceMap> {
        if goals.is_empty() {
            return Err(Error::InvalidArgument("empty goal state set".into()));
        }
        let n = self.n_states + 1;
        let sd = self.dispreferred_index();
        for &g in goals {
            if g >= self.n_states {
                return Err(Error::InvalidArgument(format!(
                    "goal state {g} out of range (n_states = {})",
                    self.n_states
                )));
            }
        }

        // Reverse adjacency over the support graph.
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for a in 0..self.n_actions {
            for s in 0..n {
                for sp in 0..n {
                    if self.b[[a, s, sp]] > support_eps && s != sp {
                        rev[sp].push(s);
                    }
                }
            }
        }

        const UNSEEN: u32 = u32::MAX;
        let mut dist = vec![UNSEEN; n];
        let mut queue = VecDeque::new();
        for &g in goals {
            if dist[g] == UNSEEN {
                dist[g] = 0;
                queue.push_back(g);
            }
        }
        let mut max_finite = 0u32;
        while let Some(s) = queue.pop_front() {
            for &p in &rev[s] {
                if dist[p] == UNSEEN {
                    dist[p] = dist[s] + 1;
                    max_finite = max_finite.max(dist[p]);
                    queue.push_back(p);
                }
            }
        }
        let sentinel = max_finite + 1;
        for d in dist.iter_mut() {
            if *d == UNSEEN {
                *d = sentinel;
            }
        }
        dist[sd] = sentinel;
        Ok(DistanceMap { dist, sentinel, support_eps_bits: support_eps.to_bits() })
    }

    /// Shape preferences from a distance map: goal states keep preference
    /// zero, every other state gets `-scale * distance`, and the
    /// dispreferred state sits at `-scale * sentinel`, below every state
    /// that can reach a goal.
    pub fn with_preference(&self, dmap: &DistanceMap, scale: f64) -> Result<AifModel> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "preference scale {scale} must be positive"
            )));
        }
        if dmap.dist.len() != self.n_states + 1 {
            return Err(Error::InvalidArgument(
                "distance map does not match the model".into(),
            ));
        }
        let mut next = self.clone();
        for s in 0..=self.n_states {
            next.c[s] = -scale * dmap.dist[s] as f64;
        }
        next.c[self.dispreferred_index()] = -scale * dmap.sentinel as f64;
        next.conversion.preference_scale = Some(scale);
        next.conversion.support_eps = Some(dmap.support_eps());
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cscg::CloneHmm;
    use crate::types::ObsId;

    /// Deterministic 4-cycle, one action, one clone per symbol.
    fn cycle_aif() -> AifModel {
        let mut m = CloneHmm::with_clone_counts(&[1, 1, 1, 1], 1, 0).unwrap();
        m.trans.fill(0.0);
        for i in 0..4 {
            m.trans[[0, i, (i + 1) % 4]] = 1.0;
        }
        AifModel::from_clone_hmm(&m).unwrap()
    }

    #[test]
    fn cycle_distances_match_hand_enumeration() {
        let aif = cycle_aif();
        let dmap = aif.distance_map(&[0], 1e-3).unwrap();
        // Goal 0; the cycle runs 0->1->2->3->0, so walking distance to 0 is
        // 0,3,2,1 for states 0..4.
        assert_eq!(&dmap.distances()[..4], &[0, 3, 2, 1]);
        assert_eq!(dmap.sentinel(), 4);
        assert_eq!(dmap.dist(aif.dispreferred_index()), 4);
    }

    #[test]
    fn all_goals_all_zero() {
        let aif = cycle_aif();
        let dmap = aif.distance_map(&[0, 1, 2, 3], 1e-3).unwrap();
        assert_eq!(&dmap.distances()[..4], &[0, 0, 0, 0]);
        assert_eq!(dmap.sentinel(), 1);
    }

    #[test]
    fn bellman_property_holds() {
        let m = CloneHmm::new(3, 2, 2, 31).unwrap();
        let aif = AifModel::from_clone_hmm(&m).unwrap();
        let eps = 1e-3;
        let dmap = aif.distance_map(&[0, 4], eps).unwrap();
        let n = aif.n_states() + 1;
        for s in 0..n {
            if dmap.dist(s) == 0 || dmap.dist(s) == dmap.sentinel() {
                continue;
            }
            let mut best = u32::MAX;
            for a in 0..aif.n_actions() {
                for sp in 0..n {
                    if aif.transitions()[[a, s, sp]] > eps && s != sp {
                        best = best.min(dmap.dist(sp));
                    }
                }
            }
            assert_eq!(dmap.dist(s), best + 1, "state {s} violates Bellman");
        }
    }

    #[test]
    fn preference_follows_negative_distance() {
        let aif = cycle_aif();
        let dmap = aif.distance_map(&[0], 1e-3).unwrap();
        let prefd = aif.with_preference(&dmap, 1.0).unwrap();
        let c = prefd.preferences();
        assert_eq!(c[0], 0.0);
        assert_eq!(c[1], -3.0);
        assert_eq!(c[2], -2.0);
        assert_eq!(c[3], -1.0);
        assert_eq!(c[prefd.dispreferred_index()], -4.0);
    }

    #[test]
    fn all_goal_preferences_zero_except_dispreferred() {
        let aif = cycle_aif();
        let dmap = aif.distance_map(&[0, 1, 2, 3], 1e-3).unwrap();
        let prefd = aif.with_preference(&dmap, 2.5).unwrap();
        for s in 0..4 {
            assert_eq!(prefd.preferences()[s], 0.0);
        }
        assert_eq!(prefd.preferences()[4], -2.5);
    }

    #[test]
    fn scale_must_be_positive() {
        let aif = cycle_aif();
        let dmap = aif.distance_map(&[0], 1e-3).unwrap();
        assert!(aif.with_preference(&dmap, 0.0).is_err());
        assert!(aif.with_preference(&dmap, -1.0).is_err());
    }

    #[test]
    fn unreachable_states_take_the_sentinel() {
        // Two disconnected self-loop pairs: 0->1->0 and 2->3->2.
        let mut m = CloneHmm::with_clone_counts(&[1, 1, 1, 1], 1, 0).unwrap();
        m.trans.fill(0.0);
        m.trans[[0, 0, 1]] = 1.0;
        m.trans[[0, 1, 0]] = 1.0;
        m.trans[[0, 2, 3]] = 1.0;
        m.trans[[0, 3, 2]] = 1.0;
        let aif = AifModel::from_clone_hmm(&m).unwrap();
        let dmap = aif.distance_map(&[0], 1e-3).unwrap();
        assert_eq!(dmap.dist(0), 0);
        assert_eq!(dmap.dist(1), 1);
        assert_eq!(dmap.sentinel(), 2);
        assert_eq!(dmap.dist(2), 2);
        assert_eq!(dmap.dist(3), 2);
        let _ = ObsId(0);
    }
}
