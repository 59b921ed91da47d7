//! Viterbi decoding and model refinement.

use ndarray::Array3;

use crate::error::{Error, Result};

use super::{CloneHmm, TrajectoryData};

/// Options for [`CloneHmm::refine_viterbi`].
#[derive(Debug, Clone)]
pub struct RefineOptions {
    /// When true (the default) transition probabilities are re-estimated
    /// from the decoded path counts. When false only the active mask is
    /// updated and surviving rows are renormalized.
    pub reestimate: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { reestimate: true }
    }
}

impl CloneHmm {
    /// Maximum-probability hidden state path for the data, decoded per
    /// episode in log space. Ties are broken toward the lowest state index.
    pub fn viterbi_decode(&self, data: &TrajectoryData) -> Result<Vec<usize>> {
        data.validate_against(self.n_obs, self.n_actions)?;
        let blocks = self.block_index();
        let mut path = Vec::with_capacity(data.len());
        for (obs, actions) in data.episodes() {
            self.viterbi_episode(&blocks, obs, actions, &mut path)?;
        }
        Ok(path)
    }

    fn viterbi_episode(
        &self,
        blocks: &[Vec<usize>],
        obs: &[crate::types::ObsId],
        actions: &[crate::types::ActionId],
        out: &mut Vec<usize>,
    ) -> Result<()> {
        let len = obs.len();
        let first = &blocks[obs[0].index()];
        if first.is_empty() {
            return Err(Error::DecodeFailure(format!(
                "symbol {} has no active clones",
                obs[0]
            )));
        }
        let init = -(first.len() as f64).ln();
        let mut delta: Vec<f64> = vec![init; first.len()];
        // Backpointers into the previous block, per step from t=1.
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(len.saturating_sub(1));

        for t in 0..len - 1 {
            let bi = &blocks[obs[t].index()];
            let bj = &blocks[obs[t + 1].index()];
            if bj.is_empty() {
                return Err(Error::DecodeFailure(format!(
                    "symbol {} has no active clones",
                    obs[t + 1]
                )));
            }
            let a = actions[t].index();
            let mut next = vec![f64::NEG_INFINITY; bj.len()];
            let mut ptr = vec![0usize; bj.len()];
            for (ii, &gi) in bi.iter().enumerate() {
                if delta[ii] == f64::NEG_INFINITY {
                    continue;
                }
                let row = self.trans.slice(ndarray::s![a, gi, ..]);
                let row = row.as_slice().expect("row-major layout");
                for (jj, &gj) in bj.iter().enumerate() {
                    let p = row[gj];
                    if p <= 0.0 {
                        continue;
                    }
                    let v = delta[ii] + p.ln();
                    // Strict improvement with ascending scan keeps the
                    // lowest-index predecessor on exact ties.
                    if v > next[jj] {
                        next[jj] = v;
                        ptr[jj] = ii;
                    }
                }
            }
            if next.iter().all(|&v| v == f64::NEG_INFINITY) {
                return Err(Error::DecodeFailure(format!(
                    "zero-probability step at offset {t} of an episode"
                )));
            }
            delta = next;
            back.push(ptr);
        }

        // Lowest-index argmax at the episode end.
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for (jj, &v) in delta.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = jj;
            }
        }
        if best_v == f64::NEG_INFINITY {
            return Err(Error::DecodeFailure("no admissible path".into()));
        }

        let mut rev = Vec::with_capacity(len);
        let mut cur = best;
        for t in (0..len).rev() {
            rev.push(blocks[obs[t].index()][cur]);
            if t > 0 {
                cur = back[t - 1][cur];
            }
        }
        rev.reverse();
        out.extend(rev);
        Ok(())
    }

    /// Log-probability of one specific hidden state path under the episode
    /// start convention, `-inf` if the path is inconsistent with the data
    /// or the transition support.
    pub fn path_log_prob(&self, data: &TrajectoryData, path: &[usize]) -> Result<f64> {
        data.validate_against(self.n_obs, self.n_actions)?;
        if path.len() != data.len() {
            return Err(Error::InvalidArgument(format!(
                "path length {} != data length {}",
                path.len(),
                data.len()
            )));
        }
        let mut total = 0.0;
        let mut offset = 0;
        for (obs, actions) in data.episodes() {
            let seg = &path[offset..offset + obs.len()];
            offset += obs.len();
            let first_block = self.active_clones_of(obs[0]);
            if first_block.is_empty() || !first_block.contains(&seg[0]) {
                return Ok(f64::NEG_INFINITY);
            }
            total -= (first_block.len() as f64).ln();
            for t in 0..obs.len() - 1 {
                let s = seg[t + 1];
                if self.state_to_obs[s] != obs[t + 1] || !self.active_mask[s] {
                    return Ok(f64::NEG_INFINITY);
                }
                let p = self.joint(actions[t].index(), seg[t], s);
                if p <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                total += p.ln();
            }
        }
        Ok(total)
    }

    /// Keep only the states used by maximum-likelihood decodings of `data`.
    ///
    /// The active mask is set exactly to the states appearing in per-episode
    /// Viterbi paths. With `reestimate` set, transition probabilities are
    /// re-estimated from the decoded path counts (no smoothing), so
    /// transitions never taken on a decoded path drop to zero and states
    /// with no outgoing decoded transition (episode-terminal roles) end up
    /// with all-zero rows, which downstream conversion treats as "every
    /// action unavailable".
    pub fn refine_viterbi(&self, data: &TrajectoryData, opts: &RefineOptions) -> Result<CloneHmm> {
        let path = self.viterbi_decode(data)?;
        let n_states = self.n_states();
        let mut used = vec![false; n_states];
        for &s in &path {
            used[s] = true;
        }

        let mut refined = self.clone();
        refined.active_mask = used;

        if opts.reestimate {
            let mut counts = Array3::<f64>::zeros((self.n_actions, n_states, n_states));
            let mut offset = 0;
            for (obs, actions) in data.episodes() {
                let seg = &path[offset..offset + obs.len()];
                offset += obs.len();
                for t in 0..obs.len().saturating_sub(1) {
                    counts[[actions[t].index(), seg[t], seg[t + 1]]] += 1.0;
                }
            }
            refined.trans = counts;
            refined.normalize_rows();
        } else {
            // Mask-only mode: drop mass to and from inactive states and
            // renormalize surviving rows.
            for a in 0..refined.n_actions {
                for i in 0..n_states {
                    for j in 0..n_states {
                        if !refined.active_mask[i] || !refined.active_mask[j] {
                            refined.trans[[a, i, j]] = 0.0;
                        }
                    }
                }
            }
            refined.normalize_rows();
        }
        Ok(refined)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cscg::em::sample_walk;
    use crate::cscg::test_util;
    use crate::types::{ActionId, ObsId};

    fn seq(obs: &[usize], acts: &[usize]) -> TrajectoryData {
        TrajectoryData::continuous(
            obs.iter().map(|&o| ObsId(o)).collect(),
            acts.iter().map(|&a| ActionId(a)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_model_decodes_unique_path() {
        let m = test_util::deterministic_cycle(3);
        let data = seq(&[0, 1, 2, 0], &[0, 0, 0]);
        assert_eq!(m.viterbi_decode(&data).unwrap(), vec![0, 1, 2, 0]);
    }

    #[test]
    fn impossible_sequence_is_a_decode_failure() {
        let m = test_util::deterministic_cycle(3);
        let data = seq(&[0, 2], &[0]);
        assert!(matches!(m.viterbi_decode(&data), Err(Error::DecodeFailure(_))));
    }

    #[test]
    fn exact_ties_pick_the_lowest_state_index() {
        // Two interchangeable clones of symbol 1 with identical rows.
        let mut m = CloneHmm::with_clone_counts(&[1, 2], 1, 0).unwrap();
        m.trans.fill(0.0);
        m.trans[[0, 0, 1]] = 0.5;
        m.trans[[0, 0, 2]] = 0.5;
        m.trans[[0, 1, 0]] = 1.0;
        m.trans[[0, 2, 0]] = 1.0;
        let data = seq(&[0, 1, 0, 1], &[0, 0, 0]);
        assert_eq!(m.viterbi_decode(&data).unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn decoded_path_attains_enumerated_maximum() {
        let m = {
            let mut m = CloneHmm::with_clone_counts(&[2, 2], 2, 3).unwrap();
            // Random-but-normalized model is fine for the oracle check.
            m.normalize_rows();
            m
        };
        let (obs, actions) = sample_walk(&m, 5, 11);
        let data = TrajectoryData::continuous(obs, actions).unwrap();
        let path = m.viterbi_decode(&data).unwrap();
        let decoded_lp = m.path_log_prob(&data, &path).unwrap();

        // Exhaustive: every assignment of clone states to the sequence.
        let mut best = f64::NEG_INFINITY;
        let len = data.len();
        let choices: Vec<Vec<usize>> = data
            .observations()
            .iter()
            .map(|&o| m.active_clones_of(o))
            .collect();
        let mut idx = vec![0usize; len];
        loop {
            let cand: Vec<usize> =
                (0..len).map(|t| choices[t][idx[t]]).collect();
            let lp = m.path_log_prob(&data, &cand).unwrap();
            if lp > best {
                best = lp;
            }
            // Odometer increment.
            let mut t = 0;
            loop {
                if t == len {
                    break;
                }
                idx[t] += 1;
                if idx[t] < choices[t].len() {
                    break;
                }
                idx[t] = 0;
                t += 1;
            }
            if t == len {
                break;
            }
        }
        assert!(
            (decoded_lp - best).abs() < 1e-10,
            "viterbi {decoded_lp} vs enumerated max {best}"
        );
    }

    #[test]
    fn refine_is_a_fixed_point_on_minimal_models() {
        let m = test_util::deterministic_cycle(4);
        let data = seq(&[0, 1, 2, 3, 0, 1, 2, 3, 0], &[0; 8]);
        let refined = m.refine_viterbi(&data, &RefineOptions::default()).unwrap();
        assert_eq!(refined.active_mask, vec![true; 4]);
        assert_eq!(refined.trans, m.trans);
    }

    #[test]
    fn refine_masks_unused_clones() {
        let truth = test_util::aliased_two_symbol();
        let (obs, actions) = sample_walk(&truth, 300, 21);
        let data = TrajectoryData::continuous(obs, actions).unwrap();
        // Train an oversized model, then refine.
        let big = CloneHmm::with_clone_counts(&[4, 4], 1, 5).unwrap();
        let trained = big
            .train_em(&data, &super::super::EmOptions { max_iters: 60, pseudocount: 1e-3, tol: 0.0 })
            .unwrap()
            .model;
        let refined = trained.refine_viterbi(&data, &RefineOptions::default()).unwrap();
        let kept = refined.n_active_states();
        assert!(kept < 8, "refinement kept all {kept} states");
        refined.validate().unwrap();
        // Decoding still works on the refined model.
        refined.viterbi_decode(&data).unwrap();
    }

    #[test]
    fn single_state_model_keeps_full_mask() {
        let m = CloneHmm::new(1, 1, 1, 0).unwrap();
        let data = seq(&[0, 0, 0], &[0, 0]);
        let refined = m.refine_viterbi(&data, &RefineOptions::default()).unwrap();
        assert_eq!(refined.active_mask, vec![true]);
    }

    #[test]
    fn mask_only_mode_preserves_relative_mass() {
        let mut m = CloneHmm::with_clone_counts(&[1, 2], 1, 0).unwrap();
        m.trans.fill(0.0);
        m.trans[[0, 0, 1]] = 0.75;
        m.trans[[0, 0, 2]] = 0.25;
        m.trans[[0, 1, 0]] = 1.0;
        m.trans[[0, 2, 0]] = 1.0;
        let data = seq(&[0, 1, 0, 1, 0], &[0; 4]);
        let refined = m
            .refine_viterbi(&data, &RefineOptions { reestimate: false })
            .unwrap();
        // State 2 never appears on the decoded path.
        assert_eq!(refined.active_mask, vec![true, true, false]);
        assert!((refined.joint(0, 0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(refined.joint(0, 0, 2), 0.0);
    }
}
