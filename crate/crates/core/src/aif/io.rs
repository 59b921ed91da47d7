//! Versioned JSON format for the generative model.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ObsId;

use super::{AifModel, ConversionParams};

pub const AIF_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AifFile {
    version: u32,
    n_obs: usize,
    n_states: usize,
    /// `[n_obs + 1][n_states + 1]`
    a: Vec<Vec<f64>>,
    /// `[n_actions][n_states + 1][n_states + 1]`
    b: Vec<Vec<Vec<f64>>>,
    c: Vec<f64>,
    d: Vec<f64>,
    state_to_obs: Vec<usize>,
    conversion: ConversionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

impl AifModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with_hash(path, None)
    }

    pub fn save_with_hash(
        &self,
        path: impl AsRef<Path>,
        config_hash: Option<String>,
    ) -> Result<()> {
        let path = path.as_ref();
        let n = self.n_states + 1;
        let file = AifFile {
            version: AIF_FILE_VERSION,
            n_obs: self.n_obs,
            n_states: self.n_states,
            a: (0..=self.n_obs)
                .map(|o| (0..n).map(|s| self.a[[o, s]]).collect())
                .collect(),
            b: (0..self.n_actions)
                .map(|ac| {
                    (0..n)
                        .map(|s| (0..n).map(|sp| self.b[[ac, s, sp]]).collect())
                        .collect()
                })
                .collect(),
            c: self.c.to_vec(),
            d: self.d.to_vec(),
            state_to_obs: self.state_to_obs.iter().map(|o| o.index()).collect(),
            conversion: self.conversion.clone(),
            config_hash,
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| Error::Validation(format!("model serialization failed: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<AifModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: AifFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            offset: 0,
            message: e.to_string(),
        })?;
        if file.version != AIF_FILE_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        let n = file.n_states + 1;
        let n_actions = file.b.len();
        if n_actions == 0 {
            return Err(Error::Validation("model has no actions".into()));
        }
        if file.a.len() != file.n_obs + 1 || file.a.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("likelihood shape mismatch".into()));
        }
        if file.b.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(Error::Validation("transition shape mismatch".into()));
        }
        if file.c.len() != n || file.d.len() != n || file.state_to_obs.len() != file.n_states {
            return Err(Error::Validation("vector length mismatch".into()));
        }
        let mut a = Array2::zeros((file.n_obs + 1, n));
        for (o, row) in file.a.iter().enumerate() {
            for (s, &p) in row.iter().enumerate() {
                a[[o, s]] = p;
            }
        }
        let mut b = Array3::zeros((n_actions, n, n));
        for (ac, mat) in file.b.iter().enumerate() {
            for (s, row) in mat.iter().enumerate() {
                for (sp, &p) in row.iter().enumerate() {
                    b[[ac, s, sp]] = p;
                }
            }
        }
        let model = AifModel {
            n_obs: file.n_obs,
            n_states: file.n_states,
            n_actions,
            a,
            b,
            c: Array1::from_vec(file.c),
            d: Array1::from_vec(file.d),
            state_to_obs: file.state_to_obs.into_iter().map(ObsId).collect(),
            conversion: file.conversion,
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cscg::CloneHmm;

    #[test]
    fn aif_round_trip_preserves_everything() {
        let m = CloneHmm::new(3, 2, 2, 12).unwrap();
        let aif = AifModel::from_clone_hmm(&m).unwrap();
        let goals = aif.goal_states(&[ObsId(1)]).unwrap();
        let dmap = aif.distance_map(&goals, 1e-3).unwrap();
        let aif = aif.with_preference(&dmap, 1.5).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aif.json");
        aif.save(&path).unwrap();
        let loaded = AifModel::load(&path).unwrap();
        assert_eq!(aif, loaded);
        assert_eq!(loaded.conversion.preference_scale, Some(1.5));
    }

    #[test]
    fn corrupt_file_fails_validation() {
        let m = CloneHmm::new(2, 1, 1, 0).unwrap();
        let aif = AifModel::from_clone_hmm(&m).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aif.json");
        aif.save(&path).unwrap();
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        v["b"][0][0][0] = serde_json::json!(0.9);
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        assert!(matches!(AifModel::load(&path), Err(Error::Validation(_))));
    }
}
