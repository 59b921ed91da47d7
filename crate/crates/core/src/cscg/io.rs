//! Model and trajectory file formats.
//!
//! Model files are versioned JSON documents; probabilities round-trip
//! bit-exactly because serde_json prints the shortest representation that
//! parses back to the same 64-bit float. Trajectory files are JSON lines,
//! one `{obs, action}` object per step with `action: null` marking episode
//! starts.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ActionId, ObsId};

use super::{CloneHmm, TrajectoryData};

/// Current model file schema version.
pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    n_obs: usize,
    clones_per_obs: Vec<usize>,
    state_to_obs: Vec<usize>,
    active_mask: Vec<bool>,
    /// Nested `[action][from][to]`.
    trans: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

/// Translate a serde_json error position (1-based line/column) into a byte
/// offset within `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut remaining = line - 1;
    let mut offset = 0;
    for (i, b) in text.bytes().enumerate() {
        if remaining == 0 {
            return (i + column.saturating_sub(1)).min(text.len());
        }
        if b == b'\n' {
            remaining -= 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(text.len())
}

fn parse_error(text: &str, err: &serde_json::Error) -> Error {
    Error::Parse {
        offset: byte_offset(text, err.line(), err.column()),
        message: err.to_string(),
    }
}

impl CloneHmm {
    /// Serialize to the versioned JSON model format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with_hash(path, None)
    }

    /// Serialize with an optional provenance hash of the producing config.
    pub fn save_with_hash(
        &self,
        path: impl AsRef<Path>,
        config_hash: Option<String>,
    ) -> Result<()> {
        let path = path.as_ref();
        let (n_a, n_s) = (self.n_actions, self.n_states());
        let mut trans = vec![vec![vec![0.0; n_s]; n_s]; n_a];
        for a in 0..n_a {
            for i in 0..n_s {
                for j in 0..n_s {
                    trans[a][i][j] = self.trans[[a, i, j]];
                }
            }
        }
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            n_obs: self.n_obs,
            clones_per_obs: self.clones_per_obs.clone(),
            state_to_obs: self.state_to_obs.iter().map(|o| o.index()).collect(),
            active_mask: self.active_mask.clone(),
            trans,
            config_hash,
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| Error::Validation(format!("model serialization failed: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Load and validate a model file. Parse failures carry a byte offset;
    /// structural failures name the offending row.
    pub fn load(path: impl AsRef<Path>) -> Result<CloneHmm> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| parse_error(&text, &e))?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        let n_states: usize = file.clones_per_obs.iter().sum();
        let n_actions = file.trans.len();
        if n_actions == 0 {
            return Err(Error::Validation("model has no actions".into()));
        }
        if file.n_obs != file.clones_per_obs.len() {
            return Err(Error::Validation(format!(
                "n_obs = {} but clones_per_obs has {} entries",
                file.n_obs,
                file.clones_per_obs.len()
            )));
        }
        if file.state_to_obs.len() != n_states || file.active_mask.len() != n_states {
            return Err(Error::Validation(
                "state_to_obs/active_mask length does not match the clone counts".into(),
            ));
        }
        let mut trans = Array3::zeros((n_actions, n_states, n_states));
        for (a, mat) in file.trans.iter().enumerate() {
            if mat.len() != n_states {
                return Err(Error::Validation(format!(
                    "action {a} transition matrix has {} rows, expected {n_states}",
                    mat.len()
                )));
            }
            for (i, row) in mat.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::Validation(format!(
                        "action {a} row {i} has {} entries, expected {n_states}",
                        row.len()
                    )));
                }
                for (j, &p) in row.iter().enumerate() {
                    trans[[a, i, j]] = p;
                }
            }
        }
        let mut block_start = Vec::with_capacity(file.n_obs);
        let mut acc = 0;
        for &c in &file.clones_per_obs {
            block_start.push(acc);
            acc += c;
        }
        let model = CloneHmm {
            n_obs: file.n_obs,
            n_actions,
            clones_per_obs: file.clones_per_obs,
            state_to_obs: file.state_to_obs.into_iter().map(ObsId).collect(),
            block_start,
            trans,
            active_mask: file.active_mask,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryLine {
    obs: usize,
    action: Option<usize>,
}

impl TrajectoryData {
    /// Write as JSON lines. Line `t` holds observation `t` and the action
    /// that led into it (`null` at episode starts, including line 0).
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let obs = self.observations();
        let actions = self.actions();
        let starts: Vec<usize> =
            if self.boundaries().is_empty() { vec![0] } else { self.boundaries().to_vec() };
        let mut next_start = 0usize;
        for (t, o) in obs.iter().enumerate() {
            let is_start = next_start < starts.len() && starts[next_start] == t;
            if is_start {
                next_start += 1;
            }
            let line = TrajectoryLine {
                obs: o.index(),
                action: if is_start { None } else { Some(actions[t - 1].index()) },
            };
            serde_json::to_writer(&mut w, &line)
                .map_err(|e| Error::Validation(format!("trajectory write failed: {e}")))?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read the JSON-lines trajectory format.
    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<TrajectoryData> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut obs = Vec::new();
        let mut actions = Vec::new();
        let mut boundaries = Vec::new();
        let mut offset = 0usize;
        for (t, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let parsed: TrajectoryLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                offset: offset + byte_offset(&line, e.line(), e.column()),
                message: format!("line {t}: {e}"),
            })?;
            match parsed.action {
                None => {
                    boundaries.push(t);
                    if t > 0 {
                        // Dead placeholder for the boundary-crossing slot.
                        actions.push(ActionId(0));
                    }
                }
                Some(a) => {
                    if t == 0 {
                        return Err(Error::Validation(
                            "first trajectory line must have a null action".into(),
                        ));
                    }
                    actions.push(ActionId(a));
                }
            }
            obs.push(ObsId(parsed.obs));
            offset += line.len() + 1;
        }
        if obs.is_empty() {
            return Err(Error::Validation("empty trajectory file".into()));
        }
        TrajectoryData::new(obs, actions, boundaries)
    }
}
