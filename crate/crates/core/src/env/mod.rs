//! Deterministic, seedable gridworlds with categorical observation
//! registries.
//!
//! Every environment enumerates its full observation alphabet at
//! construction time by scanning reachable poses in a fixed order, so
//! observation ids are stable across runs and identical between data
//! collection and evaluation. Lookups of unregistered keys at run time are
//! a bug and panic.

mod collect;
mod layout;
mod maze;
mod open_room;
mod tmaze;

pub use collect::{collect_random_walk, CollectSpec};
pub use layout::{parse_layout, Cell, GridLayout, LayoutMeta};
pub use maze::AmbiguousMaze;
pub use open_room::OpenRoom;
pub use tmaze::TMaze;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ActionId, ObsId};

/// Default evaluation episode cap shared by all three environments.
pub const DEFAULT_EVAL_CAP: usize = 25;

/// Which reference environment to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    OpenRoom,
    AmbiguousMaze,
    TMaze,
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EnvKind::OpenRoom => "open_room",
            EnvKind::AmbiguousMaze => "ambiguous_maze",
            EnvKind::TMaze => "tmaze",
        };
        f.write_str(s)
    }
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepResult {
    pub obs: ObsId,
    pub done: bool,
    pub success: bool,
    /// Steps taken so far in the episode.
    pub t: u32,
}

/// Common environment interface. `reset` seeds the episode (start pose,
/// goal assignment) and returns the initial observation; `step` is only
/// valid while the previous result was not `done`.
pub trait GridEnv: Send {
    fn kind(&self) -> EnvKind;
    fn n_actions(&self) -> usize;
    fn registry(&self) -> &ObsRegistry;
    fn step_cap(&self) -> usize;

    fn reset(&mut self, seed: u64) -> ObsId;
    fn step(&mut self, action: ActionId) -> Result<StepResult>;

    /// Observations that terminate the current episode with success.
    fn goal_obs(&self) -> Vec<ObsId>;

    fn n_obs(&self) -> usize {
        self.registry().len()
    }
}

/// Bidirectional map between canonical observation keys and dense ids.
/// Insertion order is frozen when the environment is built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObsRegistry {
    keys: Vec<String>,
    index: HashMap<String, usize>,
}

impl ObsRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a key, returning its id; existing keys keep their id.
    pub fn intern(&mut self, key: &str) -> ObsId {
        if let Some(&i) = self.index.get(key) {
            return ObsId(i);
        }
        let id = self.keys.len();
        self.keys.push(key.to_string());
        self.index.insert(key.to_string(), id);
        ObsId(id)
    }

    /// Look up a key that must already be registered.
    ///
    /// Panics on unregistered keys: environments enumerate their full
    /// alphabet at construction, so a miss is a geometry bug.
    pub fn expect(&self, key: &str) -> ObsId {
        match self.index.get(key) {
            Some(&i) => ObsId(i),
            None => panic!("observation key {key:?} missing from the frozen registry"),
        }
    }

    pub fn lookup(&self, key: &str) -> Option<ObsId> {
        self.index.get(key).map(|&i| ObsId(i))
    }

    pub fn key(&self, id: ObsId) -> &str {
        &self.keys[id.index()]
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Serialize as a JSON array of canonical keys in id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&self.keys)
            .map_err(|e| Error::Validation(format!("registry serialization failed: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let keys: Vec<String> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            offset: 0,
            message: e.to_string(),
        })?;
        let mut reg = Self::new();
        for k in &keys {
            reg.intern(k);
        }
        if reg.len() != keys.len() {
            return Err(Error::Validation("registry file holds duplicate keys".into()));
        }
        Ok(reg)
    }
}

/// Compass heading; the grid has `x` growing east and `y` growing south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub(crate) const ALL: [Heading; 4] =
        [Heading::North, Heading::East, Heading::South, Heading::West];

    pub(crate) fn left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub(crate) fn right(self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    /// Unit vector the heading points along.
    pub(crate) fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    /// Unit vector 90 degrees clockwise from the heading.
    pub(crate) fn right_delta(self) -> (i32, i32) {
        let (dx, dy) = self.delta();
        (-dy, dx)
    }
}

/// Build an environment by kind, with an optional layout override for the
/// ambiguous maze.
pub fn build_env(
    kind: EnvKind,
    step_cap: usize,
    layout_override: Option<&GridLayout>,
) -> Result<Box<dyn GridEnv>> {
    match kind {
        EnvKind::OpenRoom => Ok(Box::new(OpenRoom::new(step_cap))),
        EnvKind::AmbiguousMaze => {
            let env = match layout_override {
                Some(layout) => AmbiguousMaze::with_layout(layout.clone(), step_cap)?,
                None => AmbiguousMaze::new(step_cap)?,
            };
            Ok(Box::new(env))
        }
        EnvKind::TMaze => Ok(Box::new(TMaze::new(step_cap))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_interning_is_stable() {
        let mut reg = ObsRegistry::new();
        let a = reg.intern("x");
        let b = reg.intern("y");
        assert_eq!(reg.intern("x"), a);
        assert_eq!(reg.expect("y"), b);
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.key(a), "x");
    }

    #[test]
    #[should_panic(expected = "missing from the frozen registry")]
    fn expect_panics_on_unknown_keys() {
        let reg = ObsRegistry::new();
        let _ = reg.expect("nope");
    }

    #[test]
    fn registry_round_trips_through_json() {
        let mut reg = ObsRegistry::new();
        reg.intern("###......");
        reg.intern("reward");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("registry.json");
        reg.save(&path).unwrap();
        let loaded = ObsRegistry::load(&path).unwrap();
        assert_eq!(loaded, reg);
    }

    #[test]
    fn headings_rotate_consistently() {
        for h in Heading::ALL {
            assert_eq!(h.left().right(), h);
            assert_eq!(h.right().right().right().right(), h);
        }
        assert_eq!(Heading::North.right(), Heading::East);
        assert_eq!(Heading::North.right_delta(), (1, 0));
    }
}
