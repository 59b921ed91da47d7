//! Cognitive-map learning and planning over aliased gridworlds.
//!
//! The crate builds clone-structured hidden Markov models from
//! observation-action walks, refines them into compact cognitive maps,
//! converts the result into a discrete generative model (likelihood,
//! transition, preference, prior), and drives three agents over it:
//!
//! * a uniform random baseline,
//! * a greedy planner that propagates messages over the clone graph,
//! * an expected-free-energy planner that trades off information gain
//!   against distance-shaped state preferences.
//!
//! [`env`] holds the three reference gridworlds, [`harness`] the seeded
//! paired-trial experiment runner with significance tests, and the `cli`
//! crate wires everything into reproducible recipes.

pub mod aif;
pub mod cscg;
pub mod env;
pub mod error;
pub mod harness;
pub mod plan;
pub mod types;

pub use cscg::{CloneHmm, EmOptions, EmOutcome, RefineOptions, TrajectoryData};
pub use error::{Error, Result};
pub use types::{ActionId, Belief, ObsId};
