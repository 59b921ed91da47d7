//! The T-maze: a stem with a colored cue at its dead end, a crossbar with
//! a door at each arm, and a reward hidden behind one door.
//!
//! The cue color signals the rewarded side (red = left, blue = right). The
//! agent starts on the stem directly above the cue, facing up the stem and
//! away from the cue, and observes a forward-facing 3x3 patch: its own row
//! (left, self, right) plus the two rows ahead, rotated heading-up. Walking
//! into a door teleports the agent to the tile behind it and ends the
//! episode; the correct side emits a dedicated reward observation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{ActionId, ObsId};

use super::layout::{Cell, GridLayout};
use super::{EnvKind, GridEnv, Heading, ObsRegistry, StepResult};

pub const TURN_LEFT: usize = 0;
pub const TURN_RIGHT: usize = 1;
pub const FORWARD: usize = 2;

/// Canonical key of the reward observation.
pub const REWARD_KEY: &str = "reward";

/// Crossbar half-width (floor cells on each side of the junction).
const BAR_HALFWIDTH: usize = 1;
/// Stem length (floor cells below the crossbar, including the start cell).
const STEM_LEN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CueColor {
    Red,
    Blue,
}

impl CueColor {
    fn code(self) -> char {
        match self {
            CueColor::Red => 'R',
            CueColor::Blue => 'B',
        }
    }
}

fn patch_code(cell: Cell, cue: CueColor) -> char {
    match cell {
        Cell::Wall => '#',
        Cell::Floor => '.',
        Cell::Door => 'D',
        Cell::Cue => cue.code(),
        Cell::Red => 'r',
        Cell::Green => 'g',
        Cell::Corner(k) => ['w', 'x', 'y', 'z'][k as usize],
    }
}

/// Forward-facing 3x3 patch with the agent at the bottom-center cell:
/// row 2 holds (left, self, right), rows 1 and 0 look one and two cells
/// ahead. Serialized row-major, furthest row first.
fn forward_patch(layout: &GridLayout, x: i32, y: i32, heading: Heading, cue: CueColor) -> String {
    let (hx, hy) = heading.delta();
    let (rx, ry) = heading.right_delta();
    let mut key = String::with_capacity(9);
    for row in 0..3 {
        let depth = 2 - row; // cells ahead of the agent
        for col in -1..=1i32 {
            let wx = x + col * rx + depth * hx;
            let wy = y + col * ry + depth * hy;
            key.push(patch_code(layout.get(wx, wy), cue));
        }
    }
    key
}

struct Geometry {
    layout: GridLayout,
    junction: (i32, i32),
    start: (i32, i32),
    left_door: (i32, i32),
    right_door: (i32, i32),
    behind_left: (i32, i32),
    behind_right: (i32, i32),
}

fn build_geometry(halfwidth: usize, stem_len: usize) -> Geometry {
    let width = 2 * halfwidth + 5;
    let height = stem_len + 4;
    let cx = (halfwidth + 2) as i32;
    let mut cells = vec![Cell::Wall; width * height];
    let mut set = |x: i32, y: i32, c: Cell| {
        cells[y as usize * width + x as usize] = c;
    };
    // Crossbar with doors and landing tiles behind them.
    set(0, 1, Cell::Floor);
    set(1, 1, Cell::Door);
    for x in 2..=(2 * halfwidth + 2) as i32 {
        set(x, 1, Cell::Floor);
    }
    set((2 * halfwidth + 3) as i32, 1, Cell::Door);
    set((2 * halfwidth + 4) as i32, 1, Cell::Floor);
    // Stem and cue.
    for y in 2..(2 + stem_len) as i32 {
        set(cx, y, Cell::Floor);
    }
    set(cx, (1 + stem_len) as i32 + 1, Cell::Cue);

    let layout = GridLayout::new(width, height, cells).expect("well-formed T-maze");
    Geometry {
        layout,
        junction: (cx, 1),
        start: (cx, (1 + stem_len) as i32),
        left_door: (1, 1),
        right_door: ((2 * halfwidth + 3) as i32, 1),
        behind_left: (0, 1),
        behind_right: ((2 * halfwidth + 4) as i32, 1),
    }
}

pub struct TMaze {
    geo: Geometry,
    registry: ObsRegistry,
    reward_obs: ObsId,
    step_cap: usize,
    // episode state
    x: i32,
    y: i32,
    heading: Heading,
    cue: CueColor,
    t: u32,
    done: bool,
}

impl TMaze {
    pub fn new(step_cap: usize) -> Self {
        Self::with_geometry(BAR_HALFWIDTH, STEM_LEN, step_cap)
    }

    pub(crate) fn with_geometry(halfwidth: usize, stem_len: usize, step_cap: usize) -> Self {
        let geo = build_geometry(halfwidth, stem_len);
        let mut registry = ObsRegistry::new();
        // Exhaustive pose enumeration over both cue colors, scan order.
        for y in 0..geo.layout.height() as i32 {
            for x in 0..geo.layout.width() as i32 {
                if !geo.layout.get(x, y).walkable() {
                    continue;
                }
                if (x, y) == geo.behind_left || (x, y) == geo.behind_right {
                    continue; // landing tiles handled below
                }
                for heading in Heading::ALL {
                    for cue in [CueColor::Red, CueColor::Blue] {
                        registry.intern(&forward_patch(&geo.layout, x, y, heading, cue));
                    }
                }
            }
        }
        // Landing poses behind the doors (reached only by teleport).
        for cue in [CueColor::Red, CueColor::Blue] {
            registry.intern(&forward_patch(
                &geo.layout,
                geo.behind_left.0,
                geo.behind_left.1,
                Heading::West,
                cue,
            ));
            registry.intern(&forward_patch(
                &geo.layout,
                geo.behind_right.0,
                geo.behind_right.1,
                Heading::East,
                cue,
            ));
        }
        let reward_obs = registry.intern(REWARD_KEY);
        let start = geo.start;
        Self {
            geo,
            registry,
            reward_obs,
            step_cap,
            x: start.0,
            y: start.1,
            heading: Heading::North,
            cue: CueColor::Red,
            t: 0,
            done: true,
        }
    }

    fn observe(&self) -> ObsId {
        self.registry
            .expect(&forward_patch(&self.geo.layout, self.x, self.y, self.heading, self.cue))
    }

    /// True when the rewarded door is the left one.
    fn reward_left(&self) -> bool {
        self.cue == CueColor::Red
    }
}

impl GridEnv for TMaze {
    fn kind(&self) -> EnvKind {
        EnvKind::TMaze
    }

    fn n_actions(&self) -> usize {
        3
    }

    fn registry(&self) -> &ObsRegistry {
        &self.registry
    }

    fn step_cap(&self) -> usize {
        self.step_cap
    }

    fn reset(&mut self, seed: u64) -> ObsId {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.cue = if rng.gen::<bool>() { CueColor::Red } else { CueColor::Blue };
        self.x = self.geo.start.0;
        self.y = self.geo.start.1;
        self.heading = Heading::North;
        self.t = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: ActionId) -> Result<StepResult> {
        match action.index() {
            TURN_LEFT => self.heading = self.heading.left(),
            TURN_RIGHT => self.heading = self.heading.right(),
            FORWARD => {
                let (dx, dy) = self.heading.delta();
                let target = (self.x + dx, self.y + dy);
                if target == self.geo.left_door || target == self.geo.right_door {
                    // Through the door: teleport behind it; episode over.
                    let left = target == self.geo.left_door;
                    let landing = if left { self.geo.behind_left } else { self.geo.behind_right };
                    self.x = landing.0;
                    self.y = landing.1;
                    self.t += 1;
                    self.done = true;
                    let success = left == self.reward_left();
                    let obs = if success { self.reward_obs } else { self.observe() };
                    return Ok(StepResult { obs, done: true, success, t: self.t });
                }
                if self.geo.layout.get(target.0, target.1).walkable() {
                    self.x = target.0;
                    self.y = target.1;
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "action {other} out of range (3 actions)"
                )))
            }
        }
        self.t += 1;
        self.done = self.t as usize >= self.step_cap;
        Ok(StepResult { obs: self.observe(), done: self.done, success: false, t: self.t })
    }

    fn goal_obs(&self) -> Vec<ObsId> {
        vec![self.reward_obs]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::DEFAULT_EVAL_CAP;

    #[test]
    #[ignore = "geometry survey for picking the layout constants"]
    fn geometry_survey() {
        for halfwidth in 1..=3 {
            for stem_len in 1..=3 {
                let env = TMaze::with_geometry(halfwidth, stem_len, 50);
                println!(
                    "halfwidth={halfwidth} stem={stem_len} -> {} observations",
                    env.registry().len()
                );
            }
        }
    }

    #[test]
    fn registry_enumerates_seventeen_observations() {
        let env = TMaze::new(DEFAULT_EVAL_CAP);
        assert_eq!(env.registry().len(), 17);
    }

    #[test]
    fn cue_is_hidden_at_start_and_visible_after_turning_around() {
        let mut env = TMaze::new(50);
        let start_red = env.reset_with_cue(CueColor::Red);
        let start_blue = env.reset_with_cue(CueColor::Blue);
        assert_eq!(start_red, start_blue, "start observation leaks the cue");

        // Turn right twice under each cue color; the patches must differ.
        let mut after = [ObsId(0); 2];
        for (i, cue) in [CueColor::Red, CueColor::Blue].into_iter().enumerate() {
            env.reset_with_cue(cue);
            env.step(ActionId(TURN_RIGHT)).unwrap();
            after[i] = env.step(ActionId(TURN_RIGHT)).unwrap().obs;
            let key = env.registry().key(after[i]);
            assert!(
                key.contains(cue.code()),
                "patch {key} does not show the {:?} cue",
                cue
            );
        }
        assert_ne!(after[0], after[1]);
    }

    /// Walk from the start to a door: up the stem, turn, along the bar.
    fn walk_to_door(env: &mut TMaze, left: bool) -> StepResult {
        for _ in 0..STEM_LEN {
            env.step(ActionId(FORWARD)).unwrap();
        }
        env.step(ActionId(if left { TURN_LEFT } else { TURN_RIGHT })).unwrap();
        for _ in 0..BAR_HALFWIDTH {
            env.step(ActionId(FORWARD)).unwrap();
        }
        env.step(ActionId(FORWARD)).unwrap()
    }

    #[test]
    fn correct_door_rewards_and_ends() {
        let mut env = TMaze::new(50);
        env.reset_with_cue(CueColor::Red); // reward on the left
        let r = walk_to_door(&mut env, true);
        assert!(r.done);
        assert!(r.success);
        assert_eq!(r.obs, env.goal_obs()[0]);
        assert_eq!(env.registry().key(r.obs), REWARD_KEY);
    }

    #[test]
    fn wrong_door_ends_without_reward() {
        let mut env = TMaze::new(50);
        env.reset_with_cue(CueColor::Red); // reward left; go right instead
        let r = walk_to_door(&mut env, false);
        assert!(r.done);
        assert!(!r.success);
        assert_ne!(r.obs, env.goal_obs()[0]);
    }

    #[test]
    fn replay_is_deterministic() {
        let mut a = TMaze::new(50);
        let mut b = TMaze::new(50);
        assert_eq!(a.reset(4), b.reset(4));
        for action in [TURN_RIGHT, TURN_RIGHT, FORWARD, TURN_LEFT, FORWARD] {
            assert_eq!(a.step(ActionId(action)).unwrap(), b.step(ActionId(action)).unwrap());
        }
    }

    #[test]
    fn episode_caps_out() {
        let mut env = TMaze::new(5);
        env.reset(0);
        for t in 1..=5 {
            let r = env.step(ActionId(TURN_LEFT)).unwrap();
            assert_eq!(r.done, t == 5);
        }
    }

    impl TMaze {
        /// Test helper: reset with a fixed cue color.
        fn reset_with_cue(&mut self, cue: CueColor) -> ObsId {
            self.reset(0);
            self.cue = cue;
            self.observe()
        }
    }
}
