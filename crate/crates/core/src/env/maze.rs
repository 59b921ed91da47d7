//! The ambiguous tile maze: the agent only observes the color of the tile
//! it stands on (red, white, or green), moves in the four cardinal
//! directions, and must reach the single green tile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{ActionId, ObsId};

use super::layout::{Cell, GridLayout};
use super::{EnvKind, GridEnv, ObsRegistry, StepResult};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

const DELTAS: [(i32, i32); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

/// Default committed layout.
const DEFAULT_LAYOUT: &str = include_str!("../../assets/ambiguous_maze.txt");

fn tile_key(cell: Cell) -> &'static str {
    match cell {
        Cell::Floor => "white",
        Cell::Red => "red",
        Cell::Green => "green",
        _ => unreachable!("validated tile maze holds only floor tiles"),
    }
}

pub struct AmbiguousMaze {
    layout: GridLayout,
    registry: ObsRegistry,
    whites: Vec<(usize, usize)>,
    step_cap: usize,
    x: i32,
    y: i32,
    t: u32,
    done: bool,
}

impl AmbiguousMaze {
    /// Build with the committed default layout.
    pub fn new(step_cap: usize) -> Result<Self> {
        let layout = GridLayout::from_text(DEFAULT_LAYOUT).expect("committed layout parses");
        Self::with_layout(layout, step_cap)
    }

    /// Build with a user-supplied layout, validating the maze invariants:
    /// wall-enclosed, only red/white/green tiles, exactly one green.
    pub fn with_layout(layout: GridLayout, step_cap: usize) -> Result<Self> {
        layout.check_enclosed()?;
        for y in 0..layout.height() {
            for x in 0..layout.width() {
                match layout.get(x as i32, y as i32) {
                    Cell::Wall | Cell::Floor | Cell::Red | Cell::Green => {}
                    other => {
                        return Err(Error::Layout(format!(
                            "cell {:?} at ({x}, {y}) is not valid in the tile maze",
                            other.to_char()
                        )))
                    }
                }
            }
        }
        let greens = layout.find(|c| c == Cell::Green);
        if greens.len() != 1 {
            return Err(Error::Layout(format!(
                "tile maze needs exactly one green tile, found {}",
                greens.len()
            )));
        }
        let whites = layout.find(|c| c == Cell::Floor);
        if whites.is_empty() {
            return Err(Error::Layout("tile maze has no white start tiles".into()));
        }

        let mut registry = ObsRegistry::new();
        for y in 0..layout.height() {
            for x in 0..layout.width() {
                let cell = layout.get(x as i32, y as i32);
                if cell.walkable() {
                    registry.intern(tile_key(cell));
                }
            }
        }
        Ok(Self {
            layout,
            registry,
            whites,
            step_cap,
            x: 0,
            y: 0,
            t: 0,
            done: true,
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    fn observe(&self) -> ObsId {
        self.registry.expect(tile_key(self.layout.get(self.x, self.y)))
    }
}

impl GridEnv for AmbiguousMaze {
    fn kind(&self) -> EnvKind {
        EnvKind::AmbiguousMaze
    }

    fn n_actions(&self) -> usize {
        4
    }

    fn registry(&self) -> &ObsRegistry {
        &self.registry
    }

    fn step_cap(&self) -> usize {
        self.step_cap
    }

    fn reset(&mut self, seed: u64) -> ObsId {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = self.whites[rng.gen_range(0..self.whites.len())];
        self.x = x as i32;
        self.y = y as i32;
        self.t = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: ActionId) -> Result<StepResult> {
        let (dx, dy) = *DELTAS.get(action.index()).ok_or_else(|| {
            Error::InvalidArgument(format!("action {action} out of range (4 actions)"))
        })?;
        if self.layout.get(self.x + dx, self.y + dy).walkable() {
            self.x += dx;
            self.y += dy;
        }
        self.t += 1;
        let obs = self.observe();
        let success = self.layout.get(self.x, self.y) == Cell::Green;
        self.done = success || self.t as usize >= self.step_cap;
        Ok(StepResult { obs, done: self.done, success, t: self.t })
    }

    fn goal_obs(&self) -> Vec<ObsId> {
        vec![self.registry.expect("green")]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::DEFAULT_EVAL_CAP;

    #[test]
    fn alphabet_is_exactly_three_colors() {
        let env = AmbiguousMaze::new(DEFAULT_EVAL_CAP).unwrap();
        assert_eq!(env.registry().len(), 3);
        assert_eq!(env.registry().keys(), &["red", "white", "green"]);
    }

    #[test]
    fn starts_are_always_white() {
        let mut env = AmbiguousMaze::new(DEFAULT_EVAL_CAP).unwrap();
        let white = env.registry().expect("white");
        for seed in 0..40 {
            assert_eq!(env.reset(seed), white);
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let mut a = AmbiguousMaze::new(DEFAULT_EVAL_CAP).unwrap();
        let mut b = AmbiguousMaze::new(DEFAULT_EVAL_CAP).unwrap();
        assert_eq!(a.reset(9), b.reset(9));
        for action in [UP, LEFT, LEFT, DOWN, RIGHT, UP, UP, RIGHT] {
            assert_eq!(
                a.step(ActionId(action)).unwrap(),
                b.step(ActionId(action)).unwrap()
            );
        }
    }

    #[test]
    fn wall_moves_are_no_ops() {
        let mut env = AmbiguousMaze::new(DEFAULT_EVAL_CAP).unwrap();
        env.reset(0);
        env.x = 1;
        env.y = 1;
        let r = env.step(ActionId(UP)).unwrap();
        assert_eq!((env.x, env.y), (1, 1));
        assert!(!r.success);
    }

    #[test]
    fn reaching_green_succeeds() {
        let mut env = AmbiguousMaze::new(100).unwrap();
        env.reset(0);
        let (gx, gy) = env.layout.find(|c| c == Cell::Green)[0];
        env.x = gx as i32 - 1;
        env.y = gy as i32;
        let r = env.step(ActionId(RIGHT)).unwrap();
        assert!(r.success);
        assert!(r.done);
        assert_eq!(r.obs, env.registry().expect("green"));
    }

    #[test]
    fn invalid_layouts_are_rejected() {
        // Two greens.
        let text = "#####\n#g.g#\n#####\n";
        let layout = GridLayout::from_text(text).unwrap();
        assert!(AmbiguousMaze::with_layout(layout, 25).is_err());
        // Forbidden cell kind.
        let text = "#####\n#g.D#\n#####\n";
        let layout = GridLayout::from_text(text).unwrap();
        assert!(AmbiguousMaze::with_layout(layout, 25).is_err());
        // Open border.
        let text = "#####\n#g..\n#####\n";
        let layout = GridLayout::from_text(text).unwrap();
        assert!(AmbiguousMaze::with_layout(layout, 25).is_err());
    }

    #[test]
    fn committed_layout_has_no_symmetries() {
        // Self-localization requires the red/white pattern to break every
        // grid symmetry; check the eight dihedral transforms.
        let env = AmbiguousMaze::new(DEFAULT_EVAL_CAP).unwrap();
        let n = 10usize;
        let cell = |x: usize, y: usize| env.layout.get(x as i32, y as i32).to_char();
        let transforms: [&dyn Fn(usize, usize) -> (usize, usize); 7] = [
            &|x, y| (n - 1 - x, y),
            &|x, y| (x, n - 1 - y),
            &|x, y| (n - 1 - x, n - 1 - y),
            &|x, y| (y, x),
            &|x, y| (n - 1 - y, n - 1 - x),
            &|x, y| (y, n - 1 - x),
            &|x, y| (n - 1 - y, x),
        ];
        for (k, tf) in transforms.iter().enumerate() {
            let mut same = true;
            'outer: for y in 0..n {
                for x in 0..n {
                    let (tx, ty) = tf(x, y);
                    if cell(x, y) != cell(tx, ty) {
                        same = false;
                        break 'outer;
                    }
                }
            }
            assert!(!same, "layout is invariant under dihedral transform {k}");
        }
    }
}
