//! Plain-text grid layouts and their JSON metadata sidecars.
//!
//! One character per cell: `#` wall, `.` floor (white in the tile maze),
//! `r` red, `g` green, `D` door, `c` cue, and the letters `w x y z` for the
//! four corner colors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terrain tag of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Floor,
    Red,
    Green,
    Door,
    Cue,
    /// One of the four uniquely colored corner markers (0..4).
    Corner(u8),
}

impl Cell {
    pub fn from_char(ch: char) -> Option<Cell> {
        Some(match ch {
            '#' => Cell::Wall,
            '.' => Cell::Floor,
            'r' => Cell::Red,
            'g' => Cell::Green,
            'D' => Cell::Door,
            'c' => Cell::Cue,
            'w' => Cell::Corner(0),
            'x' => Cell::Corner(1),
            'y' => Cell::Corner(2),
            'z' => Cell::Corner(3),
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Floor => '.',
            Cell::Red => 'r',
            Cell::Green => 'g',
            Cell::Door => 'D',
            Cell::Cue => 'c',
            Cell::Corner(0) => 'w',
            Cell::Corner(1) => 'x',
            Cell::Corner(2) => 'y',
            Cell::Corner(3) => 'z',
            Cell::Corner(_) => '?',
        }
    }

    /// Can the agent stand on this cell?
    pub fn walkable(self) -> bool {
        matches!(self, Cell::Floor | Cell::Red | Cell::Green)
    }
}

/// Rectangular cell grid. Out-of-bounds reads behave as walls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl GridLayout {
    pub fn new(width: usize, height: usize, cells: Vec<Cell>) -> Result<Self> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(Error::Layout(format!(
                "cell count {} does not match {width}x{height}",
                cells.len()
            )));
        }
        Ok(Self { width, height, cells })
    }

    /// Build from rows of layout characters.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Layout("empty layout".into()));
        }
        let width = rows[0].chars().count();
        let mut cells = Vec::with_capacity(width * rows.len());
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Layout(format!(
                    "row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                let cell = Cell::from_char(ch).ok_or_else(|| {
                    Error::Layout(format!("unknown cell character {ch:?} at ({x}, {y})"))
                })?;
                cells.push(cell);
            }
        }
        Self::new(width, rows.len(), cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Cell at `(x, y)`; out-of-bounds coordinates read as walls.
    pub fn get(&self, x: i32, y: i32) -> Cell {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return Cell::Wall;
        }
        self.cells[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, cell: Cell) {
        assert!(x < self.width && y < self.height);
        self.cells[y * self.width + x] = cell;
    }

    /// Coordinates of every cell matching the predicate, scanned row-major.
    pub fn find(&self, pred: impl Fn(Cell) -> bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if pred(self.cells[y * self.width + x]) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// The layout must not let an agent walk off the grid: every walkable
    /// cell on the border fails this check.
    pub fn check_enclosed(&self) -> Result<()> {
        for y in 0..self.height {
            for x in 0..self.width {
                let border =
                    x == 0 || y == 0 || x == self.width - 1 || y == self.height - 1;
                if border && self.cells[y * self.width + x].walkable() {
                    return Err(Error::Layout(format!(
                        "walkable border cell at ({x}, {y}); the grid must be wall-enclosed"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(self.cells[y * self.width + x].to_char());
            }
            s.push('\n');
        }
        s
    }
}

/// JSON sidecar carried next to a layout file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LayoutMeta {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Load a layout file plus its optional `.json` sidecar (same path with the
/// extension replaced).
pub fn parse_layout(path: impl AsRef<Path>) -> Result<(GridLayout, Option<LayoutMeta>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let layout = GridLayout::from_text(&text)?;
    let sidecar = path.with_extension("json");
    let meta = if sidecar.exists() {
        let raw = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        Some(serde_json::from_str(&raw).map_err(|e| Error::Parse {
            offset: 0,
            message: format!("{}: {e}", sidecar.display()),
        })?)
    } else {
        None
    };
    Ok((layout, meta))
}
