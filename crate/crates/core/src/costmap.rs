//! The agent-built traversability grid. Cells start Unknown and become
//! KnownFree or KnownObstacle as depth rays sweep them; known cells never
//! revert.

use serde::{Deserialize, Serialize};

use crate::grid::Cell;
use crate::world::WorldMap;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Unknown,
    KnownFree,
    KnownObstacle,
}

#[derive(Clone, Debug)]
pub struct Costmap {
    width: u32,
    height: u32,
    cell_size: f64,
    cells: Vec<CellState>,
}

impl Costmap {
    /// An all-Unknown costmap aligned to the world map.
    pub fn new_unknown(map: &WorldMap) -> Self {
        Costmap {
            width: map.width(),
            height: map.height(),
            cell_size: map.cell_size(),
            cells: vec![CellState::Unknown; (map.width() * map.height()) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width as i32 && c.y < self.height as i32
    }

    fn idx(&self, c: Cell) -> usize {
        (c.y * self.width as i32 + c.x) as usize
    }

    pub fn state(&self, c: Cell) -> CellState {
        if self.in_bounds(c) {
            self.cells[self.idx(c)]
        } else {
            CellState::Unknown
        }
    }

    pub fn is_known_free(&self, c: Cell) -> bool {
        self.state(c) == CellState::KnownFree
    }

    /// Mark a cell. Known cells never revert to Unknown, and a known state
    /// is never contradicted (the world is static, so rays always agree).
    pub fn mark(&mut self, c: Cell, state: CellState) {
        if !self.in_bounds(c) || state == CellState::Unknown {
            return;
        }
        let i = self.idx(c);
        if self.cells[i] == CellState::Unknown {
            self.cells[i] = state;
        }
    }

    pub fn known_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.iter_cells().filter(|&c| self.state(c) != CellState::Unknown)
    }

    pub fn known_free_count(&self) -> usize {
        self.cells.iter().filter(|&&s| s == CellState::KnownFree).count()
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let (w, h) = (self.width as i32, self.height as i32);
        (0..h).flat_map(move |y| (0..w).map(move |x| Cell::new(x, y)))
    }

    pub fn cell_center(&self, c: Cell) -> (f64, f64) {
        (
            (c.x as f64 + 0.5) * self.cell_size,
            (c.y as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        Cell::new((x / self.cell_size).floor() as i32, (y / self.cell_size).floor() as i32)
    }
}
