//! Grid primitives shared by the world model, the costmap, and the planner:
//! cell coordinates and exact 8-connected shortest-path search.
//!
//! Path costs are kept as integer (straight, diagonal) step counts and only
//! converted to a real length on demand. Since sqrt(2) is irrational, two
//! distinct step pairs never have equal cost, so costs compare exactly and
//! two searches that agree on step counts agree bit-for-bit on length.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// A grid cell coordinate; `x` is the column, `y` the row.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(into = "[i32; 2]", from = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell { x: v[0], y: v[1] }
    }
}

/// The eight neighbor offsets, straight moves first. Fixed order keeps
/// search expansion deterministic.
pub const NEIGHBORS: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Exact path cost as step counts: `straight + diag * sqrt(2)` cell units.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct Steps {
    pub straight: u32,
    pub diag: u32,
}

impl Steps {
    pub const ZERO: Steps = Steps { straight: 0, diag: 0 };

    /// Cost in cell units.
    pub fn units(&self) -> f64 {
        self.straight as f64 + self.diag as f64 * std::f64::consts::SQRT_2
    }

    /// Cost in meters for the given cell size.
    pub fn meters(&self, cell_size: f64) -> f64 {
        self.units() * cell_size
    }

    fn plus_straight(self) -> Steps {
        Steps { straight: self.straight + 1, diag: self.diag }
    }

    fn plus_diag(self) -> Steps {
        Steps { straight: self.straight, diag: self.diag + 1 }
    }
}

impl PartialOrd for Steps {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Steps {
    fn cmp(&self, other: &Self) -> Ordering {
        // units() is never NaN; fall back to the counts so the order is total
        // even for hypothetically equal-cost distinct pairs.
        self.units()
            .partial_cmp(&other.units())
            .unwrap()
            .then_with(|| (self.straight, self.diag).cmp(&(other.straight, other.diag)))
    }
}

/// Shortest-path distances from a source over passable cells.
pub struct DistanceField {
    width: i32,
    height: i32,
    dist: Vec<Option<Steps>>,
    prev: Vec<Option<Cell>>,
}

impl DistanceField {
    fn idx(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn distance(&self, c: Cell) -> Option<Steps> {
        if self.in_bounds(c) {
            self.dist[self.idx(c)]
        } else {
            None
        }
    }

    pub fn reachable(&self, c: Cell) -> bool {
        self.distance(c).is_some()
    }

    /// Reconstruct the path from the source to `to`, inclusive of both ends.
    pub fn path_to(&self, to: Cell) -> Option<Vec<Cell>> {
        self.distance(to)?;
        let mut path = vec![to];
        let mut cur = to;
        while let Some(p) = self.prev[self.idx(cur)] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq, Eq)]
struct QueueEntry {
    cost: Steps,
    cell: Cell,
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap; cell order breaks cost ties so the pop
        // sequence is independent of insertion history.
        other
            .cost
            .cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the 8-connected grid restricted to `passable` cells.
/// Diagonal steps cost sqrt(2), straight steps cost 1.
pub fn dijkstra(
    width: u32,
    height: u32,
    start: Cell,
    passable: impl Fn(Cell) -> bool,
) -> DistanceField {
    let (w, h) = (width as i32, height as i32);
    let mut field = DistanceField {
        width: w,
        height: h,
        dist: vec![None; (w * h) as usize],
        prev: vec![None; (w * h) as usize],
    };
    if !field.in_bounds(start) || !passable(start) {
        return field;
    }
    let start_idx = field.idx(start);
    field.dist[start_idx] = Some(Steps::ZERO);
    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry { cost: Steps::ZERO, cell: start });
    while let Some(QueueEntry { cost, cell }) = heap.pop() {
        if field.dist[field.idx(cell)] != Some(cost) {
            continue; // stale entry
        }
        for (dx, dy) in NEIGHBORS {
            let next = Cell::new(cell.x + dx, cell.y + dy);
            if !field.in_bounds(next) || !passable(next) {
                continue;
            }
            let next_cost = if dx != 0 && dy != 0 {
                cost.plus_diag()
            } else {
                cost.plus_straight()
            };
            let slot = field.idx(next);
            let better = match field.dist[slot] {
                None => true,
                Some(d) => next_cost < d,
            };
            if better {
                field.dist[slot] = Some(next_cost);
                field.prev[slot] = Some(cell);
                heap.push(QueueEntry { cost: next_cost, cell: next });
            }
        }
    }
    field
}
