//! Costmap navigation: waypoint selection at the exploratory distance,
//! minimal-cost path planning over known-free cells, and frontier-based
//! exploration.

use thiserror::Error;

use crate::costmap::{CellState, Costmap};
use crate::grid::{dijkstra, Cell, DistanceField, Steps};
use crate::perception::wrap180;
use crate::world::Pose;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cell {0:?} is not known free")]
    NotKnownFree(Cell),
    #[error("no path from {0:?} to {1:?} through known-free cells")]
    NoPath(Cell, Cell),
    #[error("no reachable known-free cell")]
    NoReachableCell,
}

/// A minimal-cost 8-connected path through known-free cells, inclusive of
/// both endpoints.
#[derive(Clone, Debug)]
pub struct PlannedPath {
    pub cells: Vec<Cell>,
    pub steps: Steps,
}

impl PlannedPath {
    pub fn length_m(&self, cell_size: f64) -> f64 {
        self.steps.meters(cell_size)
    }
}

fn known_free_field(costmap: &Costmap, start: Cell) -> DistanceField {
    dijkstra(costmap.width(), costmap.height(), start, |c| costmap.is_known_free(c))
}

/// Plan the minimal-cost path between two known-free cells. Unknown cells
/// are non-traversable; diagonal steps cost sqrt(2).
pub fn plan_path(costmap: &Costmap, from: Cell, to: Cell) -> Result<PlannedPath, PlanError> {
    if !costmap.is_known_free(from) {
        return Err(PlanError::NotKnownFree(from));
    }
    if !costmap.is_known_free(to) {
        return Err(PlanError::NotKnownFree(to));
    }
    let field = known_free_field(costmap, from);
    let steps = field.distance(to).ok_or(PlanError::NoPath(from, to))?;
    let cells = field.path_to(to).expect("distance implies a path");
    Ok(PlannedPath { cells, steps })
}

/// Pick the known-free, plan-reachable cell nearest the point at `e_d`
/// meters along `heading` from the pose. The search widens ring by ring
/// around the ideal cell; ties prefer the smaller bearing deviation from
/// the heading, then lexicographic cell order. An ideal point beyond the
/// map edge is clamped to the last in-bounds point along the heading.
pub fn select_waypoint(
    costmap: &Costmap,
    pose: &Pose,
    heading_deg: f64,
    e_d: f64,
) -> Result<Cell, PlanError> {
    let pose_cell = costmap.cell_of(pose.x, pose.y);
    if !costmap.is_known_free(pose_cell) {
        return Err(PlanError::NotKnownFree(pose_cell));
    }
    let field = known_free_field(costmap, pose_cell);

    let theta = heading_deg.to_radians();
    let (dx, dy) = (theta.cos(), theta.sin());
    // Clamp the travel distance so the ideal point stays on the grid.
    let (w_m, h_m) = (
        costmap.width() as f64 * costmap.cell_size(),
        costmap.height() as f64 * costmap.cell_size(),
    );
    let mut t = e_d;
    for (p, d, limit) in [(pose.x, dx, w_m), (pose.y, dy, h_m)] {
        if d > 0.0 {
            t = t.min((limit - 1e-9 - p) / d);
        } else if d < 0.0 {
            t = t.min((0.0 - p) / d);
        }
    }
    let t = t.max(0.0);
    let ideal = costmap.cell_of(pose.x + dx * t, pose.y + dy * t);

    let max_ring = costmap.width().max(costmap.height()) as i32;
    for ring in 0..=max_ring {
        let mut best: Option<(f64, Cell)> = None;
        let mut consider = |c: Cell| {
            if !costmap.in_bounds(c) || !costmap.is_known_free(c) || !field.reachable(c) {
                return;
            }
            let (cx, cy) = costmap.cell_center(c);
            let deviation = if c == pose_cell {
                0.0
            } else {
                let bearing = (cy - pose.y).atan2(cx - pose.x).to_degrees();
                wrap180(bearing, heading_deg).abs()
            };
            match best {
                Some((d, bc)) if (d, bc) <= (deviation, c) => {}
                _ => best = Some((deviation, c)),
            }
        };
        if ring == 0 {
            consider(ideal);
        } else {
            for i in -ring..=ring {
                consider(Cell::new(ideal.x + i, ideal.y - ring));
                consider(Cell::new(ideal.x + i, ideal.y + ring));
            }
            for i in (-ring + 1)..ring {
                consider(Cell::new(ideal.x - ring, ideal.y + i));
                consider(Cell::new(ideal.x + ring, ideal.y + i));
            }
        }
        if let Some((_, c)) = best {
            return Ok(c);
        }
    }
    Err(PlanError::NoReachableCell)
}

/// All frontier cells: known-free cells 8-adjacent to at least one unknown
/// cell, in row-major order.
pub fn frontier_cells(costmap: &Costmap) -> Vec<Cell> {
    costmap
        .iter_cells()
        .filter(|&c| costmap.is_known_free(c))
        .filter(|&c| {
            crate::grid::NEIGHBORS.iter().any(|&(dx, dy)| {
                let n = Cell::new(c.x + dx, c.y + dy);
                costmap.in_bounds(n) && costmap.state(n) == CellState::Unknown
            })
        })
        .collect()
}

/// Frontier-based exploration step: the nearest frontier cell by planned
/// path cost, ties broken by cell order. When no frontier remains (the map
/// is exhausted) the farthest reachable known-free cell is returned.
pub fn fbe_step(costmap: &Costmap, pose: &Pose) -> Result<Cell, PlanError> {
    let pose_cell = costmap.cell_of(pose.x, pose.y);
    if !costmap.is_known_free(pose_cell) {
        return Err(PlanError::NotKnownFree(pose_cell));
    }
    let field = known_free_field(costmap, pose_cell);
    let nearest = frontier_cells(costmap)
        .into_iter()
        .filter_map(|c| field.distance(c).map(|d| (d, c)))
        .min();
    if let Some((_, c)) = nearest {
        return Ok(c);
    }
    let farthest = costmap
        .iter_cells()
        .filter(|&c| costmap.is_known_free(c))
        .filter_map(|c| field.distance(c).map(|d| (d, c)))
        .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)));
    farthest.map(|(_, c)| c).ok_or(PlanError::NoReachableCell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::WorldMap;

    fn empty_costmap(width: u32, height: u32, cell_size: f64) -> Costmap {
        let map = WorldMap::from_parts(width, height, cell_size, &[], vec![], vec![], vec![]).unwrap();
        Costmap::new_unknown(&map)
    }

    fn all_known_free(width: u32, height: u32, cell_size: f64) -> Costmap {
        let mut cm = empty_costmap(width, height, cell_size);
        for c in cm.iter_cells().collect::<Vec<_>>() {
            cm.mark(c, CellState::KnownFree);
        }
        cm
    }

    #[test]
    fn plan_from_cell_to_itself_is_single_cell() {
        let cm = all_known_free(8, 8, 1.0);
        let p = plan_path(&cm, Cell::new(3, 3), Cell::new(3, 3)).unwrap();
        assert_eq!(p.cells, vec![Cell::new(3, 3)]);
        assert_eq!(p.steps, Steps::ZERO);
    }

    #[test]
    fn corridor_plan_is_straight_and_exact() {
        let mut cm = empty_costmap(10, 3, 0.5);
        for x in 0..10 {
            cm.mark(Cell::new(x, 1), CellState::KnownFree);
        }
        let p = plan_path(&cm, Cell::new(0, 1), Cell::new(9, 1)).unwrap();
        assert_eq!(p.cells.len(), 10);
        assert_eq!(p.steps, Steps { straight: 9, diag: 0 });
        assert_eq!(p.length_m(0.5), 4.5);
    }

    #[test]
    fn plan_refuses_unknown_cells() {
        let mut cm = empty_costmap(6, 6, 1.0);
        cm.mark(Cell::new(0, 0), CellState::KnownFree);
        assert!(matches!(
            plan_path(&cm, Cell::new(0, 0), Cell::new(5, 5)),
            Err(PlanError::NotKnownFree(_))
        ));
    }

    #[test]
    fn plan_routes_around_known_obstacles() {
        // A wall with one gap; the path must thread it.
        let mut cm = empty_costmap(7, 7, 1.0);
        for c in cm.iter_cells().collect::<Vec<_>>() {
            if c.x == 3 && c.y != 5 {
                cm.mark(c, CellState::KnownObstacle);
            } else {
                cm.mark(c, CellState::KnownFree);
            }
        }
        let p = plan_path(&cm, Cell::new(0, 0), Cell::new(6, 0)).unwrap();
        assert!(p.cells.contains(&Cell::new(3, 5)));
        assert!(p.cells.iter().all(|c| cm.is_known_free(*c)));
    }

    #[test]
    fn waypoint_in_open_map_is_e_d_ahead() {
        let cm = all_known_free(40, 40, 0.25);
        let pose = Pose::at_cell_center(Cell::new(5, 20), 0.25, 0.0);
        let wp = select_waypoint(&cm, &pose, 0.0, 5.0).unwrap();
        // 5 m at 0.25 m cells = 20 columns ahead.
        assert_eq!(wp, Cell::new(25, 20));
    }

    #[test]
    fn waypoint_ideal_inside_wall_snaps_to_nearest_ring_cell() {
        // Brute-force oracle: nearest known-free reachable cell by Chebyshev
        // ring distance from the ideal cell.
        let mut cm = empty_costmap(20, 20, 1.0);
        for c in cm.iter_cells().collect::<Vec<_>>() {
            // Wall block covering the ideal landing zone.
            if (9..=11).contains(&c.x) && (8..=12).contains(&c.y) {
                cm.mark(c, CellState::KnownObstacle);
            } else {
                cm.mark(c, CellState::KnownFree);
            }
        }
        let pose = Pose::at_cell_center(Cell::new(2, 10), 1.0, 0.0);
        let wp = select_waypoint(&cm, &pose, 0.0, 8.0).unwrap();
        let ideal = Cell::new(10, 10);
        let ring = |c: Cell| (c.x - ideal.x).abs().max((c.y - ideal.y).abs());
        let best_ring = cm
            .iter_cells()
            .filter(|&c| cm.is_known_free(c))
            .map(ring)
            .min()
            .unwrap();
        assert_eq!(ring(wp), best_ring);
        assert!(cm.is_known_free(wp));
    }

    #[test]
    fn waypoint_beyond_map_edge_clamps_along_heading() {
        let cm = all_known_free(12, 12, 0.25);
        let pose = Pose::at_cell_center(Cell::new(6, 6), 0.25, 0.0);
        // 50 m overshoots a 3 m map; the waypoint is the farthest cell ahead.
        let wp = select_waypoint(&cm, &pose, 0.0, 50.0).unwrap();
        assert_eq!(wp, Cell::new(11, 6));
    }

    #[test]
    fn waypoint_ignores_unreachable_islands() {
        let mut cm = empty_costmap(12, 3, 1.0);
        for x in 0..5 {
            cm.mark(Cell::new(x, 1), CellState::KnownFree);
        }
        cm.mark(Cell::new(5, 1), CellState::KnownObstacle);
        // Known-free island beyond the wall, unreachable from the pose.
        for x in 6..12 {
            cm.mark(Cell::new(x, 1), CellState::KnownFree);
        }
        let pose = Pose::at_cell_center(Cell::new(0, 1), 1.0, 0.0);
        let wp = select_waypoint(&cm, &pose, 0.0, 10.0).unwrap();
        assert_eq!(wp, Cell::new(4, 1));
    }

    #[test]
    fn frontier_set_matches_adjacency_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream(31, 999);
        for trial in 0..20 {
            let mut cm = empty_costmap(24, 24, 1.0);
            for c in cm.iter_cells().collect::<Vec<_>>() {
                let r: f64 = rng.random();
                if r < 0.5 {
                    cm.mark(c, CellState::KnownFree);
                } else if r < 0.65 {
                    cm.mark(c, CellState::KnownObstacle);
                }
            }
            let got = frontier_cells(&cm);
            // Independent enumeration of known-free/unknown adjacencies.
            let mut want = Vec::new();
            for y in 0..24i32 {
                for x in 0..24i32 {
                    let c = Cell::new(x, y);
                    if cm.state(c) != CellState::KnownFree {
                        continue;
                    }
                    let mut adjacent_unknown = false;
                    for dy in -1i32..=1 {
                        for dx in -1i32..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let n = Cell::new(x + dx, y + dy);
                            if n.x >= 0
                                && n.y >= 0
                                && n.x < 24
                                && n.y < 24
                                && cm.state(n) == CellState::Unknown
                            {
                                adjacent_unknown = true;
                            }
                        }
                    }
                    if adjacent_unknown {
                        want.push(c);
                    }
                }
            }
            assert_eq!(got, want, "trial {trial}");
        }
    }

    #[test]
    fn fbe_heads_for_the_nearest_frontier() {
        let mut cm = empty_costmap(20, 3, 1.0);
        // Known corridor from x=2..=10; unknown on both sides beyond.
        for x in 2..=10 {
            cm.mark(Cell::new(x, 1), CellState::KnownFree);
        }
        let pose = Pose::at_cell_center(Cell::new(3, 1), 1.0, 0.0);
        let wp = fbe_step(&cm, &pose).unwrap();
        assert_eq!(wp, Cell::new(2, 1)); // one step left vs seven right
    }

    #[test]
    fn fbe_exhausted_map_returns_farthest_cell() {
        let mut cm = empty_costmap(9, 3, 1.0);
        // Fully determined strip: free row walled by known obstacles, no
        // unknown cells anywhere.
        for c in cm.iter_cells().collect::<Vec<_>>() {
            if c.y == 1 && (1..8).contains(&c.x) {
                cm.mark(c, CellState::KnownFree);
            } else {
                cm.mark(c, CellState::KnownObstacle);
            }
        }
        assert!(frontier_cells(&cm).is_empty());
        let pose = Pose::at_cell_center(Cell::new(1, 1), 1.0, 0.0);
        let wp = fbe_step(&cm, &pose).unwrap();
        assert_eq!(wp, Cell::new(7, 1));
    }

    #[test]
    fn fbe_first_scan_frontier_sits_on_range_boundary() {
        use crate::perception::{rotate_scan, update_costmap, ScanConfig};
        let map = WorldMap::from_parts(40, 40, 0.25, &[], vec![], vec![], vec![]).unwrap();
        let pose = Pose::at_cell_center(Cell::new(20, 20), 0.25, 0.0);
        let cfg = ScanConfig { max_range: 2.0, ..ScanConfig::with_resolution(30) };
        let views = rotate_scan(&map, &pose, &cfg).unwrap();
        let mut cm = Costmap::new_unknown(&map);
        update_costmap(&mut cm, &map, &pose, &views);
        let wp = fbe_step(&cm, &pose).unwrap();
        let (wx, wy) = cm.cell_center(wp);
        let d = ((wx - pose.x).powi(2) + (wy - pose.y).powi(2)).sqrt();
        // The frontier lives within a cell of the scan range.
        assert!(d > cfg.max_range - 2.0 * 0.25 && d <= cfg.max_range + 2.0 * 0.25, "d = {d}");
    }
}
