//! Grid ray traversal (Amanatides & Woo) used for depth rays and
//! line-of-sight checks.

use crate::grid::Cell;

/// Cells crossed by a ray, in order, each paired with the distance (meters)
/// at which the ray enters the cell. The starting cell is yielded first with
/// entry distance 0. Traversal stops once the entry distance exceeds
/// `max_dist` or the ray leaves the grid.
pub fn traverse(
    from: (f64, f64),
    angle_deg: f64,
    max_dist: f64,
    cell_size: f64,
    width: u32,
    height: u32,
) -> Vec<(Cell, f64)> {
    let (w, h) = (width as i32, height as i32);
    let theta = angle_deg.to_radians();
    let (dx, dy) = (theta.cos(), theta.sin());

    let mut cx = (from.0 / cell_size).floor() as i32;
    let mut cy = (from.1 / cell_size).floor() as i32;
    if cx < 0 || cy < 0 || cx >= w || cy >= h {
        return Vec::new();
    }

    let step_x: i32 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i32 = if dy > 0.0 { 1 } else { -1 };

    // Distance along the ray to the first vertical / horizontal grid line.
    let next_x = if dx > 0.0 { (cx + 1) as f64 * cell_size } else { cx as f64 * cell_size };
    let next_y = if dy > 0.0 { (cy + 1) as f64 * cell_size } else { cy as f64 * cell_size };
    let mut t_max_x = if dx == 0.0 { f64::INFINITY } else { (next_x - from.0) / dx };
    let mut t_max_y = if dy == 0.0 { f64::INFINITY } else { (next_y - from.1) / dy };
    let t_delta_x = if dx == 0.0 { f64::INFINITY } else { cell_size / dx.abs() };
    let t_delta_y = if dy == 0.0 { f64::INFINITY } else { cell_size / dy.abs() };

    let mut out = vec![(Cell::new(cx, cy), 0.0)];
    loop {
        let t_entry;
        if t_max_x < t_max_y {
            t_entry = t_max_x;
            t_max_x += t_delta_x;
            cx += step_x;
        } else {
            t_entry = t_max_y;
            t_max_y += t_delta_y;
            cy += step_y;
        }
        if t_entry > max_dist || cx < 0 || cy < 0 || cx >= w || cy >= h {
            break;
        }
        out.push((Cell::new(cx, cy), t_entry));
    }
    out
}

/// True when the segment from `from` (meters) to the center of `to` crosses
/// no cell for which `blocks` returns true. The destination cell itself is
/// not tested.
pub fn line_of_sight(
    from: (f64, f64),
    to: Cell,
    cell_size: f64,
    width: u32,
    height: u32,
    blocks: impl Fn(Cell) -> bool,
) -> bool {
    let target = (
        (to.x as f64 + 0.5) * cell_size,
        (to.y as f64 + 0.5) * cell_size,
    );
    let (vx, vy) = (target.0 - from.0, target.1 - from.1);
    let dist = (vx * vx + vy * vy).sqrt();
    if dist == 0.0 {
        return true;
    }
    let angle = vy.atan2(vx).to_degrees();
    for (cell, _) in traverse(from, angle, dist, cell_size, width, height) {
        if cell == to {
            return true;
        }
        if blocks(cell) {
            return false;
        }
    }
    // Numerical shortfall: the walk ended in the cell adjacent to the target
    // without crossing a blocker.
    true
}
