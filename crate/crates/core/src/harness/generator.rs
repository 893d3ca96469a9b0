//! Procedural house generation: multi-room layouts joined by a central
//! hallway, populated with the default room/object templates, plus the
//! per-episode spawn seeds that put the agent in a different room than its
//! target.
//!
//! Hallway doorways carry a small "hallway" marker object so the detector
//! can offer leaving the room as an option to the decision backend.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::grid::Cell;
use crate::rng::{mix, salt, stream};
use crate::world::{
    save_scenario, spawn, EpisodeSpec, ObjectInstance, ObjectKind, Region, Room, Scenario,
    WorldMap,
};

/// Room templates: label, common objects, freeform target objects.
pub const ROOM_TEMPLATES: [(&str, [&str; 2], [&str; 2]); 4] = [
    ("kitchen", ["sink", "fridge"], ["Red Bull can", "Stevia sugar packets"]),
    ("living room", ["couch", "tv"], ["remote control", "coffee table"]),
    ("bedroom", ["bed", "blanket"], ["bust", "olive-colored jacket"]),
    ("office", ["desk", "computer"], ["silver pen", "whiteboard"]),
];

pub const HALLWAY_LABEL: &str = "hallway";

#[derive(Clone, Debug)]
pub struct HouseParams {
    pub cell_size: f64,
    /// Interior width range in cells.
    pub interior_width: (u32, u32),
    /// Per-side room height range in cells.
    pub room_height: (u32, u32),
    /// Hallway band height in cells.
    pub hallway_height: u32,
    /// Door gap width in cells.
    pub door_width: u32,
    /// Episodes emitted per house.
    pub episodes_per_house: u32,
}

impl Default for HouseParams {
    fn default() -> Self {
        HouseParams {
            cell_size: 0.25,
            interior_width: (28, 34),
            room_height: (10, 13),
            hallway_height: 4,
            door_width: 3,
            episodes_per_house: 10,
        }
    }
}

impl HouseParams {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.interior_width.0 < 12 || self.room_height.0 < 5 || self.hallway_height < 2 {
            return Err(HarnessError::Config(
                "house dimensions too small to fit rooms, doors, and objects".into(),
            ));
        }
        if self.door_width < 1 || self.door_width + 4 > self.interior_width.0 / 2 {
            return Err(HarnessError::Config("door width does not fit the rooms".into()));
        }
        if self.episodes_per_house < 1 {
            return Err(HarnessError::Config("need at least one episode per house".into()));
        }
        Ok(())
    }
}

struct RoomRect {
    x0: i32,
    y0: i32,
    x1: i32, // inclusive
    y1: i32, // inclusive
}

impl RoomRect {
    fn cells(&self) -> Vec<Cell> {
        (self.y0..=self.y1)
            .flat_map(|y| (self.x0..=self.x1).map(move |x| Cell::new(x, y)))
            .collect()
    }
}

fn pick(rng: &mut ChaCha8Rng, range: (u32, u32)) -> u32 {
    rng.random_range(range.0..=range.1)
}

/// Place an object of the given extent inside the room without overlapping
/// previously used cells.
fn place_object(
    rng: &mut ChaCha8Rng,
    rect: &RoomRect,
    extent: [u32; 2],
    used: &mut Vec<Cell>,
) -> Cell {
    let (w, h) = (extent[0] as i32, extent[1] as i32);
    let mut candidates: Vec<Cell> = (rect.y0..=rect.y1 - (h - 1))
        .flat_map(|y| (rect.x0..=rect.x1 - (w - 1)).map(move |x| Cell::new(x, y)))
        .collect();
    candidates.shuffle(rng);
    for anchor in candidates {
        let cells: Vec<Cell> = (0..h)
            .flat_map(|dy| (0..w).map(move |dx| Cell::new(anchor.x + dx, anchor.y + dy)))
            .collect();
        if cells.iter().any(|c| used.contains(c)) {
            continue;
        }
        used.extend(cells);
        return anchor;
    }
    // Rooms are far larger than the handful of objects they hold.
    unreachable!("room cannot fit object")
}

/// Generate one validated house scenario. Deterministic in (seed, params).
pub fn generate_house(seed: u64, params: &HouseParams) -> Result<Scenario, HarnessError> {
    params.validate()?;
    let mut rng = stream(seed, salt::GENERATOR);

    let interior_w = pick(&mut rng, params.interior_width) as i32;
    let top_h = pick(&mut rng, params.room_height) as i32;
    let bottom_h = pick(&mut rng, params.room_height) as i32;
    let hall_h = params.hallway_height as i32;
    let width = interior_w + 2;
    let height = top_h + bottom_h + hall_h + 4;

    let top_wall_y = top_h + 1;
    let hall_y0 = top_wall_y + 1;
    let hall_y1 = hall_y0 + hall_h - 1;
    let bottom_wall_y = hall_y1 + 1;
    let bottom_y0 = bottom_wall_y + 1;
    let bottom_y1 = bottom_y0 + bottom_h - 1;

    // Splits keep both rooms on a side at least a third of the interior.
    let third = interior_w / 3;
    let top_split = rng.random_range(third..=interior_w - third); // wall column
    let bottom_split = rng.random_range(third..=interior_w - third);

    let rects = [
        RoomRect { x0: 1, y0: 1, x1: top_split - 1, y1: top_h },
        RoomRect { x0: top_split + 1, y0: 1, x1: interior_w, y1: top_h },
        RoomRect { x0: 1, y0: bottom_y0, x1: bottom_split - 1, y1: bottom_y1 },
        RoomRect { x0: bottom_split + 1, y0: bottom_y0, x1: interior_w, y1: bottom_y1 },
    ];

    let mut obstacles: Vec<Cell> = Vec::new();
    for x in 0..width {
        obstacles.push(Cell::new(x, 0));
        obstacles.push(Cell::new(x, height - 1));
    }
    for y in 0..height {
        obstacles.push(Cell::new(0, y));
        obstacles.push(Cell::new(width - 1, y));
    }
    for y in 1..=top_h {
        obstacles.push(Cell::new(top_split, y));
    }
    for y in bottom_y0..=bottom_y1 {
        obstacles.push(Cell::new(bottom_split, y));
    }

    // Room-to-hallway walls with one door gap per room.
    let door_w = params.door_width as i32;
    let mut door_centers = Vec::new();
    let mut door_cells: Vec<Cell> = Vec::new();
    for (i, rect) in rects.iter().enumerate() {
        let wall_y = if i < 2 { top_wall_y } else { bottom_wall_y };
        let lo = rect.x0 + 1 + door_w / 2;
        let hi = rect.x1 - 1 - door_w / 2;
        let center = rng.random_range(lo..=hi);
        door_centers.push((center, wall_y));
        for x in rect.x0..=rect.x1 {
            if (x - center).abs() > door_w / 2 {
                obstacles.push(Cell::new(x, wall_y));
            } else {
                door_cells.push(Cell::new(x, wall_y));
            }
        }
    }

    let hallway: Vec<Cell> = (hall_y0..=hall_y1)
        .flat_map(|y| (1..=interior_w).map(move |x| Cell::new(x, y)))
        .collect();

    // Assign the room templates to the four rectangles.
    let mut order: Vec<usize> = (0..4).collect();
    order.shuffle(&mut rng);
    let mut rooms = Vec::new();
    let mut objects = Vec::new();
    let mut target_labels = Vec::new();
    for (rect_idx, &tmpl_idx) in order.iter().enumerate() {
        let (label, commons, targets) = ROOM_TEMPLATES[tmpl_idx];
        let rect = &rects[rect_idx];
        let room_id = format!("room-{rect_idx}-{}", label.replace(' ', "-"));
        rooms.push(Room { id: room_id.clone(), label: label.into(), footprint: rect.cells() });

        let mut used: Vec<Cell> = Vec::new();
        for (ci, common) in commons.iter().enumerate() {
            let extent = if rng.random::<bool>() { [2, 1] } else { [1, 2] };
            let anchor = place_object(&mut rng, rect, extent, &mut used);
            objects.push(ObjectInstance {
                id: format!("{room_id}-common-{ci}"),
                label: (*common).into(),
                kind: ObjectKind::Common,
                position: anchor,
                extent,
                room_id: Some(room_id.clone()),
            });
        }
        for (ti, target) in targets.iter().enumerate() {
            let anchor = place_object(&mut rng, rect, [1, 1], &mut used);
            objects.push(ObjectInstance {
                id: format!("{room_id}-target-{ti}"),
                label: (*target).into(),
                kind: ObjectKind::Target,
                position: anchor,
                extent: [1, 1],
                room_id: Some(room_id.clone()),
            });
            target_labels.push(((*target).to_string(), room_id.clone()));
        }
    }

    // Hallway markers just inside the band, facing each door.
    for (i, &(center, wall_y)) in door_centers.iter().enumerate() {
        let marker_y = if wall_y == top_wall_y { hall_y0 } else { hall_y1 };
        objects.push(ObjectInstance {
            id: format!("hallway-marker-{i}"),
            label: HALLWAY_LABEL.into(),
            kind: ObjectKind::Common,
            position: Cell::new(center, marker_y),
            extent: [1, 1],
            room_id: None,
        });
    }

    let map = WorldMap::from_parts(
        width as u32,
        height as u32,
        params.cell_size,
        &obstacles,
        rooms,
        hallway,
        objects,
    )
    .map_err(HarnessError::Scenario)?;

    // Episodes cycle through the targets; each spawn seed is searched so the
    // agent starts inside a room other than the target's.
    let mut episodes = Vec::new();
    for i in 0..params.episodes_per_house {
        let (target_label, target_room) = &target_labels[i as usize % target_labels.len()];
        let target_room_idx = map
            .rooms()
            .iter()
            .position(|r| &r.id == target_room)
            .expect("target room exists");
        let base = mix(mix(seed, salt::GENERATOR), 1000 + i as u64);
        let mut found = None;
        for k in 0..10_000u64 {
            let candidate = base.wrapping_add(k);
            let Ok(pose) = spawn(&map, candidate) else { break };
            match map.region_at(map.cell_of_pose(&pose)) {
                Region::Room(ri) if ri != target_room_idx => {
                    found = Some(candidate);
                    break;
                }
                _ => {}
            }
        }
        let spawn_seed = found.ok_or_else(|| {
            HarnessError::Config(format!("no spawn seed outside the room of {target_label}"))
        })?;
        episodes.push(EpisodeSpec { target_label: target_label.clone(), spawn_seed });
    }

    Ok(Scenario {
        name: format!("house_{seed:04}"),
        map,
        episodes,
        similarity: Vec::new(),
    })
}

/// Generate `count` houses and write them under `out_dir`. File bytes are
/// deterministic in (count, seed, params).
pub fn generate_houses(
    count: u32,
    seed: u64,
    params: &HouseParams,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, HarnessError> {
    if count < 1 {
        return Err(HarnessError::Config("need at least one house".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut paths = Vec::new();
    for i in 0..count {
        let house_seed = mix(seed, u64::from(i));
        let mut scenario = generate_house(house_seed, params)?;
        scenario.name = format!("house_{i:03}");
        let path = out_dir.join(format!("house_{i:03}.json"));
        save_scenario(&scenario, &path).map_err(HarnessError::Scenario)?;
        paths.push(path);
    }
    Ok(paths)
}
