//! Simulated percepts for the rotate-in-place step: field-of-view object
//! sightings (detector analog), directional captions (captioner analog),
//! and depth rays that build the agent's costmap.
//!
//! Scans are deterministic functions of (map, pose, config); the seed only
//! drives the detector's per-object inclusion draw.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::{CellState, Costmap};
use crate::grid::Cell;
use crate::raycast::traverse;
use crate::rng::{mix, salt, stream};
use crate::world::{ObjectKind, Pose, Terrain, WorldMap};
use rand::Rng;

/// Depth rays are cast every half degree across each view's field of view.
const RAY_STEP_DEG: f64 = 0.5;

/// Nearest objects mentioned per directional caption.
const CAPTION_OBJECTS: usize = 3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Rotation resolution in degrees per view; must divide 360.
    pub resolution_deg: u32,
    /// Field of view per view in degrees; defaults to the resolution so the
    /// views tile the full circle.
    pub fov_deg: f64,
    /// Perception range in meters.
    pub max_range: f64,
    /// Per-object detector inclusion probability.
    pub detect_prob: f64,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            resolution_deg: 30,
            fov_deg: 30.0,
            max_range: 5.0,
            detect_prob: 1.0,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn with_resolution(resolution_deg: u32) -> Self {
        ScanConfig {
            resolution_deg,
            fov_deg: resolution_deg as f64,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.resolution_deg == 0 || 360 % self.resolution_deg != 0 {
            return Err(ScanError::BadConfig(format!(
                "resolution {} does not divide 360",
                self.resolution_deg
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(ScanError::BadConfig(format!("fov {} outside (0, 360]", self.fov_deg)));
        }
        if !(0.0..=1.0).contains(&self.detect_prob) {
            return Err(ScanError::BadConfig(format!(
                "detect_prob {} outside [0, 1]",
                self.detect_prob
            )));
        }
        if !(self.max_range > 0.0) {
            return Err(ScanError::BadConfig(format!("max_range {} must be > 0", self.max_range)));
        }
        Ok(())
    }

    pub fn views_per_scan(&self) -> u32 {
        360 / self.resolution_deg
    }
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan config: {0}")]
    BadConfig(String),
    #[error("pose is not on a free cell")]
    BadPose,
    #[error("captions need exactly 4 views, got {0}")]
    NotFourViews(usize),
}

/// One object sighted in a view.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VisibleObject {
    /// Index into `WorldMap::objects`.
    pub object: usize,
    /// Absolute bearing from the pose, degrees in [0, 360).
    pub bearing_deg: f64,
    /// Distance to the nearest visible cell of the object, meters.
    pub distance_m: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DepthRay {
    pub bearing_deg: f64,
    /// Distance to the obstacle hit, or to the range/grid limit if clear.
    pub distance_m: f64,
    pub blocked: bool,
}

/// One directional percept of the rotate-in-place scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct View {
    pub index: u32,
    pub heading_deg: f64,
    pub visible_objects: Vec<VisibleObject>,
    pub depth_rays: Vec<DepthRay>,
}

/// Deduplicated detector output offered to the decision backend.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DetectionSet {
    /// Distinct labels in first-sighting order.
    pub labels: Vec<String>,
    /// Label -> (view index, object index) of its first sighting.
    pub provenance: BTreeMap<String, (u32, usize)>,
}

impl DetectionSet {
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Four directional caption strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CaptionSet {
    pub front: String,
    pub right: String,
    pub behind: String,
    pub left: String,
}

/// Signed angular difference `a - b` wrapped into [-180, 180).
pub fn wrap180(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(360.0);
    if d >= 180.0 {
        d -= 360.0;
    }
    d
}

fn cast_ray(map: &WorldMap, from: (f64, f64), bearing_deg: f64, max_range: f64) -> (Vec<Cell>, f64, bool) {
    let cells = traverse(from, bearing_deg, max_range, map.cell_size(), map.width(), map.height());
    let mut walked = Vec::with_capacity(cells.len());
    for (cell, entry) in &cells {
        if map.terrain(*cell) == Terrain::Obstacle {
            walked.push(*cell);
            return (walked, *entry, true);
        }
        walked.push(*cell);
    }
    (walked, max_range, false)
}

/// Rotate in place, producing exactly `360 / resolution` views with headings
/// `pose.heading + k * resolution` (mod 360).
pub fn rotate_scan(map: &WorldMap, pose: &Pose, cfg: &ScanConfig) -> Result<Vec<View>, ScanError> {
    cfg.validate()?;
    let pose_cell = map.cell_of_pose(pose);
    if !map.is_free(pose_cell) {
        return Err(ScanError::BadPose);
    }
    let from = pose.position();
    let n_views = cfg.views_per_scan();
    let half_fov = cfg.fov_deg / 2.0;

    // Sight every object once, then assign it to the views whose wedge
    // contains its bearing.
    let mut sightings = Vec::new();
    for (idx, obj) in map.objects().iter().enumerate() {
        if let Some((_, bearing, dist)) = map.visible_object_cell(from, obj, cfg.max_range) {
            sightings.push((idx, bearing, dist));
        }
    }

    let mut views = Vec::with_capacity(n_views as usize);
    for k in 0..n_views {
        let heading = (pose.heading + (k * cfg.resolution_deg) as f64).rem_euclid(360.0);
        let mut visible_objects = Vec::new();
        for &(idx, bearing, dist) in &sightings {
            let diff = wrap180(bearing, heading);
            if diff >= -half_fov && diff < half_fov {
                visible_objects.push(VisibleObject { object: idx, bearing_deg: bearing, distance_m: dist });
            }
        }
        let mut depth_rays = Vec::new();
        let mut offset = -half_fov;
        while offset < half_fov {
            let bearing = (heading + offset).rem_euclid(360.0);
            let (_, distance_m, blocked) = cast_ray(map, from, bearing, cfg.max_range);
            depth_rays.push(DepthRay { bearing_deg: bearing, distance_m, blocked });
            offset += RAY_STEP_DEG;
        }
        views.push(View { index: k, heading_deg: heading, visible_objects, depth_rays });
    }
    Ok(views)
}

/// Detector analog: each visible common object is independently included
/// with probability `detect_prob`; target objects are never surfaced here
/// (the grounding model is the only path to them). Labels are deduplicated
/// keeping the first sighting's provenance.
pub fn detect_objects(map: &WorldMap, views: &[View], cfg: &ScanConfig) -> DetectionSet {
    let mut det = DetectionSet::default();
    for view in views {
        for vis in &view.visible_objects {
            let obj = &map.objects()[vis.object];
            if obj.kind != ObjectKind::Common {
                continue;
            }
            // One draw per object id keeps inclusion independent of the
            // order objects appear in.
            let mut rng = stream(cfg.seed, mix(salt::DETECT, vis.object as u64));
            if rng.random::<f64>() >= cfg.detect_prob {
                continue;
            }
            if !det.provenance.contains_key(&obj.label) {
                det.labels.push(obj.label.clone());
                det.provenance.insert(obj.label.clone(), (view.index, vis.object));
            }
        }
    }
    det
}

fn article(label: &str) -> &'static str {
    match label.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn caption_for(map: &WorldMap, view: &View) -> String {
    let mut commons: Vec<&VisibleObject> = view
        .visible_objects
        .iter()
        .filter(|v| map.objects()[v.object].kind == ObjectKind::Common)
        .collect();
    commons.sort_by(|a, b| {
        a.distance_m
            .partial_cmp(&b.distance_m)
            .unwrap()
            .then_with(|| a.object.cmp(&b.object))
    });
    let mut labels: Vec<String> = Vec::new();
    for v in commons {
        let label = &map.objects()[v.object].label;
        let phrase = format!("{} {}", article(label), label);
        if !labels.contains(&phrase) {
            labels.push(phrase);
        }
        if labels.len() == CAPTION_OBJECTS {
            break;
        }
    }
    match labels.len() {
        0 => "an empty area".to_string(),
        1 => format!("a room with {}", labels[0]),
        2 => format!("a room with {} and {}", labels[0], labels[1]),
        _ => format!("a room with {}, {}, and {}", labels[0], labels[1], labels[2]),
    }
}

/// Caption the four cardinal views of a resolution-90 scan. View k is the
/// direction `heading + 90k`: front, right, behind, left.
pub fn caption_views(map: &WorldMap, views: &[View]) -> Result<CaptionSet, ScanError> {
    if views.len() != 4 {
        return Err(ScanError::NotFourViews(views.len()));
    }
    Ok(CaptionSet {
        front: caption_for(map, &views[0]),
        right: caption_for(map, &views[1]),
        behind: caption_for(map, &views[2]),
        left: caption_for(map, &views[3]),
    })
}

/// Sweep every depth ray into the costmap: traversed cells become KnownFree
/// up to the hit, the hit cell becomes KnownObstacle. Known cells never
/// revert.
pub fn update_costmap(costmap: &mut Costmap, map: &WorldMap, pose: &Pose, views: &[View]) {
    let from = pose.position();
    costmap.mark(map.cell_of_pose(pose), CellState::KnownFree);
    for view in views {
        for ray in &view.depth_rays {
            // Re-walk the identical traversal the scan used.
            let (cells, _, blocked) = cast_ray(map, from, ray.bearing_deg, ray.distance_m.max(0.0));
            let n = cells.len();
            for (i, cell) in cells.into_iter().enumerate() {
                if blocked && i == n - 1 {
                    costmap.mark(cell, CellState::KnownObstacle);
                } else {
                    costmap.mark(cell, CellState::KnownFree);
                }
            }
        }
    }
}
