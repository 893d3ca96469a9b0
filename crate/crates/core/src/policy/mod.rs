//! Episode-level decision loops: language-guided exploration over objects
//! or captions, frontier-based exploration, and the random-heading
//! baseline, all sharing the grounding stop condition and the costmap
//! planner.

mod planner;

pub use planner::{fbe_step, frontier_cells, plan_path, select_waypoint, PlanError, PlannedPath};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::Costmap;
use crate::grid::Cell;
use crate::grounding::{check_stop, ground_target, GroundingModel, GroundingResult};
use crate::llm::{cached_decide, DecisionBackend, DecisionRequest, ResponseCache};
use crate::perception::{
    caption_views, detect_objects, rotate_scan, update_costmap, DetectionSet, ScanConfig, ScanError,
    View,
};
use crate::prompt::{
    parse_response, synthesize, ChoiceKind, LlmDecision, Outcome, PromptContext, PromptError,
    PromptVariant, PsrCounter, DIRECTIONS,
};
use crate::rng::{mix, salt, stream};
use crate::world::{
    shortest_path_length, spawn, EpisodeSpec, ObjectKind, PathError, Pose, SpawnError, WorldMap,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    LgxObjects,
    LgxCaptions,
    Fbe,
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] =
        [PolicyKind::LgxObjects, PolicyKind::LgxCaptions, PolicyKind::Fbe, PolicyKind::Random];

    pub fn key(&self) -> &'static str {
        match self {
            PolicyKind::LgxObjects => "lgx-objects",
            PolicyKind::LgxCaptions => "lgx-captions",
            PolicyKind::Fbe => "fbe",
            PolicyKind::Random => "random",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|p| p.key() == key)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Maximum exploratory rotate-in-place turns.
    pub n_r: u32,
    /// Grounding confidence threshold for the stop signal.
    pub g_th: f64,
    /// Exploratory distance to the next waypoint, meters.
    pub e_d: f64,
    pub scan: ScanConfig,
    pub policy: PolicyKind,
    pub prompt: PromptVariant,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            n_r: 5,
            g_th: 0.85,
            e_d: 5.0,
            scan: ScanConfig::default(),
            policy: PolicyKind::LgxObjects,
            prompt: PromptVariant::Robot,
            seed: 0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), EpisodeError> {
        if self.n_r < 1 {
            return Err(EpisodeError::Config("n_r must be at least 1".into()));
        }
        if !(self.g_th > 0.0 && self.g_th <= 1.0) {
            return Err(EpisodeError::Config(format!("g_th {} outside (0, 1]", self.g_th)));
        }
        if !(self.e_d > 0.0) {
            return Err(EpisodeError::Config(format!("e_d {} must be > 0", self.e_d)));
        }
        self.scan.validate().map_err(EpisodeError::Scan)?;
        match self.policy {
            PolicyKind::LgxCaptions => {
                if self.prompt != PromptVariant::Blip {
                    return Err(EpisodeError::Config(
                        "the caption policy uses the blip prompt variant".into(),
                    ));
                }
                if self.scan.resolution_deg != 90 {
                    return Err(EpisodeError::Config(
                        "the caption policy needs resolution 90 (four views)".into(),
                    ));
                }
            }
            PolicyKind::LgxObjects => {
                if self.prompt == PromptVariant::Blip {
                    return Err(EpisodeError::Config(
                        "the blip prompt variant requires the caption policy".into(),
                    ));
                }
            }
            PolicyKind::Fbe | PolicyKind::Random => {}
        }
        Ok(())
    }

    /// Align dependent fields after switching policy or prompt in a sweep:
    /// the caption policy forces the blip prompt and four views; object
    /// policies leave blip for a sensible object prompt.
    pub fn reconcile(&mut self) {
        match self.policy {
            PolicyKind::LgxCaptions => {
                self.prompt = PromptVariant::Blip;
                self.scan.resolution_deg = 90;
                self.scan.fov_deg = 90.0;
            }
            PolicyKind::LgxObjects => {
                if self.prompt == PromptVariant::Blip {
                    self.prompt = PromptVariant::Robot;
                }
            }
            _ => {}
        }
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("target {0} not on map")]
    UnknownTarget(String),
    #[error(transparent)]
    Spawn(#[from] SpawnError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    GroundingStop,
    TurnBudget,
    PlannerStuck,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFailure {
    Phase1,
    Phase2,
}

/// Ordered decision log of one episode.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Spawn { pose: Pose },
    Scan { turn: u32, pose: Pose, views: usize, visible_objects: usize },
    Grounding { turn: u32, confidences: Vec<f64>, stop_view: Option<usize> },
    Detections { turn: u32, labels: Vec<String> },
    Captions { turn: u32, front: String, right: String, behind: String, left: String },
    Prompt { turn: u32, variant: PromptVariant, text: String },
    Reply { turn: u32, raw: String, parsed: Option<String> },
    LlmFailure { turn: u32, error: String },
    Decision { turn: u32, heading_deg: f64 },
    Move { turn: u32, waypoint: Cell, cells: Vec<Cell>, length_m: f64 },
    Stop { turn: u32, cause: StopCause },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub target_label: String,
    pub success: bool,
    /// Sum of executed plan segment lengths, meters.
    pub path_length: f64,
    /// Exact shortest path to target visibility from the spawn, meters.
    pub optimal_length: f64,
    pub turns_used: u32,
    pub psr: PsrCounter,
    pub stop_cause: StopCause,
    pub phase_failure: Option<PhaseFailure>,
    pub spawn: Pose,
    pub trace: Vec<TraceEvent>,
}

impl EpisodeResult {
    /// Every cell the agent's executed paths crossed, spawn first.
    pub fn visited_cells(&self, cell_size: f64) -> Vec<Cell> {
        let mut cells = Vec::new();
        for event in &self.trace {
            match event {
                TraceEvent::Spawn { pose } => cells.push(Cell::new(
                    (pose.x / cell_size).floor() as i32,
                    (pose.y / cell_size).floor() as i32,
                )),
                TraceEvent::Move { cells: path, .. } => cells.extend(path.iter().copied()),
                _ => {}
            }
        }
        cells
    }
}

/// Everything an episode queries but does not own.
pub struct Backends<'a> {
    pub llm: &'a dyn DecisionBackend,
    pub cache: Option<&'a ResponseCache>,
    pub grounding: &'a GroundingModel,
}

/// Map a valid decision (or fall back from an invalid one) to the next
/// heading: object choices aim at their provenance detection, direction
/// choices turn relative to the current heading, anything else draws a
/// uniformly random heading from the episode stream.
pub fn lgx_reorient(
    decision: &LlmDecision,
    detections: Option<&DetectionSet>,
    views: &[View],
    current_heading: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let random = |rng: &mut ChaCha8Rng| rng.random_range(0.0..360.0);
    match &decision.outcome {
        Outcome::Valid(choice) => match decision.choice_kind {
            ChoiceKind::Object => {
                if let Some(&(view_idx, obj_idx)) =
                    detections.and_then(|d| d.provenance.get(choice))
                {
                    if let Some(vis) = views
                        .get(view_idx as usize)
                        .and_then(|v| v.visible_objects.iter().find(|o| o.object == obj_idx))
                    {
                        return vis.bearing_deg;
                    }
                }
                random(rng)
            }
            ChoiceKind::Direction => {
                let offset = match choice.as_str() {
                    "Front" => 0.0,
                    "Right" => 90.0,
                    "Behind" => 180.0,
                    "Left" => 270.0,
                    _ => return random(rng),
                };
                (current_heading + offset).rem_euclid(360.0)
            }
        },
        Outcome::Invalid(_) => random(rng),
    }
}

fn query_backend(
    backends: &Backends<'_>,
    prompt_text: &str,
    valid_set: &[String],
    target: &str,
    seed: u64,
) -> Result<String, crate::llm::LlmError> {
    let req = DecisionRequest { prompt: prompt_text, valid_set, target, seed };
    match backends.cache {
        Some(cache) => cached_decide(cache, backends.llm, &req).map(|(reply, _)| reply),
        None => backends.llm.decide(&req),
    }
}

/// Run one episode to completion. All in-episode failures (invalid replies,
/// backend errors, planner dead ends) are encoded in the result; an error
/// here means a violated precondition such as a missing target.
pub fn run_episode(
    map: &WorldMap,
    spec: &EpisodeSpec,
    cfg: &EpisodeConfig,
    backends: &Backends<'_>,
) -> Result<EpisodeResult, EpisodeError> {
    cfg.validate()?;
    let (target_idx, target_obj) = map
        .objects()
        .iter()
        .enumerate()
        .find(|(_, o)| o.kind == ObjectKind::Target && o.label == spec.target_label)
        .ok_or_else(|| EpisodeError::UnknownTarget(spec.target_label.clone()))?;

    let mut pose = spawn(map, spec.spawn_seed)?;
    let spawn_pose = pose;
    let optimal_length = shortest_path_length(map, &pose, target_obj, cfg.scan.max_range)?;

    let mut costmap = Costmap::new_unknown(map);
    let mut grounding_rng = backends.grounding.episode_rng(cfg.seed);
    let mut heading_rng = stream(cfg.seed, salt::HEADING);
    let mut psr = PsrCounter::default();
    let mut trace = vec![TraceEvent::Spawn { pose }];
    let mut path_length = 0.0;
    let mut success = false;
    let mut stop_cause = StopCause::TurnBudget;
    let mut turns_used = 0;

    'episode: for turn in 1..=cfg.n_r {
        turns_used = turn;
        let scan_cfg = ScanConfig {
            seed: mix(cfg.seed, mix(salt::DETECT, turn as u64)),
            ..cfg.scan.clone()
        };
        let views = rotate_scan(map, &pose, &scan_cfg)?;
        update_costmap(&mut costmap, map, &pose, &views);
        trace.push(TraceEvent::Scan {
            turn,
            pose,
            views: views.len(),
            visible_objects: views.iter().map(|v| v.visible_objects.len()).sum(),
        });

        // Grounding runs during every rotate-in-place turn, including the
        // first; an episode can stop before any language query.
        let results: Vec<GroundingResult> = views
            .iter()
            .map(|v| ground_target(backends.grounding, &mut grounding_rng, map, v, &spec.target_label))
            .collect();
        let stop_view = check_stop(&results, cfg.g_th);
        trace.push(TraceEvent::Grounding {
            turn,
            confidences: results.iter().map(|r| r.confidence).collect(),
            stop_view,
        });
        if stop_view.is_some() {
            stop_cause = StopCause::GroundingStop;
            // The pose never moved during the scan, so the episode succeeds
            // exactly when the ground-truth target is in some view.
            success = views
                .iter()
                .any(|v| v.visible_objects.iter().any(|o| o.object == target_idx));
            trace.push(TraceEvent::Stop { turn, cause: stop_cause });
            break 'episode;
        }

        // Choose where to go next.
        let waypoint = match cfg.policy {
            PolicyKind::LgxObjects | PolicyKind::LgxCaptions => {
                let llm_seed = mix(mix(cfg.seed, salt::LLM), turn as u64);
                let queried = match cfg.policy {
                    PolicyKind::LgxObjects => {
                        let det = detect_objects(map, &views, &scan_cfg);
                        trace.push(TraceEvent::Detections { turn, labels: det.labels.clone() });
                        if det.is_empty() {
                            None // nothing to offer; move like an invalid reply
                        } else {
                            let text = synthesize(
                                cfg.prompt,
                                &spec.target_label,
                                PromptContext::Objects(&det),
                            )?;
                            Some((text, det.labels.clone(), Some(det)))
                        }
                    }
                    _ => {
                        let captions = caption_views(map, &views)?;
                        trace.push(TraceEvent::Captions {
                            turn,
                            front: captions.front.clone(),
                            right: captions.right.clone(),
                            behind: captions.behind.clone(),
                            left: captions.left.clone(),
                        });
                        let text = synthesize(
                            cfg.prompt,
                            &spec.target_label,
                            PromptContext::Captions(&captions),
                        )?;
                        let dirs = DIRECTIONS.iter().map(|d| d.to_string()).collect();
                        Some((text, dirs, None))
                    }
                };
                let heading = match queried {
                    None => heading_rng.random_range(0.0..360.0),
                    Some((text, valid_set, det)) => {
                        trace.push(TraceEvent::Prompt { turn, variant: cfg.prompt, text: text.clone() });
                        let decision = match query_backend(
                            backends,
                            &text,
                            &valid_set,
                            &spec.target_label,
                            llm_seed,
                        ) {
                            Ok(raw) => {
                                let d = parse_response(&raw, &valid_set, cfg.prompt.choice_kind());
                                trace.push(TraceEvent::Reply {
                                    turn,
                                    raw,
                                    parsed: d.valid_choice().map(str::to_string),
                                });
                                d
                            }
                            Err(e) => {
                                trace.push(TraceEvent::LlmFailure { turn, error: e.to_string() });
                                LlmDecision {
                                    outcome: Outcome::Invalid(String::new()),
                                    choice_kind: cfg.prompt.choice_kind(),
                                }
                            }
                        };
                        psr.record(decision.valid_choice().is_some());
                        lgx_reorient(&decision, det.as_ref(), &views, pose.heading, &mut heading_rng)
                    }
                };
                trace.push(TraceEvent::Decision { turn, heading_deg: heading });
                pose.heading = heading;
                select_waypoint(&costmap, &pose, heading, cfg.e_d)
            }
            PolicyKind::Fbe => fbe_step(&costmap, &pose),
            PolicyKind::Random => {
                let heading = heading_rng.random_range(0.0..360.0);
                trace.push(TraceEvent::Decision { turn, heading_deg: heading });
                pose.heading = heading;
                select_waypoint(&costmap, &pose, heading, cfg.e_d)
            }
        };

        let Ok(waypoint) = waypoint else {
            stop_cause = StopCause::PlannerStuck;
            trace.push(TraceEvent::Stop { turn, cause: stop_cause });
            break 'episode;
        };
        let path = match plan_path(&costmap, map.cell_of_pose(&pose), waypoint) {
            Ok(p) => p,
            Err(_) => {
                stop_cause = StopCause::PlannerStuck;
                trace.push(TraceEvent::Stop { turn, cause: stop_cause });
                break 'episode;
            }
        };
        let length = path.length_m(map.cell_size());
        path_length += length;
        trace.push(TraceEvent::Move {
            turn,
            waypoint,
            cells: path.cells.clone(),
            length_m: length,
        });
        let heading = match cfg.policy {
            PolicyKind::Fbe => match path.cells.len() {
                0 | 1 => pose.heading,
                n => {
                    let (ax, ay) = map.cell_center(path.cells[n - 2]);
                    let (bx, by) = map.cell_center(path.cells[n - 1]);
                    (by - ay).atan2(bx - ax).to_degrees().rem_euclid(360.0)
                }
            },
            _ => pose.heading,
        };
        pose = Pose::at_cell_center(waypoint, map.cell_size(), heading);
    }

    if stop_cause == StopCause::TurnBudget {
        trace.push(TraceEvent::Stop { turn: turns_used, cause: stop_cause });
    }

    Ok(EpisodeResult {
        target_label: spec.target_label.clone(),
        success,
        path_length,
        optimal_length,
        turns_used,
        psr,
        stop_cause,
        phase_failure: None,
        spawn: spawn_pose,
        trace,
    })
}
