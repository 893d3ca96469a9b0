//! Suite execution: run every (scenario, episode, seed) combination,
//! classify two-phase outcomes, and emit result files whose bytes are
//! identical at any parallelism degree.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report;
use super::HarnessError;
use crate::grounding::GroundingModel;
use crate::llm::{DecisionBackend, ResponseCache};
use crate::metrics::{summarize, SuiteSummary};
use crate::policy::{
    run_episode, Backends, EpisodeConfig, EpisodeResult, PhaseFailure, PolicyKind, StopCause,
};
use crate::prompt::PromptVariant;
use crate::rng::mix;
use crate::world::{Pose, Region, Scenario};

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub episode: EpisodeConfig,
    /// Suite seeds; every episode runs once per seed.
    pub seeds: Vec<u64>,
    /// Worker threads; 1 means fully sequential.
    pub parallelism: usize,
    pub grounding: GroundingModel,
    /// Write per-episode trace files alongside the results.
    pub write_traces: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            episode: EpisodeConfig::default(),
            seeds: vec![0],
            parallelism: 1,
            grounding: GroundingModel::default(),
            write_traces: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoPhaseClass {
    Success,
    Phase1,
    Phase2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub success: u64,
    pub phase1: u64,
    pub phase2: u64,
}

/// One row of the results file; carries everything needed to recompute the
/// suite summary offline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub id: String,
    pub scenario: String,
    pub episode_index: usize,
    pub suite_seed: u64,
    pub policy: PolicyKind,
    pub prompt: PromptVariant,
    pub g_th: f64,
    pub target_label: String,
    pub success: bool,
    pub path_length: f64,
    pub optimal_length: f64,
    pub turns_used: u32,
    pub p_suc: u64,
    pub p_total: u64,
    pub stop_cause: StopCause,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<TwoPhaseClass>,
    pub spawn: Pose,
}

impl EpisodeRecord {
    /// Rebuild the metric-relevant slice of the episode result.
    pub fn to_result(&self) -> EpisodeResult {
        EpisodeResult {
            target_label: self.target_label.clone(),
            success: self.success,
            path_length: self.path_length,
            optimal_length: self.optimal_length,
            turns_used: self.turns_used,
            psr: crate::prompt::PsrCounter { p_suc: self.p_suc, p_total: self.p_total },
            stop_cause: self.stop_cause,
            phase_failure: match self.phase {
                Some(TwoPhaseClass::Phase1) => Some(PhaseFailure::Phase1),
                Some(TwoPhaseClass::Phase2) => Some(PhaseFailure::Phase2),
                _ => None,
            },
            spawn: self.spawn,
            trace: vec![],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub summary: SuiteSummary,
    pub records: Vec<EpisodeRecord>,
    /// Present when every scenario in the suite has a hallway region.
    pub phase_counts: Option<PhaseCounts>,
}

/// Classify a two-phase episode: success, never entered the hallway
/// (phase 1), or entered the hallway but stopped outside the target's room
/// (phase 2). The classes are exhaustive and mutually exclusive.
pub fn classify_two_phase(
    result: &EpisodeResult,
    map: &crate::world::WorldMap,
) -> Result<TwoPhaseClass, HarnessError> {
    if map.hallway().is_empty() {
        return Err(HarnessError::MissingHallway);
    }
    if result.success {
        return Ok(TwoPhaseClass::Success);
    }
    let entered_hallway = result
        .visited_cells(map.cell_size())
        .iter()
        .any(|&c| matches!(map.region_at(c), Region::Hallway));
    if entered_hallway {
        Ok(TwoPhaseClass::Phase2)
    } else {
        Ok(TwoPhaseClass::Phase1)
    }
}

struct Job<'a> {
    order: usize,
    scenario_idx: usize,
    scenario: &'a Scenario,
    grounding: &'a GroundingModel,
    episode_index: usize,
    suite_seed: u64,
}

/// Run the full suite. Results are ordered by (scenario, episode, seed)
/// regardless of parallelism, so identical inputs give identical output
/// bytes at any worker count. Backend failures are recorded per episode
/// and never abort the suite.
pub fn run_suite(
    scenarios: &[Scenario],
    cfg: &SuiteConfig,
    backend: &dyn DecisionBackend,
    cache: Option<&ResponseCache>,
    out_dir: Option<&Path>,
) -> Result<SuiteOutcome, HarnessError> {
    if scenarios.is_empty() {
        return Err(HarnessError::Config("no scenarios to run".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Config("no suite seeds".into()));
    }
    cfg.episode.validate().map_err(HarnessError::Episode)?;

    // Per-scenario grounding: the base model plus the scenario's table.
    let grounding_models: Vec<GroundingModel> = scenarios
        .iter()
        .map(|s| {
            let mut g = cfg.grounding.clone();
            g.similarity.extend(crate::world::similarity_table(&s.similarity));
            g
        })
        .collect();

    let mut jobs = Vec::new();
    for (si, scenario) in scenarios.iter().enumerate() {
        for ei in 0..scenario.episodes.len() {
            for &suite_seed in &cfg.seeds {
                jobs.push(Job {
                    order: jobs.len(),
                    scenario_idx: si,
                    scenario,
                    grounding: &grounding_models[si],
                    episode_index: ei,
                    suite_seed,
                });
            }
        }
    }

    let run_one = |job: &Job<'_>| -> Result<(usize, EpisodeRecord, EpisodeResult), HarnessError> {
        let scenario = job.scenario;
        let spec = &scenario.episodes[job.episode_index];
        let ep_cfg = EpisodeConfig {
            seed: mix(
                mix(mix(cfg.episode.seed, job.suite_seed), job.scenario_idx as u64),
                job.episode_index as u64,
            ),
            ..cfg.episode.clone()
        };
        let backends = Backends { llm: backend, cache, grounding: job.grounding };
        let mut result =
            run_episode(&scenario.map, spec, &ep_cfg, &backends).map_err(HarnessError::Episode)?;
        let phase = if scenario.map.hallway().is_empty() {
            None
        } else {
            let class = classify_two_phase(&result, &scenario.map)?;
            result.phase_failure = match class {
                TwoPhaseClass::Phase1 => Some(PhaseFailure::Phase1),
                TwoPhaseClass::Phase2 => Some(PhaseFailure::Phase2),
                TwoPhaseClass::Success => None,
            };
            Some(class)
        };
        let record = EpisodeRecord {
            id: format!("{}-e{:02}-s{}", scenario.name, job.episode_index, job.suite_seed),
            scenario: scenario.name.clone(),
            episode_index: job.episode_index,
            suite_seed: job.suite_seed,
            policy: ep_cfg.policy,
            prompt: ep_cfg.prompt,
            g_th: ep_cfg.g_th,
            target_label: result.target_label.clone(),
            success: result.success,
            path_length: result.path_length,
            optimal_length: result.optimal_length,
            turns_used: result.turns_used,
            p_suc: result.psr.p_suc,
            p_total: result.psr.p_total,
            stop_cause: result.stop_cause,
            phase,
            spawn: result.spawn,
        };
        Ok((job.order, record, result))
    };

    let mut executed: Vec<(usize, EpisodeRecord, EpisodeResult)> = if cfg.parallelism <= 1 {
        jobs.iter().map(run_one).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run_one).collect::<Result<_, _>>())?
    };
    executed.sort_by_key(|(order, _, _)| *order);

    let records: Vec<EpisodeRecord> = executed.iter().map(|(_, r, _)| r.clone()).collect();
    let results: Vec<EpisodeResult> = executed.iter().map(|(_, _, r)| r.clone()).collect();
    let summary = summarize(&results).map_err(HarnessError::Metrics)?;
    let phase_counts = records
        .iter()
        .map(|r| r.phase)
        .collect::<Option<Vec<_>>>()
        .map(|classes| {
            let mut counts = PhaseCounts::default();
            for class in classes {
                match class {
                    TwoPhaseClass::Success => counts.success += 1,
                    TwoPhaseClass::Phase1 => counts.phase1 += 1,
                    TwoPhaseClass::Phase2 => counts.phase2 += 1,
                }
            }
            counts
        });

    if let Some(dir) = out_dir {
        report::write_suite_outputs(dir, &records, &summary, phase_counts, cfg.write_traces.then_some(&executed))?;
    }

    Ok(SuiteOutcome { summary, records, phase_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generator::{generate_house, HouseParams};
    use crate::llm::CoOccurrenceOracle;
    use crate::policy::TraceEvent;

    fn small_suite() -> Vec<Scenario> {
        (0..2).map(|s| generate_house(s, &HouseParams::default()).unwrap()).collect()
    }

    #[test]
    fn suite_runs_and_summarizes() {
        let scenarios = small_suite();
        let cfg = SuiteConfig { seeds: vec![0], ..Default::default() };
        let oracle = CoOccurrenceOracle::household_default();
        let outcome = run_suite(&scenarios, &cfg, &oracle, None, None).unwrap();
        assert_eq!(outcome.records.len(), 20);
        assert_eq!(outcome.summary.n_episodes, 20);
        assert!(outcome.phase_counts.is_some());
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let scenarios = small_suite();
        let oracle = CoOccurrenceOracle::household_default();
        let seq = SuiteConfig { seeds: vec![0, 1], parallelism: 1, ..Default::default() };
        let par = SuiteConfig { seeds: vec![0, 1], parallelism: 8, ..Default::default() };
        let a = run_suite(&scenarios, &seq, &oracle, None, None).unwrap();
        let b = run_suite(&scenarios, &par, &oracle, None, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn classification_is_exhaustive_and_exclusive() {
        let scenarios = small_suite();
        let cfg = SuiteConfig { seeds: vec![0, 1, 2], ..Default::default() };
        let oracle = CoOccurrenceOracle::household_default();
        let outcome = run_suite(&scenarios, &cfg, &oracle, None, None).unwrap();
        let counts = outcome.phase_counts.unwrap();
        assert_eq!(
            counts.success + counts.phase1 + counts.phase2,
            outcome.records.len() as u64
        );
        for r in &outcome.records {
            assert!(r.phase.is_some());
            assert_eq!(r.phase == Some(TwoPhaseClass::Success), r.success);
        }
    }

    #[test]
    fn classify_requires_a_hallway() {
        let map = crate::world::WorldMap::from_parts(4, 4, 1.0, &[], vec![], vec![], vec![]).unwrap();
        let result = EpisodeResult {
            target_label: "x".into(),
            success: true,
            path_length: 0.0,
            optimal_length: 0.0,
            turns_used: 1,
            psr: Default::default(),
            stop_cause: StopCause::GroundingStop,
            phase_failure: None,
            spawn: Pose { x: 0.5, y: 0.5, heading: 0.0 },
            trace: vec![],
        };
        assert!(matches!(
            classify_two_phase(&result, &map),
            Err(HarnessError::MissingHallway)
        ));
    }

    #[test]
    fn classifier_distinguishes_the_three_classes() {
        let scenario = generate_house(1, &HouseParams::default()).unwrap();
        let map = &scenario.map;
        let hallway_cell = map.hallway()[0];
        let room_cell = map.rooms()[0].footprint[0];

        let mk = |success: bool, cells: Vec<crate::grid::Cell>| EpisodeResult {
            target_label: "x".into(),
            success,
            path_length: 1.0,
            optimal_length: 1.0,
            turns_used: 2,
            psr: Default::default(),
            stop_cause: if success { StopCause::GroundingStop } else { StopCause::TurnBudget },
            phase_failure: None,
            spawn: Pose::at_cell_center(room_cell, map.cell_size(), 0.0),
            trace: vec![
                TraceEvent::Spawn { pose: Pose::at_cell_center(room_cell, map.cell_size(), 0.0) },
                TraceEvent::Move { turn: 1, waypoint: *cells.last().unwrap(), cells, length_m: 1.0 },
            ],
        };

        let success = mk(true, vec![room_cell, hallway_cell]);
        assert_eq!(classify_two_phase(&success, map).unwrap(), TwoPhaseClass::Success);

        let loops_in_room = mk(false, vec![room_cell]);
        assert_eq!(classify_two_phase(&loops_in_room, map).unwrap(), TwoPhaseClass::Phase1);

        let wrong_room = mk(false, vec![room_cell, hallway_cell, map.rooms()[1].footprint[0]]);
        assert_eq!(classify_two_phase(&wrong_room, map).unwrap(), TwoPhaseClass::Phase2);
    }
}
