//! Scenario generation, suite execution, ablation sweeps, and report
//! emission: everything behind the command-line verbs.

pub mod generator;
pub mod report;
pub mod suite;
pub mod sweep;

pub use generator::{generate_house, generate_houses, HouseParams, HALLWAY_LABEL, ROOM_TEMPLATES};
pub use suite::{
    classify_two_phase, run_suite, EpisodeRecord, PhaseCounts, SuiteConfig, SuiteOutcome,
    TwoPhaseClass,
};
pub use sweep::{run_sweep, SweepAxis, SweepRow, SweepSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Scenario(#[from] crate::world::ScenarioError),
    #[error(transparent)]
    Episode(#[from] crate::policy::EpisodeError),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("two-phase classification requires a scenario with a hallway")]
    MissingHallway,
}
