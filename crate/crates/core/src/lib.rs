//! Deterministic gridworld simulator and evaluation harness for
//! language-guided zero-shot object navigation.
//!
//! The crate models an agent searching an indoor grid map for a target
//! object described in free-form language. Each exploratory turn the agent
//! rotates in place, collects simulated detections and depth rays, asks a
//! decision backend (a scripted co-occurrence oracle, a uniform-random
//! chooser, or a remote chat-completion model) where to go next, and
//! navigates there over a costmap it builds as it explores. A grounding
//! model scores every view against the target phrase; the episode stops
//! once a score clears the confidence threshold.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`world`]: ground-truth maps, scenario files, spawning, and the
//!   shortest-path oracle used for SPL.
//! - [`perception`]: rotate-in-place scans, detections, captions, and
//!   costmap updates from depth rays.
//! - [`grounding`]: target grounding scores and the stop condition.
//! - [`prompt`]: the seven prompt templates, reply parsing, and PSR.
//! - [`llm`]: decision backends and the response cache.
//! - [`policy`]: episode loops, waypoint selection, path planning, and
//!   frontier exploration.
//! - [`metrics`]: SR / SPL / PSR aggregation.
//! - [`harness`]: scenario generation, suite execution, sweeps, reports.

pub mod costmap;
pub mod grid;
pub mod grounding;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod perception;
pub mod policy;
pub mod prompt;
pub mod raycast;
pub mod rng;
pub mod world;
