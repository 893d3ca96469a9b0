//! Ablation sweeps: rerun the suite once per value along one axis, holding
//! every seed fixed so runs differ only in the swept knob. With a
//! deterministic backend the per-turn contexts start identical across
//! values and diverge only where the swept knob changes behavior.

use std::path::Path;

use super::report::write_sweep_csv;
use super::suite::{run_suite, SuiteConfig, SuiteOutcome};
use super::HarnessError;
use crate::llm::{DecisionBackend, ResponseCache};
use crate::metrics::SuiteSummary;
use crate::policy::PolicyKind;
use crate::prompt::PromptVariant;
use crate::world::Scenario;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SweepAxis {
    GTh,
    PromptVariant,
    Policy,
    DetectProb,
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::GTh => "g-th",
            SweepAxis::PromptVariant => "prompt",
            SweepAxis::Policy => "policy",
            SweepAxis::DetectProb => "detect-prob",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        [SweepAxis::GTh, SweepAxis::PromptVariant, SweepAxis::Policy, SweepAxis::DetectProb]
            .into_iter()
            .find(|a| a.key() == key)
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub base: SuiteConfig,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: String,
    pub summary: SuiteSummary,
}

fn apply_value(cfg: &mut SuiteConfig, axis: SweepAxis, value: &str) -> Result<(), HarnessError> {
    match axis {
        SweepAxis::GTh => {
            cfg.episode.g_th = value
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad g_th value {value}")))?;
        }
        SweepAxis::DetectProb => {
            cfg.episode.scan.detect_prob = value
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad detect_prob value {value}")))?;
        }
        SweepAxis::PromptVariant => {
            let variant = PromptVariant::from_key(value)
                .ok_or_else(|| HarnessError::Config(format!("unknown prompt variant {value}")))?;
            cfg.episode.prompt = variant;
            cfg.episode.policy = match variant {
                PromptVariant::Blip => PolicyKind::LgxCaptions,
                _ => PolicyKind::LgxObjects,
            };
            cfg.episode.reconcile();
        }
        SweepAxis::Policy => {
            cfg.episode.policy = PolicyKind::from_key(value)
                .ok_or_else(|| HarnessError::Config(format!("unknown policy {value}")))?;
            cfg.episode.reconcile();
        }
    }
    Ok(())
}

/// Run the suite once per value. Each value writes its own subdirectory
/// (`v_<value>/`) under `out_dir`, plus a combined `sweep.csv`.
pub fn run_sweep(
    scenarios: &[Scenario],
    spec: &SweepSpec,
    backend: &dyn DecisionBackend,
    cache: Option<&ResponseCache>,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, HarnessError> {
    if spec.values.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one value".into()));
    }
    if spec.base.seeds.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    for value in &spec.values {
        let mut cfg = spec.base.clone();
        apply_value(&mut cfg, spec.axis, value)?;
        let value_dir = out_dir.map(|d| d.join(format!("v_{}", value.replace('/', "_"))));
        let SuiteOutcome { summary, .. } =
            run_suite(scenarios, &cfg, backend, cache, value_dir.as_deref())?;
        rows.push(SweepRow { value: value.clone(), summary });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        write_sweep_csv(&dir.join("sweep.csv"), spec.axis.key(), &rows)?;
    }
    Ok(rows)
}
