//! Suite metrics: success rate, success weighted by path length, and the
//! pooled prompt success rate, with per-target-label breakdowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::EpisodeResult;
use crate::prompt::PsrCounter;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metrics need at least one episode result")]
    Empty,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct LabelStats {
    pub n: u64,
    pub sr: f64,
    pub spl: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SuiteSummary {
    pub sr: f64,
    pub spl: f64,
    /// Pooled over all queries; absent when no episode queried the backend.
    pub psr: Option<f64>,
    pub per_label: BTreeMap<String, LabelStats>,
    pub n_episodes: u64,
}

/// Percentage of episodes that ended with the target genuinely in view.
pub fn success_rate(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let successes = results.iter().filter(|r| r.success).count();
    Ok(100.0 * successes as f64 / results.len() as f64)
}

/// One episode's SPL term: S_i * l_i / max(p_i, l_i). An immediate success
/// (both lengths zero) counts as an optimal path.
fn spl_term(r: &EpisodeResult) -> f64 {
    if !r.success {
        return 0.0;
    }
    let denom = r.path_length.max(r.optimal_length);
    if denom == 0.0 {
        1.0
    } else {
        r.optimal_length / denom
    }
}

/// Success weighted by inverse path length, as a percentage.
pub fn spl(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(100.0 * results.iter().map(spl_term).sum::<f64>() / results.len() as f64)
}

/// Aggregate totals and per-label splits. The PSR pools counters across
/// episodes (total valid replies over total queries) rather than averaging
/// per-episode rates; episodes that never queried contribute nothing.
pub fn summarize(results: &[EpisodeResult]) -> Result<SuiteSummary, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut pooled = PsrCounter::default();
    let mut by_label: BTreeMap<String, Vec<&EpisodeResult>> = BTreeMap::new();
    for r in results {
        pooled.merge(&r.psr);
        by_label.entry(r.target_label.clone()).or_default().push(r);
    }
    let per_label = by_label
        .into_iter()
        .map(|(label, rs)| {
            let n = rs.len() as u64;
            let sr = 100.0 * rs.iter().filter(|r| r.success).count() as f64 / n as f64;
            let spl = 100.0 * rs.iter().map(|r| spl_term(r)).sum::<f64>() / n as f64;
            (label, LabelStats { n, sr, spl })
        })
        .collect();
    Ok(SuiteSummary {
        sr: success_rate(results)?,
        spl: spl(results)?,
        psr: crate::prompt::psr(&pooled).ok(),
        per_label,
        n_episodes: results.len() as u64,
    })
}
