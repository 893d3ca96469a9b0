//! Result files: line-delimited episode records, CSV summaries, per-label
//! breakdowns, and the sweep table. All writers format deterministically so
//! byte comparison of two runs is meaningful.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::suite::{EpisodeRecord, PhaseCounts};
use super::sweep::SweepRow;
use super::HarnessError;
use crate::metrics::SuiteSummary;
use crate::policy::EpisodeResult;

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

pub fn write_results_jsonl(path: &Path, records: &[EpisodeRecord]) -> Result<(), HarnessError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| io_err(path, e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| io_err(path, e)))
        .collect()
}

pub fn write_summary_csv(path: &Path, summary: &SuiteSummary) -> Result<(), HarnessError> {
    let mut out = String::from("n_episodes,sr,spl,psr\n");
    out.push_str(&format!(
        "{},{:.4},{:.4},{}\n",
        summary.n_episodes,
        summary.sr,
        summary.spl,
        fmt_opt(summary.psr)
    ));
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_per_label_csv(path: &Path, summary: &SuiteSummary) -> Result<(), HarnessError> {
    let mut out = String::from("label,n,sr,spl\n");
    for (label, stats) in &summary.per_label {
        out.push_str(&format!("{label},{},{:.4},{:.4}\n", stats.n, stats.sr, stats.spl));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_phases_csv(path: &Path, counts: &PhaseCounts) -> Result<(), HarnessError> {
    let out = format!(
        "success,phase1,phase2\n{},{},{}\n",
        counts.success, counts.phase1, counts.phase2
    );
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_sweep_csv(path: &Path, axis: &str, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let mut out = format!("{axis},n_episodes,sr,spl,psr\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{}\n",
            row.value,
            row.summary.n_episodes,
            row.summary.sr,
            row.summary.spl,
            fmt_opt(row.summary.psr)
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Human-readable summary table.
pub fn render_summary(summary: &SuiteSummary, phases: Option<&PhaseCounts>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "episodes: {}\nSR:  {:6.2} %\nSPL: {:6.2} %\nPSR: {}\n",
        summary.n_episodes,
        summary.sr,
        summary.spl,
        summary
            .psr
            .map(|p| format!("{p:6.2} %"))
            .unwrap_or_else(|| "   n/a (no prompts issued)".into()),
    ));
    if let Some(p) = phases {
        out.push_str(&format!(
            "phases: success {} / phase1 {} / phase2 {}\n",
            p.success, p.phase1, p.phase2
        ));
    }
    if !summary.per_label.is_empty() {
        out.push_str("\nper-target breakdown:\n");
        out.push_str(&format!("{:<28} {:>4} {:>8} {:>8}\n", "label", "n", "SR", "SPL"));
        for (label, stats) in &summary.per_label {
            out.push_str(&format!(
                "{:<28} {:>4} {:>7.2}% {:>7.2}%\n",
                label, stats.n, stats.sr, stats.spl
            ));
        }
    }
    out
}

/// Write everything a suite produces under one directory.
pub fn write_suite_outputs(
    dir: &Path,
    records: &[EpisodeRecord],
    summary: &SuiteSummary,
    phase_counts: Option<PhaseCounts>,
    traces: Option<&Vec<(usize, EpisodeRecord, EpisodeResult)>>,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_results_jsonl(&dir.join("results.jsonl"), records)?;
    write_summary_csv(&dir.join("summary.csv"), summary)?;
    write_per_label_csv(&dir.join("per_label.csv"), summary)?;
    let summary_json =
        serde_json::to_string_pretty(summary).map_err(|e| io_err(dir, e))?;
    fs::write(dir.join("summary.json"), summary_json).map_err(|e| io_err(dir, e))?;
    if let Some(counts) = phase_counts {
        write_phases_csv(&dir.join("phases.csv"), &counts)?;
    }
    if let Some(executed) = traces {
        let trace_dir = dir.join("traces");
        fs::create_dir_all(&trace_dir).map_err(|e| io_err(&trace_dir, e))?;
        for (_, record, result) in executed {
            let path = trace_dir.join(format!("{}.jsonl", record.id));
            let mut file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            for event in &result.trace {
                let line = serde_json::to_string(event).map_err(|e| io_err(&path, e))?;
                writeln!(file, "{line}").map_err(|e| io_err(&path, e))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::LabelStats;
    use crate::policy::{PolicyKind, StopCause};
    use crate::prompt::PromptVariant;
    use crate::world::Pose;
    use std::collections::BTreeMap;

    fn record(id: &str, success: bool) -> EpisodeRecord {
        EpisodeRecord {
            id: id.into(),
            scenario: "s".into(),
            episode_index: 0,
            suite_seed: 0,
            policy: PolicyKind::LgxObjects,
            prompt: PromptVariant::Robot,
            g_th: 0.85,
            target_label: "vase".into(),
            success,
            path_length: 2.0,
            optimal_length: 1.0,
            turns_used: 2,
            p_suc: 1,
            p_total: 2,
            stop_cause: StopCause::GroundingStop,
            phase: None,
            spawn: Pose { x: 0.5, y: 0.5, heading: 0.0 },
        }
    }

    #[test]
    fn results_roundtrip_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.jsonl");
        let records = vec![record("a", true), record("b", false)];
        write_results_jsonl(&path, &records).unwrap();
        let back = read_results_jsonl(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].id, "a");
        assert!(!back[1].success);
    }

    #[test]
    fn summary_render_includes_psr_when_present() {
        let summary = SuiteSummary {
            sr: 35.0,
            spl: 21.9,
            psr: Some(95.3),
            per_label: BTreeMap::from([(
                "vase".to_string(),
                LabelStats { n: 10, sr: 35.0, spl: 21.9 },
            )]),
            n_episodes: 10,
        };
        let text = render_summary(&summary, None);
        assert!(text.contains("95.30"));
        assert!(text.contains("vase"));
    }
}
