//! Reduction metrics, attention overlap, and trace serialization.

use crate::reduction::ReductionResult;
use crate::unit::AtomicUnit;
use serde::Serialize;
use std::collections::BTreeSet;
use std::io::{self, Write};

/// DD-pass counters for one reduction.
///
/// `total` counts distinct candidates, `raw_attempts` also counts repeats
/// answered from the session memo. Invariant:
/// `preserved <= valid <= total <= raw_attempts`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DdPassStats {
    pub total: u64,
    pub valid: u64,
    pub preserved: u64,
    pub raw_attempts: u64,
    pub oracle_time: f64,
    pub wall_time: f64,
}

impl DdPassStats {
    pub fn is_consistent(&self) -> bool {
        self.preserved <= self.valid && self.valid <= self.total && self.total <= self.raw_attempts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("original size must be at least 1")]
    EmptyOriginal,
    #[error("sizes out of order: {0}")]
    Precondition(String),
    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("attention has {attention} entries for {units} units")]
    LengthMismatch { attention: usize, units: usize },
}

/// Percentage of units removed: `100 * (original - reduced) / original`.
pub fn reduction_ratio(original_size: usize, reduced_size: usize) -> Result<f64, MetricError> {
    if original_size == 0 {
        return Err(MetricError::EmptyOriginal);
    }
    if reduced_size > original_size {
        return Err(MetricError::Precondition(format!(
            "reduced {reduced_size} > original {original_size}"
        )));
    }
    Ok(100.0 * (original_size - reduced_size) as f64 / original_size as f64)
}

/// Reduction as a share of what was removable:
/// `100 * (original - reduced) / (original - protected)`.
pub fn relative_reduction(
    original_size: usize,
    reduced_size: usize,
    protected_count: usize,
) -> Result<f64, MetricError> {
    if original_size == protected_count {
        return Err(MetricError::NotApplicable("every unit is protected"));
    }
    if !(protected_count <= reduced_size && reduced_size <= original_size) {
        return Err(MetricError::Precondition(format!(
            "need protected {protected_count} <= reduced {reduced_size} <= original {original_size}"
        )));
    }
    Ok(100.0 * (original_size - reduced_size) as f64 / (original_size - protected_count) as f64)
}

/// Texts of the `k` highest-attention units; ties go to the lower uid.
pub fn top_k_attention(attention: &[f64], units: &[AtomicUnit], k: usize) -> Result<BTreeSet<String>, MetricError> {
    if attention.len() != units.len() {
        return Err(MetricError::LengthMismatch {
            attention: attention.len(),
            units: units.len(),
        });
    }
    if k == 0 || k > units.len() {
        return Err(MetricError::Precondition(format!("k = {k} with {} units", units.len())));
    }
    let mut ranked: Vec<(&AtomicUnit, f64)> = units.iter().zip(attention.iter().copied()).collect();
    ranked.sort_by(|(ua, a), (ub, b)| b.total_cmp(a).then(ua.uid.cmp(&ub.uid)));
    Ok(ranked.into_iter().take(k).map(|(u, _)| u.text.clone()).collect())
}

/// Result of collecting nodes from attention-ranked paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSelection {
    pub nodes: BTreeSet<String>,
    /// Paths ran out before `k` distinct nodes were found.
    pub short: bool,
}

/// Greedy node collection over paths in descending attention order (ties
/// keep input order). Stops once at least `k` distinct nodes are held, so
/// the result may overshoot `k` by the last path's contribution.
pub fn attention_from_paths(paths: &[(f64, Vec<String>)], k: usize) -> Result<PathSelection, MetricError> {
    if k == 0 {
        return Err(MetricError::Precondition("k must be at least 1".into()));
    }
    if paths.is_empty() {
        return Err(MetricError::Precondition("no paths".into()));
    }
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| paths[b].0.total_cmp(&paths[a].0).then(a.cmp(&b)));
    let mut nodes = BTreeSet::new();
    for idx in order {
        nodes.extend(paths[idx].1.iter().cloned());
        if nodes.len() >= k {
            return Ok(PathSelection { nodes, short: false });
        }
    }
    Ok(PathSelection { nodes, short: true })
}

/// `|t_attn ∩ t_dd| / |t_dd|` over unit-text sets.
pub fn overlap(t_attn: &BTreeSet<String>, t_dd: &BTreeSet<String>) -> Result<f64, MetricError> {
    if t_dd.is_empty() {
        return Err(MetricError::NotApplicable("reduced token set is empty"));
    }
    Ok(t_attn.intersection(t_dd).count() as f64 / t_dd.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub k: usize,
    pub t_dd: BTreeSet<String>,
    pub t_attn: BTreeSet<String>,
    pub overlap: f64,
}

/// Compares the top-`|t_dd|` attention units of the original program with
/// the texts kept by the reduction.
pub fn overlap_report(
    original: &[AtomicUnit],
    attention: &[f64],
    reduced: &[AtomicUnit],
) -> Result<OverlapReport, MetricError> {
    let t_dd: BTreeSet<String> = reduced.iter().map(|u| u.text.clone()).collect();
    let k = t_dd.len();
    if k == 0 {
        return Err(MetricError::NotApplicable("reduced token set is empty"));
    }
    let t_attn = top_k_attention(attention, original, k.min(original.len()))?;
    let overlap = overlap(&t_attn, &t_dd)?;
    Ok(OverlapReport {
        k,
        t_dd,
        t_attn,
        overlap,
    })
}

#[derive(Serialize)]
struct StepRecord<'a> {
    step: usize,
    size: usize,
    score: f64,
    text: &'a str,
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    summary: bool,
    reference_label: &'a str,
    original_size: usize,
    reduced_size: usize,
    protected_size: usize,
    reduction_pct: f64,
    relative_reduction_pct: Option<f64>,
    final_score: f64,
    budget_exhausted: bool,
    dd_total: u64,
    dd_valid: u64,
    dd_preserved: u64,
    dd_raw_attempts: u64,
    // Timing stays last: byte comparisons of traces stop at this key.
    oracle_time_s: f64,
    wall_time_s: f64,
}

/// Key that opens the timing fields in a trace summary line.
pub const TIMING_KEY: &str = ",\"oracle_time_s\":";

/// Writes one JSON line per accepted step and a closing summary line.
pub fn write_trace<W: Write>(result: &ReductionResult, sink: &mut W) -> io::Result<()> {
    for step in &result.trace {
        let record = StepRecord {
            step: step.step,
            size: step.size,
            score: step.score,
            text: &step.text,
        };
        serde_json::to_writer(&mut *sink, &record)?;
        sink.write_all(b"\n")?;
    }
    let original = result.minimal.origin_size();
    let reduced = result.minimal.len();
    let summary = SummaryRecord {
        summary: true,
        reference_label: &result.reference.label,
        original_size: original,
        reduced_size: reduced,
        protected_size: result.protected_count,
        reduction_pct: reduction_ratio(original, reduced).unwrap_or(0.0),
        relative_reduction_pct: relative_reduction(original, reduced, result.protected_count).ok(),
        final_score: result.final_score(),
        budget_exhausted: result.budget_exhausted,
        dd_total: result.stats.total,
        dd_valid: result.stats.valid,
        dd_preserved: result.stats.preserved,
        dd_raw_attempts: result.stats.raw_attempts,
        oracle_time_s: result.stats.oracle_time,
        wall_time_s: result.stats.wall_time,
    };
    serde_json::to_writer(&mut *sink, &summary)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Trace bytes with the timing fields cut out of each summary line.
pub fn strip_timing(trace: &str) -> String {
    trace
        .lines()
        .map(|line| match line.find(TIMING_KEY) {
            Some(at) => &line[..at],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
