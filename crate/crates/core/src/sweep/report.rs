//! Reward-difference metrics and file emission.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::runner::RunRecord;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("no record for scenario {0}")]
    MissingRecord(String),
    #[error("controllers were evaluated on different scenario sets")]
    ScenarioSetMismatch,
    #[error("unknown controller id {0}")]
    UnknownController(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Default reward-difference histogram bin width.
pub const DEFAULT_BIN_WIDTH: f64 = 50.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardDifferenceReport {
    pub controller_a: String,
    pub controller_b: String,
    /// (scenario id, reward_a - reward_b), suite order.
    pub diffs: Vec<(String, f64)>,
    /// Fraction of scenarios with a strictly positive difference.
    pub win_rate: f64,
    pub tie_rate: f64,
    pub loss_rate: f64,
    pub bin_width: f64,
    /// (bin lower edge, count), ascending.
    pub histogram: Vec<(f64, usize)>,
}

/// Per-scenario reward differences of controller `a` minus controller `b`.
/// Both must have been evaluated on exactly the same scenario set.
pub fn reward_difference_report(
    records: &[RunRecord],
    controller_a: &str,
    controller_b: &str,
    bin_width: f64,
) -> Result<RewardDifferenceReport, SweepError> {
    let collect = |name: &str| -> BTreeMap<&str, f64> {
        records
            .iter()
            .filter(|r| r.controller_id == name)
            .map(|r| (r.scenario_id.as_str(), r.total_reward))
            .collect()
    };
    let a = collect(controller_a);
    let b = collect(controller_b);
    if a.is_empty() {
        return Err(SweepError::UnknownController(controller_a.to_string()));
    }
    if b.is_empty() {
        return Err(SweepError::UnknownController(controller_b.to_string()));
    }
    if a.len() != b.len() || a.keys().ne(b.keys()) {
        return Err(SweepError::ScenarioSetMismatch);
    }
    // keep suite order as the records came in for controller a
    let mut diffs = Vec::with_capacity(a.len());
    for r in records.iter().filter(|r| r.controller_id == controller_a) {
        let rb = b[r.scenario_id.as_str()];
        diffs.push((r.scenario_id.clone(), r.total_reward - rb));
    }
    let n = diffs.len() as f64;
    let wins = diffs.iter().filter(|(_, d)| *d > 0.0).count() as f64;
    let ties = diffs.iter().filter(|(_, d)| *d == 0.0).count() as f64;
    let losses = diffs.iter().filter(|(_, d)| *d < 0.0).count() as f64;

    let finite: Vec<f64> = diffs
        .iter()
        .map(|(_, d)| *d)
        .filter(|d| d.is_finite())
        .collect();
    let histogram = if finite.is_empty() {
        Vec::new()
    } else {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first_bin = (lo / bin_width).floor() * bin_width;
        let bins = (((hi - first_bin) / bin_width).floor() as usize) + 1;
        let mut hist = vec![0usize; bins];
        for d in &finite {
            let idx = ((d - first_bin) / bin_width).floor() as usize;
            hist[idx.min(bins - 1)] += 1;
        }
        hist.into_iter()
            .enumerate()
            .map(|(i, c)| (first_bin + i as f64 * bin_width, c))
            .collect()
    };

    Ok(RewardDifferenceReport {
        controller_a: controller_a.to_string(),
        controller_b: controller_b.to_string(),
        diffs,
        win_rate: wins / n,
        tie_rate: ties / n,
        loss_rate: losses / n,
        bin_width,
        histogram,
    })
}

/// Records as CSV.
pub fn records_csv<W: Write>(records: &[RunRecord], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "scenario_id,controller_id,total_reward,stable,envelope_violated,shed_mw_total,mean_decision_latency_s,steps,error"
    )?;
    for r in records {
        let shed_total: f64 = r.shed_mw.values().sum();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.controller_id,
            r.total_reward,
            r.stable,
            r.envelope_violated,
            shed_total,
            r.mean_decision_latency,
            r.steps,
            r.error.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

/// Histogram bins as CSV.
pub fn histogram_csv<W: Write>(
    report: &RewardDifferenceReport,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "bin_lower_edge,count")?;
    for (edge, count) in &report.histogram {
        writeln!(out, "{edge},{count}")?;
    }
    Ok(())
}
