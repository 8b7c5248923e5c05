//! CSV emission. Every file starts with a provenance comment carrying the
//! config hash and root seed, followed by a header row.

use std::io::Write;
use std::path::Path;

use super::experiment::{ComparisonReport, ExperimentReport};
use super::HarnessError;

fn provenance(config_hash: u64, root_seed: u64) -> String {
    format!("# memrc config_hash={config_hash:016x} root_seed={root_seed}\n")
}

/// Raw per-trial rows: one line per (cell, trial) with every named metric and
/// the solver health counters.
pub fn write_metrics_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut out = Vec::new();
    out.extend_from_slice(provenance(report.config_hash, report.root_seed).as_bytes());
    let metric_names: Vec<&str> = report
        .trials
        .first()
        .map(|t| t.metrics.iter().map(|(n, _)| n.as_str()).collect())
        .unwrap_or_default();
    write!(out, "cell,v,lambda,trial")?;
    for name in &metric_names {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",unconverged_fraction,clip_events,regenerations")?;
    for t in &report.trials {
        write!(out, "{},{},{},{}", t.cell, t.v, t.lambda, t.trial)?;
        for name in &metric_names {
            match t.metric(name) {
                Some(v) => write!(out, ",{v}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(
            out,
            ",{},{},{}",
            t.health.unconverged_fraction(),
            t.health.clip_events,
            t.regenerations
        )?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-cell aggregates over the primary metric.
pub fn write_heatmap_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut out = Vec::new();
    out.extend_from_slice(provenance(report.config_hash, report.root_seed).as_bytes());
    writeln!(out, "v,lambda,mean,stdev,n_trials,tainted")?;
    for c in &report.cells {
        writeln!(out, "{},{},{},{},{},{}", c.v, c.lambda, c.mean, c.stdev, c.n_trials, c.tainted as u8)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Architecture-comparison table plus raw rows.
pub fn write_compare_csv(report: &ComparisonReport, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut out = Vec::new();
    out.extend_from_slice(provenance(report.config_hash, report.root_seed).as_bytes());
    writeln!(out, "arch,k,trial,{}", report.primary_metric)?;
    for t in &report.trials {
        writeln!(out, "{},{},{},{}", t.arch, t.k, t.trial, t.metric)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_compare_summary_csv(
    report: &ComparisonReport,
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let mut out = Vec::new();
    out.extend_from_slice(provenance(report.config_hash, report.root_seed).as_bytes());
    writeln!(out, "arch,k,mean,stdev,tainted")?;
    for r in &report.rows {
        writeln!(out, "{},{},{},{},{}", r.arch, r.k, r.mean, r.stdev, r.tainted as u8)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Frequency/power table from the Welch estimator.
pub fn write_psd_csv(
    rows: &[(f64, f64)],
    provenance_hash: u64,
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let mut out = Vec::new();
    writeln!(out, "# memrc psd input_hash={provenance_hash:016x}")?;
    writeln!(out, "freq_hz,power")?;
    for (f, p) in rows {
        writeln!(out, "{f},{p}")?;
    }
    std::fs::write(path, out)?;
    Ok(())
}
