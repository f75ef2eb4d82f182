//! CSV and JSON exports.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{ConvergenceReport, Summary};
use crate::error::Result;
use crate::metrics::{MetricsSeries, SlotRecord};

/// Bumped whenever the CSV columns change.
pub const SCHEMA_VERSION: u32 = 1;

pub const SERIES_COLUMNS: [&str; 8] = [
    "slot",
    "delivered",
    "connectivity",
    "interference",
    "mean_cq",
    "mean_max_prob",
    "suboptimal_l1",
    "switches",
];

/// Decimal rendering with nine significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x == 0.0 {
            "0".into()
        } else {
            x.to_string()
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 20) as usize;
    format!("{x:.decimals$}")
}

fn row(r: &SlotRecord) -> [String; 8] {
    [
        r.slot.to_string(),
        r.delivered.to_string(),
        r.connectivity.to_string(),
        r.interference.to_string(),
        format_float(r.mean_cq()),
        format_float(r.mean_max_prob()),
        format_float(r.total_suboptimal_l1()),
        r.switches().to_string(),
    ]
}

pub fn write_series<W: Write>(series: &MetricsSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_COLUMNS)?;
    for r in &series.records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_csv(series: &MetricsSeries) -> String {
    let mut buf = Vec::new();
    write_series(series, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub summary: Summary,
    pub convergence: ConvergenceReport,
}

pub fn series_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("series_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("summary_seed{seed}.json"))
}

/// Writes the series CSV and the summary JSON for one seed.
pub fn write_run(dir: &Path, series: &MetricsSeries, summary: &RunSummary) -> Result<[PathBuf; 2]> {
    std::fs::create_dir_all(dir)?;
    let csv_path = series_path(dir, summary.seed);
    write_series(series, std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    let json_path = summary_path(dir, summary.seed);
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(&json_path, json + "\n")?;
    Ok([csv_path, json_path])
}

/// One column of a sweep: a parameter value aggregated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub value: String,
    pub seeds: usize,
    pub mean_delivered: f64,
    pub std_delivered: f64,
    pub mean_connectivity: f64,
    pub mean_interference: f64,
    pub switch_rate: f64,
    pub converged_fraction: f64,
}

impl ComparisonRow {
    pub fn aggregate(value: impl Into<String>, runs: &[RunSummary]) -> Self {
        let n = runs.len().max(1) as f64;
        let avg = |f: &dyn Fn(&RunSummary) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let mean_delivered = avg(&|r| r.summary.mean_delivered);
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r.summary.mean_delivered - mean_delivered).powi(2)).sum::<f64>()
                / (runs.len() - 1) as f64
        } else {
            0.0
        };
        Self {
            value: value.into(),
            seeds: runs.len(),
            mean_delivered,
            std_delivered: var.sqrt(),
            mean_connectivity: avg(&|r| r.summary.mean_connectivity),
            mean_interference: avg(&|r| r.summary.mean_interference),
            switch_rate: avg(&|r| r.summary.switch_rate),
            converged_fraction: avg(&|r| {
                let nodes = r.convergence.nodes.len().max(1) as f64;
                r.convergence.converged_count() as f64 / nodes
            }),
        }
    }
}

pub const COMPARISON_COLUMNS: [&str; 8] = [
    "value",
    "seeds",
    "mean_delivered",
    "std_delivered",
    "mean_connectivity",
    "mean_interference",
    "switch_rate",
    "converged_fraction",
];

pub fn write_comparison<W: Write>(parameter: &str, rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = COMPARISON_COLUMNS.to_vec();
    header[0] = parameter;
    w.write_record(header)?;
    for r in rows {
        w.write_record([
            r.value.clone(),
            r.seeds.to_string(),
            format_float(r.mean_delivered),
            format_float(r.std_delivered),
            format_float(r.mean_connectivity),
            format_float(r.mean_interference),
            format_float(r.switch_rate),
            format_float(r.converged_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text rendering for the terminal.
pub fn comparison_table(parameter: &str, rows: &[ComparisonRow]) -> String {
    let mut s = format!(
        "{parameter:>12} {:>6} {:>12} {:>10} {:>12} {:>12} {:>8}\n",
        "seeds", "delivered", "std", "connectivity", "interference", "switch"
    );
    for r in rows {
        s += &format!(
            "{:>12} {:>6} {:>12.3} {:>10.3} {:>12.2} {:>12.2} {:>8.4}\n",
            r.value,
            r.seeds,
            r.mean_delivered,
            r.std_delivered,
            r.mean_connectivity,
            r.mean_interference,
            r.switch_rate
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1.0), "1.00000000");
        assert_eq!(format_float(0.123456789123), "0.123456789");
        assert_eq!(format_float(12345.678912345), "12345.6789");
        assert_eq!(format_float(-2.5e-3), "-0.00250000000");
        assert_eq!(format_float(1e12), "1000000000000");
    }

    #[test]
    fn empty_series_has_header_only() {
        assert_eq!(series_csv(&MetricsSeries::new(0)), SERIES_COLUMNS.join(",") + "\n");
    }
}
