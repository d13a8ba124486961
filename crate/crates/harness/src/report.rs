//! CSV and JSON report output.
//!
//! CSV columns follow the field order of [`CellMetrics`]; the histogram is
//! one column of space separated counts.

use std::fs;
use std::path::Path;

use crate::config::ReportFormat;
use crate::error::{HarnessError, Result};
use crate::experiment::{CellMetrics, MetricsReport};

pub const CSV_HEADER: [&str; 14] = [
    "sf",
    "snr_db",
    "traffic",
    "inr_db",
    "decoder",
    "symbols_total",
    "symbols_corrupted",
    "symbols_recovered",
    "srr",
    "packets_total",
    "packets_ok",
    "prr",
    "throughput_kbps",
    "clean_fraction_histogram",
];

fn csv_record(r: &CellMetrics) -> Vec<String> {
    let hist: Vec<String> = r.clean_fraction_histogram.iter().map(u64::to_string).collect();
    vec![
        r.sf.to_string(),
        r.snr_db.to_string(),
        r.traffic.clone(),
        r.inr_db.to_string(),
        r.decoder.name().to_string(),
        r.symbols_total.to_string(),
        r.symbols_corrupted.to_string(),
        r.symbols_recovered.to_string(),
        format!("{:.6}", r.srr),
        r.packets_total.to_string(),
        r.packets_ok.to_string(),
        format!("{:.6}", r.prr),
        format!("{:.4}", r.throughput_kbps),
        hist.join(" "),
    ]
}

pub fn to_csv_string(report: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in &report.rows {
        w.write_record(csv_record(row))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json_string(report: &MetricsReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Writes `report` to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &MetricsReport, path: Option<&Path>, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => to_csv_string(report)?,
        ReportFormat::Json => to_json_string(report)? + "\n",
    };
    match path {
        Some(p) => fs::write(p, text).map_err(|source| HarnessError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn read_json(path: &Path) -> Result<MetricsReport> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
