//! Monte-Carlo experiments for the `lora-psr` receiver: random payloads are
//! coded, modulated, passed through the interference channel and decoded by
//! the plain FFT demodulator and by partial symbol recovery, and the
//! per-cell symbol and packet statistics are reported as CSV or JSON.

pub mod config;
pub mod demo;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{Decoder, ExperimentConfig, ReportFormat, Traffic};
pub use error::{HarnessError, Result};
pub use experiment::{
    cell_seed, prepare_calibration, run_experiment, throughput, time_on_air, CellMetrics, MetricsReport, HISTOGRAM_BINS,
};
pub use report::{emit_report, read_json, to_csv_string};
