//! Experiment configuration.
//!
//! The file format is flat `key = value` text; blank lines and anything
//! after `#` are ignored. Every key can also be given as a CLI flag of the
//! same name, which overrides the file.
//!
//! | key           | value                                   | default          |
//! |---------------|-----------------------------------------|------------------|
//! | `sf`          | list, e.g. `10`, `7..12`, `7,9,12`      | `10`             |
//! | `snr`         | list of dB values, e.g. `-10` or `-12,-10` | `-10`         |
//! | `traffic`     | `none`, `low`, `mid`, `high` or packets/s | `high`         |
//! | `inr`         | burst INR in dB                         | `18`             |
//! | `payload_len` | bytes per packet                        | `100`            |
//! | `packets`     | packets per cell                        | `2000`           |
//! | `seed`        | master seed                             | `1`              |
//! | `decoder`     | `standard`, `psr` or both, comma separated | `standard,psr` |
//! | `windows`     | STFT ladder depth                       | `6`              |
//! | `calibration` | calibration table file                  | none (built in memory) |
//! | `output`      | report path                             | none             |
//! | `format`      | `csv` or `json`                         | `csv`            |
//! | `threads`     | worker threads, `0` for all cores       | `0`              |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lora_psr::channel::{TrafficModel, TrafficPreset};
use lora_psr::coding::MAX_PAYLOAD;
use lora_psr::LoraParams;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Burst INR used when the configuration does not set one. High enough that
/// interference, not noise, decides whether plain demodulation fails.
pub const DEFAULT_HARNESS_INR_DB: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Standard,
    Psr,
}

impl Decoder {
    pub fn name(self) -> &'static str {
        match self {
            Decoder::Standard => "standard",
            Decoder::Psr => "psr",
        }
    }
}

impl FromStr for Decoder {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standard" => Ok(Decoder::Standard),
            "psr" => Ok(Decoder::Psr),
            other => Err(HarnessError::Config(format!("unknown decoder `{other}`"))),
        }
    }
}

/// Interference level of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Traffic {
    Preset(TrafficPreset),
    /// Explicit Wi-Fi-like burst rate in packets per second.
    Rate(f64),
}

impl Traffic {
    pub fn model(self, inr_db: f64) -> TrafficModel {
        match self {
            Traffic::Preset(p) => TrafficModel::preset(p),
            Traffic::Rate(r) => TrafficModel::wifi(r),
        }
        .with_inr(inr_db)
    }
}

impl fmt::Display for Traffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Traffic::Preset(p) => f.write_str(p.name()),
            Traffic::Rate(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Traffic {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(p) = TrafficPreset::parse(s) {
            return Ok(Traffic::Preset(p));
        }
        match s.parse::<f64>() {
            Ok(r) if r.is_finite() && r >= 0.0 => Ok(Traffic::Rate(r)),
            _ => Err(HarnessError::Config(format!("unknown traffic `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(HarnessError::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sf_list: Vec<u8>,
    pub snr_db_list: Vec<f64>,
    pub traffic: Traffic,
    pub inr_db: f64,
    pub payload_len_bytes: usize,
    pub packets_per_cell: usize,
    pub seed: u64,
    pub decoders: Vec<Decoder>,
    pub window_count: usize,
    pub calibration_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: ReportFormat,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sf_list: vec![10],
            snr_db_list: vec![-10.0],
            traffic: Traffic::Preset(TrafficPreset::High),
            inr_db: DEFAULT_HARNESS_INR_DB,
            payload_len_bytes: 100,
            packets_per_cell: 2000,
            seed: 1,
            decoders: vec![Decoder::Standard, Decoder::Psr],
            window_count: lora_psr::psr::DEFAULT_WINDOW_COUNT,
            calibration_path: None,
            output_path: None,
            format: ReportFormat::Csv,
            threads: 0,
        }
    }
}

pub const KEYS: [&str; 13] = [
    "sf",
    "snr",
    "traffic",
    "inr",
    "payload_len",
    "packets",
    "seed",
    "decoder",
    "windows",
    "calibration",
    "output",
    "format",
    "threads",
];

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value `{value}` for `{key}`")))
}

/// `a..b` (inclusive) or a comma separated list.
pub fn parse_sf_list(value: &str) -> Result<Vec<u8>> {
    let value = value.trim();
    if let Some((a, b)) = value.split_once("..") {
        let a: u8 = number("sf", a)?;
        let b: u8 = number("sf", b.trim_start_matches('='))?;
        if a > b {
            return Err(HarnessError::Config(format!("empty sf range `{value}`")));
        }
        return Ok((a..=b).collect());
    }
    value.split(',').map(|v| number("sf", v)).collect()
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| number(key, v)).collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sf" => self.sf_list = parse_sf_list(value)?,
            "snr" => self.snr_db_list = parse_f64_list(key, value)?,
            "traffic" => self.traffic = value.parse()?,
            "inr" => self.inr_db = number(key, value)?,
            "payload_len" => self.payload_len_bytes = number(key, value)?,
            "packets" => self.packets_per_cell = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            "decoder" => {
                self.decoders = value.split(',').map(str::parse).collect::<Result<_>>()?;
            }
            "windows" => self.window_count = number(key, value)?,
            "calibration" => self.calibration_path = Some(PathBuf::from(value.trim())),
            "output" => self.output_path = Some(PathBuf::from(value.trim())),
            "format" => self.format = value.parse()?,
            "threads" => self.threads = number(key, value)?,
            other => return Err(HarnessError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.sf_list.is_empty() || self.snr_db_list.is_empty() || self.decoders.is_empty() {
            return bad("sf, snr and decoder lists must be non-empty".into());
        }
        for &sf in &self.sf_list {
            LoraParams::new(sf)?;
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) || !self.inr_db.is_finite() {
            return bad("snr and inr must be finite".into());
        }
        if self.packets_per_cell == 0 {
            return bad("packets must be at least 1".into());
        }
        if self.payload_len_bytes > MAX_PAYLOAD {
            return bad(format!("payload_len above {MAX_PAYLOAD}"));
        }
        if self.window_count == 0 {
            return bad("windows must be at least 1".into());
        }
        self.traffic.model(self.inr_db).validate()?;
        Ok(())
    }
}
