//! Monte-Carlo calibration of the slot and fast-path thresholds.
//!
//! Noise-only runs give, per SF and window length, the `quantile` of the
//! normalized value at a random bin, and per SF the same quantile of the
//! plain FFT's peak-to-mean. Clean-signal runs at a given SNR give the
//! `clean_quantile` of the normalized value on the true symbol bin; a slot
//! must clear both.
//!
//! Text format, one record per line, `#` starts a comment:
//!
//! ```text
//! psr-calibration 1
//! margin_db 6
//! quantile 0.99
//! clean_quantile 0.2
//! realizations 200
//! seed 1
//! threshold <sf> <window_len> <value>
//! fast_path <sf> <value>
//! clean <sf> <window_len> <snr in millidecibels> <value>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::windows::{pool_len_for, window_ladder};
use super::{analyze_window, StftConfig};
use crate::channel::{add_awgn, complex_gaussian};
use crate::error::{Error, Result};
use crate::params::LoraParams;
use crate::phy::{dechirp, demod_fft, gen_downchirp, upchirp_for};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_QUANTILE: f64 = 0.99;
pub const DEFAULT_REALIZATIONS: usize = 200;
pub const DEFAULT_MARGIN_DB: f64 = 6.0;
pub const DEFAULT_CLEAN_QUANTILE: f64 = 0.2;
/// Ladder depth calibrated per SF; covers every window the decoder can ask for.
const CALIBRATED_LADDER: usize = 10;
/// Bins sampled per noise realization and window.
const BINS_PER_REALIZATION: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub margin_db: f64,
    pub quantile: f64,
    pub clean_quantile: f64,
    pub realizations: usize,
    pub seed: u64,
    thresholds: BTreeMap<(u8, usize), f64>,
    fast_path: BTreeMap<u8, f64>,
    clean: BTreeMap<(u8, usize, i64), f64>,
}

/// SNRs are keyed in whole millidecibels.
fn snr_key(snr_db: f64) -> i64 {
    (snr_db * 1000.0).round() as i64
}

fn quantile(mut values: Vec<f64>, q: f64) -> f64 {
    if values.is_empty() {
        return f64::INFINITY;
    }
    let idx = ((values.len() as f64 * q).ceil() as usize).clamp(1, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
    *v
}

impl CalibrationTable {
    pub fn empty(margin_db: f64, quantile: f64, realizations: usize, seed: u64) -> Self {
        Self {
            margin_db,
            quantile,
            clean_quantile: DEFAULT_CLEAN_QUANTILE,
            realizations,
            seed,
            thresholds: BTreeMap::new(),
            fast_path: BTreeMap::new(),
            clean: BTreeMap::new(),
        }
    }

    /// Calibrates every SF in `sfs` with default settings.
    pub fn build(sfs: &[u8], seed: u64) -> Result<Self> {
        let mut table = Self::empty(DEFAULT_MARGIN_DB, DEFAULT_QUANTILE, DEFAULT_REALIZATIONS, seed);
        for &sf in sfs {
            table.calibrate_sf(&LoraParams::new(sf)?);
        }
        Ok(table)
    }

    pub fn has_sf(&self, sf: u8) -> bool {
        self.fast_path.contains_key(&sf)
    }

    /// Runs the noise-only simulations for one SF. Each SF draws from its own
    /// stream so adding SFs never changes existing entries.
    pub fn calibrate_sf(&mut self, params: &LoraParams) {
        let sf = params.sf();
        let n = params.n_chips();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (sf as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let windows = window_ladder(params, CALIBRATED_LADDER);
        let mut lens: Vec<usize> = windows.iter().map(|c| c.window_len).collect();
        lens.dedup();

        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); lens.len()];
        let mut peaks = Vec::with_capacity(self.realizations);
        for _ in 0..self.realizations {
            let noise: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            peaks.push(demod_fft(&noise).1.peak_to_mean());
            for (li, &len) in lens.iter().enumerate() {
                let cfg = StftConfig {
                    window_len: len,
                    hop: (len / 4).max(1),
                    fft_len: n,
                };
                let grid = analyze_window(&noise, &cfg, pool_len_for(len, params)).expect("ladder configs are valid");
                for _ in 0..BINS_PER_REALIZATION {
                    let bin = rng.random_range(0..n);
                    samples[li].extend((0..grid.layout().n_slots).map(|t| grid.norm.get(t, bin)));
                }
            }
        }
        for (len, values) in lens.into_iter().zip(samples) {
            self.thresholds.insert((sf, len), quantile(values, self.quantile));
        }
        self.fast_path.insert(sf, quantile(peaks, self.quantile));
    }

    /// Clean-signal runs at `snr_db` for each window length in `window_lens`.
    /// Every (SF, length, SNR) entry has its own stream.
    pub fn calibrate_clean(&mut self, params: &LoraParams, snr_db: f64, window_lens: &[usize]) -> Result<()> {
        let sf = params.sf();
        let n = params.n_chips();
        let key = snr_key(snr_db);
        let down = gen_downchirp(params);
        for &len in window_lens {
            let cfg = StftConfig::new(len, (len / 4).max(1), n)?;
            let stream = (sf as u64) << 56 ^ (len as u64) << 32 ^ key as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xc1ea);
            let mut values = Vec::new();
            for _ in 0..self.realizations {
                let s = rng.random_range(0..n);
                let (noisy, _) = add_awgn(&upchirp_for(params, s)?, snr_db, &mut rng);
                let grid = analyze_window(&dechirp(&noisy, &down)?, &cfg, pool_len_for(len, params))?;
                values.extend((0..grid.layout().n_slots).map(|t| grid.norm.get(t, s)));
            }
            self.clean.insert((sf, len, key), quantile(values, self.clean_quantile));
        }
        Ok(())
    }

    /// Fills in whatever a decoder for `params` at `snr_db` with `windows`
    /// still lacks.
    pub fn ensure(&mut self, params: &LoraParams, snr_db: f64, windows: &[StftConfig]) -> Result<()> {
        let sf = params.sf();
        if !self.has_sf(sf) || windows.iter().any(|w| self.threshold(sf, w.window_len).is_none()) {
            self.calibrate_sf(params);
        }
        let mut missing: Vec<usize> = windows
            .iter()
            .map(|w| w.window_len)
            .filter(|&len| self.clean_threshold(sf, len, snr_db).is_none())
            .collect();
        missing.sort_unstable();
        missing.dedup();
        self.calibrate_clean(params, snr_db, &missing)
    }

    pub fn clean_threshold(&self, sf: u8, window_len: usize, snr_db: f64) -> Option<f64> {
        self.clean.get(&(sf, window_len, snr_key(snr_db))).copied()
    }

    pub fn threshold(&self, sf: u8, window_len: usize) -> Option<f64> {
        self.thresholds.get(&(sf, window_len)).copied()
    }

    pub fn fast_path_bound(&self, sf: u8) -> Option<f64> {
        self.fast_path.get(&sf).copied()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "psr-calibration {FORMAT_VERSION}");
        let _ = writeln!(out, "margin_db {}", self.margin_db);
        let _ = writeln!(out, "quantile {}", self.quantile);
        let _ = writeln!(out, "clean_quantile {}", self.clean_quantile);
        let _ = writeln!(out, "realizations {}", self.realizations);
        let _ = writeln!(out, "seed {}", self.seed);
        for ((sf, len), v) in &self.thresholds {
            let _ = writeln!(out, "threshold {sf} {len} {v:e}");
        }
        for (sf, v) in &self.fast_path {
            let _ = writeln!(out, "fast_path {sf} {v:e}");
        }
        for ((sf, len, snr), v) in &self.clean {
            let _ = writeln!(out, "clean {sf} {len} {snr} {v:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::ConfigInvalid(format!("calibration line `{line}`"));
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        match lines.next() {
            Some(l) if l == format!("psr-calibration {FORMAT_VERSION}") => {}
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "unsupported calibration header {other:?}"
                )))
            }
        }
        let mut table = Self::empty(DEFAULT_MARGIN_DB, DEFAULT_QUANTILE, DEFAULT_REALIZATIONS, 0);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| f.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad(line));
            match (f[0], f.len()) {
                ("margin_db", 2) => table.margin_db = num(1)?,
                ("quantile", 2) => table.quantile = num(1)?,
                ("clean_quantile", 2) => table.clean_quantile = num(1)?,
                ("realizations", 2) => table.realizations = f[1].parse().map_err(|_| bad(line))?,
                ("seed", 2) => table.seed = f[1].parse().map_err(|_| bad(line))?,
                ("threshold", 4) => {
                    let sf = f[1].parse().map_err(|_| bad(line))?;
                    let len = f[2].parse().map_err(|_| bad(line))?;
                    table.thresholds.insert((sf, len), num(3)?);
                }
                ("fast_path", 3) => {
                    let sf = f[1].parse().map_err(|_| bad(line))?;
                    table.fast_path.insert(sf, num(2)?);
                }
                ("clean", 5) => {
                    let sf = f[1].parse().map_err(|_| bad(line))?;
                    let len = f[2].parse().map_err(|_| bad(line))?;
                    let snr = f[3].parse().map_err(|_| bad(line))?;
                    table.clean.insert((sf, len, snr), num(4)?);
                }
                _ => return Err(bad(line)),
            }
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}
