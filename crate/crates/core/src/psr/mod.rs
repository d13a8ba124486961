//! Partial symbol recovery.
//!
//! A corrupted symbol is dechirped and analysed with several Hann-windowed
//! STFTs. Each spectrogram is max-pooled along frequency, turned into
//! per-slot component ratios and normalized by window length. Per-slot power
//! shares summed over all spectrograms locate the symbol's bright line;
//! slots whose value on that line clears a calibrated threshold mark their
//! chips clean, and the symbol is re-estimated from the clean chips alone.
//! The re-estimate replaces the plain FFT decision only when its peak stands
//! out more.
//!
//! Cost per symbol is one N-point FFT per slot, i.e.
//! `O(sum_w (N - l_w) / hop_w * N log N)`; with `hop = 1` this is
//! `O(N^2 log N)`.

mod calibration;
mod detect;
mod grid;
mod pool;
mod ratio;
mod recover;
mod stft;
mod windows;

pub use calibration::{
    CalibrationTable, DEFAULT_CLEAN_QUANTILE, DEFAULT_MARGIN_DB, DEFAULT_QUANTILE, DEFAULT_REALIZATIONS,
};
pub use detect::{
    identify_clean_chips, locate_bright_line, prune_power_outliers, recovery_threshold, CleanChipMask, Selection,
};
use detect::{select_chips, LineValues};
use grid::lane_sum;
pub use grid::{Grid, SlotLayout};
pub use pool::{max_pool_freq, PooledGrid};
pub use ratio::{component_ratio, normalize, NormGrid, RatioGrid};
use recover::recover_gated;
pub use recover::{recover_symbol, RecoveryResult};
pub use stft::{hann, stft_hann, Spectrogram, StftConfig};
pub use windows::{default_windows, pool_len_for, window_ladder, DEFAULT_WINDOW_COUNT, MIN_WINDOW};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::LoraParams;
use crate::phy::{dechirp, demod_fft, gen_downchirp, ChipBuffer};

/// STFT, pooling, ratio and normalization for one window.
pub fn analyze_window(dechirped: &[Complex64], cfg: &StftConfig, pool_len: usize) -> Result<NormGrid> {
    let spec = stft_hann(dechirped, cfg)?;
    let pooled = max_pool_freq(&spec, pool_len)?;
    Ok(normalize(component_ratio(&pooled), cfg.window_len))
}

/// The normalized grid's column at `bin`, computed from the spectrogram and
/// the pooled row sums; equal to `analyze_window(..).norm` at that bin.
fn line_values(spec: &Spectrogram, pooled_sums: &[f64], pool_len: usize, bin: usize) -> LineValues {
    let n_bins = spec.grid.n_bins();
    let half = pool_len / 2;
    let lo = bin.saturating_sub(half);
    let hi = (bin + half).min(n_bins - 1);
    let scale = 1.0 / spec.layout.window_len.max(1) as f64;
    let values = spec
        .grid
        .rows()
        .zip(pooled_sums)
        .map(|(row, &total)| {
            let ratio = if total > 0.0 && total.is_finite() {
                row[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max) / total
            } else {
                1.0 / n_bins as f64
            };
            ratio * scale
        })
        .collect();
    LineValues {
        layout: spec.layout,
        values,
    }
}

/// Tunables of the recovery pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PsrConfig {
    /// Largest first.
    pub windows: Vec<StftConfig>,
    pub margin_db: f64,
    /// Link SNR the recovery threshold is derived from.
    pub snr_db: f64,
    pub selection: Selection,
    /// Accept the plain FFT decision when its peak-to-mean clears the
    /// calibrated noise bound.
    pub fast_path: bool,
    /// Divisor of the window length trimmed from each end of a passing slot;
    /// 0 keeps whole slots.
    pub edge_trim: usize,
    /// Drop selected chips louder than this multiple of their median power.
    pub prune_factor: Option<f64>,
    /// Keep the plain FFT decision when its peak-to-mean beats the clean-chip
    /// estimate's.
    pub keep_stronger: bool,
}

pub const DEFAULT_EDGE_TRIM: usize = 8;
pub const DEFAULT_PRUNE_FACTOR: f64 = 8.0;

impl PsrConfig {
    pub fn new(params: &LoraParams, snr_db: f64) -> Self {
        Self {
            windows: default_windows(params),
            margin_db: DEFAULT_MARGIN_DB,
            snr_db,
            selection: Selection::Exhaustive,
            fast_path: true,
            edge_trim: DEFAULT_EDGE_TRIM,
            prune_factor: Some(DEFAULT_PRUNE_FACTOR),
            keep_stronger: true,
        }
    }

    /// Detection and recovery only: no fast path, no pruning, no comparison
    /// with the plain FFT.
    pub fn bare(params: &LoraParams, snr_db: f64) -> Self {
        Self {
            fast_path: false,
            prune_factor: None,
            keep_stronger: false,
            ..Self::new(params, snr_db)
        }
    }

    pub fn with_windows(mut self, windows: Vec<StftConfig>) -> Self {
        self.windows = windows;
        self
    }
}

/// Every intermediate product of one [`PsrDemodulator::trace`] call.
#[derive(Debug, Clone)]
pub struct PsrTrace {
    pub dechirped: ChipBuffer,
    pub spectrograms: Vec<Spectrogram>,
    pub pooled: Vec<PooledGrid>,
    pub norms: Vec<NormGrid>,
    pub line_bin: usize,
    pub mask: CleanChipMask,
    pub result: RecoveryResult,
}

/// A configured recovery receiver for one SF. Read-only after construction
/// and shareable across threads.
#[derive(Debug, Clone)]
pub struct PsrDemodulator {
    params: LoraParams,
    config: PsrConfig,
    pool_lens: Vec<usize>,
    thresholds: Vec<f64>,
    fast_bound: f64,
    min_clean: usize,
    down: ChipBuffer,
}

impl PsrDemodulator {
    /// Looks up thresholds for the configured windows in `calibration`; see
    /// [`CalibrationTable::ensure`].
    pub fn new(params: LoraParams, config: PsrConfig, calibration: &CalibrationTable) -> Result<Self> {
        let sf = params.sf();
        let mut windows = config.windows.clone();
        windows.sort_by(|a, b| b.window_len.cmp(&a.window_len).then(b.hop.cmp(&a.hop)));
        let mut thresholds = Vec::with_capacity(windows.len());
        for cfg in &windows {
            if cfg.fft_len != params.n_chips() {
                return Err(Error::ConfigInvalid(format!(
                    "window transform length {} for {} chips",
                    cfg.fft_len,
                    params.n_chips()
                )));
            }
            cfg.validate()?;
            let noise = calibration
                .threshold(sf, cfg.window_len)
                .ok_or_else(|| Error::ConfigInvalid(format!("no calibration for sf {sf} window {}", cfg.window_len)))?;
            let clean = calibration
                .clean_threshold(sf, cfg.window_len, config.snr_db)
                .ok_or_else(|| {
                    Error::ConfigInvalid(format!(
                        "no clean-signal calibration for sf {sf} window {} at {} dB",
                        cfg.window_len, config.snr_db
                    ))
                })?;
            thresholds.push(noise.max(clean));
        }
        let fast_bound = calibration
            .fast_path_bound(sf)
            .ok_or_else(|| Error::ConfigInvalid(format!("no calibration for sf {sf}")))?;
        let pool_lens = windows.iter().map(|c| pool_len_for(c.window_len, &params)).collect();
        let min_clean = recovery_threshold(config.snr_db, config.margin_db, &params);
        Ok(Self {
            params,
            config: PsrConfig { windows, ..config },
            pool_lens,
            thresholds,
            fast_bound,
            min_clean,
            down: gen_downchirp(&params),
        })
    }

    pub fn params(&self) -> &LoraParams {
        &self.params
    }

    pub fn config(&self) -> &PsrConfig {
        &self.config
    }

    pub fn recovery_threshold(&self) -> usize {
        self.min_clean
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn fast_path_bound(&self) -> f64 {
        self.fast_bound
    }

    pub fn demod(&self, rx: &[Complex64]) -> Result<RecoveryResult> {
        Ok(self.run(rx, false)?.0)
    }

    /// Runs the full pipeline, skipping the fast path, and keeps every stage.
    pub fn trace(&self, rx: &[Complex64]) -> Result<PsrTrace> {
        let (result, trace) = self.run(rx, true)?;
        Ok(trace.expect("trace requested").finish(result))
    }

    fn run(&self, rx: &[Complex64], keep: bool) -> Result<(RecoveryResult, Option<PartialTrace>)> {
        let n = self.params.n_chips();
        let dechirped = dechirp(rx, &self.down)?;
        let (bin, mags) = demod_fft(&dechirped);
        if !keep && self.config.fast_path && mags.peak_to_mean() >= self.fast_bound {
            return Ok((
                RecoveryResult {
                    symbol: self.params.symbol(bin)?,
                    peak_magnitude: mags.bins()[bin],
                    clean_count: n,
                    succeeded: true,
                    fast_path: true,
                },
                None,
            ));
        }

        let mut trace = keep.then(|| PartialTrace {
            dechirped: dechirped.clone(),
            spectrograms: Vec::new(),
            pooled: Vec::new(),
            norms: Vec::new(),
            line_bin: 0,
            mask: CleanChipMask::all(n, false),
        });
        let mut spectrograms = Vec::with_capacity(self.config.windows.len());
        let mut pooled_sums = Vec::with_capacity(self.config.windows.len());
        let mut norms = Vec::new();
        let line_bin = if keep {
            let t = trace.as_mut().expect("trace requested");
            for (cfg, &pool_len) in self.config.windows.iter().zip(&self.pool_lens) {
                let spec = stft_hann(&dechirped, cfg)?;
                let pooled = max_pool_freq(&spec, pool_len)?;
                norms.push(normalize(component_ratio(&pooled), cfg.window_len));
                t.pooled.push(pooled);
                spectrograms.push(spec);
            }
            locate_bright_line(&spectrograms)
        } else {
            // Same arithmetic in the same order, one row at a time while it
            // is still in cache.
            let mut line_sums = vec![0.0; n];
            let mut scratch = Vec::new();
            let mut pooled_row = vec![0.0; n];
            for (cfg, &pool_len) in self.config.windows.iter().zip(&self.pool_lens) {
                let mut values = Vec::with_capacity(cfg.layout().n_slots * n);
                let mut sums = Vec::with_capacity(cfg.layout().n_slots);
                let layout = stft::for_each_row(&dechirped, cfg, |row| {
                    pool::sliding_max(row, pool_len / 2, &mut pooled_row, &mut scratch);
                    sums.push(lane_sum(&pooled_row));
                    detect::accumulate_line(&mut line_sums, row);
                    values.extend_from_slice(row);
                })?;
                spectrograms.push(Spectrogram {
                    grid: Grid::from_values(n, values)?,
                    layout,
                });
                pooled_sums.push(sums);
            }
            detect::pick_line(&line_sums)
        };
        let lines: Vec<LineValues> = if keep {
            norms
                .iter()
                .map(|g| LineValues {
                    layout: g.layout(),
                    values: (0..g.layout().n_slots).map(|t| g.norm.get(t, line_bin)).collect(),
                })
                .collect()
        } else {
            spectrograms
                .iter()
                .zip(&pooled_sums)
                .zip(&self.pool_lens)
                .map(|((spec, sums), &pool_len)| line_values(spec, sums, pool_len, line_bin))
                .collect()
        };
        let mut mask = select_chips(
            &lines,
            n,
            &self.thresholds,
            self.min_clean,
            self.config.selection,
            self.config.edge_trim,
        );
        if let Some(factor) = self.config.prune_factor {
            prune_power_outliers(&mut mask, &dechirped, factor);
        }
        let plain = RecoveryResult {
            symbol: self.params.symbol(bin)?,
            peak_magnitude: mags.bins()[bin],
            clean_count: 0,
            succeeded: self.min_clean == 0,
            fast_path: false,
        };
        let result = if mask.clean_count() == 0 {
            plain
        } else {
            let (recovered, gated) = recover_gated(&dechirped, &mask, &self.params, self.min_clean)?;
            if self.config.keep_stronger && mags.peak_to_mean() >= gated.peak_to_mean() {
                RecoveryResult {
                    clean_count: recovered.clean_count,
                    succeeded: recovered.succeeded,
                    ..plain
                }
            } else {
                recovered
            }
        };
        if let Some(t) = trace.as_mut() {
            t.spectrograms = spectrograms;
            t.norms = norms;
            t.line_bin = line_bin;
            t.mask = mask;
        }
        Ok((result, trace))
    }
}

struct PartialTrace {
    dechirped: ChipBuffer,
    spectrograms: Vec<Spectrogram>,
    pooled: Vec<PooledGrid>,
    norms: Vec<NormGrid>,
    line_bin: usize,
    mask: CleanChipMask,
}

impl PartialTrace {
    fn finish(self, result: RecoveryResult) -> PsrTrace {
        PsrTrace {
            dechirped: self.dechirped,
            spectrograms: self.spectrograms,
            pooled: self.pooled,
            norms: self.norms,
            line_bin: self.line_bin,
            mask: self.mask,
            result,
        }
    }
}

/// One-shot convenience wrapper around [`PsrDemodulator`].
pub fn psr_demod(
    rx: &[Complex64],
    params: &LoraParams,
    windows: &[StftConfig],
    snr_db: f64,
    calibration: &CalibrationTable,
) -> Result<RecoveryResult> {
    let config = PsrConfig::new(params, snr_db).with_windows(windows.to_vec());
    PsrDemodulator::new(*params, config, calibration)?.demod(rx)
}
