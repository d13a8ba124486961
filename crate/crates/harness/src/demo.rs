//! Single-symbol walkthrough of the recovery pipeline.
//!
//! One symbol is sent through AWGN plus a single Wi-Fi-like burst covering a
//! chosen span, and every intermediate product is written as CSV into an
//! output directory:
//!
//! | file                  | content                                          |
//! |-----------------------|--------------------------------------------------|
//! | `dechirped.csv`       | `chip,re,im,power,corrupted`                     |
//! | `w<k>_spectrogram.csv`| STFT magnitudes, one row per slot, one column per bin |
//! | `w<k>_pooled.csv`     | after frequency max pooling                      |
//! | `w<k>_ratio.csv`      | component ratio                                  |
//! | `w<k>_norm.csv`       | normalized ratio                                 |
//! | `mask.csv`            | `chip,truth_corrupted,detected_clean,source_windows` |
//! | `symbol.iq`           | the received samples                             |
//!
//! Window `k` follows the configured ladder order, largest first.

use std::fs;
use std::path::{Path, PathBuf};

use lora_psr::channel::{add_awgn, mix, render_burst, BurstEvent, BurstKind};
use lora_psr::iq::{to_c32, write_iq, IqFileHeader};
use lora_psr::psr::{window_ladder, CalibrationTable, Grid, PsrConfig, PsrDemodulator};
use lora_psr::{demod_fft, upchirp_for, LoraParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOptions {
    pub sf: u8,
    pub symbol: usize,
    pub snr_db: f64,
    pub inr_db: f64,
    /// First corrupted chip and burst length, in chips.
    pub burst_start: usize,
    pub burst_len: usize,
    pub window_count: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSummary {
    pub sent: usize,
    pub standard: usize,
    pub psr: usize,
    pub line_bin: usize,
    pub clean_detected: usize,
    pub truly_clean: usize,
    /// Detected-clean chips that were in fact clean.
    pub precision: f64,
    pub files: Vec<PathBuf>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn grid_csv(grid: &Grid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in grid.rows() {
        w.write_record(row.iter().map(|v| format!("{v:.6e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn run_demo(opts: &DemoOptions, calibration: &mut CalibrationTable) -> Result<DemoSummary> {
    let params = LoraParams::new(opts.sf)?;
    let n = params.n_chips();
    if opts.burst_start > n {
        return Err(HarnessError::Config(format!(
            "burst start {} beyond {n} chips",
            opts.burst_start
        )));
    }
    let windows = window_ladder(&params, opts.window_count);
    calibration.ensure(&params, opts.snr_db, &windows)?;
    let psr = PsrDemodulator::new(
        params,
        PsrConfig::new(&params, opts.snr_db).with_windows(windows.clone()),
        calibration,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tx = upchirp_for(&params, opts.symbol)?;
    let (noisy, noise_var) = add_awgn(&tx, opts.snr_db, &mut rng);
    let event = BurstEvent {
        start_chip: opts.burst_start,
        duration_chips: opts.burst_len.min(n - opts.burst_start),
        inr_db: opts.inr_db,
        kind: BurstKind::WifiLike,
    };
    let samples = render_burst(&event, noise_var, &mut rng);
    let (rx, truth) = mix(&noisy, &[(event, samples)]);

    let trace = psr.trace(&rx)?;
    let (standard, _) = demod_fft(&trace.dechirped);

    fs::create_dir_all(&opts.out_dir).map_err(|source| HarnessError::Io {
        path: opts.out_dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let path = opts.out_dir.join(name);
        write_text(&path, &text)?;
        files.push(path);
        Ok(())
    };

    let mut dechirped = String::from("chip,re,im,power,corrupted\n");
    for (k, x) in trace.dechirped.iter().enumerate() {
        dechirped += &format!(
            "{k},{:.6e},{:.6e},{:.6e},{}\n",
            x.re,
            x.im,
            x.norm_sqr(),
            truth[k] as u8
        );
    }
    put("dechirped.csv".into(), dechirped)?;
    for (k, spec) in trace.spectrograms.iter().enumerate() {
        put(format!("w{k}_spectrogram.csv"), grid_csv(&spec.grid)?)?;
    }
    for (k, pooled) in trace.pooled.iter().enumerate() {
        put(format!("w{k}_pooled.csv"), grid_csv(&pooled.grid)?)?;
    }
    for (k, norm) in trace.norms.iter().enumerate() {
        put(format!("w{k}_ratio.csv"), grid_csv(&norm.ratio.grid)?)?;
        put(format!("w{k}_norm.csv"), grid_csv(&norm.norm)?)?;
    }
    let mut mask = String::from("chip,truth_corrupted,detected_clean,source_windows\n");
    for k in 0..n {
        mask += &format!(
            "{k},{},{},{}\n",
            truth[k] as u8, trace.mask.clean[k] as u8, trace.mask.source_windows[k]
        );
    }
    put("mask.csv".into(), mask)?;
    let iq_path = opts.out_dir.join("symbol.iq");
    write_iq(&iq_path, &IqFileHeader::new(opts.sf, n), &to_c32(&rx))?;
    files.push(iq_path);

    let clean_detected = trace.mask.clean_count();
    let true_positive = (0..n).filter(|&k| trace.mask.clean[k] && !truth[k]).count();
    Ok(DemoSummary {
        sent: opts.symbol,
        standard,
        psr: trace.result.symbol.value(),
        line_bin: trace.line_bin,
        clean_detected,
        truly_clean: truth.iter().filter(|c| !**c).count(),
        precision: if clean_detected == 0 {
            0.0
        } else {
            true_positive as f64 / clean_detected as f64
        },
        files,
    })
}
