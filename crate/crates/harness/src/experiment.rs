//! Packet-level Monte-Carlo runs.
//!
//! A scenario is one (SF, SNR) pair. Every decoder in the configuration
//! decodes the same packets of a scenario, so their rows are paired
//! samples. Each scenario draws from its own generator seeded by
//! [`cell_seed`]`(seed, scenario_index)`, which makes the report independent
//! of how scenarios are scheduled across threads.

use lora_psr::channel::{Channel, ChannelConfig};
use lora_psr::coding::{decode_payload, encode_payload};
use lora_psr::psr::{window_ladder, CalibrationTable, PsrConfig, PsrDemodulator};
use lora_psr::{dechirp, demod_fft, gen_downchirp, upchirp_for, LoraParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Decoder, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// Clean-fraction histogram resolution: bin `k` counts interfered symbols
/// with clean fraction in `[k / 10, (k + 1) / 10)`.
pub const HISTOGRAM_BINS: usize = 10;

/// One row of the report: a (SF, SNR, decoder) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub sf: u8,
    pub snr_db: f64,
    pub traffic: String,
    pub inr_db: f64,
    pub decoder: Decoder,
    pub symbols_total: u64,
    /// Symbols overlapped by interference that plain demodulation got wrong.
    pub symbols_corrupted: u64,
    /// Corrupted symbols this decoder got right; always 0 for `standard`.
    pub symbols_recovered: u64,
    pub srr: f64,
    pub packets_total: u64,
    pub packets_ok: u64,
    pub prr: f64,
    pub throughput_kbps: f64,
    /// Ground-truth clean fractions of the interfered symbols.
    pub clean_fraction_histogram: [u64; HISTOGRAM_BINS],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<CellMetrics>,
}

impl MetricsReport {
    pub fn cell(&self, sf: u8, snr_db: f64, decoder: Decoder) -> Option<&CellMetrics> {
        self.rows
            .iter()
            .find(|r| r.sf == sf && r.snr_db == snr_db && r.decoder == decoder)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of scenario `index` under master seed `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64))
}

/// Airtime of `n_symbols` symbols.
pub fn time_on_air(n_symbols: usize, params: &LoraParams) -> f64 {
    n_symbols as f64 * params.symbol_duration_s()
}

/// Goodput in kb/s: `prr * payload_bits / time_on_air / 1000`.
pub fn throughput(prr: f64, payload_bits: usize, time_on_air_s: f64) -> f64 {
    assert!(time_on_air_s > 0.0, "time on air must be positive");
    prr * payload_bits as f64 / time_on_air_s / 1000.0
}

/// Adds every threshold `cfg` needs to `table`, computing missing entries.
pub fn prepare_calibration(cfg: &ExperimentConfig, table: &mut CalibrationTable) -> Result<()> {
    if !cfg.decoders.contains(&Decoder::Psr) {
        return Ok(());
    }
    for &sf in &cfg.sf_list {
        let params = LoraParams::new(sf)?;
        let windows = window_ladder(&params, cfg.window_count);
        for &snr in &cfg.snr_db_list {
            table.ensure(&params, snr, &windows)?;
        }
    }
    Ok(())
}

/// Runs every cell of `cfg`. `calibration` must already cover the PSR
/// cells; see [`prepare_calibration`].
pub fn run_experiment(cfg: &ExperimentConfig, calibration: &CalibrationTable) -> Result<MetricsReport> {
    cfg.validate()?;
    let scenarios: Vec<(usize, u8, f64)> = cfg
        .sf_list
        .iter()
        .flat_map(|&sf| cfg.snr_db_list.iter().map(move |&snr| (sf, snr)))
        .enumerate()
        .map(|(i, (sf, snr))| (i, sf, snr))
        .collect();
    let run = |&(i, sf, snr): &(usize, u8, f64)| run_scenario(cfg, sf, snr, cell_seed(cfg.seed, i), calibration);
    let per_scenario: Vec<Vec<CellMetrics>> = if cfg.threads == 1 {
        scenarios.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
        pool.install(|| scenarios.par_iter().map(run).collect::<Result<_>>())?
    };
    Ok(MetricsReport {
        rows: per_scenario.into_iter().flatten().collect(),
    })
}

#[derive(Default)]
struct Tally {
    symbols_recovered: u64,
    packets_ok: u64,
}

fn run_scenario(
    cfg: &ExperimentConfig,
    sf: u8,
    snr_db: f64,
    seed: u64,
    calibration: &CalibrationTable,
) -> Result<Vec<CellMetrics>> {
    let params = LoraParams::new(sf)?;
    let n = params.n_chips();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channel = Channel::new(
        ChannelConfig {
            snr_db,
            traffic: cfg.traffic.model(cfg.inr_db),
            seed: rng.random(),
        },
        params,
    )?;
    let psr = if cfg.decoders.contains(&Decoder::Psr) {
        let psr_cfg = PsrConfig::new(&params, snr_db).with_windows(window_ladder(&params, cfg.window_count));
        Some(PsrDemodulator::new(params, psr_cfg, calibration)?)
    } else {
        None
    };
    let down = gen_downchirp(&params);

    let mut tallies: Vec<Tally> = cfg.decoders.iter().map(|_| Tally::default()).collect();
    let mut histogram = [0u64; HISTOGRAM_BINS];
    let mut symbols_total = 0u64;
    let mut symbols_corrupted = 0u64;
    let mut packet_symbols = 0;
    let mut decoded: Vec<Vec<usize>> = vec![Vec::new(); cfg.decoders.len()];

    for _ in 0..cfg.packets_per_cell {
        let payload: Vec<u8> = (0..cfg.payload_len_bytes).map(|_| rng.random()).collect();
        let tx = encode_payload(&payload, &params)?.transmit_symbols();
        packet_symbols = tx.len();
        let mut signal: Vec<Complex64> = Vec::with_capacity(tx.len() * n);
        for s in &tx {
            signal.extend_from_slice(&upchirp_for(&params, s.value())?);
        }
        let out = channel.apply(&signal);
        decoded.iter_mut().for_each(Vec::clear);

        for (k, sent) in tx.iter().enumerate() {
            let chips = k * n..(k + 1) * n;
            let rx = &out.samples[chips.clone()];
            let hit = out.corrupted[chips].iter().filter(|c| **c).count();
            let (plain, _) = demod_fft(&dechirp(rx, &down)?);
            let corrupted = hit > 0 && plain != sent.value();
            symbols_total += 1;
            if hit > 0 {
                let clean = (n - hit) as f64 / n as f64;
                histogram[((clean * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
            }
            symbols_corrupted += corrupted as u64;
            for ((decoder, tally), out) in cfg.decoders.iter().zip(&mut tallies).zip(&mut decoded) {
                let value = match decoder {
                    Decoder::Standard => plain,
                    Decoder::Psr => psr.as_ref().expect("built when requested").demod(rx)?.symbol.value(),
                };
                if corrupted && value == sent.value() {
                    tally.symbols_recovered += 1;
                }
                out.push(value);
            }
        }
        for (tally, values) in tallies.iter_mut().zip(&decoded) {
            let symbols = values
                .iter()
                .map(|&v| params.symbol(v))
                .collect::<lora_psr::Result<Vec<_>>>()?;
            if decode_payload(&symbols, &params)?.crc_ok {
                tally.packets_ok += 1;
            }
        }
    }

    let packets_total = cfg.packets_per_cell as u64;
    let toa = time_on_air(packet_symbols, &params);
    Ok(cfg
        .decoders
        .iter()
        .zip(tallies)
        .map(|(&decoder, t)| {
            let prr = t.packets_ok as f64 / packets_total as f64;
            CellMetrics {
                sf,
                snr_db,
                traffic: cfg.traffic.to_string(),
                inr_db: cfg.inr_db,
                decoder,
                symbols_total,
                symbols_corrupted,
                symbols_recovered: t.symbols_recovered,
                srr: if symbols_corrupted == 0 {
                    0.0
                } else {
                    t.symbols_recovered as f64 / symbols_corrupted as f64
                },
                packets_total,
                packets_ok: t.packets_ok,
                prr,
                throughput_kbps: throughput(prr, cfg.payload_len_bytes * 8, toa),
                clean_fraction_histogram: histogram,
            }
        })
        .collect())
}
