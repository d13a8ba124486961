//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Criteria run one after another so the timing checks see an idle
//! core.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lora_psr::channel::{add_awgn, mix, render_burst, BurstEvent, BurstKind, TrafficPreset};
use lora_psr::psr::{
    default_windows, hann, max_pool_freq, stft_hann, CalibrationTable, Grid, PsrConfig, PsrDemodulator, SlotLayout,
    Spectrogram, StftConfig, DEFAULT_MARGIN_DB, DEFAULT_QUANTILE, DEFAULT_REALIZATIONS,
};
use lora_psr::{dechirp, demod_fft, gen_downchirp, upchirp_for, LoraParams};
use lora_psr_harness::{prepare_calibration, run_experiment, to_csv_string, Decoder, ExperimentConfig, Traffic};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Burst INR of the packet-level criteria.
const SWEEP_INR_DB: f64 = 18.0;
const SNR_DB: f64 = -10.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn table() -> CalibrationTable {
    CalibrationTable::empty(DEFAULT_MARGIN_DB, DEFAULT_QUANTILE, DEFAULT_REALIZATIONS, 1)
}

fn demodulator(table: &mut CalibrationTable, cfg: PsrConfig, params: LoraParams) -> PsrDemodulator {
    table.ensure(&params, cfg.snr_db, &cfg.windows).unwrap();
    PsrDemodulator::new(params, cfg, table).unwrap()
}

/// A noisy symbol hit by Wi-Fi-like bursts at the given chip spans.
fn jam(
    p: &LoraParams,
    rng: &mut ChaCha8Rng,
    s: usize,
    spans: &[(usize, usize)],
    inr_db: f64,
) -> (Vec<Complex64>, Vec<bool>) {
    let (noisy, var) = add_awgn(&upchirp_for(p, s).unwrap(), SNR_DB, rng);
    let bursts: Vec<_> = spans
        .iter()
        .map(|&(start, len)| {
            let e = BurstEvent {
                start_chip: start,
                duration_chips: len,
                inr_db,
                kind: BurstKind::WifiLike,
            };
            (e, render_burst(&e, var, rng))
        })
        .collect();
    mix(&noisy, &bursts)
}

/// One to three disjoint bursts leaving `clean` chips untouched.
fn spans_with_clean(rng: &mut ChaCha8Rng, n: usize, clean: usize) -> Vec<(usize, usize)> {
    let corrupt = n - clean;
    let k = rng.random_range(1..=3).min(corrupt).max(1);
    let mut cuts: Vec<usize> = sample(rng, corrupt - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut lens = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain([corrupt]) {
        lens.push(c - prev);
        prev = c;
    }
    let mut gaps: Vec<usize> = (0..k).map(|_| rng.random_range(0..=clean)).collect();
    gaps.sort_unstable();
    let mut spans = Vec::with_capacity(k);
    let mut used = 0;
    let mut prev_gap = 0;
    for (len, g) in lens.into_iter().zip(gaps) {
        let start = used + (g - prev_gap);
        spans.push((start, len));
        used = start + len;
        prev_gap = g;
    }
    spans
}

fn round_trip() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut wrong = 0;
    for sf in 7..=12u8 {
        let p = LoraParams::new(sf).unwrap();
        let down = gen_downchirp(&p);
        let symbols: Vec<usize> = if sf <= 9 {
            (0..p.n_chips()).collect()
        } else {
            (0..1000).map(|_| rng.random_range(0..p.n_chips())).collect()
        };
        for s in symbols {
            checked += 1;
            wrong += (demod_fft(&dechirp(&upchirp_for(&p, s).unwrap(), &down).unwrap()).0 != s) as usize;
        }
    }
    let elapsed = t0.elapsed();
    outcome(
        wrong == 0 && elapsed < Duration::from_secs(10),
        format!("{wrong} of {checked} symbols wrong in {:.2} s", elapsed.as_secs_f64()),
    )
}

fn processing_gain() -> Outcome {
    let p = LoraParams::new(10).unwrap();
    let down = gen_downchirp(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 10_000;
    let errors = (0..trials)
        .filter(|_| {
            let s = rng.random_range(0..p.n_chips());
            let (rx, _) = add_awgn(&upchirp_for(&p, s).unwrap(), SNR_DB, &mut rng);
            demod_fft(&dechirp(&rx, &down).unwrap()).0 != s
        })
        .count();
    let ser = errors as f64 / trials as f64;
    outcome(ser < 0.001, format!("SER {ser:.4} over {trials} symbols"))
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 128;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let len = 1 << rng.random_range(1..=7);
        let cfg = StftConfig::new(len, rng.random_range(1..=len), n).unwrap();
        let fast = stft_hann(&x, &cfg).unwrap();
        let w = hann(len);
        let layout = cfg.layout();
        let mut direct = Vec::new();
        for t in 0..layout.n_slots {
            for m in 0..n {
                let z: Complex64 = (0..len)
                    .map(|k| {
                        x[layout.slot_start(t) + k]
                            * w[k]
                            * Complex64::from_polar(1.0, -2.0 * PI * (m * k % n) as f64 / n as f64)
                    })
                    .sum();
                direct.push(z.norm());
            }
        }
        let scale = direct.iter().cloned().fold(0.0, f64::max);
        for (a, b) in fast.grid.rows().flatten().zip(&direct) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    let mut pool_mismatch = 0;
    for _ in 0..100 {
        let rows = rng.random_range(1..20);
        let bins = rng.random_range(1..64);
        let values: Vec<f64> = (0..rows * bins).map(|_| rng.random_range(0.0..1.0)).collect();
        let pool_len = 2 * rng.random_range(0..10) + 1;
        let spec = Spectrogram {
            grid: Grid::from_values(bins, values.clone()).unwrap(),
            layout: SlotLayout {
                window_len: 1,
                hop: 1,
                n_slots: rows,
            },
        };
        let pooled = max_pool_freq(&spec, pool_len).unwrap();
        let half = pool_len / 2;
        for r in 0..rows {
            let row = &values[r * bins..(r + 1) * bins];
            for m in 0..bins {
                let mut best = f64::NEG_INFINITY;
                for j in m.saturating_sub(half)..=(m + half).min(bins - 1) {
                    best = best.max(row[j]);
                }
                pool_mismatch += (pooled.grid.get(r, m) != best) as usize;
            }
        }
    }
    outcome(
        worst <= 1e-9 && pool_mismatch == 0,
        format!("worst STFT relative error {worst:.2e}, {pool_mismatch} pooling mismatches"),
    )
}

fn scale_invariance(table: &mut CalibrationTable) -> Outcome {
    let p = LoraParams::new(10).unwrap();
    let n = p.n_chips();
    let psr = demodulator(table, PsrConfig::new(&p, SNR_DB), p);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut differing = 0;
    for _ in 0..100 {
        let s = rng.random_range(0..n);
        let clean = rng.random_range(n / 10..n * 9 / 10);
        let spans = spans_with_clean(&mut rng, n, clean);
        let (rx, _) = jam(&p, &mut rng, s, &spans, 20.0);
        let base = psr.trace(&rx).unwrap();
        let base_fast = psr.demod(&rx).unwrap().symbol;
        for alpha in [1e-3, 1.0, 1e3] {
            let scaled: Vec<Complex64> = rx.iter().map(|x| x * alpha).collect();
            let t = psr.trace(&scaled).unwrap();
            let same = t.mask == base.mask
                && t.result.symbol == base.result.symbol
                && psr.demod(&scaled).unwrap().symbol == base_fast;
            differing += !same as usize;
        }
    }
    outcome(differing == 0, format!("{differing} of 300 scaled runs differ"))
}

fn detection_precision(table: &mut CalibrationTable) -> Outcome {
    let p = LoraParams::new(10).unwrap();
    let n = p.n_chips();
    let psr = demodulator(table, PsrConfig::new(&p, SNR_DB), p);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut declared, mut correct) = (0usize, 0usize);
    for _ in 0..1000 {
        let s = rng.random_range(0..n);
        let len = rng.random_range(1..=n);
        let start = rng.random_range(0..=n - len);
        let (rx, truth) = jam(&p, &mut rng, s, &[(start, len)], 10.0);
        let mask = psr.trace(&rx).unwrap().mask;
        for (c, t) in mask.clean.iter().zip(&truth) {
            declared += *c as usize;
            correct += (*c && !*t) as usize;
        }
    }
    let precision = correct as f64 / declared.max(1) as f64;
    outcome(
        precision >= 0.9,
        format!("precision {precision:.3} over {declared} declared chips"),
    )
}

const BUCKETS: [(f64, f64, &str); 3] = [(0.05, 0.2, "<20%"), (0.2, 0.4, "20-40%"), (0.4, 0.95, ">40%")];

/// Per clean-fraction bucket: (PSR correct, trials, PSR correct where plain
/// demodulation failed, plain failures).
fn bucket_stats(table: &mut CalibrationTable, sf: u8, inr_db: f64, per_bucket: usize, seed: u64) -> Vec<[usize; 4]> {
    let p = LoraParams::new(sf).unwrap();
    let n = p.n_chips();
    let psr = demodulator(table, PsrConfig::new(&p, SNR_DB), p);
    let down = gen_downchirp(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BUCKETS
        .iter()
        .map(|&(lo, hi, _)| {
            let mut st = [0usize; 4];
            for _ in 0..per_bucket {
                let s = rng.random_range(0..n);
                let clean = ((rng.random_range(lo..hi) * n as f64) as usize).clamp(1, n - 1);
                let spans = spans_with_clean(&mut rng, n, clean);
                let (rx, _) = jam(&p, &mut rng, s, &spans, inr_db);
                let ok = psr.demod(&rx).unwrap().symbol.value() == s;
                let plain_ok = demod_fft(&dechirp(&rx, &down).unwrap()).0 == s;
                st[0] += ok as usize;
                st[1] += 1;
                if !plain_ok {
                    st[2] += ok as usize;
                    st[3] += 1;
                }
            }
            st
        })
        .collect()
}

fn clean_fraction_trend(table: &mut CalibrationTable) -> Outcome {
    let per_bucket = 1000;
    let base = bucket_stats(table, 10, 10.0, per_bucket, 6);
    let rate = |st: &[usize; 4]| st[0] as f64 / st[1] as f64;
    let srr = |st: &[usize; 4]| st[2] as f64 / st[3].max(1) as f64;
    let success_ok = rate(&base[2]) >= 0.95 && rate(&base[0]) < rate(&base[1]);
    // At +10 dB plain sf 12 demodulation almost never fails, so the SRR
    // comparison uses a stronger burst.
    let sf10 = bucket_stats(table, 10, 20.0, per_bucket, 7);
    let sf12 = bucket_stats(table, 12, 20.0, per_bucket, 8);
    let ordering_ok = sf10
        .iter()
        .zip(&sf12)
        .all(|(a, b)| a[3] > 0 && b[3] > 0 && srr(b) > srr(a));
    let mut detail = format!(
        "sf10 +10 dB success {}",
        BUCKETS
            .iter()
            .zip(&base)
            .map(|(b, st)| format!("{} {:.3}", b.2, rate(st)))
            .collect::<Vec<_>>()
            .join(", ")
    );
    detail += &format!(
        "; +20 dB SRR sf10/sf12 {}",
        BUCKETS
            .iter()
            .zip(sf10.iter().zip(&sf12))
            .map(|(b, (a, c))| format!("{} {:.3}/{:.3}", b.2, srr(a), srr(c)))
            .collect::<Vec<_>>()
            .join(", ")
    );
    outcome(success_ok && ordering_ok, detail)
}

fn window_count_trend(table: &mut CalibrationTable) -> Outcome {
    let srr = |windows: usize, table: &mut CalibrationTable| {
        let cfg = ExperimentConfig {
            sf_list: vec![10],
            snr_db_list: vec![SNR_DB],
            traffic: Traffic::Preset(TrafficPreset::Mid),
            inr_db: SWEEP_INR_DB,
            packets_per_cell: 60,
            decoders: vec![Decoder::Psr],
            window_count: windows,
            seed: 17,
            ..ExperimentConfig::default()
        };
        prepare_calibration(&cfg, table).unwrap();
        run_experiment(&cfg, table).unwrap().rows[0].srr
    };
    let (two, six, eight) = (srr(2, table), srr(6, table), srr(8, table));
    outcome(
        six - two > 0.05 && (eight - six).abs() <= 0.03,
        format!("SRR 2/6/8 windows {two:.3}/{six:.3}/{eight:.3}"),
    )
}

fn headline_and_throughput(table: &mut CalibrationTable) -> (Outcome, Outcome) {
    let cfg = ExperimentConfig {
        sf_list: (7..=12).collect(),
        snr_db_list: vec![SNR_DB],
        traffic: Traffic::Preset(TrafficPreset::High),
        inr_db: SWEEP_INR_DB,
        packets_per_cell: 500,
        seed: 2024,
        ..ExperimentConfig::default()
    };
    let t0 = Instant::now();
    prepare_calibration(&cfg, table).unwrap();
    let report = run_experiment(&cfg, table).unwrap();
    let elapsed = t0.elapsed();
    let prr = |sf: u8, d: Decoder| report.cell(sf, SNR_DB, d).unwrap().prr;
    let mean = |d: Decoder| cfg.sf_list.iter().map(|&sf| prr(sf, d)).sum::<f64>() / cfg.sf_list.len() as f64;
    let (std_mean, psr_mean) = (mean(Decoder::Standard), mean(Decoder::Psr));
    let gain = psr_mean / std_mean;
    let ordered = cfg
        .sf_list
        .iter()
        .all(|&sf| prr(sf, Decoder::Psr) >= prr(sf, Decoder::Standard) - 0.01);
    let per_sf: Vec<String> = cfg
        .sf_list
        .iter()
        .map(|&sf| format!("sf{sf} {:.3}/{:.3}", prr(sf, Decoder::Standard), prr(sf, Decoder::Psr)))
        .collect();
    let headline = outcome(
        gain >= 1.8 && ordered && elapsed < Duration::from_secs(30 * 60),
        format!(
            "PRR standard/psr {}; mean {std_mean:.3}/{psr_mean:.3}, gain {gain:.2}x in {:.0} s",
            per_sf.join(", "),
            elapsed.as_secs_f64()
        ),
    );
    let tput = |d: Decoder| report.cell(12, SNR_DB, d).unwrap().throughput_kbps;
    let (ts, tp) = (tput(Decoder::Standard), tput(Decoder::Psr));
    let throughput = outcome(
        tp >= 1.2 * ts && tp > 0.0,
        format!(
            "sf12 throughput standard {ts:.4} kb/s, psr {tp:.4} kb/s, ratio {:.2}",
            tp / ts
        ),
    );
    (headline, throughput)
}

fn determinism(table: &mut CalibrationTable) -> Outcome {
    let mut cfg = ExperimentConfig {
        sf_list: vec![7, 8, 9],
        snr_db_list: vec![-12.0, SNR_DB],
        inr_db: SWEEP_INR_DB,
        packets_per_cell: 6,
        payload_len_bytes: 20,
        seed: 99,
        threads: 1,
        ..ExperimentConfig::default()
    };
    prepare_calibration(&cfg, table).unwrap();
    let csv = |cfg: &ExperimentConfig| to_csv_string(&run_experiment(cfg, table).unwrap()).unwrap();
    let serial_a = csv(&cfg);
    let serial_b = csv(&cfg);
    cfg.threads = 4;
    let parallel = csv(&cfg);
    outcome(
        serial_a == serial_b && serial_a == parallel,
        format!(
            "{} byte reports, serial repeat and 4-thread run compared",
            serial_a.len()
        ),
    )
}

fn per_symbol_time(psr: &PsrDemodulator, rx: &[Complex64], reps: usize) -> f64 {
    psr.demod(rx).unwrap();
    let t0 = Instant::now();
    for _ in 0..reps {
        psr.demod(rx).unwrap();
    }
    t0.elapsed().as_secs_f64() / reps as f64
}

fn performance(table: &mut CalibrationTable) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let jammed = |p: &LoraParams, rng: &mut ChaCha8Rng| {
        let n = p.n_chips();
        jam(p, rng, 7, &[(n / 4, n / 2)], 20.0).0
    };

    let p12 = LoraParams::new(12).unwrap();
    let mut cfg = PsrConfig::new(&p12, SNR_DB);
    cfg.fast_path = false;
    let psr = demodulator(table, cfg, p12);
    let default_ms = per_symbol_time(&psr, &jammed(&p12, &mut rng), 10) * 1e3;

    // Same ladder with every hop forced to 1.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut bound = Vec::new();
    for sf in 7..=12u8 {
        let p = LoraParams::new(sf).unwrap();
        let n = p.n_chips() as f64;
        let windows: Vec<StftConfig> = default_windows(&p)
            .into_iter()
            .map(|w| StftConfig { hop: 1, ..w })
            .collect();
        let mut cfg = PsrConfig::new(&p, SNR_DB).with_windows(windows);
        cfg.fast_path = false;
        let psr = demodulator(table, cfg, p);
        let reps = if sf >= 11 { 1 } else { 3 };
        let t = per_symbol_time(&psr, &jammed(&p, &mut rng), reps);
        xs.push(n.ln());
        ys.push(t.ln());
        bound.push((n * n * n.log2()).ln());
    }
    let slope = |ys: &[f64]| {
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    };
    let (measured, expected) = (slope(&ys), slope(&bound));
    outcome(
        default_ms < 100.0 && (measured - expected).abs() <= 0.3,
        format!(
            "sf12 default windows {default_ms:.1} ms/symbol; hop 1 log-log slope {measured:.2} vs {expected:.2} for N^2 log N"
        ),
    )
}

fn report(name: &str, o: Outcome, failed: &mut usize) {
    println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    *failed += !o.pass as usize;
}

fn main() -> ExitCode {
    let mut table = table();
    let mut failed = 0;
    report("1 round-trip exactness", round_trip(), &mut failed);
    report("2 processing gain", processing_gain(), &mut failed);
    report("3 oracle equivalence", oracles(), &mut failed);
    report("4 scale invariance", scale_invariance(&mut table), &mut failed);
    report("5 clean-chip precision", detection_precision(&mut table), &mut failed);
    report("6 clean-fraction trend", clean_fraction_trend(&mut table), &mut failed);
    report("7 window-count trend", window_count_trend(&mut table), &mut failed);
    let (headline, throughput) = headline_and_throughput(&mut table);
    report("8 headline PRR gain", headline, &mut failed);
    report("9 throughput ordering", throughput, &mut failed);
    report("10 determinism", determinism(&mut table), &mut failed);
    report("11 performance contract", performance(&mut table), &mut failed);
    if failed == 0 {
        println!("all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
