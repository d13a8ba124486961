use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lora_psr::coding::decode_payload;
use lora_psr::iq::{read_iq, to_c64};
use lora_psr::psr::{
    window_ladder, CalibrationTable, PsrConfig, PsrDemodulator, DEFAULT_MARGIN_DB, DEFAULT_QUANTILE,
    DEFAULT_REALIZATIONS, DEFAULT_WINDOW_COUNT,
};
use lora_psr::{dechirp, demod_fft, gen_downchirp, LoraParams};
use lora_psr_harness::config::{parse_sf_list, KEYS};
use lora_psr_harness::demo::{run_demo, DemoOptions};
use lora_psr_harness::{emit_report, prepare_calibration, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "lora-psr", version, about = "LoRa partial symbol recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write a CSV or JSON report.
    Run(RunArgs),
    /// Build the threshold table used by the recovery decoder.
    Calibrate(CalibrateArgs),
    /// Demodulate every symbol of an IQ file with both decoders.
    Decode(DecodeArgs),
    /// Dump every pipeline stage for one interfered symbol as CSV.
    Demo(DemoArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    sf: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    traffic: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    inr: Option<String>,
    #[arg(long)]
    payload_len: Option<String>,
    #[arg(long)]
    packets: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `standard`, `psr` or `standard,psr`.
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    windows: Option<String>,
    /// Calibration table; created or extended when it lacks entries.
    #[arg(long)]
    calibration: Option<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    threads: Option<String>,
}

impl RunArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 13] {
        let values = [
            &self.sf,
            &self.snr,
            &self.traffic,
            &self.inr,
            &self.payload_len,
            &self.packets,
            &self.seed,
            &self.decoder,
            &self.windows,
            &self.calibration,
            &self.output,
            &self.format,
            &self.threads,
        ];
        let mut out = [("", &self.sf); 13];
        for (slot, (k, v)) in out.iter_mut().zip(KEYS.iter().zip(values)) {
            *slot = (k, v);
        }
        out
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// SF range or list, e.g. `7..12`.
    #[arg(long, default_value = "7..12")]
    sf: String,
    /// Operating SNRs (dB) to precompute clean-signal entries for.
    #[arg(long, allow_hyphen_values = true, default_value = "-10")]
    snr: String,
    #[arg(long, default_value_t = DEFAULT_WINDOW_COUNT)]
    windows: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REALIZATIONS)]
    realizations: usize,
    #[arg(long, short, default_value = "calibration.txt")]
    output: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    file: PathBuf,
    /// Operating SNR assumed by the recovery decoder.
    #[arg(long, allow_hyphen_values = true, default_value_t = -10.0)]
    snr: f64,
    #[arg(long, default_value_t = DEFAULT_WINDOW_COUNT)]
    windows: usize,
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 10)]
    sf: u8,
    #[arg(long, default_value_t = 300)]
    symbol: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
    snr: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 20.0)]
    inr: f64,
    /// First interfered chip.
    #[arg(long, default_value_t = 0)]
    burst_start: usize,
    /// Interfered chips; half the symbol when absent.
    #[arg(long)]
    burst_len: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_COUNT)]
    windows: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, short, default_value = "demo_out")]
    output: PathBuf,
}

fn load_or_new(path: Option<&Path>, seed: u64) -> Result<CalibrationTable> {
    match path {
        Some(p) if p.exists() => Ok(CalibrationTable::load(p)?),
        _ => Ok(CalibrationTable::empty(
            DEFAULT_MARGIN_DB,
            DEFAULT_QUANTILE,
            DEFAULT_REALIZATIONS,
            seed,
        )),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_text(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    for (key, value) in args.flags() {
        if let Some(v) = value {
            cfg.set(key, v).with_context(|| format!("--{key}"))?;
        }
    }
    cfg.validate()?;
    let mut table = load_or_new(cfg.calibration_path.as_deref(), cfg.seed)?;
    let before = table.clone();
    prepare_calibration(&cfg, &mut table)?;
    if let Some(p) = &cfg.calibration_path {
        if table != before {
            table.save(p)?;
        }
    }
    let report = run_experiment(&cfg, &table)?;
    emit_report(&report, cfg.output_path.as_deref(), cfg.format)?;
    if let Some(p) = &cfg.output_path {
        eprintln!("wrote {} rows to {}", report.rows.len(), p.display());
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let sfs = parse_sf_list(&args.sf)?;
    let snrs: Vec<f64> = args
        .snr
        .split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad snr `{s}`")))
        .collect::<Result<_>>()?;
    if args.realizations == 0 {
        bail!("realizations must be at least 1");
    }
    let mut table = CalibrationTable::empty(DEFAULT_MARGIN_DB, DEFAULT_QUANTILE, args.realizations, args.seed);
    for sf in sfs {
        let params = LoraParams::new(sf)?;
        let windows = window_ladder(&params, args.windows);
        for &snr in &snrs {
            table.ensure(&params, snr, &windows)?;
        }
        eprintln!("calibrated sf {sf}");
    }
    table.save(&args.output)?;
    eprintln!("wrote {}", args.output.display());
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<()> {
    let (header, samples) = read_iq(&args.file).with_context(|| format!("cannot decode {}", args.file.display()))?;
    let params = LoraParams::new(header.sf)?;
    let n = params.n_chips();
    if samples.len() % n != 0 {
        bail!(
            "{}: {} samples is not a whole number of sf {} symbols",
            args.file.display(),
            samples.len(),
            header.sf
        );
    }
    let samples = to_c64(&samples);
    let windows = window_ladder(&params, args.windows);
    let mut table = load_or_new(args.calibration.as_deref(), 1)?;
    table.ensure(&params, args.snr, &windows)?;
    let psr = PsrDemodulator::new(params, PsrConfig::new(&params, args.snr).with_windows(windows), &table)?;
    let down = gen_downchirp(&params);

    println!("symbol,standard,peak_to_mean,psr,fast_path,clean_chips,succeeded");
    let mut standard = Vec::new();
    let mut recovered = Vec::new();
    for (k, rx) in samples.chunks(n).enumerate() {
        let (bin, mags) = demod_fft(&dechirp(rx, &down)?);
        let r = psr.demod(rx)?;
        println!(
            "{k},{bin},{:.3},{},{},{},{}",
            mags.peak_to_mean(),
            r.symbol.value(),
            r.fast_path,
            r.clean_count,
            r.succeeded
        );
        standard.push(params.symbol(bin)?);
        recovered.push(r.symbol);
    }
    for (name, symbols) in [("standard", &standard), ("psr", &recovered)] {
        match decode_payload(symbols, &params) {
            Ok(d) => eprintln!(
                "{name}: {} byte payload, crc {}",
                d.payload.len(),
                if d.crc_ok { "ok" } else { "bad" }
            ),
            Err(_) => eprintln!("{name}: {} symbols do not form a packet", symbols.len()),
        }
    }
    Ok(())
}

fn demo(args: DemoArgs) -> Result<()> {
    let params = LoraParams::new(args.sf)?;
    let opts = DemoOptions {
        sf: args.sf,
        symbol: args.symbol,
        snr_db: args.snr,
        inr_db: args.inr,
        burst_start: args.burst_start,
        burst_len: args.burst_len.unwrap_or(params.n_chips() / 2),
        window_count: args.windows,
        seed: args.seed,
        out_dir: args.output,
    };
    let mut table = load_or_new(None, args.seed)?;
    let s = run_demo(&opts, &mut table)?;
    println!("sent {} standard {} psr {}", s.sent, s.standard, s.psr);
    println!("bright line at bin {}", s.line_bin);
    println!(
        "clean chips detected {} of {} truly clean, precision {:.3}",
        s.clean_detected, s.truly_clean, s.precision
    );
    println!("wrote {} files to {}", s.files.len(), opts.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Decode(a) => decode(a),
        Command::Demo(a) => demo(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
