//! Command-line front end: scenario runners plus the ambient-noise wind
//! estimator. Exit codes: 0 success, 2 configuration/validation error,
//! 3 numeric failure.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::path::PathBuf;
use std::process::ExitCode;
use uwreplay_core::environment::{average_ssl, wotan_u10, WotanParams};
use uwreplay_core::harness::{
    self, load_config, preset, preset_names, HarnessError, ScenarioConfig,
};
use uwreplay_core::modem::build_qam;

#[derive(Parser)]
#[command(
    name = "uwreplay",
    about = "Post-experimental reuse of recorded acoustic-link data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// JSON scenario config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled scenario preset.
    #[arg(long)]
    preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// BER vs SNR for reference and dither-reproduced arms (CSV).
    BerSweep(ScenarioArgs),
    /// Closed-form and empirical MSD/KL table (JSON).
    Divergence(ScenarioArgs),
    /// Adaptive-equalizer learning curves (CSV).
    Learn(ScenarioArgs),
    /// Channel playback with and without the RPE term (CSV).
    Playback(ScenarioArgs),
    /// Equalized-output scatter data, or raw constellation points with --k.
    Constellation {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dump the bare constellation of this order exponent instead.
        #[arg(long)]
        k: Option<u32>,
        /// Maximum scatter points per arm.
        #[arg(long, default_value_t = 2000)]
        points: usize,
    },
    /// Wind speed from an ambient-noise recording.
    Wotan {
        /// CSV of noise samples: `re` or `re,im` per line.
        #[arg(long = "in")]
        input: PathBuf,
        /// Sample rate in Hz.
        #[arg(long)]
        fs: f64,
        /// Analysis frequency in kHz.
        #[arg(long)]
        freq: f64,
        /// Attenuation allowance in dB.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Calibration offset in dB.
        #[arg(long, default_value_t = 0.0)]
        cal: f64,
        /// Averaging window in seconds (whole recording when omitted).
        #[arg(long)]
        window: Option<f64>,
        /// Welch segment length in samples.
        #[arg(long, default_value_t = 512)]
        segment: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_config(args: &ScenarioArgs) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            load_config(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(HarnessError::Config(format!(
                "need --config or --preset (presets: {})",
                preset_names().join(", ")
            )))
        }
        _ => unreachable!("clap enforces exclusivity"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_noise_csv(path: &PathBuf) -> Result<Vec<Complex64>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if ln == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| -> Result<f64, HarnessError> {
            s.parse()
                .map_err(|_| HarnessError::Config(format!("line {}: bad value '{s}'", ln + 1)))
        };
        match fields.as_slice() {
            [re] => samples.push(Complex64::new(parse(re)?, 0.0)),
            [re, im] => samples.push(Complex64::new(parse(re)?, parse(im)?)),
            _ => {
                return Err(HarnessError::Config(format!(
                    "line {}: expected 1 or 2 fields",
                    ln + 1
                )))
            }
        }
    }
    if samples.is_empty() {
        return Err(HarnessError::Config("no samples in input".into()));
    }
    Ok(samples)
}

fn run() -> Result<(), HarnessError> {
    let cli = Cli::parse();
    match cli.command {
        Command::BerSweep(args) => {
            let cfg = resolve_config(&args)?;
            let report = harness::run_ber_sweep(&cfg)?;
            emit(&args.out, &report.to_csv())
        }
        Command::Divergence(args) => {
            let cfg = resolve_config(&args)?;
            let report = harness::run_divergence_table(&cfg)?;
            emit(&args.out, &report.to_json())
        }
        Command::Learn(args) => {
            let cfg = resolve_config(&args)?;
            let csv = harness::run_learning_curves(&cfg)?;
            emit(&args.out, &csv)
        }
        Command::Playback(args) => {
            let cfg = resolve_config(&args)?;
            let csv = harness::run_playback_demo(&cfg)?;
            emit(&args.out, &csv)
        }
        Command::Constellation {
            scenario,
            k,
            points,
        } => {
            if let Some(k) = k {
                let c =
                    build_qam(k).map_err(|e| HarnessError::Config(e.to_string()))?;
                let mut out = String::from("n,re,im,label\n");
                for (label, p) in c.points().iter().enumerate() {
                    out.push_str(&format!("{label},{},{},{label:0k$b}\n", p.re, p.im, k = k as usize));
                }
                emit(&scenario.out, &out)
            } else {
                let cfg = resolve_config(&scenario)?;
                let csv = harness::run_constellation_scatter(&cfg, points)?;
                emit(&scenario.out, &csv)
            }
        }
        Command::Wotan {
            input,
            fs,
            freq,
            beta,
            cal,
            window,
            segment,
            out,
        } => {
            let samples = read_noise_csv(&input)?;
            let window_s = window.unwrap_or(samples.len() as f64 / fs);
            let obs = average_ssl(&samples, fs, freq, window_s, cal, segment)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let params = WotanParams {
                beta_db: beta,
                ..WotanParams::default()
            };
            let est =
                wotan_u10(&obs, &params).map_err(|e| HarnessError::Config(e.to_string()))?;
            let json = serde_json::json!({
                "ssl": est.ssl_db,
                "ssl0": est.ssl0_db,
                "p0": est.p0,
                "u10": est.u10_ms,
                "valid": est.valid,
                "freq_khz": obs.freq_khz,
                "averaging_s": obs.averaging_duration_s,
            });
            emit(&out, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
