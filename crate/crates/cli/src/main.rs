use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scanline39::channel::ChannelPreset;
use scanline39::decode::Correction;
use scanline39::{CardCode, ScanConfig};

mod commands;

/// Code 39 card scanner model: encode cards, simulate scans over noisy
/// links, decode and authenticate.
#[derive(Debug, Parser)]
#[command(name = "scanline39", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the 36 wide/narrow flags of a card and an ASCII rendering.
    Encode {
        #[arg(value_parser = parse_code)]
        code: CardCode,
    },
    /// Print the raw '0'/'5' scanner stream of a card.
    Scan {
        #[arg(value_parser = parse_code)]
        code: CardCode,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        link: LinkArgs,
    },
    /// Decode a '0'/'5' stream read from FILE or standard input.
    Decode {
        file: Option<std::path::PathBuf>,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Print the single-line record instead of the full report.
        #[arg(long)]
        record: bool,
    },
    /// Encode, scan, transmit, decode and authenticate one card.
    Pipeline {
        #[arg(value_parser = parse_code)]
        code: CardCode,
        /// User database (`CODE,NAME` lines).
        #[arg(long)]
        db: std::path::PathBuf,
        /// Audit log to append to.
        #[arg(long)]
        log: Option<std::path::PathBuf>,
        /// Log accepted cards only.
        #[arg(long)]
        success_only_log: bool,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        link: LinkArgs,
        #[command(flatten)]
        decode: DecodeArgs,
    },
    /// Monte Carlo sweep over error rates and correction modes, as CSV.
    Experiment(ExperimentArgs),
    /// Drive the scanner's password gate stored in a state file.
    Gate(GateArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Samples per narrow element.
    #[arg(long, default_value_t = ScanConfig::DEFAULT_NARROW_UNITS)]
    narrow_units: u32,
    /// Wide/narrow width ratio.
    #[arg(long, default_value_t = ScanConfig::DEFAULT_WIDE_RATIO)]
    wide_ratio: f64,
    /// White margin in samples [default: 3 x narrow units].
    #[arg(long)]
    quiet_zone: Option<u32>,
    /// Per-element width jitter as a fraction.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
}

impl ScanArgs {
    fn config(&self, seed: u64) -> anyhow::Result<ScanConfig> {
        Ok(ScanConfig::new(
            self.narrow_units,
            self.wide_ratio,
            self.quiet_zone.unwrap_or(3 * self.narrow_units),
            self.jitter,
            seed,
        )?)
    }
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[arg(long, default_value = "none", value_parser = parse_channel)]
    channel: ChannelPreset,
    /// Overrides the channel preset's flip probability.
    #[arg(long, value_parser = parse_probability)]
    flip_prob: Option<f64>,
    /// Flip events cover one or two symbols.
    #[arg(long)]
    burst: bool,
    #[arg(long, env = "SCANLINE39_SEED", default_value_t = 0)]
    seed: u64,
}

impl LinkArgs {
    fn flip_prob(&self) -> f64 {
        self.flip_prob.unwrap_or(self.channel.flip_prob())
    }
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long, default_value = "on", value_parser = parse_correction)]
    correction: Correction,
    /// Reject cards with tied digit matches (default).
    #[arg(long, overrides_with = "lenient")]
    strict: bool,
    /// Accept the smallest tied digit instead of rejecting.
    #[arg(long)]
    lenient: bool,
}

impl DecodeArgs {
    fn options(&self) -> scanline39::decode::DecodeOptions {
        scanline39::decode::DecodeOptions {
            correction: self.correction,
            strict: !self.lenient,
        }
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Flip probabilities, comma separated [default: 0,0.005,0.02,0.05].
    #[arg(long, value_delimiter = ',', value_parser = parse_probability)]
    flip_prob: Vec<f64>,
    /// Channel presets to sweep when no --flip-prob is given.
    #[arg(long, value_delimiter = ',', value_parser = parse_channel)]
    channel: Vec<ChannelPreset>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    /// Correction modes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "on,off", value_parser = parse_correction)]
    correction: Vec<Correction>,
    #[arg(long, env = "SCANLINE39_SEED", default_value_t = 0)]
    seed: u64,
    /// Use this card for every trial instead of sampling.
    #[arg(long, value_parser = parse_code)]
    code: Option<CardCode>,
    /// Pretty-print instead of CSV.
    #[arg(long)]
    table: bool,
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    burst: bool,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    scan: ScanArgs,
}

#[derive(Debug, Args)]
struct GateArgs {
    /// Gate state file; created on first use.
    #[arg(long)]
    state: std::path::PathBuf,
    #[arg(long, env = "SCANLINE39_PASSWORD", hide_env_values = true)]
    device_password: String,
    #[arg(long, env = "SCANLINE39_FACTORY_CODE", hide_env_values = true)]
    factory_code: String,
    #[command(subcommand)]
    action: GateAction,
}

#[derive(Debug, Subcommand)]
enum GateAction {
    /// Enter the device password.
    Attempt { password: String },
    /// Re-enable the device with the factory code.
    Reset { code: String },
    /// Show the gate state.
    Status,
}

fn parse_code(s: &str) -> Result<CardCode, String> {
    s.parse().map_err(|e: scanline39::Error| e.to_string())
}

fn parse_channel(s: &str) -> Result<ChannelPreset, String> {
    s.parse()
}

fn parse_correction(s: &str) -> Result<Correction, String> {
    s.parse()
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside [0, 1]"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
