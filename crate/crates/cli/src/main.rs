mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qamgame::game::RatePolicy;

use output::Format;

/// Energy-efficient M-QAM and rate selection for delay-constrained CDMA uplinks.
#[derive(Debug, Parser)]
#[command(name = "qamgame", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PhyArgs {
    /// Packet length L in bits.
    #[arg(long, default_value_t = 100)]
    packet_bits: u32,
    /// Add trellis-coded results.
    #[arg(long)]
    coded: bool,
    /// JSON table of coding-gain parameters (defaults to the built-in 8-state table).
    #[arg(long)]
    gain_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimum SIR, success probability and utility factor per constellation.
    Tables {
        #[command(flatten)]
        phy: PhyArgs,
    },
    /// Single-user best response over a range of normalized delays `D B`.
    SweepDelay {
        #[command(flatten)]
        phy: PhyArgs,
        /// Number of delay points.
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long, default_value_t = 17.0)]
        min_delay: f64,
        #[arg(long, default_value_t = 1000.0)]
        max_delay: f64,
        /// Source rate `lambda L / B`.
        #[arg(long, default_value_t = 0.01)]
        load: f64,
        #[arg(long, default_value_t = 10)]
        b_max: u32,
        /// Space the points linearly instead of logarithmically.
        #[arg(long)]
        linear: bool,
    },
    /// Energy factor against spectral efficiency at a fixed symbol rate.
    Tradeoff {
        #[command(flatten)]
        phy: PhyArgs,
        /// Symbol rate as a fraction of the bandwidth.
        #[arg(long, default_value_t = 0.01)]
        symbol_rate: f64,
    },
    /// Nash equilibrium of a scene file.
    Nash {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        gain_file: Option<PathBuf>,
        /// Use the largest admissible symbol rate instead of the smallest.
        #[arg(long)]
        max_rate: bool,
        /// Check the equilibrium against this many random deviations per user.
        #[arg(long)]
        verify: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare a queue simulation with the analytic mean delay.
    ValidateQueue {
        #[arg(long, default_value_t = 2)]
        bits: u32,
        #[arg(long, default_value_t = 100)]
        packet_bits: u32,
        /// Symbol rate in symbols/s.
        #[arg(long, default_value_t = 1e4)]
        symbol_rate: f64,
        #[arg(long, default_value_t = 9.1)]
        sir_db: f64,
        /// Server utilization `lambda E[S]`.
        #[arg(long, default_value_t = 0.5, conflicts_with = "lambda")]
        rho: f64,
        /// Arrival rate in packets/s.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        packets: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-packet CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fit coding-gain parameters to `gamma_db,gain_db` samples.
    FitGain {
        /// CSV file with a `gamma_db,gain_db` header.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        bits: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sink = output::Sink { format: cli.format, out: cli.out };
    let result = match cli.command {
        Command::Tables { phy } => commands::tables(&sink, &phy),
        Command::SweepDelay { phy, points, min_delay, max_delay, load, b_max, linear } => {
            commands::sweep_delay(&sink, &phy, points, (min_delay, max_delay), load, b_max, linear)
        }
        Command::Tradeoff { phy, symbol_rate } => commands::tradeoff(&sink, &phy, symbol_rate),
        Command::Nash { scene, gain_file, max_rate, verify, seed } => {
            let policy = if max_rate { RatePolicy::MaximalRate } else { RatePolicy::ParetoDominant };
            commands::nash(&sink, &scene, gain_file.as_deref(), policy, verify, seed)
        }
        Command::ValidateQueue { bits, packet_bits, symbol_rate, sir_db, rho, lambda, packets, seed, trace } => {
            let q = commands::QueueArgs { bits, packet_bits, symbol_rate, sir_db, rho, lambda, packets, seed };
            commands::validate_queue(&sink, &q, trace.as_deref())
        }
        Command::FitGain { input, bits } => commands::fit_gain(&sink, &input, bits),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
