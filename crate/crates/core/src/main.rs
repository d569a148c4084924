use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mwfi_core::harness::{run, Mode, RunConfig};

#[derive(Parser)]
#[command(
    name = "mwfi",
    version,
    about = "Microwave frequency identification receiver simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the delay lookup and tabulate the discriminator lookup.
    Calibrate(Common),
    /// Estimate static tone frequencies and their errors.
    Measure(Common),
    /// Scan the scenario and label the signal type.
    Classify(Common),
    /// Reconstruct the instantaneous frequency track.
    Dynamic(Common),
    /// Repeat `sweep.mode` over consecutive seeds.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Calibrate(a) => (Mode::Calibrate, a),
        Command::Measure(a) => (Mode::Measure, a),
        Command::Classify(a) => (Mode::Classify, a),
        Command::Dynamic(a) => (Mode::Dynamic, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    let result = RunConfig::load(&args.config).and_then(|mut config| {
        if let Some(seed) = args.seed {
            config = config.with_seed(seed);
        }
        run(&config, mode, &args.out)
    });
    match result {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mwfi: {e}");
            ExitCode::FAILURE
        }
    }
}
