use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csisniff_cli::checks::{run_all, Scale};
use csisniff_cli::commands::{cmd_eval, cmd_merge, cmd_rx, cmd_synth, cmd_train, Common};
use csisniff_cli::config::RunConfig;
use csisniff_cli::{CliError, CliResult};
use csisniff_core::estimate::Flavor;
use csisniff_core::MacAddr;

/// Passive 802.11a CSI sniffer pipeline.
#[derive(Parser, Debug)]
#[command(name = "csisniff", version, about)]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed overriding the scenario and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a scenario into captures (or a synthetic combined dataset).
    Synth {
        scenario: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Detect, decode and extract CSI from captures into one dataset.
    Rx {
        #[arg(long = "capture", required = true)]
        captures: Vec<PathBuf>,
        /// Sniffer id per capture, in order (default 0, 1, ...).
        #[arg(long = "sniffer-id")]
        sniffer_ids: Vec<u32>,
        /// CSI flavors to store (default from the configuration).
        #[arg(long = "flavor")]
        flavors: Vec<Flavor>,
        /// Keep only these transmitters.
        #[arg(long = "allow")]
        allow: Vec<MacAddr>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Group per-sniffer datapoints of the same transmission.
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        window_s: Option<f64>,
        #[arg(long)]
        flavor: Option<Flavor>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train the positioning network on a combined dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        positions: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint; writes {mean_m, p95_m, n_test}.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        positions: PathBuf,
        /// Training positions for the geometric-median baseline.
        #[arg(long)]
        baseline_positions: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run the quick subset of the acceptance checks.
    Selftest,
}

fn run(cli: Cli) -> CliResult<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let common = Common { config, config_path: cli.config.clone(), seed: cli.seed };
    let report = |m: csisniff_cli::manifest::RunManifest| {
        println!("{}", serde_json::to_string(&serde_json::json!({"command": m.command, "counters": m.counters, "details": m.details, "elapsed_s": m.elapsed_s})).unwrap_or_default());
    };
    match cli.command {
        Command::Synth { scenario, out } => report(cmd_synth(&common, &scenario, &out)?),
        Command::Rx { captures, sniffer_ids, flavors, allow, out } => {
            let flavors = (!flavors.is_empty()).then_some(flavors);
            let allow = (!allow.is_empty()).then_some(allow);
            report(cmd_rx(&common, &captures, &sniffer_ids, flavors, allow, &out)?)
        }
        Command::Merge { inputs, window_s, flavor, out } => report(cmd_merge(&common, &inputs, window_s, flavor, &out)?),
        Command::Train { dataset, positions, epochs, out } => report(cmd_train(&common, &dataset, &positions, epochs, &out)?),
        Command::Eval { model, dataset, positions, baseline_positions, out } => {
            report(cmd_eval(&common, &model, &dataset, &positions, baseline_positions.as_deref().map(Path::new), &out)?)
        }
        Command::Selftest => {
            let results = run_all(&Scale::quick(), |r| println!("{r}"));
            let failed = results.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csisniff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
