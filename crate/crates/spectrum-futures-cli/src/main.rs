//! Command-line runner: load and validate a market configuration, run one
//! forward-contract negotiation or a named experiment sweep, and write CSV
//! plus human-readable summaries into an output directory.
//!
//! Exit codes: 0 success, 2 usage error (from argument parsing), 3
//! configuration error, 4 infeasible negotiation, 5 I/O error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectrum_futures::csvfmt::fmt_sig;
use spectrum_futures::*;

const EXIT_CONFIG: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "spectrum-futures",
    version,
    about = "Forward-contract spectrum trading simulator",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Negotiate one forward contract and write the contract summary and
    /// the per-iteration trace CSV.
    Negotiate(NegotiateArgs),
    /// Run a named experiment sweep and write its CSV and summary.
    Experiment(ExperimentArgs),
    /// Validate a configuration file and print per-field verdicts.
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct NegotiateArgs {
    /// Path to the market configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Path to the market configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Experiment to run: failure_curve, profit_comparison, price_series,
    /// or fairness_curve.
    #[arg(long)]
    experiment: String,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the episode count per sweep point.
    #[arg(long)]
    episodes: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Path to the market configuration JSON.
    #[arg(long)]
    config: PathBuf,
}

/// Everything a run needs, resolved from the command line.
struct RunManifest {
    command: ManifestCommand,
    config_path: PathBuf,
    seed: Option<u64>,
    episodes: Option<u64>,
    out_dir: Option<PathBuf>,
}

enum ManifestCommand {
    Negotiate,
    Experiment(ExperimentId),
    ValidateConfig,
}

type CliResult<T> = std::result::Result<T, CliError>;

enum CliError {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) => CliError::Config(e.to_string()),
            Error::Io(_) => CliError::Io(e.to_string()),
            Error::Domain(_) | Error::InfeasiblePrice { .. } => {
                CliError::Config(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let manifest = match cli.command {
        CliCommand::Negotiate(args) => RunManifest {
            command: ManifestCommand::Negotiate,
            config_path: args.config,
            seed: args.seed,
            episodes: None,
            out_dir: Some(args.out),
        },
        CliCommand::Experiment(args) => {
            let Some(id) = ExperimentId::parse(&args.experiment) else {
                eprintln!(
                    "error: unknown experiment '{}'; expected one of: {}",
                    args.experiment,
                    ExperimentId::ALL
                        .iter()
                        .map(|e| e.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                return ExitCode::from(EXIT_CONFIG);
            };
            RunManifest {
                command: ManifestCommand::Experiment(id),
                config_path: args.config,
                seed: args.seed,
                episodes: args.episodes,
                out_dir: Some(args.out),
            }
        }
        CliCommand::ValidateConfig(args) => RunManifest {
            command: ManifestCommand::ValidateConfig,
            config_path: args.config,
            seed: None,
            episodes: None,
            out_dir: None,
        },
    };

    match run(&manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error (config): {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Infeasible(msg)) => {
            eprintln!("error (infeasible): {msg}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error (io): {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn run(manifest: &RunManifest) -> CliResult<()> {
    match &manifest.command {
        ManifestCommand::ValidateConfig => validate_config(&manifest.config_path),
        ManifestCommand::Negotiate => {
            let config = load_config(manifest)?;
            let out = prepare_out_dir(manifest)?;
            echo_config(&config, &out)?;
            run_negotiate(&config, &out)
        }
        ManifestCommand::Experiment(id) => {
            let config = load_config(manifest)?;
            let out = prepare_out_dir(manifest)?;
            echo_config(&config, &out)?;
            run_experiment(*id, &config, manifest.episodes, &out)
        }
    }
}

fn load_config(manifest: &RunManifest) -> CliResult<MarketConfig> {
    let mut config = MarketConfig::from_path(&manifest.config_path).map_err(|e| match e {
        Error::Io(io) => CliError::Io(format!(
            "cannot read {}: {io}",
            manifest.config_path.display()
        )),
        other => CliError::Config(other.to_string()),
    })?;
    if let Some(seed) = manifest.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn prepare_out_dir(manifest: &RunManifest) -> CliResult<PathBuf> {
    let out = manifest
        .out_dir
        .clone()
        .expect("output directory required for this command");
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// The effective configuration (after flag overrides), echoed for
/// provenance.
fn echo_config(config: &MarketConfig, out: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(config)
        .expect("market config always serializes");
    write_file(&out.join("effective_config.json"), &(text + "\n"))
}

fn validate_config(path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let config: MarketConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("parse failure: {e}")))?;
    match config.validate() {
        Ok(()) => {
            println!("config valid: all field invariants hold");
            Ok(())
        }
        Err(violations) => {
            for v in &violations {
                println!("invalid {}: {}", v.field, v.message);
            }
            Err(CliError::Config(format!(
                "{} field violation(s)",
                violations.len()
            )))
        }
    }
}

fn run_negotiate(config: &MarketConfig, out: &Path) -> CliResult<()> {
    let trace = negotiate(config)?;
    write_file(&out.join("negotiation_trace.csv"), &trace.to_csv())?;

    match &trace.outcome {
        Some(contract) => {
            let summary = contract_summary(config, contract, &trace);
            write_file(&out.join("contract.txt"), &summary)?;
            print!("{summary}");
            Ok(())
        }
        None => Err(CliError::Infeasible(format!(
            "no feasible contract: termination {}, {} price rounds (trace written to {})",
            trace.termination.as_str(),
            trace.iterations.len(),
            out.join("negotiation_trace.csv").display()
        ))),
    }
}

fn contract_summary(
    config: &MarketConfig,
    contract: &ForwardContract,
    trace: &NegotiationTrace,
) -> String {
    let expected_owner = owner_expected_utility(
        &config.owner,
        &config.environment,
        contract.price,
        contract.amount,
    )
    .expect("contract terms are in range");
    let expected_requester = requester_expected_utility(
        &config.requester,
        &config.environment,
        contract.price,
        contract.amount,
    )
    .expect("contract terms are in range");
    format!(
        "forward contract\n\
         price: {} per MHz\n\
         amount: {} MHz\n\
         owner risk (analytic): {} (tolerance {})\n\
         requester risk (analytic): {} (tolerance {})\n\
         owner expected utility: {}\n\
         requester expected utility: {}\n\
         price rounds examined: {}\n\
         termination: {}\n",
        fmt_sig(contract.price),
        fmt_sig(contract.amount),
        fmt_sig(contract.owner_risk.value),
        fmt_sig(config.owner.t_b),
        fmt_sig(contract.requester_risk.value),
        fmt_sig(config.requester.t_d),
        fmt_sig(expected_owner),
        fmt_sig(expected_requester),
        trace.iterations.len(),
        trace.termination.as_str(),
    )
}

fn run_experiment(
    id: ExperimentId,
    config: &MarketConfig,
    episodes: Option<u64>,
    out: &Path,
) -> CliResult<()> {
    let onsite = OnsiteParams::default();
    let result = match id {
        ExperimentId::FailureCurve => run_failure_curve(
            config,
            &onsite,
            &experiments::default_lambda_sweep(),
            episodes.unwrap_or(experiments::DEFAULT_EPISODES),
        )?,
        ExperimentId::ProfitComparison => run_profit_comparison(
            config,
            &onsite,
            &experiments::default_lambda_sweep(),
            episodes.unwrap_or(experiments::DEFAULT_EPISODES),
        )?,
        ExperimentId::PriceSeries => run_price_series(
            config,
            &onsite,
            episodes.unwrap_or(experiments::DEFAULT_PRICE_SERIES_EPISODES),
        )?,
        ExperimentId::FairnessCurve => run_fairness_curve(
            config,
            &onsite,
            &experiments::default_requester_sweep(),
            episodes.unwrap_or(experiments::DEFAULT_EPISODES),
        )?,
    };

    write_file(&out.join(format!("{}.csv", id.as_str())), &result.to_csv())?;
    let summary = result.summary();
    write_file(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
