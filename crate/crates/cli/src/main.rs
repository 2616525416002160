use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sdm_cli::config::load_config;
use sdm_cli::{cmd_impedance, cmd_inspect, cmd_mesh, cmd_ops_test, cmd_sweep, CliError, Overrides};

#[derive(Parser)]
#[command(name = "sdm", version, about = "Exterior acoustic radiation with a reusable cloning impedance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Impedance cache directory, overrides `paths.cache`.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Output file, overrides `paths.output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 gives reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated scaling ratios. `ops-test` uses the whole list, the
    /// other commands take a single value as `cloning.g`.
    #[arg(long, global = true, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and cache the bounding-loop impedance at every frequency.
    Impedance,
    /// Probe pressures over the frequency list, written as CSV.
    Sweep,
    /// One point source error for each gamma, written as JSON.
    OpsTest,
    /// Write the region mesh.
    Mesh,
    /// Print the cache manifest.
    Inspect,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let Some(path) = &cli.config else {
        return Err(CliError::Config("--config PATH is required".into()));
    };
    let overrides = Overrides { cache: cli.cache, out: cli.out, threads: cli.threads, gamma: cli.gamma };
    if matches!(&overrides.gamma, Some(g) if g.len() > 1) && !matches!(cli.command, Command::OpsTest) {
        return Err(CliError::Config("--gamma: only ops-test accepts a list".into()));
    }
    let mut cfg = load_config(path)?;
    overrides.apply(&mut cfg)?;
    let threads = overrides.threads();
    if threads == 0 {
        return Err(CliError::Config("--threads: must be at least 1".into()));
    }
    let mut err = std::io::stderr().lock();
    match cli.command {
        Command::Impedance => cmd_impedance(&cfg, threads, &mut err).map(drop),
        Command::Sweep => {
            let out = cmd_sweep(&cfg, threads, &mut err)?;
            if cfg.paths.output.is_none() {
                std::io::stdout().write_all(out.csv.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            }
            if out.failures.len() == cfg.frequency_list().len() {
                return Err(CliError::Numerical("every frequency failed".into()));
            }
            if !out.failures.is_empty() {
                let n = out.failures.len();
                return Err(CliError::Partial(format!("{n} frequencies failed")));
            }
            Ok(())
        }
        Command::OpsTest => {
            let report = cmd_ops_test(&cfg, threads, &mut err)?;
            if cfg.paths.output.is_none() {
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            }
            report.status()
        }
        Command::Mesh => cmd_mesh(&cfg, &mut err).map(drop),
        Command::Inspect => {
            print!("{}", cmd_inspect(&cfg)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    faer::set_global_parallelism(faer::Par::Seq);
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
