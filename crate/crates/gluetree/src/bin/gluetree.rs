use clap::{Args, Parser, Subcommand};
use gluetree::cli::{
    cmd_limits, cmd_simulate, cmd_verify, load_config, CliError, CommandKind, Overrides,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gluetree",
    version,
    about = "Batch experiments on the segment-gluing random tree model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow trees over an n-grid and emit height/depth statistics as CSV
    Simulate(Common),
    /// Run the registered cross-validation suite; exit 1 if any check fails
    Verify(Common),
    /// Tabulate limit-law quantities: phi grids, xi samples, leaf moments,
    /// regime classification
    Limits(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count (overrides the config)
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single tree size, replacing any n-grid (overrides the config)
    #[arg(long)]
    n: Option<usize>,
    /// Replica count (overrides the config)
    #[arg(long)]
    replicas: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            n: self.n,
            replicas: self.replicas,
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (kind, common) = match &cli.command {
        Command::Simulate(c) => (CommandKind::Simulate, c),
        Command::Verify(c) => (CommandKind::Verify, c),
        Command::Limits(c) => (CommandKind::Limits, c),
    };
    let config = load_config(&common.config)?.resolve(kind, &common.overrides())?;
    match kind {
        CommandKind::Simulate => {
            let out = cmd_simulate(&config)?;
            println!("wrote {} ({} rows)", out.csv_path.display(), out.rows.len());
            Ok(true)
        }
        CommandKind::Verify => {
            let out = cmd_verify(&config)?;
            for r in &out.report.reports {
                println!(
                    "{} {}  distance={:.6} tolerance={} [{} ms]",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.distance,
                    r.tolerance,
                    r.runtime.as_millis()
                );
            }
            println!(
                "{}: {} checks, report at {}",
                if out.report.all_pass { "OK" } else { "FAILED" },
                out.report.reports.len(),
                out.json_path.display()
            );
            Ok(out.report.all_pass)
        }
        CommandKind::Limits => {
            let out = cmd_limits(&config)?;
            println!(
                "wrote {} {} {} {}",
                out.phi_path.display(),
                out.xi_path.display(),
                out.leaf_path.display(),
                out.regime_path.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
