use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_irb_cli::config::ProtocolKind;
use hybrid_irb_cli::{load_config, run, run_and_write, CliError, Overrides};

#[derive(Parser)]
#[command(name = "hybrid-irb", version, about = "Randomized benchmarking experiments for arbitrary gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol selected in the config.
    Run(Common),
    /// Print the hybrid vs direct Monte Carlo resource comparison.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exact sequence fidelities, no sampling or shot noise.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, args) = match cli.command {
        Command::Run(a) => (false, a),
        Command::Report(a) => (true, a),
    };
    match real_main(report, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(report: bool, args: Common) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config {
                field: "--threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config {
                field: "--threads".into(),
                reason: e.to_string(),
            })?;
    }
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
        exact: args.exact,
    };
    let cfg = load_config(&args.config, &overrides)?;
    if report && cfg.protocol != ProtocolKind::ResourceReport {
        return Err(CliError::Config {
            field: "protocol".into(),
            reason: "`report` needs protocol = \"resource-report\"".into(),
        });
    }
    let result = run_and_write(&cfg)?;
    print!("{}", run::summary(&result));
    Ok(())
}
