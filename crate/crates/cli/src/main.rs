use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use horizon_cli::config::resolve_output;
use horizon_cli::{emit_plot_data, load_report, run, sweep, CliError, ExperimentConfig, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "horizon-lab", version, about = "Conformal blowup and horizon experiments on the 3-sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one configuration.
    Run { config: PathBuf },
    /// Run the pipeline for Berger spheres over a list of eps values.
    Sweep {
        config: PathBuf,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Turn run reports into plot-ready CSV tables.
    Plot {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Output directory (relative paths honour the output-root variable).
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let report = run(&config)?;
            println!("{}", serde_json::to_string_pretty(&report.horizon)?);
            println!("report written to {}", config.resolved_output_dir().join("report.json").display());
        }
        Command::Sweep { config, eps } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = sweep(&eps, &config)?;
            for row in &outcome.summary.rows {
                println!(
                    "eps {:<6} horizon {:<5} bracket {:?}",
                    row.eps,
                    row.detected.map(|d| d.to_string()).unwrap_or_else(|| "error".into()),
                    row.bracket
                );
            }
            println!("threshold: {}", serde_json::to_string(&outcome.summary.threshold)?);
            println!("sweep written to {}", config.resolved_output_dir().join("sweep.csv").display());
        }
        Command::Plot { reports, out } => {
            let loaded = reports.iter().map(|p| load_report(p)).collect::<Result<Vec<_>, _>>()?;
            for p in emit_plot_data(&loaded, &resolve_output(&out))? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
