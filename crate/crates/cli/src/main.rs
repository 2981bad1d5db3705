use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fkpp_cli::config::{parse_config, TaskKind};
use fkpp_cli::error::RunError;
use fkpp_cli::run::{self, RunOptions, ERROR_FILE, OUTPUT_ROOT_VAR};

#[derive(Debug, Parser)]
#[command(name = "fkpp", version, about = "Periodic Fisher-KPP free boundary computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_name = "PATH", default_value = "fkpp.toml")]
    config: PathBuf,
    /// Output directory; overrides `output.dir` and $FKPP_OUTPUT_ROOT.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Reject any option whose result depends on scheduling or the clock.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Principal eigenvalues lambda_1(l) and the critical length.
    Eigen,
    /// A periodic profile and its boundary flux.
    Semiwave,
    /// Front speeds, the critical average advection and the regime.
    Critical,
    /// Simulate the free boundary problem.
    Simulate,
    /// Simulate and classify the long-time outcome.
    Classify,
    /// Bisect for the sharp threshold in sigma.
    Threshold,
    /// Run a task over a Cartesian parameter grid.
    Sweep,
    /// Check the config and the standing hypotheses without running anything.
    Validate {
        /// Task to assume when the config has no [task] table.
        #[arg(long, value_enum)]
        task: Option<TaskKind>,
    },
}

impl Command {
    fn kind(&self) -> Option<TaskKind> {
        Some(match self {
            Command::Eigen => TaskKind::Eigen,
            Command::Semiwave => TaskKind::Semiwave,
            Command::Critical => TaskKind::Critical,
            Command::Simulate => TaskKind::Simulate,
            Command::Classify => TaskKind::Classify,
            Command::Threshold => TaskKind::Threshold,
            Command::Sweep => TaskKind::Sweep,
            Command::Validate { task } => return *task,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out: cli.out.clone(),
        workers: cli.workers,
        seedless: cli.seedless,
        output_root: std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from),
    };
    match dispatch(&cli, &opts) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = e.record();
            let line = serde_json::to_string(&record).expect("json");
            eprintln!("{line}");
            // Config errors happen before a run directory exists; leave a record anyway.
            if matches!(e, RunError::Config(_)) {
                if let Some(dir) = &cli.out {
                    if std::fs::create_dir_all(dir).is_ok() {
                        let _ = std::fs::write(dir.join(ERROR_FILE), line + "\n");
                    }
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli, opts: &RunOptions) -> Result<serde_json::Value, RunError> {
    let text = std::fs::read_to_string(&cli.config)?;
    let cfg = parse_config(&text, cli.command.kind())?;
    match cli.command {
        Command::Validate { .. } => {
            opts.check(&cfg)?;
            run::validate(&cfg)
        }
        _ => run::execute(&cfg, opts),
    }
}
