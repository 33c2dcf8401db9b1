use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frontier_sim::config::{Command, Target};
use frontier_sim::{dispatch, parse_config};

#[derive(Parser, Debug)]
#[command(name = "frontier-sim", version, about = "Free-boundary invasion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `paths.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Integrate one run and record its time series.
    Simulate,
    /// Principal eigenvalue and R0 on balls.
    Eigen,
    /// Critical diffusion D* or critical radius h*.
    Threshold {
        #[arg(long, value_enum)]
        target: Option<Target>,
    },
    /// Semi-wave spreading speed k0.
    Speed,
    /// Sharp initial amplitude delta0.
    Dichotomy,
    /// Verdicts over a parameter sweep.
    Sweep,
    /// Stationary solution on a ball or the whole space.
    Steady,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::Simulate => Command::Simulate,
            Sub::Eigen => Command::Eigen,
            Sub::Threshold { .. } => Command::Threshold,
            Sub::Speed => Command::Speed,
            Sub::Dichotomy => Command::Dichotomy,
            Sub::Sweep => Command::Sweep,
            Sub::Steady => Command::Steady,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter_or("FRONTIER_SIM_LOG", "warn")
            .write_style("FRONTIER_SIM_LOG_STYLE"),
    )
    .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("frontier-sim: {}", e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<i32, frontier_sim::CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| frontier_sim::CliError::Validation("--config <path> is required".into()))?;
    let mut cfg = parse_config(path)?;
    let wanted = cli.command.command();
    if cfg.command != wanted {
        // the subcommand decides; resolve again so its defaults are filled
        cfg.command = wanted;
        cfg = cfg.resolve()?;
    }
    if let Sub::Threshold { target: Some(t) } = cli.command {
        cfg.threshold.target = Some(t);
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = Some(out.clone());
    }
    Ok(dispatch(&cfg, cli.jobs)?.exit_code())
}
