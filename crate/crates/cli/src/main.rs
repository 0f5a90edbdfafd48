mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_directions, ExperimentConfig, SignalSpec, StepSpec};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "phaseline",
    version,
    about = "Sparse phase retrieval from Fourier intensities sampled along lines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance (random or preset) and, with fixed lines and M, its samples.
    Synth(Common),
    /// Recover a signal from its samples.
    Solve(Common),
    /// Compare a solution with the ground truth up to the trivial ambiguities.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export CSV tables for figures.
    Plotdata {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Run report of a solve; supplies the sampled lines, step and M.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 128)]
        grid: usize,
    },
    /// Solve, then cross-check against the brute-force oracles.
    Oracle(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    preset: Option<String>,
    /// Signal JSON file.
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Sample file written by `synth`.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use three fixed planar directions (bivariate only).
    #[arg(long)]
    generic: bool,
    /// `adaptive`, `axes`, angles in units of π (`0.143`) or vectors (`0.6:0.8,1:0`).
    #[arg(long)]
    directions: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Largest sample index per line.
    #[arg(long)]
    m: Option<usize>,
    /// Sampling step, or `auto`.
    #[arg(long)]
    step: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(name) = &self.preset {
            config.apply_preset(name)?;
        }
        if let Some(path) = &self.signal {
            config.signal = Some(SignalSpec::Path(path.clone()));
        }
        if let Some(path) = &self.samples {
            config.samples = Some(path.clone());
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        if self.generic {
            config.generic = true;
        }
        if let Some(d) = &self.directions {
            config.directions = parse_directions(d)?;
        }
        if let Some(t) = self.threads {
            config.threads = t;
        }
        if let Some(m) = self.m {
            config.m = Some(m);
        }
        if let Some(step) = &self.step {
            config.step = match step.as_str() {
                "auto" => StepSpec::Auto,
                s => StepSpec::Value(
                    s.parse()
                        .map_err(|_| CliError::Validation(format!("cannot parse step {s:?}")))?,
                ),
            };
        }
        Ok(config)
    }
}

fn run(command: &Command) -> Result<serde_json::Value, CliError> {
    match command {
        Command::Synth(c) => commands::cmd_synth(&c.resolve()?),
        Command::Solve(c) => commands::cmd_solve(&c.resolve()?),
        Command::Eval {
            truth,
            solution,
            out,
        } => {
            let report = commands::cmd_eval(truth, solution, out.as_deref())?;
            eprintln!("T_err = {:e}", report["t_err"].as_f64().unwrap_or(f64::NAN));
            eprintln!("C_err = {:e}", report["c_err"].as_f64().unwrap_or(f64::NAN));
            Ok(report)
        }
        Command::Plotdata {
            common,
            solution,
            report,
            grid,
        } => commands::cmd_plotdata(
            &common.resolve()?,
            solution.as_deref(),
            report.as_deref(),
            *grid,
        ),
        Command::Oracle(c) => commands::cmd_oracle(&c.resolve()?),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Synth(_) => "cmd_synth",
        Command::Solve(_) => "cmd_solve",
        Command::Eval { .. } => "cmd_eval",
        Command::Plotdata { .. } => "cmd_plotdata",
        Command::Oracle(_) => "cmd_oracle",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            let payload = err.to_json(command_name(&cli.command));
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&payload).expect("error serializes")
            );
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
