//! Experiment runner: each subcommand reads one flat key=value config,
//! writes its artifacts plus a manifest into the output directory, and
//! prints a short summary.
//!
//! Exit codes: 0 on success, 1 for invocation problems (unknown
//! subcommand, unreadable or invalid config, unusable output directory),
//! 2 for failures while the experiment is running. Every failure prints a
//! single line on stderr of the form `error: <class>: <message>`.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use artifacts::{resolve_out_dir, write_manifest};
use commands::approx::{ApproxUnfold, ApproxWaterfill};
use commands::detect::{DetectEval, DetectTrain, Regions};
use commands::invert::{Bussgang, Invert};
use config::Config;
use error::CliResult;

#[derive(Parser)]
#[command(name = "siglearn", version, about = "Signal-processing experiments on from-scratch neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config: flat key=value lines, # comments.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's out_dir field.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a QPSK symbol detector on noisy samples.
    DetectTrain(RunArgs),
    /// Estimate symbol error rates of a trained detector against
    /// minimum-distance detection.
    DetectEval(RunArgs),
    /// Rasterize decision regions of a trained detector and the
    /// minimum-distance reference.
    Regions(RunArgs),
    /// Train a surrogate network for water-filling power allocation and
    /// benchmark it against the solver.
    ApproxWaterfill(RunArgs),
    /// Train an unfolded projected-gradient BPSK detector.
    ApproxUnfold(RunArgs),
    /// Train a network inverse of a memoryless nonlinearity and compare
    /// it with the Bussgang equalizer.
    Invert(RunArgs),
    /// Estimate the Bussgang decomposition of a nonlinearity.
    Bussgang(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DetectTrain(_) => "detect-train",
            Command::DetectEval(_) => "detect-eval",
            Command::Regions(_) => "regions",
            Command::ApproxWaterfill(_) => "approx-waterfill",
            Command::ApproxUnfold(_) => "approx-unfold",
            Command::Invert(_) => "invert",
            Command::Bussgang(_) => "bussgang",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::DetectTrain(a)
            | Command::DetectEval(a)
            | Command::Regions(a)
            | Command::ApproxWaterfill(a)
            | Command::ApproxUnfold(a)
            | Command::Invert(a)
            | Command::Bussgang(a) => a,
        }
    }
}

/// Parsed-and-validated experiment, ready to run.
enum Experiment {
    DetectTrain(DetectTrain),
    DetectEval(DetectEval),
    Regions(Regions),
    ApproxWaterfill(ApproxWaterfill),
    ApproxUnfold(ApproxUnfold),
    Invert(Invert),
    Bussgang(Bussgang),
}

impl Experiment {
    fn parse(command: &Command, cfg: &mut Config) -> CliResult<Self> {
        Ok(match command {
            Command::DetectTrain(_) => Experiment::DetectTrain(DetectTrain::parse(cfg)?),
            Command::DetectEval(_) => Experiment::DetectEval(DetectEval::parse(cfg)?),
            Command::Regions(_) => Experiment::Regions(Regions::parse(cfg)?),
            Command::ApproxWaterfill(_) => {
                Experiment::ApproxWaterfill(ApproxWaterfill::parse(cfg)?)
            }
            Command::ApproxUnfold(_) => Experiment::ApproxUnfold(ApproxUnfold::parse(cfg)?),
            Command::Invert(_) => Experiment::Invert(Invert::parse(cfg)?),
            Command::Bussgang(_) => Experiment::Bussgang(Bussgang::parse(cfg)?),
        })
    }

    fn run(&self, out: &Path) -> CliResult<String> {
        match self {
            Experiment::DetectTrain(e) => e.run(out),
            Experiment::DetectEval(e) => e.run(out),
            Experiment::Regions(e) => e.run(out),
            Experiment::ApproxWaterfill(e) => e.run(out),
            Experiment::ApproxUnfold(e) => e.run(out),
            Experiment::Invert(e) => e.run(out),
            Experiment::Bussgang(e) => e.run(out),
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let started = Instant::now();
    let command = cli.command;
    let args = command.args();

    // Validation: everything here exits 1 without touching artifacts.
    let mut cfg = Config::load(&args.config)?;
    let out = resolve_out_dir(&mut cfg, args.out.clone())?;
    let experiment = Experiment::parse(&command, &mut cfg)?;
    cfg.finish()?;

    // Execution: failures past this point exit 2.
    let summary = experiment.run(&out)?;
    write_manifest(&out, command.name(), &cfg, started)?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // Keep stderr single-line and machine-parsable even for
            // argument errors; clap's first line carries the diagnosis.
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: usage: {first}");
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::from(e.exit_code())
        }
    }
}
