//! Command-line front end: validate a scenario, run it under one controller,
//! or run the two-controller comparison. Exit codes: 0 success, 2 scenario
//! validation failure, 3 safety violation (collision or cone breach), 4
//! timeout or propellant exhaustion.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rvsim::harness::{compare_controllers, run_scenario, ControllerKind, RunOutcome, SimError};
use rvsim::output;
use rvsim::scenario::{parse_scenario, Overrides, Scenario, ScenarioError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SAFETY: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rvsim",
    about = "Six-DOF rendezvous simulator: potential-field guidance with sliding-mode control",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario under its configured (or overridden) controller.
    Run(RunArgs),
    /// Run the scenario under both position controllers with the same seed.
    Compare(RunArgs),
    /// Parse and validate the scenario, reporting applied defaults.
    Validate { scenario: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for telemetry and summary files (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Override the configured position controller.
    #[arg(long, value_parser = parse_controller)]
    controller: Option<ControllerKind>,
    /// Cap every phase timeout [s].
    #[arg(long)]
    duration_cap: Option<f64>,
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    match s {
        "simplex" => Ok(ControllerKind::Simplex),
        "componentwise" => Ok(ControllerKind::Componentwise),
        other => Err(format!(
            "expected 'simplex' or 'componentwise', got '{other}'"
        )),
    }
}

fn load(path: &Path) -> Result<Scenario, ScenarioError> {
    let (scenario, defaults) = parse_scenario(path)?;
    for note in &defaults {
        eprintln!("default applied: {note}");
    }
    Ok(scenario)
}

fn outcome_exit(outcome: &RunOutcome) -> u8 {
    let flags = outcome.flags();
    if flags.collision || flags.cone_breach {
        EXIT_SAFETY
    } else if flags.timed_out || flags.propellant_out {
        EXIT_EXHAUSTED
    } else {
        EXIT_OK
    }
}

fn print_status(outcome: &RunOutcome) {
    let flags = outcome.flags();
    eprintln!(
        "{}: {} phase(s), {:.1} s, fuel {:.3} kg, control effort {:.1} Ns{}",
        outcome.controller.label(),
        outcome.phases.len(),
        outcome.total_elapsed(),
        outcome.total_fuel(),
        outcome.total_control_effort(),
        if flags.collision {
            " [COLLISION]"
        } else if flags.cone_breach {
            " [CONE BREACH]"
        } else if flags.timed_out {
            " [TIMEOUT]"
        } else if flags.propellant_out {
            " [PROPELLANT OUT]"
        } else {
            ""
        }
    );
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<u8> {
    let scenario = match load(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_VALIDATION);
        }
    };
    let overrides = Overrides {
        controller: args.controller,
        seed: args.seed,
        duration_cap: args.duration_cap,
    };
    let config = scenario.run_config(&overrides);
    let outcome = match run_scenario(&config) {
        Ok(o) => o,
        Err(SimError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            return Ok(EXIT_VALIDATION);
        }
        Err(e) => return Err(e).context("simulation failed"),
    };
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create output directory {:?}", args.out_dir))?;
    let telemetry_path = args.out_dir.join(&scenario.telemetry_path);
    output::write_telemetry(&telemetry_path, &outcome.telemetry)
        .with_context(|| format!("cannot write telemetry to {telemetry_path:?}"))?;
    let summary_path = args.out_dir.join(&scenario.summary_path);
    output::write_text(&summary_path, &output::render_summary(&outcome, config.seed))
        .with_context(|| format!("cannot write summary to {summary_path:?}"))?;
    print_status(&outcome);
    eprintln!(
        "wrote {} and {}",
        telemetry_path.display(),
        summary_path.display()
    );
    Ok(outcome_exit(&outcome))
}

fn with_stem(name: &str, suffix: &str) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{name}_{suffix}"),
    }
}

fn cmd_compare(args: &RunArgs) -> anyhow::Result<u8> {
    let scenario = match load(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_VALIDATION);
        }
    };
    let overrides = Overrides {
        controller: None,
        seed: args.seed,
        duration_cap: args.duration_cap,
    };
    let config = scenario.run_config(&overrides);
    let cmp = match compare_controllers(&config) {
        Ok(c) => c,
        Err(SimError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            return Ok(EXIT_VALIDATION);
        }
        Err(e) => return Err(e).context("comparison failed"),
    };
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create output directory {:?}", args.out_dir))?;
    for (outcome, tag) in [(&cmp.simplex, "simplex"), (&cmp.componentwise, "componentwise")] {
        let path = args.out_dir.join(with_stem(&scenario.telemetry_path, tag));
        output::write_telemetry(&path, &outcome.telemetry)
            .with_context(|| format!("cannot write telemetry to {path:?}"))?;
        print_status(outcome);
        eprintln!("wrote {}", path.display());
    }
    let summary_path = args.out_dir.join(with_stem(&scenario.summary_path, "comparison"));
    output::write_text(&summary_path, &output::render_comparison(&cmp, config.seed))
        .with_context(|| format!("cannot write summary to {summary_path:?}"))?;
    eprintln!("wrote {}", summary_path.display());
    Ok(outcome_exit(&cmp.simplex).max(outcome_exit(&cmp.componentwise)))
}

fn cmd_validate(path: &Path) -> u8 {
    match load(path) {
        Ok(scenario) => {
            eprintln!(
                "scenario ok: {} phase(s), {} obstacle(s), controller {}",
                scenario.phases.len(),
                scenario.obstacles.len(),
                scenario.controller.kind.label()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_VALIDATION
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Validate { scenario } => Ok(cmd_validate(scenario)),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
