use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jointfatigue::report::{endurance_report, posture_sweep, schedule_runs, schedule_text, sweep_text};
use jointfatigue::reproduce::{reproduce, ReproduceOptions};
use jointfatigue::scenario::Scenario;
use jointfatigue::schedule::Rounding;
use jointfatigue::strength::Percentile;

const EXIT_VALIDATION: u8 = 1;
const EXIT_ACCEPTANCE: u8 = 2;

/// Joint fatigue, work/rest schedules and posture sweeps for arm tasks.
#[derive(Debug, Parser)]
#[command(name = "jointfatigue", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Endurance time, fatigue index, rest and work units per population band.
    Endurance(ScenarioArgs),
    /// Repeated work/rest cycles with cumulative-fatigue detection.
    Schedule(ScenarioArgs),
    /// Working-distance sweep and the stress/discomfort optimum.
    Posture(ScenarioArgs),
    /// Regenerate the published endurance table and diff it against stored values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Directory for CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum, default_value_t = RoundingArg::Nearest)]
    rounding: RoundingArg,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario JSON file, or the name of a bundled scenario.
    #[arg(long)]
    scenario: String,
    /// Comma-separated standard-deviation multipliers, e.g. -2,0,2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    percentiles: Option<Vec<i32>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Replace the fatigue rate (per minute) of the bundled scenarios.
    #[arg(long)]
    fatigue_rate: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoundingArg {
    Nearest,
    Floor,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Nearest => Rounding::Nearest,
            RoundingArg::Floor => Rounding::Floor,
        }
    }
}

enum Failure {
    Validation(String),
    Acceptance,
}

impl From<jointfatigue::Error> for Failure {
    fn from(e: jointfatigue::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Acceptance) => ExitCode::from(EXIT_ACCEPTANCE),
    }
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(zs) = &args.percentiles {
        scenario.percentiles = zs.iter().map(|&z| Percentile::new(z)).collect::<Result<_, _>>()?;
        scenario.validate()?;
    }
    Ok(scenario)
}

fn name_of(scenario: &Scenario) -> String {
    scenario.name.clone().unwrap_or_else(|| "scenario".to_string())
}

fn out_dir(output: &Output) -> Result<Option<&Path>, Failure> {
    match &output.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::Validation(format!("{}: {e}", dir.display())))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> jointfatigue::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Endurance(args) => {
            let scenario = load(&args)?;
            let report = endurance_report(&scenario, args.output.rounding.into())?;
            let csv = csv_bytes(|b| report.write_csv(b))?;
            if let Some(dir) = out_dir(&args.output)? {
                fs::write(dir.join("endurance.csv"), &csv)?;
            }
            match args.output.format {
                Format::Csv => out.write_all(&csv)?,
                Format::Text => out.write_all(report.to_text().as_bytes())?,
            }
        }
        Command::Schedule(args) => {
            let scenario = load(&args)?;
            let runs = schedule_runs(&scenario, args.output.rounding.into())?;
            let dir = out_dir(&args.output)?;
            for run in &runs {
                let csv = csv_bytes(|b| run.report.write_csv(b))?;
                if let Some(dir) = dir {
                    fs::write(dir.join(format!("schedule_{}.csv", run.percentile.label())), &csv)?;
                }
                if args.output.format == Format::Csv {
                    if runs.len() > 1 {
                        writeln!(out, "# band {}", run.percentile.label())?;
                    }
                    out.write_all(&csv)?;
                }
            }
            if args.output.format == Format::Text {
                out.write_all(schedule_text(&name_of(&scenario), &runs).as_bytes())?;
            }
        }
        Command::Posture(args) => {
            let scenario = load(&args)?;
            let result = posture_sweep(&scenario)?;
            let csv = csv_bytes(|b| result.write_csv(b))?;
            if let Some(dir) = out_dir(&args.output)? {
                fs::write(dir.join("sweep.csv"), &csv)?;
            }
            match args.output.format {
                Format::Csv => out.write_all(&csv)?,
                Format::Text => out.write_all(sweep_text(&name_of(&scenario), &result).as_bytes())?,
            }
        }
        Command::Reproduce(args) => {
            let options = ReproduceOptions {
                fatigue_rate: args.fatigue_rate,
                rounding: args.output.rounding.into(),
            };
            let report = reproduce(&options)?;
            let csv = csv_bytes(|b| report.write_csv(b))?;
            if let Some(dir) = out_dir(&args.output)? {
                fs::write(dir.join("golden_report.csv"), &csv)?;
            }
            match args.output.format {
                Format::Csv => out.write_all(&csv)?,
                Format::Text => out.write_all(report.to_text().as_bytes())?,
            }
            if !report.passed() {
                return Err(Failure::Acceptance);
            }
        }
    }
    out.flush()?;
    Ok(())
}
