//! Scenario files, reports and subcommands for the `nap` binary.

pub mod audit;
pub mod cli;
pub mod error;
pub mod exec;
pub mod report;
pub mod scenario;

use std::path::Path;

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::error::{CliError, Result};
use crate::report::{Format, Report};
use crate::scenario::Scenario;

/// What a run prints and how it exits.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(e: &CliError) -> Outcome {
        Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

fn deliver(report: &Report, format: Format, output: Option<&Path>) -> Result<Outcome> {
    let text = report.render(format)?;
    let code = if report.ok() { 0 } else { 1 };
    let stderr = if report.ok() {
        String::new()
    } else {
        format!(
            "{} of {} queries failed or errored\n",
            report.summary.failed + report.summary.errors,
            report.summary.total
        )
    };
    match output {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
            Ok(Outcome {
                code,
                stdout: String::new(),
                stderr,
            })
        }
        None => Ok(Outcome {
            code,
            stdout: text,
            stderr,
        }),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    if let Some((name, s, output)) = cli::to_scenario(&cli.command)? {
        let report = exec::run_scenario(&s, &name)?;
        return deliver(&report, s.output.format, output.as_deref());
    }
    match &cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            parallel,
            output,
        } => {
            let mut s = Scenario::load(scenario)?;
            if let Some(seed) = seed {
                s.seed = *seed;
            }
            if let Some(out) = out {
                s.output.format = (*out).into();
            }
            s.output.parallel |= *parallel;
            let report = exec::run_scenario(&s, &format!("run {}", scenario.display()))?;
            deliver(&report, s.output.format, output.as_deref())
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(scenario)?;
            exec::Context::build(&s)?;
            for (i, q) in s.queries.iter().enumerate() {
                exec::compile(q, i)?;
            }
            Ok(Outcome {
                code: 0,
                stdout: format!(
                    "{}: valid, {} queries\n",
                    scenario.display(),
                    s.queries.len()
                ),
                stderr: String::new(),
            })
        }
        Command::Schema => Ok(Outcome {
            code: 0,
            stdout: scenario::SCHEMA.to_string(),
            stderr: String::new(),
        }),
        Command::Audit { budget, common } => {
            let report = audit::run(*budget, common.seed)?;
            deliver(&report, common.out.into(), common.output.as_deref())
        }
        _ => Err(CliError::Internal("subcommand without a handler".into())),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(e)) => Outcome::error(&e),
        Err(_) => Outcome::error(&CliError::Internal("unexpected panic".into())),
    }
}
