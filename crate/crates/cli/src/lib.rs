//! Reproduction driver for the `qjump` engine.
//!
//! Each subcommand is a pure function of its [`RunConfig`]: it returns the
//! files to write, and `main` adds a manifest next to them.

pub mod config;
pub mod critical;
pub mod curve;
pub mod output;
pub mod surface;
pub mod validate;

use std::process::ExitCode;

use serde::{Deserialize, Serialize};

pub use config::{Overrides, RunConfig};
pub use output::Artifact;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Steering(#[from] qjump::SteeringError),
    #[error(transparent)]
    Sim(#[from] qjump::SimError),
    #[error(transparent)]
    Oracle(#[from] qjump::OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Usage(_) => Status::Usage,
            _ => Status::Failure,
        }
    }
}

/// Process outcome; the discriminant is the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success = 0,
    Failure = 1,
    Usage = 2,
    Inconclusive = 3,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Curve,
    Surface,
    Critical,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curve => "curve",
            Command::Surface => "surface",
            Command::Critical => "critical",
            Command::Validate => "validate",
        }
    }

    pub fn default_out(self) -> &'static str {
        match self {
            Command::Curve => "curve.csv",
            Command::Surface => "surface.csv",
            Command::Critical => "critical.json",
            Command::Validate => "validate.json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub artifacts: Vec<Artifact>,
    pub status: Status,
}

/// Run `cmd` and render its result files.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Output, CliError> {
    cfg.validate()?;
    let (artifacts, status) = match cmd {
        Command::Curve => {
            let rows = curve::run_curve(cfg)?;
            (vec![Artifact::primary(curve::curve_csv(&rows)?)], Status::Success)
        }
        Command::Surface => {
            let summary = surface::run_surface(cfg)?;
            let csv = surface::surface_csv(&summary)?;
            let json = output::to_json(&summary)?;
            (vec![Artifact::primary(csv), Artifact { suffix: ".summary.json", contents: json }], Status::Success)
        }
        Command::Critical => {
            let report = critical::run_critical(cfg)?;
            let status = if report.inconclusive() { Status::Inconclusive } else { Status::Success };
            (vec![Artifact::primary(output::to_json(&report)?)], status)
        }
        Command::Validate => {
            let report = validate::run_validate(cfg)?;
            let status = if report.all_pass { Status::Success } else { Status::Failure };
            (vec![Artifact::primary(output::to_json(&report)?)], status)
        }
    };
    Ok(Output { artifacts, status })
}
