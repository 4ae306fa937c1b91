use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qjump::steering::{Pair, Scheme};
use qjump_cli::{execute, output, Command, Overrides, RunConfig, Status};

#[derive(Parser)]
#[command(name = "qjump", version, about = "Trajectory simulation and EPR-steering analysis of a driven two-level atom")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Purity curve E[x²] or E[y²+z²] against efficiency (CSV).
    Curve(Flags),
    /// Steering sum S over a grid of efficiencies (CSV plus JSON summary).
    Surface(Flags),
    /// Critical diagonal efficiency of a detector pair (JSON).
    Critical(Flags),
    /// Run the invariant suite (JSON report).
    Validate(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// said, y_secular, x_lab or y_lab.
    #[arg(long)]
    scheme: Option<Scheme>,
    /// said_y or x_y.
    #[arg(long)]
    pair: Option<Pair>,
    /// Rabi frequency in units of γ.
    #[arg(long)]
    omega: Option<f64>,
    /// Single efficiency (replaces the grid).
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Comma-separated efficiencies in (0, 1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eta_grid: Option<Vec<f64>>,
    /// Detector-B efficiencies for `surface` (defaults to --eta-grid).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eta_b_grid: Option<Vec<f64>>,
    /// Integration step for diffusive schemes, in units of 1/γ.
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    /// Last halt time per trajectory (validate: last check time).
    #[arg(long)]
    t_final: Option<f64>,
    /// Trajectories per ensemble (initial size for `critical`).
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Root tolerance for `critical`.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest ensemble `critical` may grow to.
    #[arg(long)]
    budget: Option<usize>,
    /// Output path; a `.manifest.json` sibling is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            scheme: self.scheme,
            pair: self.pair,
            omega: self.omega,
            eta: self.eta,
            eta_grid: self.eta_grid.clone(),
            eta_b_grid: self.eta_b_grid.clone(),
            dt: self.dt,
            t_final: self.t_final,
            n_traj: self.n_traj,
            seed: self.seed,
            tol: self.tol,
            budget: self.budget,
            workers: self.workers,
        }
    }
}

fn run(cmd: Command, flags: &Flags) -> Result<Status, qjump_cli::CliError> {
    let start = Instant::now();
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&flags.overrides());
    cfg.resolve(cmd);
    cfg.validate()?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| qjump_cli::CliError::Usage(e.to_string()))?;
    }
    let out = execute(cmd, &cfg)?;
    let path = flags.out.clone().unwrap_or_else(|| PathBuf::from(cmd.default_out()));
    let manifest = output::write_outputs(&path, cmd.name(), &cfg, &out.artifacts, start.elapsed())?;
    eprintln!("wrote {} ({})", path.display(), manifest.display());
    Ok(out.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, flags) = match &cli.cmd {
        Cmd::Curve(f) => (Command::Curve, f),
        Cmd::Surface(f) => (Command::Surface, f),
        Cmd::Critical(f) => (Command::Critical, f),
        Cmd::Validate(f) => (Command::Validate, f),
    };
    match run(cmd, flags) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("qjump {}: {e}", cmd.name());
            e.status().into()
        }
    }
}
