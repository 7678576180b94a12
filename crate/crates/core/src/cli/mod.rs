//! Command-line orchestration: argument parsing, config merging, bounded
//! parallelism and exit codes. The `fracdyn` binary is a thin wrapper
//! around [`main_with_args`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FRACDYN_OUT";
pub const DEFAULT_OUT_DIR: &str = "fracdyn-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] crate::Error),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(e) if e.is_divergence() => EXIT_DIVERGENCE,
            CliError::Numeric(crate::Error::InvalidParameter { .. }) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_DIVERGENCE,
            CliError::Inconclusive(_) => EXIT_INCONCLUSIVE,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracdyn", version, about = "Fractional-order dynamics of the IDMDE model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (default: config `output`, then $FRACDYN_OUT, then ./fracdyn-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Maximum number of concurrent integrations.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write its time series.
    Integrate,
    /// Equilibria, spectra and Matignon verdicts at `p` (and `q`).
    Equilibria,
    /// Matignon index over a (p, q) lattice.
    StabilitySurface,
    /// Finite-time Lyapunov spectrum along one trajectory.
    Lyapunov,
    /// Lyapunov spectra over a (p, q) lattice and the chaos mask.
    LyapunovSurface,
    /// Basin-of-attraction scan in the plane through the equilibria.
    Basin,
    /// Fractional divergence over the positive (x1, x2) quadrant.
    Divergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Equilibria => "equilibria",
            Command::StabilitySurface => "stability-surface",
            Command::Lyapunov => "lyapunov",
            Command::LyapunovSurface => "lyapunov-surface",
            Command::Basin => "basin",
            Command::Divergence => "divergence",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Integration horizon.
    #[arg(long = "T", global = true, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    /// Initial state, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h_norm: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Lattice size as `n1xn2`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// `x1_lo,x1_hi,x2_lo,x2_hi`
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    /// Quick preset (coarse lattices, short horizons).
    #[arg(long, global = true)]
    pub desk_scale: bool,
}

fn parse_grid(s: &str) -> Result<[usize; 2], CliError> {
    let bad = || CliError::Config(format!("--grid expects n1xn2, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

impl Overrides {
    /// Applies the flags on top of `cfg`. Grid and window flags go to the
    /// block of the given subcommand.
    pub fn apply(&self, cmd: Command, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = self.h {
            cfg.integrator.h = v;
        }
        if let Some(v) = self.t_end {
            cfg.integrator.t_end = v;
        }
        if let Some(v) = &self.x0 {
            cfg.integrator.x0 = v.clone();
        }
        if let Some(v) = self.h_norm {
            cfg.lyapunov.h_norm = v;
        }
        if let Some(v) = self.threshold {
            cfg.lyapunov.threshold = v;
        }
        if let Some(v) = self.radius {
            cfg.basin.radius = v;
        }
        if self.desk_scale {
            cfg.desk_scale = true;
        }
        if let Some(g) = &self.grid {
            let g = parse_grid(g)?;
            match cmd {
                Command::Divergence => cfg.divergence.grid = g,
                Command::StabilitySurface | Command::LyapunovSurface => {
                    cfg.p_steps = Some(g[0]);
                    cfg.q_steps = Some(g[1]);
                }
                _ => cfg.basin.grid = g,
            }
        }
        if let Some(w) = &self.window {
            let w: [f64; 4] = w.as_slice().try_into().map_err(|_| {
                CliError::Config(format!("--window expects 4 values, got {}", w.len()))
            })?;
            match cmd {
                Command::Divergence => cfg.divergence.window = w,
                _ => cfg.basin.window = w,
            }
        }
        Ok(())
    }
}

/// Resolves the effective config from file, flags and environment.
pub fn effective_config(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(cli.command, &mut cfg)?;
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    cfg.validate_common()?;
    Ok((cfg, out))
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("fracdyn {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<output::RunManifest, CliError> {
    let (cfg, out) = effective_config(cli)?;
    commands::execute(cli.command, &cfg, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("40x30").unwrap(), [40, 30]);
        assert!(parse_grid("40").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn overrides_apply() {
        let cli = Cli::try_parse_from([
            "fracdyn", "basin", "--p", "1.2", "--x0", "-1,2,3", "--grid", "4x5", "--window",
            "-1,1,-2,2", "--T", "50", "--jobs", "3",
        ])
        .unwrap();
        let (cfg, _) = effective_config(&cli).unwrap();
        assert_eq!(cfg.p, 1.2);
        assert_eq!(cfg.integrator.x0, vec![-1.0, 2.0, 3.0]);
        assert_eq!(cfg.basin.grid, [4, 5]);
        assert_eq!(cfg.basin.window, [-1.0, 1.0, -2.0, 2.0]);
        assert_eq!(cfg.integrator.t_end, 50.0);
        assert_eq!(cfg.jobs, 3);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let div = crate::Error::Diverged { step: 1, time: 0.1, reason: "x" };
        assert_eq!(CliError::Numeric(div).exit_code(), 3);
        assert_eq!(CliError::Inconclusive("x".into()).exit_code(), 4);
    }
}
