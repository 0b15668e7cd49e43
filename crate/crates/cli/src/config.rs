//! Run configuration: defaults, optional TOML file and command-line flags.
//!
//! Precedence is flag > command section of the file > top level of the file >
//! built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use quench_core::dynamics::EvolutionSettings;
use quench_core::scaling::{self, FitWindow, DEFAULT_POWER_LAW_WINDOW};
use quench_core::{Execution, ModeHamiltonian};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SweepDepth,
    SweepRate,
    Fcs,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepDepth => "sweep-depth",
            Command::SweepRate => "sweep-rate",
            Command::Fcs => "fcs",
            Command::Verify => "verify",
        }
    }
}

fn parse_window(s: &str) -> Result<FitWindow, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound '{lo}': {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound '{hi}': {e}"))?;
    FitWindow::new(lo, hi).map_err(|e| e.to_string())
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of lattice sites (even).
    #[arg(long)]
    pub sites: Option<usize>,
    /// Initial transverse field.
    #[arg(long, allow_hyphen_values = true)]
    pub gi: Option<f64>,
    /// Final transverse field.
    #[arg(long, allow_hyphen_values = true)]
    pub gf: Option<f64>,
    /// Quench time(s), comma separated. 0 selects the sudden quench.
    #[arg(long, value_delimiter = ',')]
    pub tauq: Vec<f64>,
    /// Quench depths eps_f = g_f + 1, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Monte Carlo shots for sampled histograms (0 disables sampling).
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the time integration.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Skip time evolution and use analytic sudden-quench results.
    #[arg(long)]
    pub analytic_only: bool,
    /// Power-law fit window in tau_q, as LO:HI.
    #[arg(long, value_parser = parse_window)]
    pub fit_window: Option<FitWindow>,
    /// Evaluate modes one after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
    /// TOML file with defaults; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub energy_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileSection {
    sites: Option<usize>,
    gi: Option<f64>,
    gf: Option<f64>,
    tauq: Option<OneOrMany>,
    eps: Option<Vec<f64>>,
    shots: Option<u64>,
    seed: Option<u64>,
    rel_tol: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    analytic_only: Option<bool>,
    fit_window: Option<String>,
    sequential: Option<bool>,
    energy_scale: Option<f64>,
}

impl FileSection {
    /// Fields set in `other` replace those in `self`.
    fn overlay(self, other: FileSection) -> FileSection {
        FileSection {
            sites: other.sites.or(self.sites),
            gi: other.gi.or(self.gi),
            gf: other.gf.or(self.gf),
            tauq: other.tauq.or(self.tauq),
            eps: other.eps.or(self.eps),
            shots: other.shots.or(self.shots),
            seed: other.seed.or(self.seed),
            rel_tol: other.rel_tol.or(self.rel_tol),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            analytic_only: other.analytic_only.or(self.analytic_only),
            fit_window: other.fit_window.or(self.fit_window),
            sequential: other.sequential.or(self.sequential),
            energy_scale: other.energy_scale.or(self.energy_scale),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    #[serde(flatten)]
    common: FileSection,
    sweep_depth: Option<FileSection>,
    sweep_rate: Option<FileSection>,
    fcs: Option<FileSection>,
    verify: Option<FileSection>,
}

fn load_file(path: &Path, command: Command) -> Result<FileSection, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let file: FileConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
    let section = match command {
        Command::SweepDepth => file.sweep_depth,
        Command::SweepRate => file.sweep_rate,
        Command::Fcs => file.fcs,
        Command::Verify => file.verify,
    };
    Ok(file.common.overlay(section.unwrap_or_default()))
}

/// Fully resolved configuration; serialized verbatim into every sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub sites: usize,
    pub gi: f64,
    pub gf: f64,
    pub tauq: Vec<f64>,
    pub eps: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub analytic_only: bool,
    pub fit_window: FitWindow,
    pub settings: EvolutionSettings,
    /// `fcs` over depths at one quench time rather than over quench times.
    pub fcs_by_depth: bool,
}

impl RunConfig {
    pub fn resolve(command: Command, args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => load_file(p, command)?,
            None => FileSection::default(),
        };
        let flags = FileSection {
            sites: args.sites,
            gi: args.gi,
            gf: args.gf,
            tauq: (!args.tauq.is_empty()).then(|| OneOrMany::Many(args.tauq.clone())),
            eps: (!args.eps.is_empty()).then(|| args.eps.clone()),
            shots: args.shots,
            seed: args.seed,
            rel_tol: args.rel_tol,
            out: args.out.clone(),
            format: args.format,
            analytic_only: args.analytic_only.then_some(true),
            fit_window: None,
            sequential: args.sequential.then_some(true),
            energy_scale: args.energy_scale,
        };
        let merged = file.overlay(flags);

        let fit_window = match (args.fit_window, &merged.fit_window) {
            (Some(w), _) => w,
            (None, Some(s)) => parse_window(s).map_err(CliError::Config)?,
            (None, None) => DEFAULT_POWER_LAW_WINDOW,
        };
        let defaults = EvolutionSettings::default();
        let settings = EvolutionSettings {
            rel_tol: merged.rel_tol.unwrap_or(defaults.rel_tol),
            energy_scale: merged.energy_scale.unwrap_or(ModeHamiltonian::ENERGY_SCALE),
            execution: if merged.sequential.unwrap_or(false) {
                Execution::Sequential
            } else {
                Execution::default()
            },
            ..defaults
        };
        let grid_err = |e: quench_core::Error| CliError::Config(e.to_string());

        let fcs_by_depth = command == Command::Fcs && (merged.eps.is_some() || merged.tauq.is_none());
        let tauq_given = merged.tauq.clone().map(OneOrMany::into_vec);
        let (tauq, eps) = match command {
            Command::SweepDepth => (
                tauq_given.unwrap_or_else(|| vec![0.01]),
                merged
                    .eps
                    .clone()
                    .map(Ok)
                    .unwrap_or_else(|| scaling::linear_grid(0.0, 1.0, 21))
                    .map_err(grid_err)?,
            ),
            Command::SweepRate => (
                tauq_given
                    .map(Ok)
                    .unwrap_or_else(|| scaling::log_grid(0.01, 100.0, 25))
                    .map_err(grid_err)?,
                Vec::new(),
            ),
            Command::Fcs if fcs_by_depth => (
                tauq_given.unwrap_or_else(|| vec![0.01]),
                merged.eps.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0]),
            ),
            Command::Fcs => (tauq_given.unwrap_or_default(), Vec::new()),
            Command::Verify => (Vec::new(), Vec::new()),
        };

        let cfg = RunConfig {
            command: command.name(),
            sites: merged.sites.unwrap_or(100),
            gi: merged.gi.unwrap_or(-1.01),
            gf: merged.gf.unwrap_or(0.0),
            tauq,
            eps,
            shots: merged.shots.unwrap_or(10_000),
            seed: merged.seed.unwrap_or(0),
            out: merged.out.unwrap_or_else(|| PathBuf::from("quench-out")),
            format: merged.format.unwrap_or(Format::Csv),
            analytic_only: merged.analytic_only.unwrap_or(false),
            fit_window,
            settings,
            fcs_by_depth,
        };
        cfg.validate(command)?;
        Ok(cfg)
    }

    fn validate(&self, command: Command) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.sites < 2 || !self.sites.is_multiple_of(2) {
            return bad(format!("--sites must be even and at least 2, got {}", self.sites));
        }
        if !self.gi.is_finite() || !self.gf.is_finite() {
            return bad("fields must be finite".into());
        }
        self.settings.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        match command {
            Command::SweepDepth => {
                if self.tauq.len() != 1 {
                    return bad("sweep-depth takes a single --tauq".into());
                }
                if self.tauq[0] < 0.0 {
                    return bad("--tauq must be >= 0".into());
                }
            }
            Command::SweepRate => {
                if self.analytic_only {
                    return bad("sweep-rate has no analytic-only mode".into());
                }
                if self.tauq.is_empty() || self.tauq.iter().any(|t| t.is_nan() || *t <= 0.0) || !increasing(&self.tauq)
                {
                    return bad("sweep-rate needs positive, strictly increasing --tauq values".into());
                }
            }
            Command::Fcs => {
                if self.fcs_by_depth && self.tauq.len() != 1 {
                    return bad("fcs over depths takes a single --tauq".into());
                }
                if self.tauq.iter().any(|t| *t < 0.0 || !t.is_finite()) {
                    return bad("--tauq must be >= 0".into());
                }
                if self.analytic_only && self.tauq.iter().any(|t| *t > 0.0) && !self.fcs_by_depth {
                    return bad("fcs over quench times needs time evolution".into());
                }
            }
            Command::Verify => {}
        }
        if matches!(command, Command::SweepDepth | Command::Fcs) && self.fcs_or_depth_uses_eps(command) {
            if self.eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return bad("--eps values must lie in [0, 1]".into());
            }
            if command == Command::SweepDepth && !increasing(&self.eps) {
                return bad("--eps values must be strictly increasing".into());
            }
        }
        Ok(())
    }

    fn fcs_or_depth_uses_eps(&self, command: Command) -> bool {
        command == Command::SweepDepth || self.fcs_by_depth
    }

    /// Single quench time of depth sweeps and depth-mode fcs runs.
    pub fn tau(&self) -> f64 {
        self.tauq[0]
    }
}
