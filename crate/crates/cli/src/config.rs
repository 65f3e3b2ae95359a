use std::path::{Path, PathBuf};

use beable_core::mechanism::FitSpace;
use beable_core::optimizer::OptimizerConfig;
use beable_core::{LevelSystem, Workers};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One JSON document configuring every subcommand. Missing keys take the
/// defaults below; command-line flags override file values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// System JSON; the built-in 7-level example when absent.
    pub system: Option<PathBuf>,
    /// Field file (`.csv` with t,E or `.json`) for simulate and mechanism.
    pub field: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub initial: usize,
    /// Defaults to the highest level.
    pub target: Option<usize>,
    pub optimize: Option<OptimizerConfig>,
    pub simulate: SimulateConfig,
    pub mechanism: MechanismConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: None,
            field: None,
            out: PathBuf::from("out"),
            workers: None,
            initial: 0,
            target: None,
            optimize: None,
            simulate: SimulateConfig::default(),
            mechanism: MechanismConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub substeps: usize,
    pub k_max: usize,
    /// Uniformly spaced times at which occupancies are compared with |ψ|².
    pub check_points: usize,
    /// Transition (from, to) whose jumps enter the two-time correlation.
    pub correlation_pair: (usize, usize),
    /// Largest |τ| of the correlation grid, fs.
    pub tau_max: f64,
    /// (n, m) of the Re z_nm series correlated with |E|.
    pub rez_pair: (usize, usize),
    /// Time window of the field–rate correlation, fs.
    pub rez_window: (f64, f64),
    pub top_pathways: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n_traj: 10_000,
            seed: 1,
            substeps: 1,
            k_max: 4,
            check_points: 40,
            correlation_pair: (5, 6),
            tau_max: 10.0,
            rez_pair: (6, 5),
            rez_window: (70.0, 80.0),
            top_pathways: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismConfig {
    pub sigma: f64,
    pub seed: u64,
    /// ΔM.
    pub increment: f64,
    pub m_first: f64,
    pub m_last: f64,
    pub k_max: usize,
    pub head_fraction: f64,
    /// Fit only this window instead of searching the grid.
    pub window: Option<(f64, f64)>,
    pub pathological_rule: bool,
    /// Residuals on populations (default) or on their square roots.
    pub fit_space: FitSpace,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            sigma: 0.1,
            seed: 1,
            increment: 0.01,
            m_first: 0.01,
            m_last: 1.6,
            k_max: 4,
            head_fraction: 0.2,
            window: None,
            pathological_rule: true,
            fit_space: FitSpace::Population,
        }
    }
}

/// Flags that override the file. `None` leaves the file value in place.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Worker threads (also BEABLE_MECH_WORKERS).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub initial: Option<usize>,
    #[arg(long)]
    pub target: Option<usize>,
    /// Seed for the ensemble and the measurement noise.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Stop optimizing once the transfer reaches this value.
    #[arg(long)]
    pub goal: Option<f64>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Relative measurement noise σ.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Modulation increment ΔM.
    #[arg(long)]
    pub increment: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub head_fraction: Option<f64>,
    /// Single fit window lower bound (requires --m-max).
    #[arg(long, requires = "m_max")]
    pub m_min: Option<f64>,
    #[arg(long, requires = "m_min")]
    pub m_max: Option<f64>,
    /// Fit amplitudes √P instead of populations.
    #[arg(long)]
    pub amplitude_space: bool,
    /// Re-read and validate every output file before exiting.
    #[arg(long)]
    pub self_check: bool,
}

pub const WORKERS_ENV: &str = "BEABLE_MECH_WORKERS";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($dst:tt)+) => {
                if let Some(v) = flags.$flag.clone() {
                    $($dst)+ = v.into();
                }
            };
        }
        set!(system => cfg.system);
        set!(field => cfg.field);
        set!(out => cfg.out);
        set!(initial => cfg.initial);
        set!(target => cfg.target);
        set!(seed => cfg.simulate.seed);
        set!(seed => cfg.mechanism.seed);
        set!(n_traj => cfg.simulate.n_traj);
        set!(substeps => cfg.simulate.substeps);
        set!(sigma => cfg.mechanism.sigma);
        set!(increment => cfg.mechanism.increment);
        set!(k_max => cfg.simulate.k_max);
        set!(k_max => cfg.mechanism.k_max);
        set!(head_fraction => cfg.mechanism.head_fraction);
        if flags.amplitude_space {
            cfg.mechanism.fit_space = FitSpace::Amplitude;
        }
        if let (Some(lo), Some(hi)) = (flags.m_min, flags.m_max) {
            cfg.mechanism.window = Some((lo, hi));
        }
        let env = std::env::var(WORKERS_ENV).ok();
        cfg.workers = match (flags.workers, env) {
            (Some(n), _) => Some(n),
            (None, Some(text)) => Some(
                text.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{WORKERS_ENV}={text:?} is not a count")))?,
            ),
            (None, None) => cfg.workers,
        };
        if flags.iterations.is_some() || flags.goal.is_some() {
            let opt = cfg.optimize.get_or_insert_with(OptimizerConfig::seven_level_example);
            set!(iterations => opt.iterations);
            set!(goal => opt.goal);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.into()));
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        let s = &self.simulate;
        if s.n_traj == 0 || s.substeps == 0 || s.check_points < 2 || s.k_max == 0 {
            return bad("n_traj, substeps and k_max must be positive and check_points at least 2");
        }
        if !(s.tau_max >= 0.0) || !(s.rez_window.0 < s.rez_window.1) {
            return bad("tau_max must be nonnegative and the rez window increasing");
        }
        let m = &self.mechanism;
        if !(m.sigma >= 0.0) || !(m.increment > 0.0) || !(0.0 < m.m_first && m.m_first < m.m_last) {
            return bad("sigma must be nonnegative, increment positive and 0 < m_first < m_last");
        }
        if !(m.head_fraction > 0.0 && m.head_fraction <= 1.0) || m.k_max == 0 {
            return bad("head_fraction must lie in (0, 1] and k_max be positive");
        }
        if let Some((lo, hi)) = m.window {
            if !(0.0 < lo && lo < hi) {
                return bad("fit window must satisfy 0 < m_min < m_max");
            }
        }
        if let Some(path) = self.system.iter().chain(&self.field).find(|p| !p.exists()) {
            return Err(CliError::Config(format!("{} does not exist", path.display())));
        }
        Ok(())
    }

    pub fn workers(&self) -> Workers {
        self.workers.map_or_else(Workers::available, Workers::new)
    }

    pub fn system(&self) -> Result<LevelSystem, CliError> {
        match &self.system {
            Some(path) => LevelSystem::load_json(path).map_err(|e| match e {
                beable_core::Error::Json(_) | beable_core::Error::Io(_) => CliError::Config(format!("{}: {e}", path.display())),
                other => other.into(),
            }),
            None => Ok(LevelSystem::seven_level_example()),
        }
    }

    pub fn target(&self, sys: &LevelSystem) -> usize {
        self.target.unwrap_or(sys.count - 1)
    }

    pub fn optimizer(&self, sys: &LevelSystem) -> OptimizerConfig {
        let mut opt = self.optimize.clone().unwrap_or_else(OptimizerConfig::seven_level_example);
        opt.initial = self.initial;
        opt.target = self.target(sys);
        opt
    }
}
