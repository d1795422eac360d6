//! Run configuration file (TOML). Every key is optional; unknown keys are
//! rejected. Command-line flags override file values.
//!
//! ```toml
//! seed = 7                  # dataset master seed
//! workers = 1
//!
//! [paths]
//! data = "data/phi41"
//! out = "runs/phi41"
//! cache_dir = "cache"       # also NORS_CACHE_DIR
//!
//! [dataset]
//! equation = "phi41"        # phi41 | rd_mult | ns2d
//! sizes = [128]
//! time_steps = 100
//! samples = 1000
//! setting = "fixed_u0"      # fixed_u0 | varying_u0
//!
//! [equation]                # overrides of the equation defaults
//! nu = 1.0
//! sigma = 0.1
//! kappa = 0.1
//! horizon = 0.05
//!
//! [solver]
//! substeps = 4
//! scheme = "exponential"    # exponential | implicit_euler
//! blowup_bound = 1e6
//!
//! [train]                   # see TrainConfig
//! epochs = 500
//! batch_size = 20
//! input = "features"        # features | raw
//! height = 2
//! resolution = [16, 16]
//! [train.adam]
//! lr = 1e-3
//! halve_every = 100
//! ```

use std::path::{Path, PathBuf};

use nors_core::solve::{DatasetSpec, EquationId, EquationSpec, Setting, SolverConfig, TimeScheme};
use nors_operator::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub paths: Paths,
    pub dataset: DatasetSection,
    pub equation: EquationOverrides,
    pub solver: SolverOverrides,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            paths: Paths::default(),
            dataset: DatasetSection::default(),
            equation: EquationOverrides::default(),
            solver: SolverOverrides::default(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub equation: EquationId,
    /// Grid points per axis; a single entry is repeated for 2-d equations.
    pub sizes: Vec<usize>,
    pub time_steps: usize,
    pub samples: usize,
    pub setting: Setting,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            equation: EquationId::Phi41,
            sizes: vec![128],
            time_steps: 100,
            samples: 1000,
            setting: Setting::FixedU0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquationOverrides {
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOverrides {
    pub substeps: Option<usize>,
    pub scheme: Option<TimeScheme>,
    pub blowup_bound: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serialises")
    }

    /// Equation spec with overrides applied.
    pub fn equation_spec(&self) -> EquationSpec {
        let mut eq = EquationSpec::for_id(self.dataset.equation);
        let o = &self.equation;
        if let Some(v) = o.nu {
            eq.nu = v;
        }
        if let Some(v) = o.sigma {
            eq.forcing.sigma = v;
        }
        if let Some(v) = o.kappa {
            eq.kappa = v;
        }
        if let Some(v) = o.horizon {
            eq.horizon = v;
        }
        eq
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut s = SolverConfig::for_id(self.dataset.equation);
        let o = &self.solver;
        if let Some(v) = o.substeps {
            s.substeps = v;
        }
        if let Some(v) = o.scheme {
            s.scheme = v;
        }
        if let Some(v) = o.blowup_bound {
            s.blowup_bound = v;
        }
        s
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        let dim = self.dataset.equation.dim();
        let mut sizes = self.dataset.sizes.clone();
        if sizes.len() == 1 && dim == 2 {
            sizes.push(sizes[0]);
        }
        DatasetSpec {
            equation: self.equation_spec(),
            solver: self.solver_config(),
            sizes,
            time_steps: self.dataset.time_steps,
            samples: self.dataset.samples,
            master_seed: self.seed,
            setting: self.dataset.setting,
        }
    }

    /// Fills every override with its effective value, for echoing.
    pub fn resolved(&self) -> Self {
        let eq = self.equation_spec();
        let solver = self.solver_config();
        let mut out = self.clone();
        out.dataset.sizes = self.dataset_spec().sizes;
        out.equation = EquationOverrides {
            nu: Some(eq.nu),
            sigma: Some(eq.forcing.sigma),
            kappa: Some(eq.kappa),
            horizon: Some(eq.horizon),
        };
        out.solver = SolverOverrides {
            substeps: Some(solver.substeps),
            scheme: Some(solver.scheme),
            blowup_bound: Some(solver.blowup_bound),
        };
        out
    }

    /// `--cache-dir`/file value, else `NORS_CACHE_DIR`.
    pub fn cache_dir(&self) -> Option<PathBuf> {
        self.paths
            .cache_dir
            .clone()
            .or_else(|| std::env::var_os("NORS_CACHE_DIR").map(PathBuf::from))
    }
}

/// Grid sizes given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sizes(pub Vec<usize>);

/// Parses `64` or `64,64`.
pub fn parse_sizes(s: &str) -> Result<Sizes, String> {
    s.split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(0) => Err("grid sizes must be ≥ 1".to_string()),
            Ok(n) => Ok(n),
            Err(e) => Err(format!("`{p}`: {e}")),
        })
        .collect::<Result<_, _>>()
        .map(Sizes)
}

/// Repeats a single size to `dim` axes.
pub fn expand_sizes(mut sizes: Vec<usize>, dim: usize) -> Vec<usize> {
    if sizes.len() == 1 && dim == 2 {
        sizes.push(sizes[0]);
    }
    sizes
}
