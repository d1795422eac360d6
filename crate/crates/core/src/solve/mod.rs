//! Ground-truth SPDE solvers and the on-disk dataset generator.

mod dataset;
mod solvers;

pub use dataset::{generate_dataset, Dataset, DatasetMeta, DatasetSpec, Setting, FORMAT_VERSION};
pub use solvers::{
    dealias_mask, solve, solve_ns2d, solve_phi41, solve_rd_mult, velocity_spectrum,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::noise::{EtaSpec, ForcingSpec, GrfSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationId {
    /// `∂_t u − Δu = 3u − u³ + σξ`, d = 1.
    Phi41,
    /// `∂_t u − Δu = 3u − u³ + σuξ`, d = 1.
    RdMult,
    /// Vorticity form of 2-d Navier–Stokes, `∂_t ω − νΔω = −u·∇ω + f + σξ`.
    Ns2d,
}

impl EquationId {
    pub fn dim(self) -> usize {
        match self {
            EquationId::Phi41 | EquationId::RdMult => 1,
            EquationId::Ns2d => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquationId::Phi41 => "phi41",
            EquationId::RdMult => "rd_mult",
            EquationId::Ns2d => "ns2d",
        }
    }
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi41" => Ok(EquationId::Phi41),
            "rd_mult" => Ok(EquationId::RdMult),
            "ns2d" => Ok(EquationId::Ns2d),
            _ => Err(Error::Config(format!(
                "unknown equation `{s}` (expected phi41, rd_mult or ns2d)"
            ))),
        }
    }
}

/// Polynomial reaction `μ(u) = linear·u + cubic·u³`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reaction {
    pub linear: f64,
    pub cubic: f64,
}

impl Default for Reaction {
    fn default() -> Self {
        Self {
            linear: 3.0,
            cubic: -1.0,
        }
    }
}

impl Reaction {
    pub const OFF: Reaction = Reaction {
        linear: 0.0,
        cubic: 0.0,
    };

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.linear * u + self.cubic * u * u * u
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub id: EquationId,
    /// Diffusion coefficient ν.
    pub nu: f64,
    /// Reaction term; ignored for `ns2d`.
    pub reaction: Reaction,
    /// Noise scale σ plus, for `ns2d`, the deterministic force and noise colour.
    pub forcing: ForcingSpec,
    /// Initial-condition randomness κ used in the varying-`u0` setting (1-d).
    pub kappa: f64,
    pub eta: EtaSpec,
    /// Initial vorticity law (`ns2d`).
    pub grf: GrfSpec,
    /// Final time T.
    pub horizon: f64,
}

impl EquationSpec {
    pub fn phi41() -> Self {
        Self {
            id: EquationId::Phi41,
            nu: 1.0,
            reaction: Reaction::default(),
            forcing: ForcingSpec::additive(0.1),
            kappa: 0.1,
            eta: EtaSpec::default(),
            grf: GrfSpec::default(),
            horizon: 0.05,
        }
    }

    pub fn rd_mult() -> Self {
        Self {
            id: EquationId::RdMult,
            ..Self::phi41()
        }
    }

    pub fn ns2d() -> Self {
        Self {
            id: EquationId::Ns2d,
            nu: 1e-4,
            reaction: Reaction::OFF,
            forcing: ForcingSpec::navier_stokes(),
            ..Self::phi41()
        }
    }

    pub fn for_id(id: EquationId) -> Self {
        match id {
            EquationId::Phi41 => Self::phi41(),
            EquationId::RdMult => Self::rd_mult(),
            EquationId::Ns2d => Self::ns2d(),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.forcing.sigma
    }

    pub fn validate(&self) -> Result<()> {
        self.forcing.validate()?;
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::Config(format!("ν must be ≥ 0, got {}", self.nu)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::Config(format!("κ must be ≥ 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Linear-part treatment for the 1-d reaction–diffusion solvers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// `û ← e^{-λh} û + h φ₁(λh) N̂`: exact for the linear part.
    #[default]
    Exponential,
    /// `(1 + hλ) û ← û + h N̂`.
    ImplicitEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Solver steps per storage step; ξ is held constant across them.
    pub substeps: usize,
    pub scheme: TimeScheme,
    /// Abort when `max |u|` exceeds this.
    pub blowup_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            substeps: 4,
            scheme: TimeScheme::Exponential,
            blowup_bound: 1e6,
        }
    }
}

impl SolverConfig {
    /// Defaults for `id`: four substeps in 1-d, one for Navier–Stokes.
    pub fn for_id(id: EquationId) -> Self {
        match id {
            EquationId::Ns2d => Self {
                substeps: 1,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::Config("solver substeps must be ≥ 1".into()));
        }
        if !(self.blowup_bound > 0.0) {
            return Err(Error::Config("blow-up bound must be positive".into()));
        }
        Ok(())
    }
}
