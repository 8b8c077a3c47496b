//! Parameter-space exploration: grid scans, bisection along rays and
//! boundary cusp probes, for both Hamiltonian families and all methods.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conjugation::{run_newton, FailureReason, NewtonOutcome, NewtonSettings, PotentialSpec};
use crate::error::{Error, Result};
use crate::freq::{ConeNorm, FrequencyData};
use crate::ft::FtHamiltonian;
use crate::renorm::{iterate_renorm, LieVariant, RenormSettings, RenormStatus};

mod bisect;
mod cusp;
mod grid;

pub use bisect::{bisect_threshold, Bracket, Ray};
pub use cusp::{cusp_probe, find_cusps, BoundaryPoint, Cusp, CuspReport, CuspSettings, Region};
pub use grid::{read_cells, run_grid, run_grid_to, sidecar_path, Axis, CellRow, ScanConfig};

#[cfg(test)]
mod tests;

/// Default third amplitude of the three-dimensional family.
pub const DEFAULT_MU3: f64 = 0.1;

/// Hamiltonian family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `omega.A + (Omega.A)^2 / 2 + mu1 cos phi1 + mu2 cos(phi1 + phi2)`,
    /// golden-mean `omega`, `Omega = (1, 0)`.
    Golden2d,
    /// `omega.A + (Omega.A)^2 / 2 + mu1 cos phi1 + mu2 cos phi2 + mu3 cos phi3`,
    /// spiral-mean `omega`, `Omega = (1, 1, -1)`.
    Spiral3d,
}

impl Family {
    pub fn dim(self) -> usize {
        match self {
            Self::Golden2d => 2,
            Self::Spiral3d => 3,
        }
    }

    pub fn frequency(self) -> FrequencyData {
        match self {
            Self::Golden2d => FrequencyData::golden(),
            Self::Spiral3d => FrequencyData::spiral(),
        }
    }

    pub fn big_omega(self) -> Vec<f64> {
        match self {
            Self::Golden2d => vec![1.0, 0.0],
            Self::Spiral3d => vec![1.0, 1.0, -1.0],
        }
    }

    /// Potential modes for amplitudes `mu` (`mu3` is ignored in 2D).
    pub fn modes(self, mu: [f64; 3]) -> Vec<(Vec<i64>, f64)> {
        match self {
            Self::Golden2d => vec![(vec![1, 0], mu[0]), (vec![1, 1], mu[1])],
            Self::Spiral3d => vec![(vec![1, 0, 0], mu[0]), (vec![0, 1, 0], mu[1]), (vec![0, 0, 1], mu[2])],
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "golden2d" => Ok(Self::Golden2d),
            "spiral3d" => Ok(Self::Spiral3d),
            other => Err(Error::Config(format!("unknown family `{other}` (expected golden2d or spiral3d)"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Golden2d => "golden2d",
            Self::Spiral3d => "spiral3d",
        })
    }
}

/// Method deciding whether the torus persists at a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RenormTime1,
    RenormAdaptive,
    Conjugation,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "renorm-time1" => Ok(Self::RenormTime1),
            "renorm-adaptive" => Ok(Self::RenormAdaptive),
            "conjugation" => Ok(Self::Conjugation),
            other => Err(Error::Config(format!("unknown method `{other}` (expected renorm-time1, renorm-adaptive or conjugation)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RenormTime1 => "renorm-time1",
            Self::RenormAdaptive => "renorm-adaptive",
            Self::Conjugation => "conjugation",
        })
    }
}

/// Tolerances of every method; only those of the selected one are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    /// Fourier cutoff `L` of the renormalization Hamiltonians.
    pub cutoff: usize,
    /// Taylor order `J` in the action.
    pub order: usize,
    pub cone_norm: ConeNorm,
    /// `lie_variant` is overridden by the method (time-1 or adaptive).
    pub renorm: RenormSettings,
    pub newton: NewtonSettings,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self { cutoff: 5, order: 5, cone_norm: ConeNorm::default(), renorm: RenormSettings::default(), newton: NewtonSettings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Converged,
    Diverged,
    Indeterminate,
    /// The method raised an error (recorded, never fatal in a scan).
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::Diverged => "diverged",
            Self::Indeterminate => "indeterminate",
            Self::Error => "error",
        })
    }
}

/// Outcome of one method at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub mu: [f64; 3],
    pub status: Status,
    /// Renormalization steps or Newton steps taken.
    pub iterations: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Runs `method` at amplitudes `mu`.
pub fn evaluate(family: Family, method: Method, settings: &MethodSettings, mu: [f64; 3]) -> ScanCell {
    let start = Instant::now();
    let (status, iterations, message) = match run_method(family, method, settings, mu) {
        Ok((s, n, m)) => (s, n, m),
        Err(e) => (Status::Error, 0, Some(e.to_string())),
    };
    if let (Status::Error, Some(m)) = (status, &message) {
        log::warn!("{family} {method} at {mu:?}: {m}");
    } else if let Some(m) = &message {
        log::debug!("{family} {method} at {mu:?}: {status} after {iterations} ({m})");
    }
    ScanCell { mu, status, iterations, wall_time: start.elapsed().as_secs_f64(), message }
}

fn run_method(family: Family, method: Method, settings: &MethodSettings, mu: [f64; 3]) -> Result<(Status, usize, Option<String>)> {
    let freq = family.frequency().with_cone_norm(settings.cone_norm);
    let modes = family.modes(mu);
    match method {
        Method::RenormTime1 | Method::RenormAdaptive => {
            let mut s = settings.renorm;
            s.lie_variant = if method == Method::RenormTime1 { LieVariant::Time1 } else { LieVariant::Adaptive };
            let h = FtHamiltonian::from_cosines(freq.omega.clone(), &family.big_omega(), settings.cutoff, settings.order, &modes)?;
            let o = iterate_renorm(&h, &freq, &s)?;
            let status = match o.status {
                RenormStatus::Converged => Status::Converged,
                RenormStatus::Diverged => Status::Diverged,
                RenormStatus::Indeterminate => Status::Indeterminate,
            };
            Ok((status, o.iterations, o.step_failure))
        }
        Method::Conjugation => {
            let v = PotentialSpec::new(family.big_omega(), modes)?;
            let o = run_newton(&v, &freq.omega, &settings.newton)?;
            let status = match &o {
                NewtonOutcome::Converged { .. } => Status::Converged,
                NewtonOutcome::Failed { reason: FailureReason::MaxIterations, .. } => Status::Indeterminate,
                NewtonOutcome::Failed { .. } => Status::Diverged,
            };
            Ok((status, o.iterations(), o.failure().map(|r| r.to_string())))
        }
    }
}
