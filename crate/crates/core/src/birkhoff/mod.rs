//! Rotation numbers of the stroboscopic map of the reduced
//! quasi-periodically forced pendulum
//!
//! ```text
//! dphi/dt = A - 1
//! dA/dt   = mu1 sin(phi + nu2 t) + mu2 sin(phi + nu1 t) + mu3 sin(phi)
//! ```
//!
//! sampled every `T = 2 pi / nu2`, with weighted Birkhoff averages.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::spiral_mean;

mod strobe;
mod verdict;
mod wb;

pub use strobe::{flow, orbit, strobe_map};
pub use verdict::{torus_verdict, verdict_from_scan, TorusVerdict, VerdictSettings};
pub use wb::{bump, compensated_sum, weighted_average, weighted_rotation, weights};


/// Default local error tolerance of the integrator.
pub const INTEG_TOL: f64 = 1e-12;

/// Default orbit length.
pub const ORBIT_LENGTH: usize = 40_000;

/// Reduced one-and-a-half degree of freedom system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl ReducedSystem {
    pub fn new(mu1: f64, mu2: f64, mu3: f64, nu1: f64, nu2: f64) -> Result<Self> {
        if !(nu2 > 0.0) || !nu1.is_finite() || !nu2.is_finite() {
            return Err(Error::InvalidFrequency(format!("need finite nu1 and nu2 > 0 (nu1 = {nu1}, nu2 = {nu2})")));
        }
        if ![mu1, mu2, mu3].iter().all(|m| m.is_finite()) {
            return Err(Error::Config("amplitudes must be finite".into()));
        }
        Ok(Self { mu1, mu2, mu3, nu1, nu2 })
    }

    /// Reduction of the three-dimensional spiral-mean family:
    /// `nu1 = sigma^2 + 1`, `nu2 = sigma + 1`.
    pub fn spiral(mu1: f64, mu2: f64, mu3: f64) -> Result<Self> {
        let s = spiral_mean();
        Self::new(mu1, mu2, mu3, s * s + 1.0, s + 1.0)
    }

    /// Strobe period `2 pi / nu2`.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nu2
    }

    /// Rotation number of the torus with frequency `(-1, nu1, nu2)`.
    pub fn target_rho(&self) -> f64 {
        -1.0 / self.nu2
    }

    /// Rotation number of the unperturbed flow from action `a0`.
    pub fn free_rho(&self, a0: f64) -> f64 {
        (a0 - 1.0) / self.nu2
    }

    pub(crate) fn field(&self, t: f64, phi: f64, a: f64) -> (f64, f64) {
        let da = self.mu1 * (phi + self.nu2 * t).sin() + self.mu2 * (phi + self.nu1 * t).sin() + self.mu3 * phi.sin();
        (a - 1.0, da)
    }
}

/// Rotation number estimate from one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSample {
    #[serde(rename = "A0")]
    pub a0: f64,
    /// Mean lift increment per strobe step, in turns.
    pub rho: f64,
    #[serde(rename = "S")]
    pub s: usize,
    /// `|WB_S - WB_{S/2}|`.
    pub tail_gap: f64,
}

/// Weighted Birkhoff rotation number of the orbit from `(0, a0)`.
pub fn weighted_birkhoff_rho(sys: &ReducedSystem, a0: f64, s: usize, integ_tol: f64) -> Result<RotationSample> {
    if s < 100 {
        return Err(Error::Config(format!("orbit length must be at least 100 (got {s})")));
    }
    let lift = orbit(sys, 0.0, a0, s, integ_tol)?;
    let (rho, half) = weighted_rotation(&lift);
    let turn = 2.0 * std::f64::consts::PI;
    Ok(RotationSample { a0, rho: rho / turn, s, tail_gap: (rho - half).abs() / turn })
}

/// `n` uniformly spaced initial actions over `[lo, hi]`.
pub fn a0_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::Config(format!("A0 scan needs lo < hi and at least 2 samples (got [{lo}, {hi}], {n})")));
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

/// Rotation numbers over `n` uniformly spaced initial actions, one
/// result per action so that failures stay local.
pub fn rho_scan_each(sys: &ReducedSystem, range: (f64, f64), n: usize, s: usize, integ_tol: f64) -> Result<Vec<(f64, Result<RotationSample>)>> {
    let grid = a0_grid(range.0, range.1, n)?;
    Ok(grid.into_par_iter().map(|a0| (a0, weighted_birkhoff_rho(sys, a0, s, integ_tol))).collect())
}

/// As [`rho_scan_each`], failing on the first integrator error.
pub fn rho_scan(sys: &ReducedSystem, range: (f64, f64), n: usize, s: usize, integ_tol: f64) -> Result<Vec<RotationSample>> {
    rho_scan_each(sys, range, n, s, integ_tol)?.into_iter().map(|(_, r)| r).collect()
}

/// Writes samples as CSV with header `A0,rho,S,tail_gap`.
pub fn write_samples<W: Write>(samples: &[RotationSample], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["A0", "rho", "S", "tail_gap"])?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples_file(samples: &[RotationSample], path: &Path) -> Result<()> {
    write_samples(samples, std::fs::File::create(path)?)
}

pub fn read_samples(path: &Path) -> Result<Vec<RotationSample>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}
