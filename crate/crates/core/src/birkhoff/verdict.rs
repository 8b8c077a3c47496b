//! Presence test for the torus with rotation number `-1/nu2`.
//!
//! An invariant torus separates the orbits with `rho < -1/nu2` from those
//! with `rho > -1/nu2`. The test bisects on `A0` towards the crossing and
//! inspects the orbits bracketing it and a few more at fixed offsets: for
//! a torus all are quasi-periodic (small tail gap) with `rho` next to the
//! target; in a chaotic layer they are not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rho_scan_each, weighted_birkhoff_rho, ReducedSystem, RotationSample, INTEG_TOL, ORBIT_LENGTH};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSettings {
    /// Coarse `A0` window.
    pub range: (f64, f64),
    pub samples: usize,
    pub orbit_length: usize,
    pub integ_tol: f64,
    /// Bracketing samples must satisfy `|rho + 1/nu2| < rho_tol` ...
    pub rho_tol: f64,
    /// ... and `tail_gap < gap_tol`.
    pub gap_tol: f64,
    /// Bisection stops once the `A0` bracket is narrower than this.
    pub bracket_tol: f64,
    /// Extra orbits at `A* +- offset` around the final bracket midpoint `A*`.
    pub offsets: Vec<f64>,
}

impl Default for VerdictSettings {
    fn default() -> Self {
        Self {
            range: (-0.3, 0.3),
            samples: 61,
            orbit_length: ORBIT_LENGTH,
            integ_tol: INTEG_TOL,
            rho_tol: 1e-6,
            gap_tol: 1e-7,
            bracket_tol: 1e-9,
            offsets: vec![1e-8, 1e-7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusVerdict {
    pub present: bool,
    /// `max(|rho + 1/nu2| / rho_tol, tail_gap / gap_tol)` over the
    /// inspected orbits; the torus is reported present when it is below 1.
    pub margin: f64,
    /// Final bisection bracket, `rho` below and above the target.
    pub bracket: Option<(RotationSample, RotationSample)>,
    /// Orbits at the offsets around the bracket.
    pub neighbours: Vec<RotationSample>,
    /// Orbits computed, coarse scan included.
    pub evaluations: usize,
}

/// Runs the coarse scan and the bisection.
pub fn torus_verdict(sys: &ReducedSystem, settings: &VerdictSettings) -> Result<TorusVerdict> {
    let coarse = rho_scan_each(sys, settings.range, settings.samples, settings.orbit_length, settings.integ_tol)?;
    let samples: Vec<RotationSample> = coarse.into_iter().filter_map(|(_, r)| r.ok()).collect();
    let n = samples.len();
    let mut v = verdict_from_scan(sys, &samples, settings)?;
    v.evaluations += n;
    Ok(v)
}

/// Bisection seeded by an existing scan (ordered by `A0`).
pub fn verdict_from_scan(sys: &ReducedSystem, samples: &[RotationSample], settings: &VerdictSettings) -> Result<TorusVerdict> {
    if !(settings.rho_tol > 0.0 && settings.gap_tol > 0.0 && settings.bracket_tol > 0.0) {
        return Err(Error::Config("verdict tolerances must be positive".into()));
    }
    let target = sys.target_rho();
    let regular = |s: &RotationSample| s.tail_gap < settings.gap_tol;
    // lowest regular sample above the target, then the highest regular
    // sample below the target to its left
    let hi = samples.iter().filter(|s| regular(s) && s.rho >= target).min_by(|a, b| a.a0.total_cmp(&b.a0));
    let lo = hi.and_then(|h| samples.iter().filter(|s| regular(s) && s.rho < target && s.a0 < h.a0).max_by(|a, b| a.a0.total_cmp(&b.a0)));
    let (Some(&(mut lo)), Some(&(mut hi))) = (lo, hi) else {
        log::info!("no regular samples on both sides of rho = {target}");
        return Ok(TorusVerdict { present: false, margin: f64::INFINITY, bracket: None, neighbours: Vec::new(), evaluations: 0 });
    };
    let mut evaluations = 0;
    while hi.a0 - lo.a0 > settings.bracket_tol {
        let mid = 0.5 * (lo.a0 + hi.a0);
        if mid <= lo.a0 || mid >= hi.a0 {
            break;
        }
        let s = weighted_birkhoff_rho(sys, mid, settings.orbit_length, settings.integ_tol)?;
        evaluations += 1;
        if s.rho < target {
            lo = s;
        } else {
            hi = s;
        }
    }
    let centre = 0.5 * (lo.a0 + hi.a0);
    let points: Vec<f64> = settings.offsets.iter().flat_map(|d| [centre - d, centre + d]).collect();
    let neighbours = points
        .into_par_iter()
        .map(|a0| weighted_birkhoff_rho(sys, a0, settings.orbit_length, settings.integ_tol))
        .collect::<Result<Vec<_>>>()?;
    evaluations += neighbours.len();
    let margin = [lo, hi]
        .iter()
        .chain(&neighbours)
        .map(|s| ((s.rho - target).abs() / settings.rho_tol).max(s.tail_gap / settings.gap_tol))
        .fold(0.0, f64::max);
    let margin = if margin.is_nan() { f64::INFINITY } else { margin };
    Ok(TorusVerdict { present: margin < 1.0, margin, bracket: Some((lo, hi)), neighbours, evaluations })
}
