//! Converged/diverged boundary extraction and corner detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, Family, Method, MethodSettings, Status};
use crate::error::{Error, Result};

/// Rectangle in the `(mu1, mu2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub mu1: (f64, f64),
    pub mu2: (f64, f64),
}

impl Region {
    fn validate(&self) -> Result<()> {
        if !(self.mu1.0 < self.mu1.1 && self.mu2.0 < self.mu2.1) {
            return Err(Error::Config(format!("empty region {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspSettings {
    /// Number of `mu1` columns.
    pub columns: usize,
    /// Bisection stops at this fraction of the region height.
    pub tol: f64,
    /// Turning angle (degrees) above which a vertex is a cusp candidate.
    pub angle_deg: f64,
}

impl Default for CuspSettings {
    fn default() -> Self {
        Self { columns: 13, tol: 1e-3, angle_deg: 30.0 }
    }
}

/// Boundary crossing in one column, bracketed by `[mu2_lo, mu2_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub mu1: f64,
    pub mu2_lo: f64,
    pub mu2_hi: f64,
}

impl BoundaryPoint {
    pub fn mu2(&self) -> f64 {
        0.5 * (self.mu2_lo + self.mu2_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub mu1: f64,
    pub mu2: f64,
    /// Turning angle of the boundary polyline at this vertex, measured in
    /// coordinates where the region is the unit square.
    pub turn_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspReport {
    pub region: Region,
    pub boundary: Vec<BoundaryPoint>,
    /// Columns without a converged-to-diverged crossing.
    pub skipped: Vec<f64>,
    pub cusps: Vec<Cusp>,
}

/// Boundary of `{converged(mu1, mu2)}` by bisection on `mu2` in each column,
/// then corners of the resulting polyline.
pub fn find_cusps<F>(converged: F, region: Region, settings: &CuspSettings) -> Result<CuspReport>
where
    F: Fn(f64, f64) -> Result<bool> + Sync,
{
    region.validate()?;
    if settings.columns < 3 || !(settings.tol > 0.0) {
        return Err(Error::Config("cusp probe needs at least 3 columns and a positive tolerance".into()));
    }
    let (a, b) = region.mu1;
    let cols: Vec<f64> = (0..settings.columns).map(|k| a + (b - a) * k as f64 / (settings.columns - 1) as f64).collect();
    let height = region.mu2.1 - region.mu2.0;
    let column = |mu1: f64| -> Result<Option<BoundaryPoint>> {
        let (mut lo, mut hi) = region.mu2;
        if !converged(mu1, lo)? || converged(mu1, hi)? {
            log::info!("no boundary crossing in column mu1 = {mu1}; skipped");
            return Ok(None);
        }
        while hi - lo > settings.tol * height {
            let mid = 0.5 * (lo + hi);
            if converged(mu1, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(BoundaryPoint { mu1, mu2_lo: lo, mu2_hi: hi }))
    };
    let results = cols.par_iter().map(|&m| column(m)).collect::<Result<Vec<_>>>()?;
    let mut boundary = Vec::new();
    let mut skipped = Vec::new();
    for (m, r) in cols.iter().zip(results) {
        match r {
            Some(p) => boundary.push(p),
            None => skipped.push(*m),
        }
    }
    let cusps = corners(&boundary, &region, settings.angle_deg);
    Ok(CuspReport { region, boundary, skipped, cusps })
}

fn corners(boundary: &[BoundaryPoint], region: &Region, angle_deg: f64) -> Vec<Cusp> {
    let (w, h) = (region.mu1.1 - region.mu1.0, region.mu2.1 - region.mu2.0);
    let xy: Vec<(f64, f64)> = boundary.iter().map(|p| ((p.mu1 - region.mu1.0) / w, (p.mu2() - region.mu2.0) / h)).collect();
    let heading: Vec<f64> = xy.windows(2).map(|s| (s[1].1 - s[0].1).atan2(s[1].0 - s[0].0)).collect();
    heading
        .windows(2)
        .enumerate()
        .filter_map(|(i, t)| {
            let mut turn = (t[1] - t[0]).abs().to_degrees();
            if turn > 180.0 {
                turn = 360.0 - turn;
            }
            let p = &boundary[i + 1];
            (turn > angle_deg).then(|| Cusp { mu1: p.mu1, mu2: p.mu2(), turn_deg: turn })
        })
        .collect()
}

/// [`find_cusps`] with a method as the oracle; indeterminate counts as
/// diverged and errors abort.
pub fn cusp_probe(family: Family, method: Method, settings: &MethodSettings, mu3: f64, region: Region, cusp: &CuspSettings) -> Result<CuspReport> {
    let oracle = |mu1: f64, mu2: f64| -> Result<bool> {
        let cell = evaluate(family, method, settings, [mu1, mu2, mu3]);
        match cell.status {
            Status::Converged => Ok(true),
            Status::Diverged | Status::Indeterminate => Ok(false),
            Status::Error => Err(Error::Bracket(format!("method failed at ({mu1}, {mu2}): {}", cell.message.unwrap_or_default()))),
        }
    };
    find_cusps(oracle, region, cusp)
}
