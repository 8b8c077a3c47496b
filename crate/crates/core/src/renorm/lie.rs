//! Lie transforms `H -> exp(L_S) H` with `L_S X = {S, X}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ft::{BracketEngine, FtHamiltonian, FtSeries, GeneratingFunction, PreparedTerm};

/// How `exp(L_S)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LieVariant {
    /// Power series at time 1.
    Time1,
    /// Recursive step halving, blending one step against two half steps.
    Adaptive,
}

impl std::str::FromStr for LieVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time1" | "time-1" => Ok(Self::Time1),
            "adaptive" => Ok(Self::Adaptive),
            other => Err(Error::Config(format!("unknown Lie variant `{other}` (expected time1 or adaptive)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieSettings {
    /// The power series stops once a term's norm falls below this.
    pub series_tol: f64,
    pub series_max: usize,
    /// Initial step of the adaptive variant.
    pub eps0: f64,
    pub min_step: f64,
    pub abstol: f64,
    pub reltol: f64,
}

impl Default for LieSettings {
    fn default() -> Self {
        Self { series_tol: 1e-15, series_max: 60, eps0: 1.0, min_step: 1.0 / 1024.0, abstol: 1e-12, reltol: 1e-10 }
    }
}

/// Number of consecutive growing terms that marks a divergent series.
const GROWTH_LIMIT: usize = 5;

/// Result of an adaptive transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub hamiltonian: FtHamiltonian,
    /// Steps accepted only because they fell below `min_step`.
    pub underflow_steps: usize,
}

pub(crate) struct LieOperator {
    generator: PreparedTerm,
}

impl LieOperator {
    pub(crate) fn new(h: &FtHamiltonian, s: &GeneratingFunction) -> Result<Self> {
        if s.y.modes().dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), got: s.y.modes().dim() });
        }
        let engine = Arc::new(BracketEngine::new(h.coeffs.modes(), h.order(), &h.omega, &h.big_omega)?);
        Ok(Self { generator: engine.prepare(&s.to_series())? })
    }

    /// `exp(step L_S) x` by its power series. A term counts as negligible once
    /// its norm is below `tol * max(1, |x|)`.
    pub(crate) fn exp(&self, x: &FtSeries, step: f64, tol: f64, max_terms: usize) -> Result<FtSeries> {
        let tol = tol * x.coeffs.l1().max(1.0);
        let mut result = x.clone();
        let mut term = x.clone();
        let mut last = f64::INFINITY;
        let mut growing = 0;
        for k in 1..=max_terms {
            let mut next = self.generator.bracket_left(&term)?;
            next.scale(-step / k as f64);
            let norm = next.l1();
            if !norm.is_finite() {
                return Err(Error::LieSeriesDivergence { terms: k, last_norm: norm });
            }
            result.coeffs.axpy(1.0, &next);
            if norm < tol {
                return Ok(result);
            }
            growing = if norm > last { growing + 1 } else { 0 };
            if growing >= GROWTH_LIMIT {
                return Err(Error::LieSeriesDivergence { terms: k, last_norm: norm });
            }
            last = norm;
            term = FtSeries::from_coeffs(next);
        }
        Err(Error::LieSeriesDivergence { terms: max_terms, last_norm: last })
    }

    pub(crate) fn adaptive(&self, x: &FtSeries, step: f64, set: &LieSettings, underflow: &mut usize) -> Result<FtSeries> {
        if step < set.min_step {
            *underflow += 1;
            return self.exp(x, step, set.series_tol, set.series_max);
        }
        let res1 = self.exp(x, step, set.series_tol, set.series_max);
        let res2 = self
            .exp(x, 0.5 * step, set.series_tol, set.series_max)
            .and_then(|half| self.exp(&half, 0.5 * step, set.series_tol, set.series_max));
        if let (Ok(r1), Ok(r2)) = (&res1, &res2) {
            let mut diff = r1.coeffs.clone();
            diff.axpy(-1.0, &r2.coeffs);
            let r1_norm = r1.coeffs.l1();
            if diff.l1() < set.abstol + set.reltol * r1_norm {
                let mut blend = r1.clone();
                blend.coeffs.scale(0.75);
                blend.coeffs.axpy(0.25, &r2.coeffs);
                blend.action_linear = 0.75 * r1.action_linear + 0.25 * r2.action_linear;
                blend.angle_linear = 0.75 * r1.angle_linear + 0.25 * r2.angle_linear;
                return Ok(blend);
            }
        }
        let mid = self.adaptive(x, 0.5 * step, set, underflow)?;
        self.adaptive(&mid, 0.5 * step, set, underflow)
    }
}

/// `exp(L_S) H` summed as a power series until a term's norm drops below `series_tol`.
pub fn lie_transform_time1(h: &FtHamiltonian, s: &GeneratingFunction, series_tol: f64, series_max: usize) -> Result<FtHamiltonian> {
    if s.is_zero() {
        return Ok(h.clone());
    }
    let op = LieOperator::new(h, s)?;
    Ok(h.from_series(op.exp(&h.to_series(), 1.0, series_tol, series_max)?))
}

/// `exp(eps0 L_S) H` by recursive step halving.
pub fn lie_transform_adaptive(h: &FtHamiltonian, s: &GeneratingFunction, settings: &LieSettings) -> Result<Transformed> {
    if !(settings.min_step > 0.0 && settings.min_step <= settings.eps0 && settings.eps0 <= 1.0) {
        return Err(Error::Config(format!(
            "adaptive Lie transform needs 0 < min_step <= eps0 <= 1 (got min_step = {}, eps0 = {})",
            settings.min_step, settings.eps0
        )));
    }
    if s.is_zero() {
        return Ok(Transformed { hamiltonian: h.clone(), underflow_steps: 0 });
    }
    let op = LieOperator::new(h, s)?;
    let mut underflow = 0;
    let out = op.adaptive(&h.to_series(), settings.eps0, settings, &mut underflow)?;
    if underflow > 0 {
        log::warn!("adaptive Lie transform accepted {underflow} steps below min_step");
    }
    Ok(Transformed { hamiltonian: h.from_series(out), underflow_steps: underflow })
}

/// Applies the chosen variant; returns the transformed Hamiltonian and the underflow count.
pub fn lie_transform(h: &FtHamiltonian, s: &GeneratingFunction, variant: LieVariant, settings: &LieSettings) -> Result<Transformed> {
    match variant {
        LieVariant::Time1 => Ok(Transformed {
            hamiltonian: lie_transform_time1(h, s, settings.series_tol, settings.series_max)?,
            underflow_steps: 0,
        }),
        LieVariant::Adaptive => lie_transform_adaptive(h, s, settings),
    }
}
