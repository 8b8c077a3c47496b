//! Critical thresholds along one-parameter families.

use serde::{Deserialize, Serialize};

use super::{evaluate, Family, Method, MethodSettings, Status};
use crate::error::{Error, Result};

/// The family `mu = eps * direction + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub direction: [f64; 3],
    pub offset: [f64; 3],
}

impl Ray {
    pub fn new(direction: [f64; 3], offset: [f64; 3]) -> Self {
        Self { direction, offset }
    }

    /// `mu1 = mu2 = eps`.
    pub fn diagonal() -> Self {
        Self::new([1.0, 1.0, 0.0], [0.0; 3])
    }

    /// `mu1 = mu2 / 5 = eps`, `mu3 = 0.1`.
    pub fn spiral_fifth() -> Self {
        Self::new([1.0, 5.0, 0.0], [0.0, 0.0, super::DEFAULT_MU3])
    }

    pub fn at(&self, eps: f64) -> [f64; 3] {
        std::array::from_fn(|i| eps * self.direction[i] + self.offset[i])
    }
}

/// Result of [`bisect_threshold`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub ray: Ray,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub evaluations: usize,
    /// Indeterminate outcomes counted as diverged.
    pub coercions: usize,
}

/// Bisection on `eps` along `ray` until `eps_hi - eps_lo < tol`, keeping
/// `eps_lo` converged and `eps_hi` diverged. Indeterminate counts as
/// diverged; errors abort.
pub fn bisect_threshold(family: Family, method: Method, settings: &MethodSettings, ray: Ray, range: (f64, f64), tol: f64) -> Result<Bracket> {
    let (mut lo, mut hi) = range;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Config(format!("bisection needs lo < hi and tol > 0 (got [{lo}, {hi}], tol {tol})")));
    }
    let mut evaluations = 0;
    let mut coercions = 0;
    let mut converged = |eps: f64| -> Result<bool> {
        let cell = evaluate(family, method, settings, ray.at(eps));
        evaluations += 1;
        log::debug!("eps = {eps}: {} after {}", cell.status, cell.iterations);
        match cell.status {
            Status::Converged => Ok(true),
            Status::Diverged => Ok(false),
            Status::Indeterminate => {
                log::warn!("indeterminate outcome at eps = {eps} treated as diverged");
                coercions += 1;
                Ok(false)
            }
            Status::Error => Err(Error::Bracket(format!("method failed at eps = {eps}: {}", cell.message.unwrap_or_default()))),
        }
    };
    if !converged(lo)? {
        return Err(Error::Bracket(format!("not converged at the lower end eps = {lo}")));
    }
    if converged(hi)? {
        return Err(Error::Bracket(format!("converged at the upper end eps = {hi}")));
    }
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if converged(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket { ray, eps_lo: lo, eps_hi: hi, evaluations, coercions })
}
