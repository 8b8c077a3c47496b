//! Renormalization-group map `R(H) = H o U_H o N` on the Fourier–Taylor family.
//!
//! One step eliminates the non-resonant modes by a sequence of Lie transforms
//! and then rescales time, actions and angles so that the frequency vector is
//! restored. Iterating the step either drives the perturbation to zero (the
//! torus exists) or makes it blow up.

mod lie;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{dot_int, norm2, FrequencyData};
use crate::ft::{Coeffs, FtHamiltonian, GeneratingFunction};

pub use lie::{lie_transform, lie_transform_adaptive, lie_transform_time1, LieSettings, LieVariant, Transformed};

/// `|omega.nu| > sigma |nu| + j kappa`, with `|nu|` given by `freq.cone_norm`.
pub fn is_nonresonant(freq: &FrequencyData, nu: &[i64], j: usize) -> bool {
    let w = dot_int(&freq.omega, nu).abs();
    let len = freq.cone_norm.apply(nu);
    w > freq.sigma * len + j as f64 * freq.kappa
}

/// Per-mode resonance table for a truncation box, `mask[j * modes + i]`.
pub fn resonance_mask(freq: &FrequencyData, h: &FtHamiltonian) -> Vec<bool> {
    let modes = h.coeffs.modes();
    let d = modes.dim();
    let mut mask = Vec::with_capacity((h.order() + 1) * modes.len());
    for j in 0..=h.order() {
        for i in 0..modes.len() {
            mask.push(is_nonresonant(freq, &modes.mode(i)[..d], j));
        }
    }
    mask
}

/// Splits `H`'s perturbation into its non-resonant and resonant parts.
pub fn split_resonant(freq: &FrequencyData, h: &FtHamiltonian) -> (Coeffs, Coeffs) {
    let mask = resonance_mask(freq, h);
    let mut minus = h.coeffs.clone();
    let mut plus = h.coeffs.clone();
    for ((m, p), non) in minus.as_mut_slice().iter_mut().zip(plus.as_mut_slice()).zip(mask) {
        if non {
            *p = Complex64::new(0.0, 0.0);
        } else {
            *m = Complex64::new(0.0, 0.0);
        }
    }
    (minus, plus)
}

/// Size of what elimination has to remove: the non-resonant part plus the
/// mean of the linear term (which the constant `a` removes).
pub fn elimination_residual(freq: &FrequencyData, h: &FtHamiltonian) -> f64 {
    let (minus, _) = split_resonant(freq, h);
    let lin = if h.order() >= 1 { h.coeffs.mean(1).norm() } else { 0.0 };
    minus.l1() + lin
}

/// Quadratic mean used by the generating-function formulas: the implicit
/// `1/2` plus the perturbation's own mean of `f^(2)`.
fn quadratic_mean(h: &FtHamiltonian) -> f64 {
    0.5 + if h.order() >= 2 { h.coeffs.mean(2).re } else { 0.0 }
}

/// Solves `I^-(V + {S, H_0}) = 0` mode by mode, with `H_0 = omega.A + q (Omega.A)^2`.
pub fn build_generating_function(h: &FtHamiltonian, freq: &FrequencyData) -> Result<GeneratingFunction> {
    if freq.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: freq.dim(), got: h.dim() });
    }
    let modes = h.coeffs.modes();
    let d = modes.dim();
    let q = quadratic_mean(h);
    let mut s = GeneratingFunction::zero(modes, h.order(), h.big_omega.clone());
    let zero = modes.zero_index();
    for i in 0..modes.len() {
        if i == zero {
            continue;
        }
        let nu = modes.mode(i);
        let nu = &nu[..d];
        let w = dot_int(&h.omega, nu);
        let wo = dot_int(&h.big_omega, nu);
        let mut prev = Complex64::new(0.0, 0.0);
        for j in 0..=h.order() {
            let y = if is_nonresonant(freq, nu, j) {
                assert!(w != 0.0, "non-resonant mode with omega.nu = 0");
                (h.coeffs.power(j)[i] - prev * (2.0 * q * wo)) / w
            } else {
                Complex64::new(0.0, 0.0)
            };
            s.y.power_mut(j)[i] = y;
            prev = y;
        }
    }
    if h.order() >= 1 {
        let lin = h.coeffs.mean(1).re;
        if lin != 0.0 {
            if q.abs() < 1e-14 {
                return Err(Error::SingularCounterterm(q));
            }
            let om2 = norm2(&h.big_omega).powi(2);
            s.a = -lin / (2.0 * om2 * q);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormSettings {
    pub lie_variant: LieVariant,
    pub lie: LieSettings,
    /// Elimination stops once the non-resonant residual is below this.
    pub elim_tol: f64,
    /// Maximum number of Lie transforms per elimination.
    pub max_kam: usize,
    pub max_iter: usize,
    pub div_threshold: f64,
    pub conv_threshold: f64,
}

impl Default for RenormSettings {
    fn default() -> Self {
        Self {
            lie_variant: LieVariant::Time1,
            lie: LieSettings::default(),
            elim_tol: 1e-12,
            max_kam: 100,
            max_iter: 100,
            div_threshold: 1e10,
            conv_threshold: 1e-12,
        }
    }
}

/// Output of [`eliminate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub hamiltonian: FtHamiltonian,
    /// Residual before each Lie transform and after the last one.
    pub residuals: Vec<f64>,
    pub underflow_steps: usize,
}

/// Removes the non-resonant modes by repeated Lie transforms.
pub fn eliminate(h: &FtHamiltonian, freq: &FrequencyData, variant: LieVariant, lie: &LieSettings, tol: f64, max_kam: usize) -> Result<Elimination> {
    let mut current = h.clone();
    let mut residuals = Vec::new();
    let mut underflow_steps = 0;
    loop {
        let eps = elimination_residual(freq, &current);
        residuals.push(eps);
        if eps < tol {
            return Ok(Elimination { hamiltonian: current, residuals, underflow_steps });
        }
        if !eps.is_finite() || residuals.len() > max_kam {
            return Err(Error::EliminationFailure { iterations: residuals.len() - 1, residual: eps });
        }
        let s = build_generating_function(&current, freq)?;
        let t = lie_transform(&current, &s, variant, lie)?;
        underflow_steps += t.underflow_steps;
        current = t.hamiltonian;
    }
}

/// Action-scaling factor `lambda = theta1^{-1} |N Omega|^2 (1 + 2 <f^(2)>)`.
pub fn action_scaling(h: &FtHamiltonian, freq: &FrequencyData) -> Result<f64> {
    let twist = 1.0 + 2.0 * if h.order() >= 2 { h.coeffs.mean(2).re } else { 0.0 };
    if twist.abs() < 1e-12 {
        return Err(Error::DegenerateTwist(twist));
    }
    let n_omega = norm2(&freq.matrix.mul_f64(&h.big_omega));
    Ok(n_omega * n_omega * twist / freq.theta1)
}

/// Rescales time, actions and angles so the frequency vector is restored.
pub fn rescale(h: &FtHamiltonian, freq: &FrequencyData) -> Result<FtHamiltonian> {
    if freq.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: freq.dim(), got: h.dim() });
    }
    let lambda = action_scaling(h, freq)?;
    let n_big = freq.matrix.mul_f64(&h.big_omega);
    let n_len = norm2(&n_big);
    let mu = 1.0 / freq.theta1;
    let mut out = h.reindex_modes(&freq.matrix)?;
    let mut factor = mu * lambda;
    for j in 0..=out.order() {
        out.coeffs.power_mut(j).iter_mut().for_each(|c| *c *= factor);
        factor *= n_len / lambda;
    }
    out.coeffs.set_mean(0, Complex64::new(0.0, 0.0));
    if out.order() >= 2 {
        out.coeffs.set_mean(2, Complex64::new(0.0, 0.0));
    }
    out.big_omega = n_big.iter().map(|x| x / n_len).collect();
    Ok(out)
}

/// One application of the renormalization map.
pub fn renorm_step(h: &FtHamiltonian, freq: &FrequencyData, settings: &RenormSettings) -> Result<FtHamiltonian> {
    let e = eliminate(h, freq, settings.lie_variant, &settings.lie, settings.elim_tol, settings.max_kam)?;
    rescale(&e.hamiltonian, freq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RenormStatus {
    Converged,
    Diverged,
    Indeterminate,
}

impl std::fmt::Display for RenormStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::Diverged => "diverged",
            Self::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormOutcome {
    pub status: RenormStatus,
    pub iterations: usize,
    pub final_norm: f64,
    /// Set when divergence was declared because a step failed (elimination or
    /// Lie series) rather than because the norm crossed the threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_failure: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega_history: Vec<Vec<f64>>,
}

/// Iterates [`renorm_step`] until the norm leaves `[conv_threshold, div_threshold]`.
pub fn iterate_renorm(h: &FtHamiltonian, freq: &FrequencyData, settings: &RenormSettings) -> Result<RenormOutcome> {
    if !(settings.div_threshold > settings.conv_threshold) {
        return Err(Error::Config("divergence threshold must exceed convergence threshold".into()));
    }
    let mut current = h.clone();
    let mut omega_history = vec![current.big_omega.clone()];
    for n in 0..=settings.max_iter {
        let norm = current.norm();
        let outcome = |status, step_failure| RenormOutcome { status, iterations: n, final_norm: norm, step_failure, omega_history: Vec::new() };
        if !norm.is_finite() || norm > settings.div_threshold {
            return Ok(RenormOutcome { omega_history, ..outcome(RenormStatus::Diverged, None) });
        }
        if norm < settings.conv_threshold {
            return Ok(RenormOutcome { omega_history, ..outcome(RenormStatus::Converged, None) });
        }
        if n == settings.max_iter {
            return Ok(RenormOutcome { omega_history, ..outcome(RenormStatus::Indeterminate, None) });
        }
        match renorm_step(&current, freq, settings) {
            Ok(next) => current = next,
            Err(e @ (Error::EliminationFailure { .. } | Error::LieSeriesDivergence { .. } | Error::DegenerateTwist(_) | Error::SingularCounterterm(_))) => {
                return Ok(RenormOutcome { omega_history, ..outcome(RenormStatus::Diverged, Some(e.to_string())) });
            }
            Err(e) => return Err(e),
        }
        omega_history.push(current.big_omega.clone());
    }
    unreachable!("loop returns at max_iter")
}
