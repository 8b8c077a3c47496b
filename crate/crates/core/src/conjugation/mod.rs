//! Newton method in configuration space for the conjugation function `h`.
//!
//! An invariant torus of frequency `omega` for
//! `H = omega.A + 1/2 (Omega.A)^2 + V(phi)` is parametrised as
//! `phi = psi + Omega h(psi)`, where `h` solves
//!
//! ```text
//! (omega.d)^2 h + Omega.dV(psi + Omega h) + lambda = 0
//! ```
//!
//! with a counterterm `lambda` that must vanish at a true solution. Each
//! Newton step reduces to two constant-coefficient cohomological equations,
//! solved by division in Fourier space.

pub(crate) mod solver;

use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freq::{dot, dot_int};
use crate::spectral::{resample_spectrum, RealFftNd};

pub use solver::{dynamical_certificate, initial_guess, newton_step, residual, run_newton, run_newton_forced, solve_cohomological, Forcing, StepReport};

/// Trigonometric potential `V(phi) = sum amplitude cos(nu.phi)` together with
/// the direction `Omega` of the quadratic term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Direction of the quadratic term (not necessarily unit length).
    pub big_omega: Vec<f64>,
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub nu: Vec<i64>,
    pub amplitude: f64,
}

impl PotentialSpec {
    pub fn new(big_omega: Vec<f64>, modes: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        let d = big_omega.len();
        let mut out = Vec::with_capacity(modes.len());
        for (nu, amplitude) in modes {
            if nu.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: nu.len() });
            }
            if nu.iter().all(|&v| v == 0) {
                return Err(Error::Config("potential modes must be non-zero".into()));
            }
            out.push(Mode { nu, amplitude });
        }
        Ok(Self { big_omega, modes: out })
    }

    pub fn dim(&self) -> usize {
        self.big_omega.len()
    }

    /// `Omega . grad V` at `phi`.
    pub fn omega_gradient(&self, phi: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| -m.amplitude * dot_int(&self.big_omega, &m.nu) * dot_int(phi, &m.nu).sin())
            .sum()
    }

    /// `grad V` at `phi`.
    pub fn gradient(&self, phi: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for m in &self.modes {
            let s = -m.amplitude * dot_int(phi, &m.nu).sin();
            for (gk, &nk) in g.iter_mut().zip(&m.nu) {
                *gk += s * nk as f64;
            }
        }
        g
    }

    pub fn value(&self, phi: &[f64]) -> f64 {
        self.modes.iter().map(|m| m.amplitude * dot_int(phi, &m.nu).cos()).sum()
    }

    /// Largest `|nu_k|` over all modes.
    pub fn max_wavenumber(&self) -> i64 {
        self.modes.iter().flat_map(|m| m.nu.iter().map(|v| v.abs())).max().unwrap_or(0)
    }
}

/// Unknowns of the Newton iteration: the half spectrum of `h` on an
/// `lg^d` grid and the counterterm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationState {
    pub dim: usize,
    /// Grid points per dimension.
    pub lg: usize,
    /// Half spectrum of `h` (axis 0 has `lg / 2 + 1` entries).
    pub h_hat: Vec<Complex64>,
    pub lambda_c: f64,
    /// Sup norm of the residual `epsilon`.
    pub residual: f64,
}

impl ConjugationState {
    pub fn zero(dim: usize, lg: usize) -> Self {
        let fft = RealFftNd::new(dim, lg);
        Self { dim, lg, h_hat: vec![Complex64::default(); fft.spectral_len()], lambda_c: 0.0, residual: 0.0 }
    }

    pub(crate) fn fft(&self) -> RealFftNd {
        RealFftNd::new(self.dim, self.lg)
    }

    /// Values of `h` on the grid.
    pub fn h_grid(&self) -> Vec<f64> {
        let fft = self.fft();
        let mut spec = self.h_hat.clone();
        let mut out = vec![0.0; fft.real_len()];
        fft.inverse(&mut spec, &mut out);
        out
    }

    /// Spectral interpolation onto a `lg` grid of another size.
    pub fn resampled(&self, lg: usize) -> Self {
        let from = self.fft();
        let to = RealFftNd::new(self.dim, lg);
        Self { h_hat: resample_spectrum(&from, &self.h_hat, &to), lg, ..self.clone() }
    }

    /// Coefficient `h_nu` (using conjugate symmetry); zero outside the grid.
    pub fn coefficient(&self, nu: &[i64]) -> Complex64 {
        match self.fft().spectral_index(nu) {
            Some((i, conj)) if !self.fft().is_nyquist(nu) => {
                if conj {
                    self.h_hat[i].conj()
                } else {
                    self.h_hat[i]
                }
            }
            _ => Complex64::default(),
        }
    }

    /// Evaluates `sum_nu m(nu) h_nu e^{i nu.psi}` at an arbitrary point.
    pub fn evaluate_with(&self, psi: &[f64], multiplier: impl Fn(&[i64]) -> Complex64) -> f64 {
        let fft = self.fft();
        let mut total = 0.0;
        fft.for_each_mode(|i, nu, weight| {
            let c = self.h_hat[i];
            if c.re == 0.0 && c.im == 0.0 {
                return;
            }
            let e = Complex64::from_polar(1.0, dot_int(psi, nu));
            total += weight * (c * multiplier(nu) * e).re;
        });
        total
    }

    /// `h(psi)` at an arbitrary point.
    pub fn evaluate(&self, psi: &[f64]) -> f64 {
        self.evaluate_with(psi, |_| Complex64::new(1.0, 0.0))
    }

    /// `(omega.d) h` at an arbitrary point.
    pub fn evaluate_derivative(&self, psi: &[f64], omega: &[f64]) -> f64 {
        self.evaluate_with(psi, |nu| Complex64::new(0.0, dot_int(omega, nu)))
    }

    /// l1 mass of the modes with `max |nu_k| >= (1 - tail_frac) lg / 2`, relative to the total.
    pub fn tail_ratio(&self, tail_frac: f64) -> f64 {
        let fft = self.fft();
        let cut = ((1.0 - tail_frac) * (self.lg / 2) as f64).floor() as i64;
        let (mut tail, mut total) = (0.0, 0.0);
        fft.for_each_mode(|i, nu, weight| {
            let a = self.h_hat[i].norm() * weight;
            total += a;
            if nu.iter().any(|v| v.abs() >= cut) {
                tail += a;
            }
        });
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    pub fn to_record(&self, omega: &[f64]) -> ConjugationRecord {
        ConjugationRecord {
            d: self.dim,
            lg: self.lg,
            omega: omega.to_vec(),
            lambda_c: self.lambda_c,
            residual: self.residual,
            index_order: "half spectrum: nu_1 in 0..=lg/2 fastest, other axes in FFT order".into(),
            h_hat: self.h_hat.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

/// JSON form of a converged state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationRecord {
    pub d: usize,
    pub lg: usize,
    pub omega: Vec<f64>,
    pub lambda_c: f64,
    pub residual: f64,
    pub index_order: String,
    pub h_hat: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Largest grid size per dimension (a power of two).
    pub lg_max: usize,
    /// Starting grid size; the tail monitor doubles it as needed.
    pub lg_start: usize,
    /// Convergence threshold on `sup |h_{n+1} - h_n|`.
    pub eta: f64,
    pub max_newton: usize,
    /// Width of the monitored outer band, as a fraction of `lg / 2`.
    pub tail_frac: f64,
    /// Largest tolerated relative l1 mass in the outer band.
    pub tail_tol: f64,
    /// Modes below `mode_floor * max |h_nu|` are removed after every step.
    pub mode_floor: f64,
    /// Residual above which the iteration is declared divergent.
    pub blowup: f64,
    /// Smallest admissible value of `l = 1 + Omega.dh`.
    pub min_l: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            lg_max: 1024,
            lg_start: 64,
            eta: 1e-10,
            max_newton: 50,
            tail_frac: 0.125,
            tail_tol: 1e-8,
            mode_floor: 1e-9,
            blowup: 1e2,
            min_l: 1e-6,
        }
    }
}

impl NewtonSettings {
    /// Settings with the given largest grid and the default start `min(64, lg_max)`.
    pub fn with_grid(lg_max: usize) -> Self {
        Self { lg_max, lg_start: lg_max.min(64), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lg_max", self.lg_max), ("lg_start", self.lg_start)] {
            if !v.is_power_of_two() || v < 4 {
                return Err(Error::Config(format!("{name} = {v} must be a power of two >= 4")));
            }
        }
        if self.lg_start > self.lg_max {
            return Err(Error::Config("lg_start exceeds lg_max".into()));
        }
        if !(self.tail_frac > 0.0 && self.tail_frac < 1.0) {
            return Err(Error::Config("tail_frac must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    MaxIterations,
    GridExhausted,
    TorusDegenerate,
    ResidualBlowup,
    CountertermNonzero,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MaxIterations => "max-iterations",
            Self::GridExhausted => "grid-exhausted",
            Self::TorusDegenerate => "torus-degenerate",
            Self::ResidualBlowup => "residual-blowup",
            Self::CountertermNonzero => "counterterm-nonzero",
        })
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub n: usize,
    pub delta: f64,
    pub residual: f64,
    pub lg: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonOutcome {
    Converged { state: ConjugationState, iterations: usize, log: Vec<LogRow> },
    Failed { reason: FailureReason, iterations: usize, log: Vec<LogRow>, state: ConjugationState },
}

impl NewtonOutcome {
    pub fn is_converged(&self) -> bool {
        matches!(self, Self::Converged { .. })
    }

    pub fn iterations(&self) -> usize {
        match self {
            Self::Converged { iterations, .. } | Self::Failed { iterations, .. } => *iterations,
        }
    }

    pub fn log(&self) -> &[LogRow] {
        match self {
            Self::Converged { log, .. } | Self::Failed { log, .. } => log,
        }
    }

    pub fn state(&self) -> &ConjugationState {
        match self {
            Self::Converged { state, .. } | Self::Failed { state, .. } => state,
        }
    }

    pub fn failure(&self) -> Option<FailureReason> {
        match self {
            Self::Converged { .. } => None,
            Self::Failed { reason, .. } => Some(*reason),
        }
    }

    /// Writes the convergence log as CSV with header `n,delta,residual,lg`.
    pub fn write_log<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.log() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_dims(v: &PotentialSpec, omega: &[f64]) -> Result<()> {
    if v.dim() != omega.len() {
        return Err(Error::DimensionMismatch { expected: omega.len(), got: v.dim() });
    }
    if dot(omega, omega) == 0.0 {
        return Err(Error::InvalidFrequency("omega is zero".into()));
    }
    Ok(())
}
