//! Residual evaluation, cohomological solves and the Newton loop.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_dims, ConjugationState, FailureReason, LogRow, NewtonOutcome, NewtonSettings, PotentialSpec};
use crate::error::{Error, Result};
use crate::freq::dot_int;
use crate::ode;
use crate::spectral::{wavenumber, RealFftNd};

/// Extra term `g(psi)` added to the left-hand side of the torus equation.
pub type Forcing<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Smallest admissible `l` in the stand-alone [`newton_step`].
const MIN_L: f64 = 1e-6;
/// Mean tolerance of the right-hand sides inside a Newton step.
const CONSISTENCY_TOL: f64 = 1e-10;
/// Mean tolerance of [`solve_cohomological`].
const SOLVABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy)]
pub(crate) struct Problem<'a> {
    pub(crate) v: &'a PotentialSpec,
    pub(crate) omega: &'a [f64],
    pub(crate) forcing: Option<Forcing<'a>>,
}

/// Diagnostics of one Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// `sup |Delta|` on the grid.
    pub delta: f64,
    /// Counterterm increment.
    pub lambda_shift: f64,
    /// Means of the right-hand sides of the two cohomological equations.
    pub rhs_means: [f64; 2],
    /// Mean of `Delta` on the grid.
    pub delta_mean: f64,
    /// `sup |epsilon|` after the update.
    pub residual: f64,
    /// `min l` after the update.
    pub min_l: f64,
}

/// Calls `f(index, a.nu, b.nu, nyquist)` for every half-spectrum entry.
fn for_each_entry(fft: &RealFftNd, a: &[f64], b: &[f64], mut f: impl FnMut(usize, f64, f64, bool)) {
    let n = fft.n();
    let h = fft.half();
    let half = (n / 2) as i64;
    let rows = fft.spectral_len() / h;
    for r in 0..rows {
        let mut rem = r;
        let (mut ba, mut bb) = (0.0, 0.0);
        let mut nyquist = false;
        for k in 1..fft.dim() {
            let v = wavenumber(rem % n, n);
            rem /= n;
            ba += a[k] * v as f64;
            bb += b[k] * v as f64;
            nyquist |= v.abs() == half;
        }
        let base = r * h;
        for k0 in 0..h {
            let v = k0 as f64;
            f(base + k0, ba + a[0] * v, bb + b[0] * v, nyquist || k0 == h - 1);
        }
    }
}

/// Calls `f(flat, m)` for every grid point, axis 0 fastest.
fn for_each_point(n: usize, dim: usize, mut f: impl FnMut(usize, &[usize])) {
    let mut m = vec![0usize; dim];
    let total = n.pow(dim as u32);
    for p in 0..total {
        f(p, &m);
        for a in 0..dim {
            m[a] += 1;
            if m[a] < n {
                break;
            }
            m[a] = 0;
        }
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| if v.abs() > acc || v.is_nan() { v.abs() } else { acc })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// FFT buffers for one grid size.
pub(crate) struct Workspace {
    fft: RealFftNd,
    spec: Vec<Complex64>,
    l: Vec<f64>,
    pub(crate) eps: Vec<f64>,
    work: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(dim: usize, lg: usize) -> Self {
        let fft = RealFftNd::new(dim, lg);
        let (s, r) = (fft.spectral_len(), fft.real_len());
        Self { fft, spec: vec![Complex64::default(); s], l: vec![0.0; r], eps: vec![0.0; r], work: vec![0.0; r] }
    }

    /// Fills `eps` and `l` for `state`; returns `(sup |eps|, min l)`.
    pub(crate) fn evaluate(&mut self, state: &ConjugationState, p: Problem) -> (f64, f64) {
        let big = &p.v.big_omega;
        let spec = &mut self.spec;
        spec.copy_from_slice(&state.h_hat);
        for_each_entry(&self.fft, p.omega, big, |i, _, wo, nyq| {
            spec[i] = if nyq { Complex64::default() } else { spec[i] * Complex64::new(0.0, wo) };
        });
        self.fft.inverse(spec, &mut self.l);
        self.l.iter_mut().for_each(|x| *x += 1.0);

        spec.copy_from_slice(&state.h_hat);
        for_each_entry(&self.fft, p.omega, big, |i, w, _, nyq| {
            spec[i] = if nyq { Complex64::default() } else { spec[i] * -(w * w) };
        });
        self.fft.inverse(spec, &mut self.eps);

        spec.copy_from_slice(&state.h_hat);
        for_each_entry(&self.fft, p.omega, big, |i, _, _, nyq| {
            if nyq {
                spec[i] = Complex64::default();
            }
        });
        self.fft.inverse(spec, &mut self.work);

        let n = self.fft.n();
        let modes: Vec<(Vec<i64>, f64, f64)> = p
            .v
            .modes
            .iter()
            .map(|m| {
                let wo = dot_int(big, &m.nu);
                (m.nu.clone(), -m.amplitude * wo, wo)
            })
            .collect();
        let step = 2.0 * PI / n as f64;
        let mut psi = vec![0.0; state.dim];
        let (eps, work) = (&mut self.eps, &self.work);
        for_each_point(n, state.dim, |pt, m| {
            let h = work[pt];
            let mut force = state.lambda_c;
            for (nu, c, wo) in &modes {
                let k: i64 = nu.iter().zip(m).map(|(v, &mi)| v * mi as i64).sum();
                force += c * (step * k.rem_euclid(n as i64) as f64 + wo * h).sin();
            }
            if let Some(g) = p.forcing {
                psi.iter_mut().zip(m).zip(big).for_each(|((x, &mi), o)| *x = step * mi as f64 + o * h);
                force += g(&psi);
            }
            eps[pt] += force;
        });
        let min_l = self.l.iter().copied().fold(f64::INFINITY, f64::min);
        (sup(&self.eps), min_l)
    }

    /// Replaces `work` (a right-hand side) by the zero-mean solution of
    /// `omega.dW = work`. Returns the mean of the right-hand side.
    fn solve_in_place(&mut self, omega: &[f64]) -> f64 {
        self.fft.forward(&mut self.work, &mut self.spec);
        let rhs_mean = self.spec[0].re;
        let spec = &mut self.spec;
        for_each_entry(&self.fft, omega, omega, |i, w, _, nyq| {
            spec[i] = if nyq || i == 0 || w == 0.0 { Complex64::default() } else { spec[i] / Complex64::new(0.0, w) };
        });
        self.fft.inverse(spec, &mut self.work);
        rhs_mean
    }

    /// One Newton update of `state`, assuming `eps` and `l` describe it.
    fn step(&mut self, state: &mut ConjugationState, p: Problem, mode_floor: f64, min_l: f64) -> Result<StepReport> {
        let l_min = self.l.iter().copied().fold(f64::INFINITY, f64::min);
        if !(l_min > min_l) {
            return Err(Error::TorusDegenerate(l_min));
        }
        let count = self.l.len() as f64;
        let delta_c = -self.l.iter().zip(&self.eps).map(|(l, e)| l * e).sum::<f64>() / count;

        for ((w, l), e) in self.work.iter_mut().zip(&self.l).zip(&self.eps) {
            *w = l * (delta_c + e);
        }
        let scale1 = sup(&self.work).max(1.0);
        let mean1 = self.solve_in_place(p.omega);
        if mean1.abs() > CONSISTENCY_TOL * scale1 {
            return Err(Error::Consistency(format!("first cohomological right-hand side has mean {mean1:e}")));
        }

        let (mut s1, mut s2) = (0.0, 0.0);
        for (w, l) in self.work.iter().zip(&self.l) {
            let il2 = 1.0 / (l * l);
            s1 += w * il2;
            s2 += il2;
        }
        let w0 = -s1 / s2;
        for (w, l) in self.work.iter_mut().zip(&self.l) {
            *w = -(*w + w0) / (l * l);
        }
        let scale2 = sup(&self.work).max(1.0);
        let mean2 = self.solve_in_place(p.omega);
        if mean2.abs() > CONSISTENCY_TOL * scale2 {
            return Err(Error::Consistency(format!("second cohomological right-hand side has mean {mean2:e}")));
        }

        for (w, l) in self.work.iter_mut().zip(&self.l) {
            *w *= l;
        }
        let bl = mean(&self.work);
        for (w, l) in self.work.iter_mut().zip(&self.l) {
            *w -= l * bl;
        }
        let delta_mean = mean(&self.work);
        self.fft.forward(&mut self.work, &mut self.spec);
        let old = state.h_hat.clone();
        for_each_entry(&self.fft, p.omega, p.omega, |i, _, _, nyq| {
            if !nyq {
                state.h_hat[i] += self.spec[i];
            }
        });
        state.lambda_c += delta_c;
        apply_mode_floor(&mut state.h_hat, mode_floor);
        // sup |h_{n+1} - h_n| after thresholding
        for ((d, new), old) in self.spec.iter_mut().zip(&state.h_hat).zip(&old) {
            *d = new - old;
        }
        drop(old);
        self.fft.inverse(&mut self.spec, &mut self.work);
        let delta = sup(&self.work);

        let (residual, min_l) = self.evaluate(state, p);
        state.residual = residual;
        Ok(StepReport { delta, lambda_shift: delta_c, rhs_means: [mean1, mean2], delta_mean, residual, min_l })
    }
}

fn apply_mode_floor(h_hat: &mut [Complex64], floor: f64) {
    let max = h_hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = floor * max;
    for c in h_hat.iter_mut() {
        if c.norm() < cut {
            *c = Complex64::default();
        }
    }
}

/// Adds `c sin(nu.psi)` to a half spectrum.
fn add_sine(fft: &RealFftNd, h_hat: &mut [Complex64], nu: &[i64], c: f64) -> bool {
    let half = (fft.n() / 2) as i64;
    if nu.iter().any(|v| v.abs() >= half) {
        return false;
    }
    let coeff = Complex64::new(0.0, -0.5 * c);
    let neg: Vec<i64> = nu.iter().map(|v| -v).collect();
    if nu[0] != 0 {
        let (i, conj) = fft.spectral_index(nu).expect("inside the grid");
        h_hat[i] += if conj { coeff.conj() } else { coeff };
    } else {
        let (i, _) = fft.spectral_index(nu).expect("inside the grid");
        let (j, _) = fft.spectral_index(&neg).expect("inside the grid");
        h_hat[i] += coeff;
        h_hat[j] += coeff.conj();
    }
    true
}

fn initial_guess_impl(p: Problem, lg: usize) -> Result<(ConjugationState, Workspace)> {
    check_dims(p.v, p.omega)?;
    let d = p.omega.len();
    let mut state = ConjugationState::zero(d, lg);
    let fft = state.fft();
    for m in &p.v.modes {
        let w = dot_int(p.omega, &m.nu);
        if w.abs() < 1e-12 {
            return Err(Error::ResonantMode);
        }
        let c = -m.amplitude * dot_int(&p.v.big_omega, &m.nu) / (w * w);
        if c != 0.0 && !add_sine(&fft, &mut state.h_hat, &m.nu, c) {
            log::warn!("potential mode {:?} does not fit on a grid of size {lg}", m.nu);
        }
    }
    let mut ws = Workspace::new(d, lg);
    if let Some(g) = p.forcing {
        let step = 2.0 * PI / lg as f64;
        let mut psi = vec![0.0; d];
        let work = &mut ws.work;
        for_each_point(lg, d, |pt, m| {
            psi.iter_mut().zip(m).for_each(|(x, &mi)| *x = step * mi as f64);
            work[pt] = g(&psi);
        });
        ws.fft.forward(&mut ws.work, &mut ws.spec);
        for_each_entry(&ws.fft, p.omega, p.omega, |i, w, _, nyq| {
            if !nyq && i != 0 && w != 0.0 {
                state.h_hat[i] += ws.spec[i] / (w * w);
            }
        });
    }
    let (residual, _) = ws.evaluate(&state, p);
    state.residual = residual;
    Ok((state, ws))
}

/// `h_0 = -(omega.d)^{-2} Omega.dV` on an `lg^d` grid, with `lambda_c = 0`.
pub fn initial_guess(v: &PotentialSpec, omega: &[f64], lg: usize) -> Result<ConjugationState> {
    Ok(initial_guess_impl(Problem { v, omega, forcing: None }, lg)?.0)
}

/// The residual `epsilon` and `l = 1 + Omega.dh` on the grid of `state`.
pub fn residual(state: &ConjugationState, v: &PotentialSpec, omega: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(v, omega)?;
    let mut ws = Workspace::new(state.dim, state.lg);
    ws.evaluate(state, Problem { v, omega, forcing: None });
    Ok((ws.eps, ws.l))
}

/// Zero-mean solution `W` of `omega.dW = g` for `g` given on an `lg^dim` grid.
pub fn solve_cohomological(g: &[f64], dim: usize, omega: &[f64]) -> Result<Vec<f64>> {
    if omega.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: omega.len() });
    }
    let lg = (g.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if lg.pow(dim as u32) != g.len() || lg < 2 || lg % 2 != 0 {
        return Err(Error::Config(format!("{} values do not form an even {dim}-dimensional grid", g.len())));
    }
    let mut ws = Workspace::new(dim, lg);
    ws.work.copy_from_slice(g);
    let scale = sup(g).max(1.0);
    let m = ws.solve_in_place(omega);
    if m.abs() > SOLVABILITY_TOL * scale {
        return Err(Error::Solvability(m));
    }
    Ok(ws.work)
}

/// One Newton step from `state`.
pub fn newton_step(state: &ConjugationState, v: &PotentialSpec, omega: &[f64], mode_floor: f64) -> Result<(ConjugationState, StepReport)> {
    check_dims(v, omega)?;
    let p = Problem { v, omega, forcing: None };
    let mut ws = Workspace::new(state.dim, state.lg);
    ws.evaluate(state, p);
    let mut next = state.clone();
    let report = ws.step(&mut next, p, mode_floor, MIN_L)?;
    Ok((next, report))
}

fn run(p: Problem, settings: &NewtonSettings) -> Result<NewtonOutcome> {
    settings.validate()?;
    let (mut state, mut ws) = initial_guess_impl(p, settings.lg_start)?;
    let mut log = Vec::new();
    let fail = |reason, iterations, log, state| Ok(NewtonOutcome::Failed { reason, iterations, log, state });
    for n in 0..settings.max_newton {
        let res = state.residual;
        if !res.is_finite() || res > settings.blowup {
            return fail(FailureReason::ResidualBlowup, n, log, state);
        }
        let report = match ws.step(&mut state, p, settings.mode_floor, settings.min_l) {
            Ok(r) => r,
            Err(Error::TorusDegenerate(_)) => return fail(FailureReason::TorusDegenerate, n, log, state),
            Err(e) => return Err(e),
        };
        log.push(LogRow { n, delta: report.delta, residual: report.residual, lg: state.lg });
        if !report.delta.is_finite() || !report.residual.is_finite() || report.residual > settings.blowup {
            return fail(FailureReason::ResidualBlowup, n, log, state);
        }
        let tail_ok = state.tail_ratio(settings.tail_frac) <= settings.tail_tol;
        if !tail_ok && state.lg < settings.lg_max {
            let lg = 2 * state.lg;
            log::debug!("tail monitor: refining grid to {lg} at step {n}");
            state = state.resampled(lg);
            drop(ws);
            ws = Workspace::new(state.dim, lg);
            let (residual, _) = ws.evaluate(&state, p);
            state.residual = residual;
            continue;
        }
        if report.delta <= settings.eta {
            if !tail_ok {
                return fail(FailureReason::GridExhausted, n, log, state);
            }
            if state.lambda_c.abs() >= 10.0 * settings.eta {
                return fail(FailureReason::CountertermNonzero, n, log, state);
            }
            return Ok(NewtonOutcome::Converged { state, iterations: n, log });
        }
    }
    fail(FailureReason::MaxIterations, settings.max_newton, log, state)
}

/// Newton iteration from [`initial_guess`] with tail monitoring and grid refinement.
pub fn run_newton(v: &PotentialSpec, omega: &[f64], settings: &NewtonSettings) -> Result<NewtonOutcome> {
    run(Problem { v, omega, forcing: None }, settings)
}

/// As [`run_newton`] for the equation with an extra term `g(phi)`,
/// `phi = psi + Omega h(psi)`, on its left-hand side. Used for
/// manufactured solutions.
pub fn run_newton_forced(v: &PotentialSpec, omega: &[f64], forcing: Forcing, settings: &NewtonSettings) -> Result<NewtonOutcome> {
    run(Problem { v, omega, forcing: Some(forcing) }, settings)
}

/// Integrates Hamilton's equations from `points` torus points over time
/// `tau` and returns the largest angle deviation from the parametrisation
/// `psi -> psi + Omega h(psi)` advanced by `omega tau`.
pub fn dynamical_certificate(state: &ConjugationState, v: &PotentialSpec, omega: &[f64], points: usize, tau: f64) -> Result<f64> {
    check_dims(v, omega)?;
    let d = state.dim;
    let big = &v.big_omega;
    let irr = [2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt()];
    let mut worst: f64 = 0.0;
    for k in 1..=points {
        let psi0: Vec<f64> = (0..d).map(|a| 2.0 * PI * (k as f64 * irr[a]).fract()).collect();
        let h0 = state.evaluate(&psi0);
        let mut y0: Vec<f64> = psi0.iter().zip(big).map(|(p, o)| p + o * h0).collect();
        y0.push(state.evaluate_derivative(&psi0, omega));
        let y = ode::integrate(
            |_, y, dy| {
                let z = y[d];
                for a in 0..d {
                    dy[a] = omega[a] + big[a] * z;
                }
                dy[d] = -v.omega_gradient(&y[..d]);
            },
            &y0,
            tau,
            1e-12,
        )?;
        let psi1: Vec<f64> = psi0.iter().zip(omega).map(|(p, w)| p + w * tau).collect();
        let h1 = state.evaluate(&psi1);
        for a in 0..d {
            worst = worst.max((y[a] - (psi1[a] + big[a] * h1)).abs());
        }
    }
    Ok(worst)
}
