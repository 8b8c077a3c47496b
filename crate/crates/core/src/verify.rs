//! Fast self-checks of the invariants every engine relies on, against
//! independent oracles. Each check takes well under a second.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;

use crate::birkhoff::{rho_scan, weighted_rotation, ReducedSystem, INTEG_TOL};
use crate::conjugation::{initial_guess, newton_step, run_newton_forced, solve_cohomological, NewtonSettings, PotentialSpec};
use crate::error::Result;
use crate::freq::{dot, golden_mean, FrequencyData};
use crate::ft::{poisson_bracket, Coeffs, FtHamiltonian, FtSeries, ModeBox};
use crate::renorm::{eliminate, renorm_step, LieSettings, LieVariant, RenormSettings};
use crate::scan::{run_grid, run_grid_to, Axis, Family, Method, ScanConfig};

/// Outcome of one self-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, CheckFn); 9] = [
    ("trivial fixed point", trivial_fixed_point),
    ("quadratic elimination", quadratic_elimination),
    ("quadratic newton", quadratic_newton),
    ("cohomological single mode", cohomological_single_mode),
    ("manufactured solution", manufactured_solution),
    ("weighted birkhoff", weighted_birkhoff),
    ("free rotation", free_rotation),
    ("poisson bracket", poisson_pointwise),
    ("scan determinism and resume", scan_reproducible),
];

/// Names of all checks, in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check; an error inside a check counts as a failure.
pub fn run_all() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            Check { name, passed, detail }
        })
        .collect()
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(", ")
}

fn golden_h(mu1: f64, mu2: f64) -> Result<FtHamiltonian> {
    FtHamiltonian::from_cosines(FrequencyData::golden().omega, &[1.0, 0.0], 5, 5, &[(vec![1, 0], mu1), (vec![1, 1], mu2)])
}

fn trivial_fixed_point() -> Result<(bool, String)> {
    let freq = FrequencyData::golden();
    let g = golden_mean();
    let n = (1.0 + 1.0 / (g * g)).sqrt();
    let h = FtHamiltonian::zero(freq.omega.clone(), vec![1.0 / (g * n), 1.0 / n], 5, 5);
    let r = renorm_step(&h, &freq, &RenormSettings::default())?;
    let mut d = r.coeffs.clone();
    d.axpy(-1.0, &h.coeffs);
    let omega_err = r.big_omega.iter().zip(&h.big_omega).map(|(a, b)| (a.abs() - b.abs()).abs()).fold(0.0, f64::max);
    let err = d.l1().max(omega_err);
    Ok((err < 1e-10, format!("|R(H0) - H0| = {err:.1e}")))
}

fn quadratic_elimination() -> Result<(bool, String)> {
    let freq = FrequencyData::golden();
    let e = eliminate(&golden_h(0.001, 0.001)?, &freq, LieVariant::Time1, &LieSettings::default(), 1e-12, 50)?;
    let r = &e.residuals;
    let ratio = r[1].ln() / r[0].ln();
    Ok((ratio >= 1.8, format!("log-ratio {ratio:.2} (residuals {})", list(r))))
}

fn quadratic_newton() -> Result<(bool, String)> {
    let v = PotentialSpec::new(vec![1.0, 0.0], vec![(vec![1, 0], 0.01), (vec![1, 1], 0.01)])?;
    let w = FrequencyData::golden().omega;
    let mut s = initial_guess(&v, &w, 64)?;
    let mut deltas = Vec::new();
    for _ in 0..4 {
        let (next, rep) = newton_step(&s, &v, &w, 1e-13)?;
        deltas.push(rep.delta);
        s = next;
    }
    let best = deltas.windows(2).map(|p| p[1].ln() / p[0].ln()).fold(0.0, f64::max);
    Ok((best >= 1.8, format!("best log-ratio {best:.2} (steps {})", list(&deltas))))
}

fn grid(dim: usize, lg: usize) -> Vec<Vec<f64>> {
    (0..lg.pow(dim as u32))
        .map(|mut p| {
            (0..dim)
                .map(|_| {
                    let m = p % lg;
                    p /= lg;
                    2.0 * PI * m as f64 / lg as f64
                })
                .collect()
        })
        .collect()
}

fn cohomological_single_mode() -> Result<(bool, String)> {
    let w = FrequencyData::golden().omega;
    let pts = grid(2, 32);
    let mut err = 0.0f64;
    for nu in [[1.0, 0.0], [2.0, -3.0], [-4.0, 5.0]] {
        let wn = dot(&w, &nu);
        let g: Vec<f64> = pts.iter().map(|p| dot(p, &nu).cos()).collect();
        let h = solve_cohomological(&g, 2, &w)?;
        err = h.iter().zip(&pts).map(|(x, p)| (x - dot(p, &nu).sin() / wn).abs()).fold(err, f64::max);
    }
    Ok((err < 1e-10, format!("max error {err:.1e}")))
}

fn manufactured_solution() -> Result<(bool, String)> {
    let w = FrequencyData::golden().omega;
    let v = PotentialSpec::new(vec![1.0, 0.0], vec![(vec![1, 0], 1e-3), (vec![1, 1], 1e-3)])?;
    let (c1, c2) = (1e-3, 5e-4);
    let a = dot(&w, &[1.0, 0.0]).powi(2);
    let b = dot(&w, &[1.0, 2.0]).powi(2);
    let hstar = |p: &[f64]| c1 * p[0].sin() + c2 * (p[0] + 2.0 * p[1]).sin();
    let dhstar = |p: &[f64]| c1 * p[0].cos() + c2 * (p[0] + 2.0 * p[1]).cos();
    let ddhstar = |p: &[f64]| -c1 * a * p[0].sin() - c2 * b * (p[0] + 2.0 * p[1]).sin();
    // extra term g(phi) making hstar exact; phi1 = psi1 + hstar(psi) inverted by Newton
    let forcing = |phi: &[f64]| {
        let mut psi = phi.to_vec();
        for _ in 0..50 {
            let step = (psi[0] + hstar(&psi) - phi[0]) / (1.0 + dhstar(&psi));
            psi[0] -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        -ddhstar(&psi) - v.omega_gradient(phi)
    };
    let out = run_newton_forced(&v, &w, &forcing, &NewtonSettings::with_grid(64))?;
    let s = out.state();
    let err = grid(2, s.lg).iter().zip(s.h_grid()).map(|(p, h)| (h - hstar(p)).abs()).fold(0.0, f64::max);
    Ok((out.is_converged() && err < 1e-10, format!("{} steps, recovery error {err:.1e}", out.iterations())))
}

fn weighted_birkhoff() -> Result<(bool, String)> {
    let g = golden_mean();
    let lift = |n: usize| {
        let x = 0.1 + g * n as f64;
        x + (1..200).map(|k| 0.85f64.powi(k) * (2.0 * PI * k as f64 * x).sin() / (4.0 * PI * k as f64)).sum::<f64>()
    };
    let e: Vec<f64> = [250, 500, 1000].iter().map(|&s| (weighted_rotation(&(0..=s).map(lift).collect::<Vec<_>>()).0 - g).abs()).collect();
    let ok = e.windows(2).all(|p| p[0] > 16.0 * p[1]);
    Ok((ok, format!("errors at S = 250, 500, 1000: {}", list(&e))))
}

fn free_rotation() -> Result<(bool, String)> {
    let sys = ReducedSystem::spiral(0.0, 0.0, 0.0)?;
    let out = rho_scan(&sys, (-0.3, 0.3), 7, 200, INTEG_TOL)?;
    let err = out.iter().map(|r| (r.rho - sys.free_rho(r.a0)).abs()).fold(0.0, f64::max);
    Ok((err < 1e-10, format!("max deviation from the affine law {err:.1e}")))
}

/// `f(A, phi)` of a term set, evaluated directly.
fn series_value(s: &FtSeries, omega: &[f64], big: &[f64], a: &[f64], phi: &[f64]) -> f64 {
    s.action_linear * dot(omega, a) + s.angle_linear * dot(big, phi) + s.coeffs.evaluate(dot(big, a), phi).re
}

/// Fourth-order central difference of `f` along coordinate `k`.
fn partial(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize) -> f64 {
    let h = 1e-3;
    let at = |t: f64| {
        let mut y = x.to_vec();
        y[k] += t;
        f(&y)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

fn poisson_pointwise() -> Result<(bool, String)> {
    let omega = FrequencyData::golden().omega;
    let big = [0.6, 0.8];
    let modes = ModeBox::new(2, 3);
    let real_pair = |c: &mut Coeffs, j: usize, nu: [i64; 2], v: Complex64| {
        c.set(j, &nu, v);
        c.set(j, &[-nu[0], -nu[1]], v.conj());
    };
    let mut fc = Coeffs::zeros(modes, 3);
    real_pair(&mut fc, 0, [1, 0], Complex64::new(0.3, -0.2));
    real_pair(&mut fc, 1, [1, -1], Complex64::new(-0.1, 0.4));
    fc.set_mean(2, Complex64::new(0.5, 0.0));
    let mut gc = Coeffs::zeros(modes, 3);
    real_pair(&mut gc, 0, [0, 1], Complex64::new(0.2, 0.1));
    real_pair(&mut gc, 1, [1, 1], Complex64::new(0.0, -0.3));
    let f = FtSeries { action_linear: 1.0, angle_linear: 0.0, coeffs: fc };
    let g = FtSeries { action_linear: 0.0, angle_linear: 0.4, coeffs: gc };
    let out = poisson_bracket(&f, &g, &omega, &big)?;
    let mut err = 0.0f64;
    for (a, phi) in [([0.1, -0.3], [0.5, 2.0]), ([-0.7, 0.2], [4.0, 1.1]), ([0.4, 0.4], [3.0, 5.5])] {
        // x = (A1, A2, phi1, phi2)
        let x = [a[0], a[1], phi[0], phi[1]];
        let fv = |x: &[f64]| series_value(&f, &omega, &big, &x[..2], &x[2..]);
        let gv = |x: &[f64]| series_value(&g, &omega, &big, &x[..2], &x[2..]);
        let want: f64 = (0..2).map(|k| partial(fv, &x, k + 2) * partial(gv, &x, k) - partial(fv, &x, k) * partial(gv, &x, k + 2)).sum();
        let got = out.evaluate(dot(&big, &a), &phi);
        err = err.max((got.re - want).abs()).max(got.im.abs());
    }
    Ok((err < 1e-9, format!("max deviation from finite differences {err:.1e}")))
}

fn scan_reproducible() -> Result<(bool, String)> {
    let ax = Axis::new(0.0, 0.045, 3)?;
    let cfg = ScanConfig::new(Family::Golden2d, Method::RenormTime1, ax, ax);
    let key = |c: &[crate::scan::ScanCell]| c.iter().map(|c| (c.status, c.iterations)).collect::<Vec<_>>();
    let a = key(&run_grid(&cfg, 1)?);
    let b = key(&run_grid(&cfg, 2)?);
    let dir = std::env::temp_dir().join(format!("torus-critic-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path: PathBuf = dir.join("scan.csv");
    let resumed = (|| {
        run_grid_to(&cfg, 1, &path)?;
        let text = std::fs::read_to_string(&path)?;
        let keep: Vec<&str> = text.lines().take(4).collect();
        std::fs::write(&path, keep.join("\n") + "\n")?;
        run_grid_to(&cfg, 1, &path)
    })();
    let _ = std::fs::remove_dir_all(&dir);
    let c = key(&resumed?);
    Ok((a == b && a == c, format!("{} cells; runs agree: {}, resumed agrees: {}", a.len(), a == b, a == c)))
}
