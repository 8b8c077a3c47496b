//! Thin wrapper over the DOP853 integrator for autonomous and
//! non-autonomous systems given as closures.

use ode_solvers::{dop853::Dop853, DVector, OutputType, System};

use crate::error::{Error, Result};

// Time is carried as the last state component. The DOP853 tableau in
// ode_solvers 0.6 has c_12 = 0 instead of 1, which corrupts explicit
// time dependence but is harmless for autonomous systems.
struct Closure<F>(F);

impl<F: Fn(f64, &[f64], &mut [f64])> System<f64, DVector<f64>> for &Closure<F> {
    fn system(&self, _: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let n = y.len() - 1;
        (self.0)(y[n], &y.as_slice()[..n], &mut dy.as_mut_slice()[..n]);
        dy[n] = 1.0;
    }
}

/// Integrates `y' = f(t, y)` from `t = 0` and returns the state at
/// `t = k dt` for `k = 0..=count` (so `count + 1` samples).
pub(crate) fn sample<F>(f: F, y0: &[f64], dt: f64, count: usize, tol: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) || count == 0 {
        return Err(Error::Config(format!("sampling needs dt > 0 and count > 0 (dt = {dt}, count = {count})")));
    }
    let mut out = Vec::with_capacity(count + 1);
    let n = y0.len();
    let mut y = DVector::from_iterator(n + 1, y0.iter().copied().chain(std::iter::once(0.0)));
    out.push(y0.to_vec());
    let sys = Closure(f);
    for k in 0..count {
        let t0 = dt * k as f64;
        let t1 = dt * (k + 1) as f64;
        let mut solver = Dop853::from_param(
            &sys,
            t0,
            t1,
            dt,
            y,
            tol,
            tol,
            0.9,
            0.0,
            0.333,
            6.0,
            dt,
            0.0,
            u32::MAX,
            u32::MAX,
            OutputType::Sparse,
        );
        solver.integrate().map_err(|e| Error::Integration(e.to_string()))?;
        y = solver.y_out().last().cloned().ok_or_else(|| Error::Integration("no output".into()))?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!("non-finite state at t = {t1}")));
        }
        y[n] = t1;
        out.push(y.as_slice()[..n].to_vec());
    }
    Ok(out)
}

/// State at `t_end`.
pub(crate) fn integrate<F>(f: F, y0: &[f64], t_end: f64, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    Ok(sample(f, y0, t_end, 1, tol)?.pop().expect("two samples"))
}
