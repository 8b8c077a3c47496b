//! Stroboscopic map of the reduced system.

use ode_solvers::dop853::Dop853;
use ode_solvers::dop_shared::IntegrationError;
use ode_solvers::{OutputType, System, Vector3};

use super::ReducedSystem;
use crate::error::{Error, Result};

// State (phi, A, t). Time is carried in the state because the DOP853
// tableau of ode_solvers 0.6 evaluates its last stage at the wrong time.
impl System<f64, Vector3<f64>> for &ReducedSystem {
    fn system(&self, _: f64, y: &Vector3<f64>, dy: &mut Vector3<f64>) {
        let (dphi, da) = self.field(y[2], y[0], y[1]);
        dy[0] = dphi;
        dy[1] = da;
        dy[2] = 1.0;
    }
}

/// Integrates the flow from time `t0` to `t0 + span` (`span` may be
/// negative). The angle is returned unreduced.
pub fn flow(sys: &ReducedSystem, t0: f64, span: f64, phi: f64, a: f64, integ_tol: f64) -> Result<(f64, f64)> {
    if !span.is_finite() || span == 0.0 {
        return Err(Error::Config(format!("flow needs a finite non-zero time span (got {span})")));
    }
    let mut solver = Dop853::from_param(
        sys,
        0.0,
        span,
        span.abs(),
        Vector3::new(phi, a, t0),
        integ_tol,
        integ_tol,
        0.9,
        0.0,
        0.333,
        6.0,
        span.abs(),
        0.0,
        u32::MAX,
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| match e {
        IntegrationError::StepSizeUnderflow { x } => Error::StepUnderflow(t0 + x),
        e => Error::Integration(e.to_string()),
    })?;
    let y = solver.y_out().last().ok_or_else(|| Error::Integration("no output".into()))?;
    if !(y[0].is_finite() && y[1].is_finite()) {
        return Err(Error::Integration(format!("non-finite state after t = {t0}")));
    }
    Ok((y[0], y[1]))
}

/// Time-`2 pi / nu2` map from `t = 0`.
pub fn strobe_map(sys: &ReducedSystem, phi: f64, a: f64, integ_tol: f64) -> Result<(f64, f64)> {
    flow(sys, 0.0, sys.period(), phi, a, integ_tol)
}

/// Lift `phi_0, ..., phi_s` of the angle along `s` strobe steps from
/// `(phi0, a0)` at `t = 0`. Step `n` starts at `t = n T`.
pub fn orbit(sys: &ReducedSystem, phi0: f64, a0: f64, s: usize, integ_tol: f64) -> Result<Vec<f64>> {
    let period = sys.period();
    let mut lift = Vec::with_capacity(s + 1);
    let (mut phi, mut a) = (phi0, a0);
    lift.push(phi);
    for n in 0..s {
        (phi, a) = flow(sys, n as f64 * period, period, phi, a, integ_tol)?;
        lift.push(phi);
    }
    Ok(lift)
}
