//! Flag value types and the method tolerance overrides shared by `scan`
//! and `bisect`.

use std::fmt;
use std::str::FromStr;

use clap::Args;
use torus_critic::freq::ConeNorm;
use torus_critic::scan::MethodSettings;

use crate::layers::Layers;
use crate::CliError;

/// `lo:hi` (a comma also separates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span(pub f64, pub f64);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once([':', ',']).ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
        let lo = a.trim().parse::<f64>().map_err(|e| format!("`{a}`: {e}"))?;
        let hi = b.trim().parse::<f64>().map_err(|e| format!("`{b}`: {e}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("expected finite lo <= hi, got `{s}`"));
        }
        Ok(Self(lo, hi))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0, self.1)
    }
}

/// `NxM`: `N` values of `mu1`, `M` of `mu2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Res(pub usize, pub usize);

impl FromStr for Res {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got `{s}`"))?;
        let n = a.trim().parse::<usize>().map_err(|e| format!("`{a}`: {e}"))?;
        let m = b.trim().parse::<usize>().map_err(|e| format!("`{b}`: {e}"))?;
        if n == 0 || m == 0 {
            return Err("resolution must be positive".into());
        }
        Ok(Self(n, m))
    }
}

/// Comma-separated amplitudes, two or three of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple(pub [f64; 3]);

impl FromStr for Triple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"))).collect::<Result<Vec<_>, _>>()?;
        match v[..] {
            [a, b] => Ok(Self([a, b, 0.0])),
            [a, b, c] => Ok(Self([a, b, c])),
            _ => Err(format!("expected 2 or 3 comma-separated numbers, got `{s}`")),
        }
    }
}

/// Newtype so that the cone norm parses through `FromStr` with a string error.
#[derive(Debug, Clone, Copy)]
pub struct Norm(pub ConeNorm);

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<ConeNorm>().map(Norm).map_err(|e| e.to_string())
    }
}

/// Tolerance overrides; unset flags keep the scenario value.
#[derive(Debug, Clone, Default, Args)]
pub struct MethodArgs {
    /// Fourier cutoff L of the renormalization Hamiltonians
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Taylor order J in the action
    #[arg(long)]
    pub order: Option<usize>,
    /// Norm in the resonance cone: max, euclidean or taxicab
    #[arg(long, value_name = "NORM")]
    pub cone_norm: Option<Norm>,
    /// Largest number of renormalization steps
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Renormalization divergence threshold on the norm
    #[arg(long)]
    pub div_threshold: Option<f64>,
    /// Renormalization convergence threshold on the norm
    #[arg(long)]
    pub conv_threshold: Option<f64>,
    /// Elimination stops below this non-resonant norm
    #[arg(long)]
    pub elim_tol: Option<f64>,
    /// Largest number of Lie transforms per elimination
    #[arg(long)]
    pub max_kam: Option<usize>,
    /// Lie series term tolerance
    #[arg(long)]
    pub series_tol: Option<f64>,
    /// Largest number of Lie series terms
    #[arg(long)]
    pub series_max: Option<usize>,
    /// Initial step of adaptive Lie transforms
    #[arg(long)]
    pub eps0: Option<f64>,
    /// Smallest step of adaptive Lie transforms
    #[arg(long)]
    pub min_step: Option<f64>,
    /// Absolute step-acceptance tolerance of adaptive Lie transforms
    #[arg(long)]
    pub abstol: Option<f64>,
    /// Relative step-acceptance tolerance of adaptive Lie transforms
    #[arg(long)]
    pub reltol: Option<f64>,
    /// Largest conjugation grid size per dimension (power of two)
    #[arg(long = "grid-L", value_name = "LG")]
    pub grid_l: Option<usize>,
    /// Starting conjugation grid size (power of two)
    #[arg(long)]
    pub grid_start: Option<usize>,
    /// Newton convergence threshold on the increment
    #[arg(long)]
    pub eta: Option<f64>,
    /// Largest number of Newton steps
    #[arg(long)]
    pub max_newton: Option<usize>,
    /// Largest relative mass in the outer Fourier band
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Relative amplitude below which Fourier modes are removed
    #[arg(long)]
    pub mode_floor: Option<f64>,
    /// Newton residual above which the iteration diverges
    #[arg(long)]
    pub blowup: Option<f64>,
}

impl MethodArgs {
    /// `base` with every flag or config entry applied.
    pub fn apply(&self, layers: &mut Layers, base: MethodSettings) -> Result<MethodSettings, CliError> {
        let mut s = base;
        macro_rules! set {
            ($field:ident, $key:literal, $target:expr) => {
                if let Some(v) = layers.pick(self.$field.clone(), $key)? {
                    $target = v;
                }
            };
        }
        set!(cutoff, "cutoff", s.cutoff);
        set!(order, "order", s.order);
        if let Some(n) = layers.pick(self.cone_norm, "cone-norm")? {
            s.cone_norm = n.0;
        }
        set!(max_iter, "max-iter", s.renorm.max_iter);
        set!(div_threshold, "div-threshold", s.renorm.div_threshold);
        set!(conv_threshold, "conv-threshold", s.renorm.conv_threshold);
        set!(elim_tol, "elim-tol", s.renorm.elim_tol);
        set!(max_kam, "max-kam", s.renorm.max_kam);
        set!(series_tol, "series-tol", s.renorm.lie.series_tol);
        set!(series_max, "series-max", s.renorm.lie.series_max);
        set!(eps0, "eps0", s.renorm.lie.eps0);
        set!(min_step, "min-step", s.renorm.lie.min_step);
        set!(abstol, "abstol", s.renorm.lie.abstol);
        set!(reltol, "reltol", s.renorm.lie.reltol);
        if let Some(lg) = layers.pick(self.grid_l, "grid-L")? {
            s.newton.lg_max = lg;
            s.newton.lg_start = s.newton.lg_start.min(lg);
        }
        set!(grid_start, "grid-start", s.newton.lg_start);
        set!(eta, "eta", s.newton.eta);
        set!(max_newton, "max-newton", s.newton.max_newton);
        set!(tail_tol, "tail-tol", s.newton.tail_tol);
        set!(mode_floor, "mode-floor", s.newton.mode_floor);
        set!(blowup, "blowup", s.newton.blowup);
        s.newton.validate()?;
        if s.cutoff == 0 {
            return Err(CliError::Usage("cutoff must be positive".into()));
        }
        Ok(s)
    }
}
