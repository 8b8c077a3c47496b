//! Predefined Hamiltonian families with their default method parameters.

use std::fmt;
use std::str::FromStr;

use torus_critic::conjugation::NewtonSettings;
use torus_critic::scan::{Family, Method, MethodSettings, Ray, DEFAULT_MU3};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub family: Family,
    pub method: Method,
    pub mu1: (f64, f64),
    pub mu2: (f64, f64),
    pub mu3: f64,
    pub res: (usize, usize),
    pub settings: MethodSettings,
    pub ray: Ray,
    pub ray_range: (f64, f64),
    pub tol: f64,
}

impl Scenario {
    pub fn get(family: Family) -> Self {
        match family {
            Family::Golden2d => Self {
                family,
                method: Method::RenormAdaptive,
                mu1: (0.0, 0.1),
                mu2: (0.0, 0.1),
                mu3: 0.0,
                res: (20, 20),
                settings: MethodSettings { newton: NewtonSettings::with_grid(1 << 10), ..MethodSettings::default() },
                ray: Ray::diagonal(),
                ray_range: (0.02, 0.035),
                tol: 5e-4,
            },
            Family::Spiral3d => Self {
                family,
                method: Method::RenormTime1,
                mu1: (0.0, 0.06),
                mu2: (0.0, 0.3),
                mu3: DEFAULT_MU3,
                res: (20, 20),
                settings: MethodSettings { newton: NewtonSettings::with_grid(1 << 7), ..MethodSettings::default() },
                ray: Ray::spiral_fifth(),
                ray_range: (0.04, 0.05),
                tol: 1e-3,
            },
        }
    }
}

/// `--scenario` value: a family name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioName(pub Family);

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<Family>().map(ScenarioName).map_err(|_| format!("unknown scenario `{s}` (expected golden2d or spiral3d)"))
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `--method` value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodName(pub Method);

impl FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<Method>().map(MethodName).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_consistent() {
        for f in [Family::Golden2d, Family::Spiral3d] {
            let s = Scenario::get(f);
            assert_eq!(s.family, f);
            assert_eq!(s.mu3 != 0.0, f.dim() == 3);
            assert_eq!(s.ray.at(0.0)[2], s.mu3);
            assert!(s.settings.newton.validate().is_ok());
            assert!(s.ray_range.0 < s.ray_range.1);
        }
        assert_eq!(Scenario::get(Family::Spiral3d).settings.newton.lg_max, 128);
        assert!("spiral3d".parse::<ScenarioName>().is_ok() && "pendulum".parse::<ScenarioName>().is_err());
    }
}
