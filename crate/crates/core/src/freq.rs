//! Self-similar frequency vectors and their integer matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square integer matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("integer matrix must be square and non-empty".into()));
        }
        Ok(Self { dim, data: rows.into_iter().flatten().collect() })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.dim + j]
    }

    pub fn det(&self) -> i64 {
        let m = |i, j| self.get(i, j);
        match self.dim {
            1 => m(0, 0),
            2 => m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0),
            3 => {
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
            _ => unimplemented!("only dimensions up to 3 are supported"),
        }
    }

    pub fn trace(&self) -> i64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut data = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.get(i, j);
            }
        }
        Self { dim: d, data }
    }

    /// Integer inverse of a unimodular matrix (adjugate times det).
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det));
        }
        let d = self.dim;
        let mut data = vec![0; d * d];
        match d {
            1 => data[0] = det,
            2 => {
                data[0] = self.get(1, 1) * det;
                data[1] = -self.get(0, 1) * det;
                data[2] = -self.get(1, 0) * det;
                data[3] = self.get(0, 0) * det;
            }
            3 => {
                for i in 0..3 {
                    for j in 0..3 {
                        // cofactor of (j, i)
                        let (r0, r1) = others(j);
                        let (c0, c1) = others(i);
                        let minor = self.get(r0, c0) * self.get(r1, c1) - self.get(r0, c1) * self.get(r1, c0);
                        let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                        data[i * 3 + j] = sign * minor * det;
                    }
                }
            }
            _ => unimplemented!("only dimensions up to 3 are supported"),
        }
        Ok(Self { dim: d, data })
    }

    pub fn mul_int(&self, v: &[i64]) -> Vec<i64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    pub fn mul_f64(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) as f64 * v[j]).sum()).collect()
    }
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dot_int(a: &[f64], nu: &[i64]) -> f64 {
    a.iter().zip(nu).map(|(x, &n)| x * n as f64).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The golden mean `(sqrt(5) - 1) / 2`.
pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Real root of `x^3 = x + 1` (the spiral mean, about 1.324718).
pub fn spiral_mean() -> f64 {
    let mut x = 1.3f64;
    for _ in 0..60 {
        let fx = x * x * x - x - 1.0;
        let dfx = 3.0 * x * x - 1.0;
        let next = x - fx / dfx;
        if (next - x).abs() < 1e-17 {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Arithmetic of the torus: frequency vector, its self-similarity matrix and
/// the resonance-cone parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyData {
    pub omega: Vec<f64>,
    pub matrix: IntMatrix,
    /// Eigenvalue of `matrix` on `omega`, `|theta1| < 1`.
    pub theta1: f64,
    /// Remaining eigenvalues, all of modulus larger than one.
    pub other_eigs: Vec<Complex64>,
    /// Slope of the resonance cone.
    pub sigma: f64,
    /// Penalty per Taylor order in the resonance cone.
    pub kappa: f64,
    /// Norm of `nu` in the resonance cone.
    #[serde(default)]
    pub cone_norm: ConeNorm,
}

/// Norm `|nu|` used in the cone condition `|omega.nu| > sigma |nu| + j kappa`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeNorm {
    /// `max_i |nu_i|`, the norm that also defines the Fourier truncation box.
    #[default]
    Max,
    Euclidean,
    Taxicab,
}

impl ConeNorm {
    pub fn apply(self, nu: &[i64]) -> f64 {
        match self {
            Self::Max => nu.iter().map(|v| v.abs()).max().unwrap_or(0) as f64,
            Self::Euclidean => nu.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt(),
            Self::Taxicab => nu.iter().map(|v| v.abs()).sum::<i64>() as f64,
        }
    }
}

impl std::str::FromStr for ConeNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "inf" => Ok(Self::Max),
            "euclidean" | "l2" => Ok(Self::Euclidean),
            "taxicab" | "l1" => Ok(Self::Taxicab),
            other => Err(Error::Config(format!("unknown cone norm `{other}` (expected max, euclidean or taxicab)"))),
        }
    }
}

pub const DEFAULT_SIGMA: f64 = 0.6;
pub const DEFAULT_KAPPA: f64 = 0.1;

impl FrequencyData {
    /// Builds and validates frequency data. `theta1` is recovered from `N omega`.
    pub fn new(omega: Vec<f64>, matrix: IntMatrix, sigma: f64, kappa: f64) -> Result<Self> {
        let d = omega.len();
        if matrix.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: matrix.dim() });
        }
        let det = matrix.det();
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det));
        }
        let image = matrix.mul_f64(&omega);
        let theta1 = dot(&image, &omega) / dot(&omega, &omega);
        let scale = norm2(&omega);
        let defect = image
            .iter()
            .zip(&omega)
            .map(|(a, b)| (a - theta1 * b).abs())
            .fold(0.0, f64::max);
        if defect > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidFrequency(format!("omega is not an eigenvector of N (defect {defect:e})")));
        }
        if theta1.abs() >= 1.0 {
            return Err(Error::InvalidFrequency(format!("|theta1| = {} is not contracting", theta1.abs())));
        }
        let other_eigs = remaining_eigenvalues(&matrix, theta1);
        if other_eigs.iter().any(|e| e.norm() <= 1.0) {
            return Err(Error::InvalidFrequency("N has a non-expanding eigenvalue besides theta1".into()));
        }
        Ok(Self { omega, matrix, theta1, other_eigs, sigma, kappa, cone_norm: ConeNorm::default() })
    }

    /// `omega = (g, -1)` with the golden mean `g`, `N = [[1, 1], [1, 0]]`.
    pub fn golden() -> Self {
        let g = golden_mean();
        let n = IntMatrix::new(vec![vec![1, 1], vec![1, 0]]).expect("square");
        Self::new(vec![g, -1.0], n, DEFAULT_SIGMA, DEFAULT_KAPPA).expect("golden-mean data is valid")
    }

    /// `omega = (s, s^2, 1)` with the spiral mean `s`.
    pub fn spiral() -> Self {
        let s = spiral_mean();
        let n = IntMatrix::new(vec![vec![0, 0, 1], vec![1, 0, 0], vec![0, 1, -1]]).expect("square");
        Self::new(vec![s, s * s, 1.0], n, DEFAULT_SIGMA, DEFAULT_KAPPA).expect("spiral-mean data is valid")
    }

    pub fn with_cone_norm(mut self, cone_norm: ConeNorm) -> Self {
        self.cone_norm = cone_norm;
        self
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }
}

fn remaining_eigenvalues(n: &IntMatrix, theta1: f64) -> Vec<Complex64> {
    match n.dim() {
        1 => vec![],
        2 => vec![Complex64::new(n.trace() as f64 - theta1, 0.0)],
        3 => {
            // Remaining roots have sum tr - theta1 and product det / theta1.
            let s = n.trace() as f64 - theta1;
            let p = n.det() as f64 / theta1;
            let disc = Complex64::new(s * s - 4.0 * p, 0.0).sqrt();
            vec![(s + disc) / 2.0, (s - disc) / 2.0]
        }
        _ => unimplemented!("only dimensions up to 3 are supported"),
    }
}
