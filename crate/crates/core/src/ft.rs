//! Truncated Fourier–Taylor representation of Hamiltonians
//!
//! ```text
//! H(A, phi) = omega.A + 1/2 (Omega.A)^2 + sum_{j <= J} sum_{|nu|_inf <= L} f^(j)_nu e^{i nu.phi} (Omega.A)^j
//! ```
//!
//! and the Poisson bracket between such objects. Products of Fourier series
//! are formed pseudo-spectrally on a grid large enough (`>= 3L + 1` points per
//! axis) for the retained modes to be alias free, so truncation is exactly
//! "drop every mode outside the box and every power above `J`".

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{dot, dot_int, norm2, IntMatrix};
use crate::spectral::{grid_index, ComplexFftNd};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The box `{-L..L}^d` of retained Fourier modes, indexed little-endian in `nu_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeBox {
    dim: usize,
    cutoff: usize,
}

impl ModeBox {
    pub fn new(dim: usize, cutoff: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        Self { dim, cutoff }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of the zero mode.
    pub fn zero_index(&self) -> usize {
        (self.len() - 1) / 2
    }

    pub fn index(&self, nu: &[i64]) -> Option<usize> {
        let l = self.cutoff as i64;
        let mut flat = 0usize;
        let mut stride = 1usize;
        for &v in nu.iter().take(self.dim) {
            if v.abs() > l {
                return None;
            }
            flat += (v + l) as usize * stride;
            stride *= self.side();
        }
        Some(flat)
    }

    /// Mode vector of a flat index; entries past `dim` are zero.
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        let mut rem = flat;
        for v in out.iter_mut().take(self.dim) {
            *v = (rem % self.side()) as i64 - self.cutoff as i64;
            rem /= self.side();
        }
        out
    }

    /// Index of `-nu` given the index of `nu`.
    #[inline]
    pub fn negate(&self, flat: usize) -> usize {
        self.len() - 1 - flat
    }
}

/// Dense coefficient tensor `c^(j)_nu`, `j = 0..=order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coeffs {
    modes: ModeBox,
    order: usize,
    data: Vec<Complex64>,
}

impl Coeffs {
    pub fn zeros(modes: ModeBox, order: usize) -> Self {
        Self { modes, order, data: vec![ZERO; (order + 1) * modes.len()] }
    }

    pub fn modes(&self) -> ModeBox {
        self.modes
    }

    /// Highest retained power of `Omega.A`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn power(&self, j: usize) -> &[Complex64] {
        let n = self.modes.len();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn power_mut(&mut self, j: usize) -> &mut [Complex64] {
        let n = self.modes.len();
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn get(&self, j: usize, nu: &[i64]) -> Complex64 {
        match self.modes.index(nu) {
            Some(i) if j <= self.order => self.data[j * self.modes.len() + i],
            _ => ZERO,
        }
    }

    /// Sets a coefficient; silently ignores modes outside the box.
    pub fn set(&mut self, j: usize, nu: &[i64], value: Complex64) {
        if let Some(i) = self.modes.index(nu) {
            if j <= self.order {
                let n = self.modes.len();
                self.data[j * n + i] = value;
            }
        }
    }

    /// Mean (zero-mode) coefficient of power `j`.
    pub fn mean(&self, j: usize) -> Complex64 {
        self.data[j * self.modes.len() + self.modes.zero_index()]
    }

    pub fn set_mean(&mut self, j: usize, value: Complex64) {
        let i = j * self.modes.len() + self.modes.zero_index();
        self.data[i] = value;
    }

    /// l1 norm of all coefficients.
    pub fn l1(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| *c == ZERO)
    }

    pub fn power_is_zero(&self, j: usize) -> bool {
        self.power(j).iter().all(|c| *c == ZERO)
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|c| *c *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Coeffs) {
        self.check_shape(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b * s;
        }
    }

    fn check_shape(&self, other: &Coeffs) {
        assert!(self.modes == other.modes && self.order == other.order, "coefficient shapes differ");
    }

    /// Largest `|c_nu - conj(c_{-nu})|`: zero for real-valued functions.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.modes.len();
        let mut worst = 0.0f64;
        for j in 0..=self.order {
            let p = &self.data[j * n..(j + 1) * n];
            for (i, c) in p.iter().enumerate() {
                worst = worst.max((c - p[self.modes.negate(i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest `|c_nu + conj(c_{-nu})|`: zero when `i * c` is real-valued.
    pub fn anti_hermitian_defect(&self) -> f64 {
        let n = self.modes.len();
        let mut worst = 0.0f64;
        for j in 0..=self.order {
            let p = &self.data[j * n..(j + 1) * n];
            for (i, c) in p.iter().enumerate() {
                worst = worst.max((c + p[self.modes.negate(i)].conj()).norm());
            }
        }
        worst
    }

    /// Projects onto real-valued functions.
    pub fn symmetrize(&mut self) {
        let n = self.modes.len();
        for j in 0..=self.order {
            let p = &mut self.data[j * n..(j + 1) * n];
            for i in 0..n / 2 + 1 {
                let k = n - 1 - i;
                let avg = (p[i] + p[k].conj()) * 0.5;
                p[i] = avg;
                p[k] = avg.conj();
            }
        }
    }

    /// Evaluates `sum_j sum_nu c^(j)_nu e^{i nu.phi} z^j` (complex result).
    pub fn evaluate(&self, z: f64, phi: &[f64]) -> Complex64 {
        let n = self.modes.len();
        let mut total = ZERO;
        let mut zj = 1.0;
        for j in 0..=self.order {
            let mut s = ZERO;
            for (i, c) in self.data[j * n..(j + 1) * n].iter().enumerate() {
                if *c != ZERO {
                    let nu = self.modes.mode(i);
                    s += c * Complex64::from_polar(1.0, dot_int(phi, &nu[..self.modes.dim])) ;
                }
            }
            total += s * zj;
            zj *= z;
        }
        total
    }
}

/// A Hamiltonian of the Fourier–Taylor family. The terms `omega.A` and
/// `1/2 (Omega.A)^2` are implicit; `coeffs` holds the perturbation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtHamiltonian {
    /// Frequency vector of the torus.
    pub omega: Vec<f64>,
    /// Unit direction of the quadratic term.
    pub big_omega: Vec<f64>,
    pub coeffs: Coeffs,
}

impl FtHamiltonian {
    pub fn zero(omega: Vec<f64>, big_omega: Vec<f64>, cutoff: usize, order: usize) -> Self {
        let modes = ModeBox::new(omega.len(), cutoff);
        Self { omega, big_omega, coeffs: Coeffs::zeros(modes, order) }
    }

    /// Builds `omega.A + 1/2 (Omega.A)^2 + sum amp cos(nu.phi)` for an
    /// arbitrary (not necessarily unit) `Omega`. A non-unit `Omega` is
    /// normalised and its length absorbed into the mean of `f^(2)`.
    pub fn from_cosines(omega: Vec<f64>, big_omega: &[f64], cutoff: usize, order: usize, modes: &[(Vec<i64>, f64)]) -> Result<Self> {
        let d = omega.len();
        if big_omega.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: big_omega.len() });
        }
        let len = norm2(big_omega);
        let unit: Vec<f64> = big_omega.iter().map(|x| x / len).collect();
        let mut h = Self::zero(omega, unit, cutoff, order);
        for (nu, amp) in modes {
            if nu.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: nu.len() });
            }
            let neg: Vec<i64> = nu.iter().map(|v| -v).collect();
            let half = Complex64::new(amp / 2.0, 0.0);
            h.coeffs.set(0, nu, h.coeffs.get(0, nu) + half);
            h.coeffs.set(0, &neg, h.coeffs.get(0, &neg) + half);
        }
        if order >= 2 {
            h.coeffs.set_mean(2, Complex64::new((len * len - 1.0) / 2.0, 0.0));
        }
        h.coeffs.set_mean(0, ZERO);
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.modes.cutoff
    }

    pub fn order(&self) -> usize {
        self.coeffs.order
    }

    /// l1 norm of all perturbation coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs.l1()
    }

    /// Pointwise value of the Hamiltonian.
    pub fn evaluate(&self, action: &[f64], phi: &[f64]) -> f64 {
        let z = dot(&self.big_omega, action);
        dot(&self.omega, action) + 0.5 * z * z + self.coeffs.evaluate(z, phi).re
    }

    /// Coefficients of `phi -> H(A, N^{-1} phi)`. Mode `nu` moves to
    /// `N^{-T} nu`; modes leaving the box are dropped.
    pub fn reindex_modes(&self, n: &IntMatrix) -> Result<Self> {
        if n.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: n.dim() });
        }
        let map = n.inverse()?.transpose();
        let modes = self.coeffs.modes;
        let targets: Vec<Option<usize>> = (0..modes.len())
            .map(|i| {
                let nu = modes.mode(i);
                modes.index(&map.mul_int(&nu[..modes.dim]))
            })
            .collect();
        let mut out = Coeffs::zeros(modes, self.coeffs.order);
        for j in 0..=self.coeffs.order {
            let src = self.coeffs.power(j);
            let dst = out.power_mut(j);
            for (i, t) in targets.iter().enumerate() {
                if let Some(t) = t {
                    dst[*t] = src[i];
                }
            }
        }
        Ok(Self { omega: self.omega.clone(), big_omega: self.big_omega.clone(), coeffs: out })
    }

    /// The full Hamiltonian as a term set, with the implicit quadratic term folded into `f^(2)`.
    pub fn to_series(&self) -> FtSeries {
        let mut coeffs = self.coeffs.clone();
        if coeffs.order >= 2 {
            coeffs.set_mean(2, coeffs.mean(2) + 0.5);
        }
        FtSeries { action_linear: 1.0, angle_linear: 0.0, coeffs }
    }

    /// Inverse of [`to_series`](Self::to_series); drops the additive constant.
    pub fn from_series(&self, series: FtSeries) -> Self {
        let mut coeffs = series.coeffs;
        if coeffs.order >= 2 {
            coeffs.set_mean(2, coeffs.mean(2) - 0.5);
        }
        coeffs.set_mean(0, ZERO);
        Self { omega: self.omega.clone(), big_omega: self.big_omega.clone(), coeffs }
    }

    pub fn to_record(&self) -> FtRecord {
        FtRecord {
            d: self.dim(),
            cutoff: self.cutoff(),
            order: self.order(),
            omega: self.omega.clone(),
            big_omega: self.big_omega.clone(),
            index_order: "j-major; within each j, modes nu in {-L..L}^d little-endian in nu_1".into(),
            coeffs: self.coeffs.data.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_record(rec: &FtRecord) -> Result<Self> {
        let modes = ModeBox::new(rec.d, rec.cutoff);
        let expected = (rec.order + 1) * modes.len();
        if rec.coeffs.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: rec.coeffs.len() });
        }
        if rec.omega.len() != rec.d || rec.big_omega.len() != rec.d {
            return Err(Error::DimensionMismatch { expected: rec.d, got: rec.omega.len() });
        }
        let data = rec.coeffs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        Ok(Self {
            omega: rec.omega.clone(),
            big_omega: rec.big_omega.clone(),
            coeffs: Coeffs { modes, order: rec.order, data },
        })
    }
}

/// Self-describing JSON form of an [`FtHamiltonian`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtRecord {
    pub d: usize,
    #[serde(rename = "L")]
    pub cutoff: usize,
    #[serde(rename = "J")]
    pub order: usize,
    pub omega: Vec<f64>,
    #[serde(rename = "Omega")]
    pub big_omega: Vec<f64>,
    pub index_order: String,
    /// `[re, im]` pairs.
    pub coeffs: Vec<[f64; 2]>,
}

/// A general term set `alpha omega.A + b Omega.phi + sum_j c^(j)(phi) (Omega.A)^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FtSeries {
    pub action_linear: f64,
    pub angle_linear: f64,
    pub coeffs: Coeffs,
}

impl FtSeries {
    pub fn from_coeffs(coeffs: Coeffs) -> Self {
        Self { action_linear: 0.0, angle_linear: 0.0, coeffs }
    }
}

/// Generating function `S = i sum_j Y^(j)(phi) (Omega.A)^j + a Omega.phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    pub y: Coeffs,
    pub a: f64,
    pub big_omega: Vec<f64>,
}

impl GeneratingFunction {
    pub fn zero(modes: ModeBox, order: usize, big_omega: Vec<f64>) -> Self {
        Self { y: Coeffs::zeros(modes, order), a: 0.0, big_omega }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.y.is_zero()
    }

    pub fn negated(&self) -> Self {
        let mut y = self.y.clone();
        y.scale(-1.0);
        Self { y, a: -self.a, big_omega: self.big_omega.clone() }
    }

    pub fn to_series(&self) -> FtSeries {
        let mut coeffs = self.y.clone();
        coeffs.as_mut_slice().iter_mut().for_each(|c| *c *= Complex64::i());
        FtSeries { action_linear: 0.0, angle_linear: self.a, coeffs }
    }
}

/// Pseudo-spectral product machinery shared by all brackets of one shape.
#[derive(Debug)]
pub struct BracketEngine {
    modes: ModeBox,
    order: usize,
    fft: ComplexFftNd,
    grid_of_mode: Vec<usize>,
    /// `omega . nu` per mode.
    omega_nu: Vec<f64>,
    /// `Omega . nu` per mode.
    big_omega_nu: Vec<f64>,
    omega_dot_big: f64,
    big_omega_sq: f64,
}

impl BracketEngine {
    pub fn new(modes: ModeBox, order: usize, omega: &[f64], big_omega: &[f64]) -> Result<Self> {
        let d = modes.dim();
        for v in [omega, big_omega] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        let n = (3 * modes.cutoff() + 1).next_power_of_two().max(2);
        let fft = ComplexFftNd::new(d, n);
        let mut grid_of_mode = Vec::with_capacity(modes.len());
        let mut omega_nu = Vec::with_capacity(modes.len());
        let mut big_omega_nu = Vec::with_capacity(modes.len());
        for i in 0..modes.len() {
            let nu = modes.mode(i);
            let mut g = 0;
            let mut stride = 1;
            for &v in nu.iter().take(d) {
                g += grid_index(v, n) * stride;
                stride *= n;
            }
            grid_of_mode.push(g);
            omega_nu.push(dot_int(omega, &nu[..d]));
            big_omega_nu.push(dot_int(big_omega, &nu[..d]));
        }
        Ok(Self {
            modes,
            order,
            fft,
            grid_of_mode,
            omega_nu,
            big_omega_nu,
            omega_dot_big: dot(omega, big_omega),
            big_omega_sq: dot(big_omega, big_omega),
        })
    }

    pub fn modes(&self) -> ModeBox {
        self.modes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn omega_nu(&self) -> &[f64] {
        &self.omega_nu
    }

    pub fn big_omega_nu(&self) -> &[f64] {
        &self.big_omega_nu
    }

    /// Grid values of `sum_nu c_nu m(nu) e^{i nu.x}` for a multiplier `m`.
    fn to_grid(&self, coeffs: &[Complex64], multiplier: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.fft.len()];
        for (i, c) in coeffs.iter().enumerate() {
            if *c != ZERO {
                buf[self.grid_of_mode[i]] = c * multiplier(i);
            }
        }
        self.fft.inverse(&mut buf);
        buf
    }

    fn grids(&self, coeffs: &Coeffs) -> Vec<Option<(Vec<Complex64>, Vec<Complex64>)>> {
        (0..=self.order)
            .map(|j| {
                if coeffs.power_is_zero(j) {
                    None
                } else {
                    let p = coeffs.power(j);
                    let values = self.to_grid(p, |_| Complex64::new(1.0, 0.0));
                    let deriv = self.to_grid(p, |i| Complex64::new(0.0, self.big_omega_nu[i]));
                    Some((values, deriv))
                }
            })
            .collect()
    }

    /// Precomputes the grid data of `g` for repeated brackets `{., g}`.
    pub fn prepare(self: &Arc<Self>, g: &FtSeries) -> Result<PreparedTerm> {
        self.check(&g.coeffs)?;
        Ok(PreparedTerm { engine: Arc::clone(self), grids: self.grids(&g.coeffs), series: g.clone() })
    }

    fn check(&self, c: &Coeffs) -> Result<()> {
        if c.modes.dim() != self.modes.dim() {
            return Err(Error::DimensionMismatch { expected: self.modes.dim(), got: c.modes.dim() });
        }
        if c.modes != self.modes || c.order != self.order {
            return Err(Error::Config("term set truncation differs from the bracket engine".into()));
        }
        Ok(())
    }
}

/// A term set with its grid representation cached.
#[derive(Debug, Clone)]
pub struct PreparedTerm {
    engine: Arc<BracketEngine>,
    grids: Vec<Option<(Vec<Complex64>, Vec<Complex64>)>>,
    series: FtSeries,
}

impl PreparedTerm {
    pub fn series(&self) -> &FtSeries {
        &self.series
    }

    /// `{f, g}` with `g` the prepared term, truncated to the box and to order `J`.
    pub fn bracket_left(&self, f: &FtSeries) -> Result<Coeffs> {
        let e = &*self.engine;
        e.check(&f.coeffs)?;
        let order = e.order;
        let nmodes = e.modes.len();
        let g = &self.series;
        let fg = e.grids(&f.coeffs);
        let mut out = Coeffs::zeros(e.modes, order);

        // Products of the angle-dependent parts:
        // sum_{j,k} [k (Omega.grad f_j) g_k - j f_j (Omega.grad g_k)] z^{j+k-1}
        let mut acc = vec![ZERO; e.fft.len()];
        for p in 0..=order {
            let mut any = false;
            acc.iter_mut().for_each(|c| *c = ZERO);
            for j in 0..=(p + 1).min(order) {
                let k = p + 1 - j;
                if k > order {
                    continue;
                }
                let (Some((fv, fd)), Some((gv, gd))) = (&fg[j], &self.grids[k]) else { continue };
                let (kf, jf) = (k as f64, j as f64);
                for (((a, fv), fd), (gv, gd)) in acc.iter_mut().zip(fv).zip(fd).zip(gv.iter().zip(gd)) {
                    *a += fd * gv * kf - fv * gd * jf;
                }
                any = true;
            }
            if any {
                e.fft.forward(&mut acc);
                let dst = out.power_mut(p);
                for (i, d) in dst.iter_mut().enumerate() {
                    *d += acc[e.grid_of_mode[i]];
                }
            }
        }

        // Terms involving the linear pieces omega.A and Omega.phi.
        let (alpha, b) = (f.action_linear, f.angle_linear);
        let (gamma, c) = (g.action_linear, g.angle_linear);
        let konst = (b * gamma - alpha * c) * e.omega_dot_big;
        for j in 0..=order {
            let fj = f.coeffs.power(j);
            let gj = g.coeffs.power(j);
            let dst = &mut out.data[j * nmodes..(j + 1) * nmodes];
            for i in 0..nmodes {
                let w = Complex64::new(0.0, e.omega_nu[i]);
                // gamma omega.grad f_j - alpha omega.grad g_j
                dst[i] += w * (fj[i] * gamma - gj[i] * alpha);
            }
            if j >= 1 {
                let src_f = f.coeffs.power(j);
                let src_g = g.coeffs.power(j);
                let scale = j as f64 * e.big_omega_sq;
                let lower = &mut out.data[(j - 1) * nmodes..j * nmodes];
                for i in 0..nmodes {
                    // b |Omega|^2 k g_k z^{k-1} - c |Omega|^2 j f_j z^{j-1}
                    lower[i] += (src_g[i] * b - src_f[i] * c) * scale;
                }
            }
        }
        let z0 = e.modes.zero_index();
        out.data[z0] += konst;
        out.symmetrize();
        Ok(out)
    }
}

/// `{f, g}` for two term sets sharing `omega` and `Omega`.
pub fn poisson_bracket(f: &FtSeries, g: &FtSeries, omega: &[f64], big_omega: &[f64]) -> Result<Coeffs> {
    let modes = f.coeffs.modes;
    if g.coeffs.modes.dim() != modes.dim() {
        return Err(Error::DimensionMismatch { expected: modes.dim(), got: g.coeffs.modes.dim() });
    }
    let engine = Arc::new(BracketEngine::new(modes, f.coeffs.order, omega, big_omega)?);
    engine.prepare(g)?.bracket_left(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{golden_mean, FrequencyData};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn golden_h(mu1: f64, mu2: f64, cutoff: usize, order: usize) -> FtHamiltonian {
        let g = golden_mean();
        FtHamiltonian::from_cosines(vec![g, -1.0], &[1.0, 0.0], cutoff, order, &[(vec![1, 0], mu1), (vec![1, 1], mu2)]).unwrap()
    }

    /// Random real coefficients supported on `|nu|_inf <= support`, `j <= jmax`.
    fn random_real(rng: &mut ChaCha8Rng, modes: ModeBox, order: usize, support: i64, jmax: usize, anti: bool) -> Coeffs {
        let mut c = Coeffs::zeros(modes, order);
        for j in 0..=jmax.min(order) {
            for i in 0..modes.len() {
                let nu = modes.mode(i);
                if nu.iter().all(|v| v.abs() <= support) {
                    c.power_mut(j)[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        // project to real (or i*real) functions
        let n = modes.len();
        for j in 0..=order {
            let p = c.power_mut(j);
            for i in 0..n / 2 + 1 {
                let k = n - 1 - i;
                let v = if anti { (p[i] - p[k].conj()) * 0.5 } else { (p[i] + p[k].conj()) * 0.5 };
                p[i] = v;
                p[k] = if anti { -v.conj() } else { v.conj() };
            }
        }
        c
    }

    /// Independent pointwise bracket: derivatives of each term evaluated directly.
    fn pointwise_bracket(f: &FtSeries, g: &FtSeries, omega: &[f64], big: &[f64], action: &[f64], phi: &[f64]) -> f64 {
        let d = omega.len();
        let z = dot(big, action);
        let grads = |s: &FtSeries| {
            let mut dphi = vec![s.angle_linear; d];
            for k in 0..d {
                dphi[k] *= big[k];
            }
            let mut da = vec![0.0; d];
            for k in 0..d {
                da[k] = s.action_linear * omega[k];
            }
            let modes = s.coeffs.modes;
            for j in 0..=s.coeffs.order {
                for i in 0..modes.len() {
                    let c = s.coeffs.power(j)[i];
                    if c == ZERO {
                        continue;
                    }
                    let nu = modes.mode(i);
                    let e = c * Complex64::from_polar(1.0, dot_int(phi, &nu[..d]));
                    for k in 0..d {
                        dphi[k] += (e * Complex64::new(0.0, nu[k] as f64)).re * z.powi(j as i32);
                        if j >= 1 {
                            da[k] += e.re * j as f64 * z.powi(j as i32 - 1) * big[k];
                        }
                    }
                }
            }
            (dphi, da)
        };
        let (fphi, fa) = grads(f);
        let (gphi, ga) = grads(g);
        dot(&fphi, &ga) - dot(&fa, &gphi)
    }

    #[test]
    fn norm_examples() {
        let g = golden_mean();
        let zero = FtHamiltonian::zero(vec![g, -1.0], vec![1.0, 0.0], 3, 3);
        assert_eq!(zero.norm(), 0.0);
        let single = FtHamiltonian::from_cosines(vec![g, -1.0], &[1.0, 0.0], 3, 3, &[(vec![1, 0], 0.02)]).unwrap();
        assert!((single.norm() - 0.02).abs() < 1e-16);
        assert!((golden_h(0.01, 0.01, 5, 5).norm() - 0.02).abs() < 1e-16);
    }

    #[test]
    fn evaluate_examples() {
        let g = golden_mean();
        let zero = FtHamiltonian::zero(vec![g, -1.0], vec![1.0, 0.0], 3, 3);
        assert_eq!(zero.evaluate(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        let h = golden_h(0.013, 0.021, 5, 5);
        assert!((h.evaluate(&[0.0, 0.0], &[0.0, 0.0]) - 0.034).abs() < 1e-15);
        assert!((zero.evaluate(&[1.0, 1.0], &[0.3, 0.2]) - (g - 1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn bracket_with_linear_frequency_term() {
        let g = golden_mean();
        let omega = [g, -1.0];
        let big = [1.0, 0.0];
        let modes = ModeBox::new(2, 3);
        let f = FtSeries { action_linear: 1.0, angle_linear: 0.0, coeffs: Coeffs::zeros(modes, 3) };
        let mut y = Coeffs::zeros(modes, 3);
        y.set(0, &[1, 0], Complex64::new(0.0, 0.3));
        y.set(0, &[-1, 0], Complex64::new(0.0, 0.3));
        let s = GeneratingFunction { y: y.clone(), a: 0.0, big_omega: big.to_vec() };
        let out = poisson_bracket(&f, &s.to_series(), &omega, &big).unwrap();
        for nu in [[1i64, 0], [-1, 0]] {
            let want = y.get(0, &nu) * dot_int(&omega, &nu);
            assert!((out.get(0, &nu) - want).norm() < 1e-14);
        }
        assert!((out.l1() - 2.0 * 0.3 * g).abs() < 1e-14);
    }

    #[test]
    fn bracket_quadratic_with_angle_linear() {
        let omega = [golden_mean(), -1.0];
        let big = [0.6, 0.8];
        let modes = ModeBox::new(2, 2);
        let mut fc = Coeffs::zeros(modes, 3);
        fc.set_mean(2, Complex64::new(0.5, 0.0));
        let f = FtSeries::from_coeffs(fc);
        let s = GeneratingFunction { y: Coeffs::zeros(modes, 3), a: 0.7, big_omega: big.to_vec() };
        let out = poisson_bracket(&f, &s.to_series(), &omega, &big).unwrap();
        assert!((out.mean(1).re + 0.7).abs() < 1e-15);
        assert!((out.l1() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn bracket_with_zero_generator_is_zero() {
        let h = golden_h(0.1, 0.2, 3, 3);
        let s = GeneratingFunction::zero(h.coeffs.modes(), 3, h.big_omega.clone());
        let out = poisson_bracket(&h.to_series(), &s.to_series(), &h.omega, &h.big_omega).unwrap();
        assert!(out.l1() < 1e-15);
    }

    #[test]
    fn bracket_dimension_mismatch() {
        let h = golden_h(0.1, 0.2, 3, 3);
        let s = GeneratingFunction::zero(ModeBox::new(3, 3), 3, vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            poisson_bracket(&h.to_series(), &s.to_series(), &h.omega, &h.big_omega),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bracket_matches_pointwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let omega = [golden_mean(), -1.0];
        let big = [0.6, 0.8];
        let modes = ModeBox::new(2, 3);
        for _ in 0..5 {
            // supports chosen so that no product leaves the box or order J = 3
            let f = FtSeries { action_linear: 1.0, angle_linear: 0.0, coeffs: random_real(&mut rng, modes, 3, 1, 2, false) };
            let s = FtSeries { action_linear: 0.0, angle_linear: 0.4, coeffs: random_real(&mut rng, modes, 3, 1, 1, false) };
            let out = poisson_bracket(&f, &s, &omega, &big).unwrap();
            for _ in 0..10 {
                let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let phi = [rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)];
                let want = pointwise_bracket(&f, &s, &omega, &big, &a, &phi);
                let got = out.evaluate(dot(&big, &a), &phi);
                assert!((got.re - want).abs() < 1e-10, "{} vs {}", got.re, want);
                assert!(got.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reindex_examples() {
        let h = golden_h(0.1, 0.2, 5, 2);
        let id = IntMatrix::identity(2);
        assert_eq!(h.reindex_modes(&id).unwrap(), h);
        let mut c = FtHamiltonian::zero(h.omega.clone(), h.big_omega.clone(), 3, 2);
        c.coeffs.set(1, &[0, 0], Complex64::new(0.25, 0.0));
        let n = FrequencyData::golden().matrix;
        let r = c.reindex_modes(&n).unwrap();
        assert_eq!(r.coeffs.get(1, &[0, 0]), Complex64::new(0.25, 0.0));
        assert!(matches!(
            h.reindex_modes(&IntMatrix::new(vec![vec![2, 0], vec![0, 1]]).unwrap()),
            Err(Error::NotUnimodular(2))
        ));
    }

    #[test]
    fn reindex_golden_single_mode_pointwise() {
        let g = golden_mean();
        let mut h = FtHamiltonian::zero(vec![g, -1.0], vec![1.0, 0.0], 5, 2);
        h.coeffs.set(0, &[1, 0], Complex64::new(0.3, 0.1));
        h.coeffs.set(0, &[-1, 0], Complex64::new(0.3, -0.1));
        let n = FrequencyData::golden().matrix;
        let inv = n.inverse().unwrap();
        let r = h.reindex_modes(&n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let phi = [rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)];
            let back = inv.mul_f64(&phi);
            assert!((r.evaluate(&a, &phi) - h.evaluate(&a, &back)).abs() < 1e-12);
        }
    }

    #[test]
    fn record_roundtrip() {
        let h = golden_h(0.01, 0.02, 2, 2);
        let json = serde_json::to_string(&h.to_record()).unwrap();
        let back = FtHamiltonian::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, h);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reindex_agrees_with_pointwise_oracle(seed in any::<u64>(), spiral in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (freq, support) = if spiral { (FrequencyData::spiral(), 1) } else { (FrequencyData::golden(), 1) };
            let d = freq.dim();
            // |N^{-T}| entries are at most 1 in absolute row sum <= 3, so support 1 stays inside L = 3
            let modes = ModeBox::new(d, 3);
            let coeffs = random_real(&mut rng, modes, 3, support, 3, false);
            let big: Vec<f64> = { let mut v = vec![0.0; d]; v[0] = 1.0; v };
            let h = FtHamiltonian { omega: freq.omega.clone(), big_omega: big, coeffs };
            let r = h.reindex_modes(&freq.matrix).unwrap();
            prop_assert!(r.coeffs.hermitian_defect() < 1e-15);
            let inv = freq.matrix.inverse().unwrap();
            for _ in 0..5 {
                let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let phi: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..6.3)).collect();
                let back = inv.mul_f64(&phi);
                prop_assert!((r.evaluate(&a, &phi) - h.evaluate(&a, &back)).abs() < 1e-10);
            }
        }

        #[test]
        fn bracket_is_antisymmetric_and_real(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let omega = [golden_mean(), -1.0];
            let big = [0.6, 0.8];
            let modes = ModeBox::new(2, 3);
            let f = FtSeries { action_linear: 0.0, angle_linear: rng.gen_range(-1.0..1.0), coeffs: random_real(&mut rng, modes, 3, 3, 3, false) };
            let g = FtSeries { action_linear: 0.0, angle_linear: rng.gen_range(-1.0..1.0), coeffs: random_real(&mut rng, modes, 3, 3, 3, false) };
            let fg = poisson_bracket(&f, &g, &omega, &big).unwrap();
            let gf = poisson_bracket(&g, &f, &omega, &big).unwrap();
            let scale = fg.l1().max(1.0);
            for (a, b) in fg.as_slice().iter().zip(gf.as_slice()) {
                prop_assert!((a + b).norm() < 1e-12 * scale);
            }
            prop_assert!(fg.hermitian_defect() < 1e-15 * scale);
        }

        #[test]
        fn norm_is_subadditive_and_homogeneous(seed in any::<u64>(), s in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes = ModeBox::new(2, 2);
            let a = random_real(&mut rng, modes, 2, 2, 2, false);
            let b = random_real(&mut rng, modes, 2, 2, 2, false);
            let mut sum = a.clone();
            sum.axpy(1.0, &b);
            prop_assert!(sum.l1() <= a.l1() + b.l1() + 1e-12);
            let mut scaled = a.clone();
            scaled.scale(s);
            prop_assert!((scaled.l1() - s.abs() * a.l1()).abs() < 1e-12);
        }
    }
}
