//! Multi-dimensional FFTs on uniform periodic grids.
//!
//! Grids are stored with axis 0 varying fastest. Both transforms use the
//! convention `f(x) = sum_nu c_nu exp(i nu . x)` with `x_m = 2 pi m / n`, so the
//! forward transform returns Fourier coefficients (scaled by `1 / n^d`) and the
//! inverse transform evaluates the series on the grid.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

/// Number of columns gathered together when transforming along a strided axis.
const BLOCK: usize = 16;

/// Signed wavenumber for index `k` on an axis of length `n`.
#[inline]
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Grid index of wavenumber `nu` on an axis of length `n`.
#[inline]
pub fn grid_index(nu: i64, n: usize) -> usize {
    nu.rem_euclid(n as i64) as usize
}

/// Complex FFT over `n^dim` points.
#[derive(Clone)]
pub struct ComplexFftNd {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ComplexFftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexFftNd").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl ComplexFftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dim, n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values to coefficients (includes the `1 / n^d` factor).
    pub fn forward(&self, buf: &mut [Complex64]) {
        transform_all_axes(buf, self.dim, self.n, self.n, &self.forward, 0);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Coefficients to values.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        transform_all_axes(buf, self.dim, self.n, self.n, &self.inverse, 0);
    }
}

/// Complex FFT along axes `first_axis..dim` of a grid whose axis 0 has length
/// `n0` and the remaining axes length `n`.
fn transform_all_axes(buf: &mut [Complex64], dim: usize, n0: usize, n: usize, fft: &Arc<dyn Fft<f64>>, first_axis: usize) {
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for axis in first_axis..dim {
        if axis == 0 {
            fft.process_with_scratch(buf, &mut scratch);
            continue;
        }
        let stride = n0 * n.pow(axis as u32 - 1);
        let outer = buf.len() / (stride * n);
        let mut block = vec![Complex64::default(); BLOCK * n];
        for o in 0..outer {
            let base = o * stride * n;
            let mut i0 = 0;
            while i0 < stride {
                let width = BLOCK.min(stride - i0);
                for r in 0..n {
                    let row = base + r * stride + i0;
                    for b in 0..width {
                        block[b * n + r] = buf[row + b];
                    }
                }
                fft.process_with_scratch(&mut block[..width * n], &mut scratch);
                for r in 0..n {
                    let row = base + r * stride + i0;
                    for b in 0..width {
                        buf[row + b] = block[b * n + r];
                    }
                }
                i0 += width;
            }
        }
    }
}

/// Real-to-complex FFT over `n^dim` points. The half spectrum keeps
/// `n / 2 + 1` entries along axis 0 and `n` along every other axis.
#[derive(Clone)]
pub struct RealFftNd {
    dim: usize,
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RealFftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFftNd").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl RealFftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "real grids need an even size");
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::new();
        Self {
            dim,
            n,
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            forward: cp.plan_fft_forward(n),
            inverse: cp.plan_fft_inverse(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of real grid points.
    pub fn real_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Length of axis 0 in the half spectrum.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Number of stored spectral coefficients.
    pub fn spectral_len(&self) -> usize {
        self.half() * self.n.pow(self.dim as u32 - 1)
    }

    /// Real values to Fourier coefficients. `real` is used as scratch.
    pub fn forward(&self, real: &mut [f64], spec: &mut [Complex64]) {
        let n = self.n;
        let h = self.half();
        debug_assert_eq!(real.len(), self.real_len());
        debug_assert_eq!(spec.len(), self.spectral_len());
        let mut scratch = self.r2c.make_scratch_vec();
        for (row_in, row_out) in real.chunks_exact_mut(n).zip(spec.chunks_exact_mut(h)) {
            self.r2c
                .process_with_scratch(row_in, row_out, &mut scratch)
                .expect("buffer sizes are consistent");
        }
        transform_all_axes(spec, self.dim, h, n, &self.forward, 1);
        let scale = 1.0 / self.real_len() as f64;
        spec.iter_mut().for_each(|c| *c *= scale);
    }

    /// Fourier coefficients to real values. `spec` is used as scratch.
    pub fn inverse(&self, spec: &mut [Complex64], real: &mut [f64]) {
        let n = self.n;
        let h = self.half();
        transform_all_axes(spec, self.dim, h, n, &self.inverse, 1);
        let mut scratch = self.c2r.make_scratch_vec();
        for (row_in, row_out) in spec.chunks_exact_mut(h).zip(real.chunks_exact_mut(n)) {
            row_in[0].im = 0.0;
            row_in[h - 1].im = 0.0;
            self.c2r
                .process_with_scratch(row_in, row_out, &mut scratch)
                .expect("buffer sizes are consistent");
        }
    }

    /// Calls `f(index, nu, weight)` for every stored coefficient, where
    /// `weight` counts the coefficient and its implicit conjugate partner
    /// (2 for interior axis-0 indices, 1 on the self-conjugate planes).
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[i64], f64)) {
        let n = self.n;
        let h = self.half();
        let mut nu = vec![0i64; self.dim];
        let mut idx = vec![0usize; self.dim];
        for flat in 0..self.spectral_len() {
            let mut rem = flat;
            idx[0] = rem % h;
            rem /= h;
            for a in 1..self.dim {
                idx[a] = rem % n;
                rem /= n;
            }
            nu[0] = idx[0] as i64;
            for a in 1..self.dim {
                nu[a] = wavenumber(idx[a], n);
            }
            let weight = if idx[0] == 0 || idx[0] == n / 2 { 1.0 } else { 2.0 };
            f(flat, &nu, weight);
        }
    }

    /// True when any component sits on the Nyquist index.
    pub fn is_nyquist(&self, nu: &[i64]) -> bool {
        let half = (self.n / 2) as i64;
        nu.iter().any(|&v| v.abs() == half)
    }

    /// Flat half-spectrum index for a mode, using conjugate symmetry when
    /// `nu[0] < 0`. Returns `(index, conjugate)`; `None` if out of range.
    pub fn spectral_index(&self, nu: &[i64]) -> Option<(usize, bool)> {
        let half = (self.n / 2) as i64;
        if nu.iter().any(|&v| v.abs() > half) {
            return None;
        }
        let (nu_owned, conj): (Vec<i64>, bool) = if nu[0] < 0 { (nu.iter().map(|v| -v).collect(), true) } else { (nu.to_vec(), false) };
        let mut flat = nu_owned[0] as usize;
        let mut stride = self.half();
        for &v in &nu_owned[1..] {
            flat += grid_index(v, self.n) * stride;
            stride *= self.n;
        }
        Some((flat, conj))
    }

    /// Grid coordinate `2 pi m / n` along one axis.
    pub fn coordinate(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.n as f64
    }
}

/// Zero-pads (or truncates) a half spectrum from grid size `from.n()` to `to.n()`.
pub fn resample_spectrum(from: &RealFftNd, spec: &[Complex64], to: &RealFftNd) -> Vec<Complex64> {
    assert_eq!(from.dim(), to.dim());
    let mut out = vec![Complex64::default(); to.spectral_len()];
    from.for_each_mode(|i, nu, _| {
        if from.is_nyquist(nu) || to.is_nyquist(nu) {
            return;
        }
        if let Some((j, conj)) = to.spectral_index(nu) {
            out[j] = if conj { spec[i].conj() } else { spec[i] };
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn complex_roundtrip_and_single_mode() {
        let fft = ComplexFftNd::new(3, 8);
        let mut buf = vec![Complex64::default(); fft.len()];
        // c_(1,-2,3) = 1 -> values exp(i(x0 - 2 x1 + 3 x2))
        let idx = grid_index(1, 8) + 8 * grid_index(-2, 8) + 64 * grid_index(3, 8);
        buf[idx] = Complex64::new(1.0, 0.0);
        fft.inverse(&mut buf);
        let x = |m: usize| 2.0 * PI * m as f64 / 8.0;
        let v = buf[1 + 8 * 2 + 64 * 5];
        let expect = Complex64::from_polar(1.0, x(1) - 2.0 * x(2) + 3.0 * x(5));
        assert!((v - expect).norm() < 1e-13);
        fft.forward(&mut buf);
        for (i, c) in buf.iter().enumerate() {
            let want = if i == idx { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn real_transform_matches_cosine() {
        for dim in [2, 3] {
            let fft = RealFftNd::new(dim, 16);
            let mut real = vec![0.0; fft.real_len()];
            // f = cos(2 x0 - x_last) + 0.5 sin(x1)
            for (flat, v) in real.iter_mut().enumerate() {
                let m0 = flat % 16;
                let m1 = (flat / 16) % 16;
                let ml = flat / 16usize.pow(dim as u32 - 1);
                *v = (2.0 * fft.coordinate(m0) - fft.coordinate(ml)).cos() + 0.5 * fft.coordinate(m1).sin();
            }
            let orig = real.clone();
            let mut spec = vec![Complex64::default(); fft.spectral_len()];
            fft.forward(&mut real, &mut spec);
            let mut nu = vec![0i64; dim];
            nu[0] = 2;
            nu[dim - 1] = -1;
            let (i, _) = fft.spectral_index(&nu).unwrap();
            assert!((spec[i] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
            let mut nu1 = vec![0i64; dim];
            nu1[1] = 1;
            let (i1, _) = fft.spectral_index(&nu1).unwrap();
            assert!((spec[i1] - Complex64::new(0.0, -0.25)).norm() < 1e-14);
            let mut back = vec![0.0; fft.real_len()];
            fft.inverse(&mut spec, &mut back);
            let err = back.iter().zip(&orig).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
    }

    #[test]
    fn resample_preserves_values() {
        let small = RealFftNd::new(2, 8);
        let big = RealFftNd::new(2, 16);
        let mut real = vec![0.0; small.real_len()];
        for (flat, v) in real.iter_mut().enumerate() {
            let (m0, m1) = (flat % 8, flat / 8);
            *v = (small.coordinate(m0) + 2.0 * small.coordinate(m1)).sin();
        }
        let mut spec = vec![Complex64::default(); small.spectral_len()];
        small.forward(&mut real, &mut spec);
        let mut up = resample_spectrum(&small, &spec, &big);
        let mut vals = vec![0.0; big.real_len()];
        big.inverse(&mut up, &mut vals);
        for (flat, v) in vals.iter().enumerate() {
            let (m0, m1) = (flat % 16, flat / 16);
            let want = (big.coordinate(m0) + 2.0 * big.coordinate(m1)).sin();
            assert!((v - want).abs() < 1e-13);
        }
    }
}
