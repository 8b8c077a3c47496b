//! Weighted Birkhoff averages with the `exp(-1/(t(1-t)))` bump.

/// `w(t) = exp(-1/(t(1-t)))` on `(0, 1)`, zero elsewhere.
pub fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// Compensated (Neumaier) sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Normalised weights `w(n/S) / C_S` for `n = 0..S`; entry 0 is zero.
pub fn weights(s: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..s).map(|n| bump(n as f64 / s as f64)).collect();
    let c = compensated_sum(w.iter().copied());
    w.iter_mut().for_each(|x| *x /= c);
    w
}

/// `WB_S(h) = sum_{n=1}^{S-1} w(n/S) h_n / C_S` with `S = values.len()`.
pub fn weighted_average(values: &[f64]) -> f64 {
    compensated_sum(weights(values.len()).iter().zip(values).map(|(w, v)| w * v))
}

/// Weighted averages of the increments of a lift `x_0, ..., x_S`, over the
/// full orbit and over its first half. Returns `(WB_S, WB_{S/2})`.
pub fn weighted_rotation(lift: &[f64]) -> (f64, f64) {
    let inc: Vec<f64> = lift.windows(2).map(|p| p[1] - p[0]).collect();
    let s = inc.len();
    (weighted_average(&inc), weighted_average(&inc[..s / 2]))
}
