//! Integer-order Bessel functions `J_n` and `I_n` of real argument.
//!
//! Both are computed for a whole range of orders at once by Miller's
//! downward recurrence, normalized with the generating-function sums
//! `J_0 + 2 Σ J_{2k} = 1` and `I_0 + 2 Σ I_k = e^x`.

use num_complex::Complex64;

const RESCALE_ABOVE: f64 = 1e250;

fn start_order(n_max: usize, x: f64) -> usize {
    let m = (n_max as f64).max(x.abs().ceil());
    let start = m as usize + 20 + (40.0 * m).sqrt() as usize;
    start + start % 2
}

/// `J_0(x) … J_{n_max}(x)`.
pub fn bessel_j_orders(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = start_order(n_max, ax);
    let two_over_x = 2.0 / ax;
    let (mut above, mut current) = (0.0_f64, 1e-300_f64);
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        // `current` now holds J_{k-1} (unnormalized).
        if k - 1 <= n_max {
            out[k - 1] = current;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            even_sum += current;
        }
        if current.abs() > RESCALE_ABOVE {
            current /= RESCALE_ABOVE;
            above /= RESCALE_ABOVE;
            even_sum /= RESCALE_ABOVE;
            out.iter_mut().for_each(|v| *v /= RESCALE_ABOVE);
        }
    }
    let norm = current + 2.0 * even_sum;
    out.iter_mut().for_each(|v| *v /= norm);
    if x < 0.0 {
        out.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
    }
    out
}

/// `I_0(x) … I_{n_max}(x)`.
pub fn bessel_i_orders(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = start_order(n_max, ax);
    let two_over_x = 2.0 / ax;
    let (mut above, mut current) = (0.0_f64, 1e-300_f64);
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current + above;
        above = current;
        current = below;
        if k - 1 <= n_max {
            out[k - 1] = current;
        }
        if k - 1 > 0 {
            sum += current;
        }
        if current.abs() > RESCALE_ABOVE {
            current /= RESCALE_ABOVE;
            above /= RESCALE_ABOVE;
            sum /= RESCALE_ABOVE;
            out.iter_mut().for_each(|v| *v /= RESCALE_ABOVE);
        }
    }
    // Normalize in log space; e^x alone overflows long before the ratio does.
    let log_scale = ax - (current + 2.0 * sum).ln();
    out.iter_mut().for_each(|v| *v *= log_scale.exp());
    if x < 0.0 {
        out.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
    }
    out
}

/// `J_n(x)` for any signed order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_orders(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `I_n(x)` for any signed order (`I_{-n} = I_n`).
pub fn bessel_i(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    bessel_i_orders(m, x)[m]
}

/// `J_n(iy) = iⁿ I_n(y)`.
pub fn bessel_j_imag(n: i64, y: f64) -> Complex64 {
    i_pow(n) * bessel_i(n, y)
}

/// `iⁿ` for signed `n`.
pub fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Table of `J_n(x)` for `|n| <= n_max` at fixed `x`.
#[derive(Debug, Clone)]
pub struct BesselJTable {
    values: Vec<f64>,
}

impl BesselJTable {
    pub fn new(n_max: usize, x: f64) -> Self {
        Self {
            values: bessel_j_orders(n_max, x),
        }
    }

    /// `J_n(x)`, zero beyond the tabulated range.
    pub fn get(&self, n: i64) -> f64 {
        let m = n.unsigned_abs() as usize;
        match self.values.get(m) {
            Some(&v) if n < 0 && m % 2 == 1 => -v,
            Some(&v) => v,
            None => 0.0,
        }
    }
}

/// Table of `I_n(x)` for `|n| <= n_max` at fixed `x`.
#[derive(Debug, Clone)]
pub struct BesselITable {
    values: Vec<f64>,
}

impl BesselITable {
    pub fn new(n_max: usize, x: f64) -> Self {
        Self {
            values: bessel_i_orders(n_max, x),
        }
    }

    pub fn get(&self, n: i64) -> f64 {
        self.values
            .get(n.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }
}
