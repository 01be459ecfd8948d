//! Resonance conditions: the coherent-sum kernel Φ and predictors for
//! single-mode (`ω_l T = 2πn`) and two-mode (`(ω_l + ω_l′) T = 2πM`) resonances.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::params::PhysicalParams;
use crate::spectrum::{free_energy, mode_frequency};

/// `sin(Nx)/sin(x)` with the removable singularities at `x = mπ` filled in.
pub fn phi_function(n: u64, x: f64) -> f64 {
    let m = (x / PI).round();
    let d = x - m * PI;
    let nf = n as f64;
    // sin(N(mπ + d)) / sin(mπ + d) = (-1)^{m(N-1)} sin(Nd)/sin(d)
    let odd = (m.rem_euclid(2.0) == 1.0) && n.is_multiple_of(2);
    let sign = if odd { -1.0 } else { 1.0 };
    let ratio = if d.abs() < 1e-6 {
        nf * (1.0 - (nf * nf - 1.0) * d * d / 6.0)
    } else {
        (nf * d).sin() / d.sin()
    };
    sign * ratio
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sweep {
    OverT { lo: f64, hi: f64 },
    OverG { lo: f64, hi: f64 },
}

impl Sweep {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Sweep::OverT { lo, hi } | Sweep::OverG { lo, hi } => (lo, hi),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("sweep", format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(())
    }

    fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.bounds();
        x >= lo && x <= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResonanceKind {
    SingleMode,
    TwoMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePrediction {
    pub kind: ResonanceKind,
    pub l: usize,
    /// Partner mode for two-mode resonances.
    pub lprime: Option<usize>,
    /// Harmonic `n` (single mode) or `M` (two mode).
    pub order: u32,
    /// Resonant period or coupling, depending on the sweep.
    pub value: f64,
}

/// Single-mode resonances `ω_l T = 2πn` for `l <= l_max`, `n <= n_max`, sorted by value.
pub fn predict_single_mode_resonances(
    params: &PhysicalParams,
    l_max: usize,
    n_max: u32,
    sweep: Sweep,
) -> Result<Vec<ResonancePrediction>> {
    sweep.validate()?;
    if l_max == 0 || n_max == 0 {
        return Err(invalid("l_max/n_max", "must both be >= 1"));
    }
    let mut out = Vec::new();
    for l in 1..=l_max {
        for n in 1..=n_max {
            let value = match sweep {
                Sweep::OverT { .. } => {
                    let w = mode_frequency(l as i64, params);
                    if w == 0.0 {
                        continue;
                    }
                    2.0 * PI * n as f64 / w
                }
                Sweep::OverG { .. } => {
                    // ω² ħ² = e (e + g/π)  =>  g = π (ω²ħ²/e − e)
                    let w = 2.0 * PI * n as f64 / params.period;
                    let e = free_energy(l as i64, params.kbar);
                    let g = PI * (w * w * params.kbar * params.kbar / e - e);
                    if g < 0.0 {
                        continue;
                    }
                    g
                }
            };
            if sweep.contains(value) {
                out.push(ResonancePrediction {
                    kind: ResonanceKind::SingleMode,
                    l,
                    lprime: None,
                    order: n,
                    value,
                });
            }
        }
    }
    sort_by_value(&mut out);
    Ok(out)
}

const BRACKET_POINTS: usize = 1000;

/// Two-mode resonances `(ω_l(g) + ω_l′(g)) T = 2πM` over a coupling range.
///
/// Roots are bracketed on a uniform grid and refined by bisection until the
/// residual in `(ω_l + ω_l′) T − 2πM` falls below `1e-9`.
pub fn predict_two_mode_resonances(
    params: &PhysicalParams,
    pairs: &[(usize, usize)],
    m_max: u32,
    sweep: Sweep,
) -> Result<Vec<ResonancePrediction>> {
    sweep.validate()?;
    let (lo, hi) = match sweep {
        Sweep::OverG { lo, hi } => (lo.max(0.0), hi),
        Sweep::OverT { .. } => {
            return Err(invalid("sweep", "two-mode prediction sweeps g only"));
        }
    };
    if m_max == 0 {
        return Err(invalid("M_max", "must be >= 1"));
    }
    let mut out = Vec::new();
    for &(l, lp) in pairs {
        if !(1 <= l && l < lp) {
            return Err(invalid("pairs", format!("need 1 <= l < l', got ({l}, {lp})")));
        }
        for m in 1..=m_max {
            let target = 2.0 * PI * m as f64;
            let residual = |g: f64| {
                let p = params.with_g(g);
                (mode_frequency(l as i64, &p) + mode_frequency(lp as i64, &p)) * params.period
                    - target
            };
            let step = (hi - lo) / BRACKET_POINTS as f64;
            let mut a = lo;
            let mut fa = residual(a);
            for i in 1..=BRACKET_POINTS {
                let b = if i == BRACKET_POINTS { hi } else { lo + step * i as f64 };
                let fb = residual(b);
                let root = if fa == 0.0 {
                    Some(a)
                } else if fa * fb < 0.0 {
                    Some(bisect(&residual, a, b, fa))
                } else {
                    None
                };
                if let Some(g) = root {
                    out.push(ResonancePrediction {
                        kind: ResonanceKind::TwoMode,
                        l,
                        lprime: Some(lp),
                        order: m,
                        value: g,
                    });
                }
                a = b;
                fa = fb;
            }
            if fa == 0.0 {
                out.push(ResonancePrediction {
                    kind: ResonanceKind::TwoMode,
                    l,
                    lprime: Some(lp),
                    order: m,
                    value: hi,
                });
            }
        }
    }
    sort_by_value(&mut out);
    Ok(out)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm.abs() < 1e-12 || b - a < 1e-15 * mid.abs().max(1.0) {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

fn sort_by_value(preds: &mut [ResonancePrediction]) {
    preds.sort_by(|x, y| x.value.total_cmp(&y.value));
}
