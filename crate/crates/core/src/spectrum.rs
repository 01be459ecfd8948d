//! Bogoliubov spectrum of the homogeneous condensate `ψ₀ = 1/√(2π)`.
//!
//! With `ε_k = ħ²k²/2` and mean-field shift `2gn = g/π`:
//!
//! * `ω_k = √(ε_k (ε_k + g/π)) / ħ`
//! * `A_k = (ε_k / (ε_k + g/π))^{1/4}`, `U_k = (A_k + 1/A_k)/2`, `V_k = (A_k - 1/A_k)/2`
//!
//! so `U_k + V_k = A_k`, `U_k - V_k = 1/A_k` and `U_k² - V_k² = 1`.

use std::f64::consts::PI;

use crate::params::PhysicalParams;

/// Free-particle energy `ħ²k²/2`.
pub fn free_energy(k: i64, kbar: f64) -> f64 {
    let k = k as f64;
    0.5 * kbar * kbar * k * k
}

/// Bogoliubov frequency `ω_k`; `ω_0 = 0` and `ω_{-k} = ω_k`.
pub fn mode_frequency(k: i64, params: &PhysicalParams) -> f64 {
    let e = free_energy(k, params.kbar);
    (e * (e + params.g / PI)).sqrt() / params.kbar
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub a: f64,
    pub u: f64,
    pub v: f64,
}

/// `(A_k, U_k, V_k)` for `k ≠ 0`. The condensate mode `k = 0` gets `(1, 1, 0)`.
pub fn mode_coefficients(k: i64, params: &PhysicalParams) -> ModeCoefficients {
    if k == 0 {
        return ModeCoefficients {
            a: 1.0,
            u: 1.0,
            v: 0.0,
        };
    }
    let e = free_energy(k, params.kbar);
    let a = (e / (e + params.g / PI)).powf(0.25);
    ModeCoefficients {
        a,
        u: 0.5 * (a + 1.0 / a),
        v: 0.5 * (a - 1.0 / a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEntry {
    pub k: usize,
    pub a: f64,
    pub u: f64,
    pub v: f64,
    pub omega: f64,
}

/// Coefficients and frequencies for `k = 1..=l_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    entries: Vec<ModeEntry>,
}

impl ModeSpectrum {
    pub fn new(params: &PhysicalParams, l_max: usize) -> Self {
        let entries = (1..=l_max)
            .map(|k| {
                let c = mode_coefficients(k as i64, params);
                ModeEntry {
                    k,
                    a: c.a,
                    u: c.u,
                    v: c.v,
                    omega: mode_frequency(k as i64, params),
                }
            })
            .collect();
        Self { entries }
    }

    pub fn l_max(&self) -> usize {
        self.entries.len()
    }

    /// Entry for mode `k` (`1 <= k <= l_max`).
    pub fn mode(&self, k: usize) -> &ModeEntry {
        &self.entries[k - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeEntry> {
        self.entries.iter()
    }

    /// Initial quantum depletion `Σ_{k≠0} V_k²` over `k = ±1..±l_max`.
    pub fn initial_depletion(&self) -> f64 {
        2.0 * self.entries.iter().map(|e| e.v * e.v).sum::<f64>()
    }
}
