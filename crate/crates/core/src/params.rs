//! Dimensionless system constants.
//!
//! Units are those of the rescaled one-dimensional ring: angles in
//! `[0, 2π)`, the kinetic prefactor `ħ²/mR²` absorbed, so the only remaining
//! quantum scale is the effective Planck constant `kbar`.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KickKind {
    /// One kick `K cos θ` at the start of every period.
    Single,
    /// A pair of opposing kicks separated by `epsilon`: `-K` first, `+K` after the gap.
    DoublePair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Mean-field nonlinearity.
    pub g: f64,
    /// Effective Planck constant.
    pub kbar: f64,
    /// Kick strength `K`.
    pub kick_strength: f64,
    /// Kick period `T`.
    pub period: f64,
    /// Delay between the two kicks of a pair. Ignored for single kicks.
    pub epsilon: f64,
    pub kick_kind: KickKind,
}

impl PhysicalParams {
    pub fn single(g: f64, kick_strength: f64, period: f64) -> Self {
        Self {
            g,
            kbar: 1.0,
            kick_strength,
            period,
            epsilon: 0.0,
            kick_kind: KickKind::Single,
        }
    }

    pub fn double(g: f64, kick_strength: f64, period: f64, epsilon: f64) -> Self {
        Self {
            g,
            kbar: 1.0,
            kick_strength,
            period,
            epsilon,
            kick_kind: KickKind::DoublePair,
        }
    }

    pub fn with_kbar(mut self, kbar: f64) -> Self {
        self.kbar = kbar;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_kick_strength(mut self, k: f64) -> Self {
        self.kick_strength = k;
        self
    }

    pub fn with_period(mut self, t: f64) -> Self {
        self.period = t;
        self
    }

    /// Net impulse `Kε` of a kick pair.
    pub fn effective_kick(&self) -> f64 {
        self.kick_strength * self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("kbar", self.kbar),
            ("K", self.kick_strength),
            ("T", self.period),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(invalid(name, format!("must be finite, got {value}")));
            }
        }
        if self.g < 0.0 {
            return Err(invalid("g", format!("must be >= 0, got {}", self.g)));
        }
        if self.kbar <= 0.0 {
            return Err(invalid("kbar", format!("must be > 0, got {}", self.kbar)));
        }
        if self.kick_strength < 0.0 {
            return Err(invalid("K", format!("must be >= 0, got {}", self.kick_strength)));
        }
        if self.period <= 0.0 {
            return Err(invalid("T", format!("must be > 0, got {}", self.period)));
        }
        if self.epsilon < 0.0 {
            return Err(invalid("epsilon", format!("must be >= 0, got {}", self.epsilon)));
        }
        if self.kick_kind == KickKind::DoublePair
            && !(self.epsilon > 0.0 && self.epsilon < self.period)
        {
            return Err(invalid(
                "epsilon",
                format!(
                    "double kicks need 0 < epsilon < T, got epsilon = {} with T = {}",
                    self.epsilon, self.period
                ),
            ));
        }
        Ok(())
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::single(1.0, 0.2, 10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_kick_requires_gap_inside_period() {
        assert!(PhysicalParams::double(1.0, 1.0, 2.0, 0.04).validate().is_ok());
        assert!(PhysicalParams::double(1.0, 1.0, 2.0, 0.0).validate().is_err());
        assert!(PhysicalParams::double(1.0, 1.0, 2.0, 2.0).validate().is_err());
    }

    #[test]
    fn rejects_non_finite_and_negative() {
        assert!(PhysicalParams::single(f64::NAN, 0.2, 10.0).validate().is_err());
        assert!(PhysicalParams::single(-1.0, 0.2, 10.0).validate().is_err());
        assert!(PhysicalParams::single(1.0, 0.2, 0.0).validate().is_err());
        assert!(PhysicalParams::single(1.0, 0.2, 10.0).with_kbar(0.0).validate().is_err());
    }

    #[test]
    fn effective_kick_is_product() {
        let p = PhysicalParams::double(1.0, 1.0, 2.0, 1.0 / 25.0);
        assert!((p.effective_kick() - 0.04).abs() < 1e-15);
    }
}
