//! Mean-field evolution of the kicked condensate.
//!
//! `iħ ∂ψ/∂t = (-(ħ²/2) ∂²_θ + g|ψ|²) ψ` is integrated with second-order
//! Strang splitting; kicks are exact instantaneous phases `e^{-i s cos θ / ħ}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::RingGrid;
use crate::params::{KickKind, PhysicalParams};

/// Condensate wavefunction sampled on the ring.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensateField {
    grid: RingGrid,
    pub psi: Vec<Complex64>,
    pub time: f64,
}

impl CondensateField {
    pub fn from_samples(grid: &RingGrid, psi: Vec<Complex64>, time: f64) -> Result<Self> {
        if psi.len() != grid.n_points() {
            return Err(invalid(
                "psi",
                format!("expected {} samples, got {}", grid.n_points(), psi.len()),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            psi,
            time,
        })
    }

    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm_sqr(&self.psi)
    }

    /// `|⟨l|ψ⟩|²` for `l = 1..=n`.
    pub fn populations(&self, n: usize) -> Vec<f64> {
        let amps = self.grid.momentum_amplitudes(&self.psi);
        (1..=n as i64)
            .map(|l| self.grid.index_of(l).map_or(0.0, |i| amps[i].norm_sqr()))
            .collect()
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.psi.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// The uniform ground state `ψ₀ = 1/√(2π)` at `t = 0`.
pub fn init_homogeneous(grid: &RingGrid) -> CondensateField {
    let value = Complex64::new(1.0 / (2.0 * PI).sqrt(), 0.0);
    CondensateField {
        grid: grid.clone(),
        psi: vec![value; grid.n_points()],
        time: 0.0,
    }
}

fn nonlinear_phase(psi: &mut [Complex64], g: f64, tau: f64, kbar: f64) {
    let c = g * tau / kbar;
    for z in psi.iter_mut() {
        *z *= Complex64::from_polar(1.0, -c * z.norm_sqr());
    }
}

/// One full Strang step `N(dt/2) K(dt) N(dt/2)` on the whole grid.
pub fn strang_step(field: &mut CondensateField, params: &PhysicalParams, dt: f64) {
    let n = field.grid.n_points();
    nonlinear_phase(&mut field.psi, params.g, 0.5 * dt, params.kbar);
    let mut scratch = field.grid.scratch();
    field.grid.fft_forward(&mut field.psi, &mut scratch);
    for (z, &k) in field.psi.iter_mut().zip(field.grid.wavenumbers()) {
        *z *= Complex64::from_polar(1.0 / n as f64, -0.5 * params.kbar * k * k * dt);
    }
    field.grid.fft_inverse(&mut field.psi, &mut scratch);
    nonlinear_phase(&mut field.psi, params.g, 0.5 * dt, params.kbar);
    field.time += dt;
}

/// Multiply by `e^{-i strength cos θ / ħ}`.
pub fn apply_kick_phase(field: &mut CondensateField, strength: f64, kbar: f64) {
    if strength == 0.0 {
        return;
    }
    kick_in_place(&mut field.psi, field.grid.theta(), strength / kbar);
}

pub(crate) fn kick_in_place(f: &mut [Complex64], theta: &[f64], phase: f64) {
    for (z, &th) in f.iter_mut().zip(theta) {
        *z *= Complex64::from_polar(1.0, -phase * th.cos());
    }
}

/// `E = ∫ ψ* (-(ħ²/2) ∂²) ψ dθ + (g/2) ∫ |ψ|⁴ dθ`.
pub fn condensate_energy(field: &CondensateField, params: &PhysicalParams) -> f64 {
    let grid = &field.grid;
    let amps = grid.momentum_amplitudes(&field.psi);
    let kinetic: f64 = amps
        .iter()
        .zip(grid.wavenumbers())
        .map(|(a, &k)| 0.5 * params.kbar * params.kbar * k * k * a.norm_sqr())
        .sum();
    let quartic: f64 = field.psi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * grid.d_theta();
    kinetic + 0.5 * params.g * quartic
}

/// Time stepping and recording controls for kicked evolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Substep between kicks.
    pub dt: f64,
    /// Substep inside the gap of a kick pair.
    pub gap_dt: f64,
    /// Record every `record_stride` kicks (the final kick is always recorded).
    pub record_stride: usize,
    pub n_kicks: usize,
    /// Highest momentum kept by the spectral filter and tracked as a Bogoliubov mode.
    pub l_max: usize,
    /// Number of populations `|a_l|²`, `l = 1..`, stored per record.
    pub n_populations: usize,
}

impl EvolutionConfig {
    /// `dt = T/1000`, `gap_dt = min(T, ε)/200`, `l_max = 32`.
    pub fn for_params(params: &PhysicalParams, n_kicks: usize) -> Self {
        let dt = params.period / 1000.0;
        let gap_dt = match params.kick_kind {
            KickKind::DoublePair => params.period.min(params.epsilon) / 200.0,
            KickKind::Single => dt,
        };
        Self {
            dt,
            gap_dt,
            record_stride: 1,
            n_kicks,
            l_max: 32,
            n_populations: 4,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_l_max(mut self, l_max: usize) -> Self {
        self.l_max = l_max;
        self
    }

    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        params.validate()?;
        if !(self.dt > 0.0 && self.dt <= params.period / 100.0) {
            return Err(invalid(
                "dt",
                format!("must satisfy 0 < dt <= T/100, got {} with T = {}", self.dt, params.period),
            ));
        }
        if params.kick_kind == KickKind::DoublePair && !(self.gap_dt > 0.0 && self.gap_dt.is_finite()) {
            return Err(invalid("gap_dt", format!("must be > 0, got {}", self.gap_dt)));
        }
        if self.n_kicks == 0 {
            return Err(invalid("n_kicks", "must be >= 1"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be >= 1"));
        }
        if self.l_max == 0 {
            return Err(invalid("l_max", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRecord {
    /// Number of kicks (or kick pairs) applied so far.
    pub kick: usize,
    pub time: f64,
    pub energy: f64,
    /// `|⟨l|ψ⟩|²` for `l = 1..=n_populations`.
    pub populations: Vec<f64>,
}

/// Free evolution over a fixed interval, split into equal Strang substeps.
#[derive(Debug, Clone)]
pub(crate) struct FreeSegment {
    pub steps: usize,
    pub dt: f64,
    /// `e^{-iħk²dt/2} / n` on kept wavenumbers, zero on filtered ones.
    pub kinetic: Vec<Complex64>,
}

impl FreeSegment {
    fn new(grid: &RingGrid, kbar: f64, duration: f64, dt_max: f64, cutoff: usize) -> Self {
        let steps = ((duration / dt_max) - 1e-9).ceil().max(1.0) as usize;
        let dt = duration / steps as f64;
        let n = grid.n_points() as f64;
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|&k| {
                if k.abs() > cutoff as f64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(1.0 / n, -0.5 * kbar * k * k * dt)
                }
            })
            .collect();
        Self { steps, dt, kinetic }
    }

    /// Runs the merged sequence `N(dt/2) [K N(dt)]… K N(dt/2)`. `on_nonlinear`
    /// sees the state and substep length before every nonlinear phase.
    pub fn evolve(
        &self,
        psi: &mut [Complex64],
        grid: &RingGrid,
        params: &PhysicalParams,
        scratch: &mut [Complex64],
        mut on_nonlinear: impl FnMut(&[Complex64], f64),
    ) {
        for s in 0..=self.steps {
            let tau = if s == 0 || s == self.steps { 0.5 * self.dt } else { self.dt };
            on_nonlinear(psi, tau);
            nonlinear_phase(psi, params.g, tau, params.kbar);
            if s < self.steps {
                grid.fft_forward(psi, scratch);
                for (z, f) in psi.iter_mut().zip(&self.kinetic) {
                    *z *= f;
                }
                grid.fft_inverse(psi, scratch);
            }
        }
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Largest wavenumber whose kinetic phase per substep stays below `0.9π`.
///
/// Beyond it the split-step map has spurious parametric bands where
/// `ħk²dt/2 ≈ nπ`; those wavenumbers are removed together with everything above `l_max`.
pub fn spectral_cutoff(grid: &RingGrid, kbar: f64, dt: f64, l_max: usize) -> usize {
    let stable = (1.8 * PI / (kbar * dt)).sqrt().floor() as usize;
    stable.min(l_max).min(grid.n_points() / 2 - 1)
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Stage {
    Kick(f64),
    /// Index into [`KickSchedule::segments`].
    Free(usize),
}

/// The sequence of kicks and free intervals making up each kick cycle.
#[derive(Debug, Clone)]
pub(crate) struct KickSchedule {
    pub segments: Vec<FreeSegment>,
    pub first: Vec<Stage>,
    pub repeat: Vec<Stage>,
    pub cutoff: usize,
}

impl KickSchedule {
    /// Single: `K`, then `[free T, K]…`. DoublePair: `-K, free ε, +K`, then
    /// `[free T-ε, -K, free ε, +K]…`. Records follow each cycle.
    pub fn new(grid: &RingGrid, params: &PhysicalParams, config: &EvolutionConfig) -> Self {
        let kbar = params.kbar;
        let k = params.kick_strength;
        let cutoff = spectral_cutoff(grid, kbar, config.dt.max(config.gap_dt), config.l_max);
        match params.kick_kind {
            KickKind::Single => {
                let period = FreeSegment::new(grid, kbar, params.period, config.dt, cutoff);
                Self {
                    segments: vec![period],
                    first: vec![Stage::Kick(k)],
                    repeat: vec![Stage::Free(0), Stage::Kick(k)],
                    cutoff,
                }
            }
            KickKind::DoublePair => {
                let eps = params.epsilon;
                let gap = FreeSegment::new(grid, kbar, eps, config.gap_dt, cutoff);
                let rest = FreeSegment::new(grid, kbar, params.period - eps, config.dt, cutoff);
                let pair = [Stage::Kick(-k), Stage::Free(0), Stage::Kick(k)];
                let mut repeat = vec![Stage::Free(1)];
                repeat.extend(pair);
                Self {
                    segments: vec![gap, rest],
                    first: pair.to_vec(),
                    repeat,
                    cutoff,
                }
            }
        }
    }

    /// The segment spanning most of the period (the one using `config.dt`).
    pub fn main_segment(&self) -> &FreeSegment {
        self.segments.last().expect("schedules have at least one segment")
    }

    pub fn stages(&self, cycle: usize) -> &[Stage] {
        if cycle == 0 {
            &self.first
        } else {
            &self.repeat
        }
    }
}

/// Kicked evolution of `field`, recording energies after every recorded kick.
pub fn evolve_kicked(
    field: &CondensateField,
    params: &PhysicalParams,
    config: &EvolutionConfig,
) -> Result<(CondensateField, Vec<EnergyRecord>)> {
    config.validate(params)?;
    let mut field = field.clone();
    let grid = field.grid.clone();
    let schedule = KickSchedule::new(&grid, params, config);
    let mut scratch = grid.scratch();
    let mut records = Vec::new();
    for cycle in 0..config.n_kicks {
        for stage in schedule.stages(cycle) {
            match *stage {
                Stage::Kick(s) => apply_kick_phase(&mut field, s, params.kbar),
                Stage::Free(i) => {
                    let seg = &schedule.segments[i];
                    seg.evolve(&mut field.psi, &grid, params, &mut scratch, |_, _| {});
                    field.time += seg.duration();
                }
            }
        }
        if !field.is_finite() {
            return Err(Error::NonFinite {
                kick: cycle + 1,
                time: field.time,
            });
        }
        let kick = cycle + 1;
        if kick % config.record_stride == 0 || kick == config.n_kicks {
            records.push(EnergyRecord {
                kick,
                time: field.time,
                energy: condensate_energy(&field, params),
                populations: field.populations(config.n_populations),
            });
        }
    }
    Ok((field, records))
}

/// `⟨E(N)⟩ = (1/N) Σ_{n=1}^{N} E(n)` over the first `n` records.
pub fn average_energy(records: &[EnergyRecord], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N", "average over zero kicks"));
    }
    if records.len() < n {
        return Err(Error::InsufficientData {
            needed: n,
            got: records.len(),
        });
    }
    Ok(records[..n].iter().map(|r| r.energy).sum::<f64>() / n as f64)
}
