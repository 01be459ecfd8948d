//! Time-dependent Bogoliubov modes on top of the kicked condensate.
//!
//! Each quasiparticle pair `(u, v)` is advanced with the exact tangent map of
//! the discrete GPE flow (the same Strang substeps, kicks and spectral filter
//! as [`crate::gpe`]), i.e. the linearization without projectors. Projecting
//! such a solution, `(Q u, Q* v)` with `Q = 1 - |ψ⟩⟨ψ|`, gives a solution of the
//! projected (Castin–Dum) equations, so the projection is applied only when
//! observables are read and once per kick to keep the unprojected parts small.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::gpe::{
    apply_kick_phase, condensate_energy, kick_in_place, CondensateField, EnergyRecord,
    EvolutionConfig, FreeSegment, KickSchedule, Stage,
};
use crate::grid::RingGrid;
use crate::par;
use crate::params::PhysicalParams;
use crate::spectrum::mode_coefficients;

/// Evolutions stop once `N_ex` exceeds this.
pub const NEX_CUTOFF: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct ModePair {
    /// Initial momentum of the mode.
    pub k: i64,
    /// Number of physical modes represented (2 when `-k` is folded in by parity).
    pub weight: f64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovModeSet {
    grid: RingGrid,
    pub modes: Vec<ModePair>,
    pub time: f64,
}

fn plane_wave_pair(grid: &RingGrid, params: &PhysicalParams, k: i64, weight: f64) -> ModePair {
    let c = mode_coefficients(k, params);
    let norm = 1.0 / (2.0 * PI).sqrt();
    let wave: Vec<Complex64> = grid
        .theta()
        .iter()
        .map(|&t| Complex64::from_polar(norm, k as f64 * t))
        .collect();
    ModePair {
        k,
        weight,
        u: wave.iter().map(|w| w * c.u).collect(),
        v: wave.iter().map(|w| w * c.v).collect(),
    }
}

fn check_modes(grid: &RingGrid, l_max: usize) -> Result<()> {
    if l_max == 0 {
        return Err(invalid("l_max", "must be >= 1"));
    }
    if grid.n_points() < 8 * l_max {
        return Err(Error::GridTooCoarse {
            n_points: grid.n_points(),
            l_max,
        });
    }
    Ok(())
}

/// Stationary modes `(U_k, V_k) e^{ikθ}/√(2π)` of the homogeneous condensate, `k = ±1..±l_max`.
pub fn init_modes(params: &PhysicalParams, grid: &RingGrid, l_max: usize) -> Result<BogoliubovModeSet> {
    check_modes(grid, l_max)?;
    let modes = (1..=l_max as i64)
        .flat_map(|k| [k, -k])
        .map(|k| plane_wave_pair(grid, params, k, 1.0))
        .collect();
    Ok(BogoliubovModeSet {
        grid: grid.clone(),
        modes,
        time: 0.0,
    })
}

/// Like [`init_modes`] but keeps only `k > 0` with weight 2.
///
/// Exact whenever the condensate stays even in `θ`, which holds for cosine
/// kicks applied to the homogeneous state: the `-k` mode is then the mirror
/// image of the `+k` mode and has the same `⟨v|v⟩`.
pub fn init_modes_parity_reduced(
    params: &PhysicalParams,
    grid: &RingGrid,
    l_max: usize,
) -> Result<BogoliubovModeSet> {
    check_modes(grid, l_max)?;
    let modes = (1..=l_max as i64)
        .map(|k| plane_wave_pair(grid, params, k, 2.0))
        .collect();
    Ok(BogoliubovModeSet {
        grid: grid.clone(),
        modes,
        time: 0.0,
    })
}

/// Positive-norm eigenvector `(u_k, v_k)` of one Strang step of length `dt`
/// around the homogeneous condensate, normalized to `|u|² - |v|² = 1` with `u` real.
///
/// These are the stationary modes of the discrete flow; they differ from
/// `(U_k, V_k)` at `O(dt²)`, which is enough to make `N_ex` wobble at about
/// `10⁻⁶` when the analytic modes are evolved numerically.
pub fn discrete_mode_coefficients(k: i64, params: &PhysicalParams, dt: f64) -> (f64, f64) {
    let kbar = params.kbar;
    let phi = params.g / (2.0 * PI) * 0.5 * dt / kbar;
    let rot = Complex64::from_polar(1.0, -phi);
    let alpha = rot * Complex64::new(1.0, -phi);
    let beta1 = Complex64::new(0.0, -phi) * rot;
    let beta2 = beta1 * Complex64::from_polar(1.0, -2.0 * phi);
    let kin = Complex64::from_polar(1.0, -0.5 * kbar * (k * k) as f64 * dt);
    // M = G · N₂ · Kin · N₁ acting on (u, v), with G undoing the condensate phase.
    let mul = |x: [[Complex64; 2]; 2], y: [[Complex64; 2]; 2]| {
        let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        r
    };
    let zero = Complex64::new(0.0, 0.0);
    let n1 = [[alpha, beta1], [beta1.conj(), alpha.conj()]];
    let n2 = [[alpha, beta2], [beta2.conj(), alpha.conj()]];
    let kinetic = [[kin, zero], [zero, kin.conj()]];
    let g = Complex64::from_polar(1.0, 2.0 * phi);
    let gauge = [[g, zero], [zero, g.conj()]];
    let m = mul(gauge, mul(n2, mul(kinetic, n1)));
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let root = (tr * tr - 4.0 * det).sqrt();
    let mut best = (1.0, 0.0);
    let mut best_norm = f64::NEG_INFINITY;
    for lambda in [(tr + root) * 0.5, (tr - root) * 0.5] {
        // Two algebraically equivalent eigenvectors; keep the larger (better conditioned).
        let a = (m[0][1], lambda - m[0][0]);
        let b = (lambda - m[1][1], m[1][0]);
        let (x, y) = if a.0.norm() + a.1.norm() >= b.0.norm() + b.1.norm() { a } else { b };
        let norm = x.norm_sqr() - y.norm_sqr();
        if norm > best_norm {
            best_norm = norm;
            let scale = 1.0 / norm.abs().sqrt();
            let phase = Complex64::from_polar(1.0, -x.arg());
            let (xu, yv) = (x * phase * scale, y * phase * scale);
            best = (xu.re, yv.re);
        }
    }
    best
}

/// Stationary modes of the discrete flow used by [`evolve_coupled`] for
/// `config`, `k = 1..=l_max` with parity folding (weight 2).
pub fn init_modes_discrete(
    params: &PhysicalParams,
    grid: &RingGrid,
    config: &EvolutionConfig,
) -> Result<BogoliubovModeSet> {
    check_modes(grid, config.l_max)?;
    let schedule = KickSchedule::new(grid, params, config);
    let dt = schedule.main_segment().dt;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let modes = (1..=config.l_max.min(schedule.cutoff) as i64)
        .map(|k| {
            let (cu, cv) = if params.g == 0.0 {
                (1.0, 0.0)
            } else {
                discrete_mode_coefficients(k, params, dt)
            };
            let wave: Vec<Complex64> = grid
                .theta()
                .iter()
                .map(|&t| Complex64::from_polar(norm, k as f64 * t))
                .collect();
            ModePair {
                k,
                weight: 2.0,
                u: wave.iter().map(|w| w * cu).collect(),
                v: wave.iter().map(|w| w * cv).collect(),
            }
        })
        .collect();
    Ok(BogoliubovModeSet {
        grid: grid.clone(),
        modes,
        time: 0.0,
    })
}

impl BogoliubovModeSet {
    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    /// `⟨u|u⟩ - ⟨v|v⟩` per mode.
    pub fn symplectic_norms(&self) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| self.grid.norm_sqr(&m.u) - self.grid.norm_sqr(&m.v))
            .collect()
    }

    /// Largest `|⟨ψ|u⟩|` over the modes.
    pub fn max_overlap(&self, field: &CondensateField) -> f64 {
        self.modes
            .iter()
            .map(|m| self.grid.inner(&field.psi, &m.u).norm())
            .fold(0.0, f64::max)
    }
}

/// Tangent of one nonlinear substep, precomputed on the grid:
/// `u ← α u + β v`, `v ← ᾱ v + β̄ u`.
struct NonlinearTangent {
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
}

impl NonlinearTangent {
    fn new(psi: &[Complex64], g: f64, tau: f64, kbar: f64) -> Self {
        let c = g * tau / kbar;
        let (alpha, beta) = psi
            .iter()
            .map(|z| {
                let phi = c * z.norm_sqr();
                let rot = Complex64::from_polar(1.0, -phi);
                (rot * Complex64::new(1.0, -phi), rot * Complex64::new(0.0, -c) * z * z)
            })
            .unzip();
        Self { alpha, beta }
    }

    fn apply(&self, u: &mut [Complex64], v: &mut [Complex64]) {
        for j in 0..u.len() {
            let (a, b) = (self.alpha[j], self.beta[j]);
            let (uj, vj) = (u[j], v[j]);
            u[j] = a * uj + b * vj;
            v[j] = a.conj() * vj + b.conj() * uj;
        }
    }
}

fn kinetic_tangent(
    u: &mut [Complex64],
    v: &mut [Complex64],
    kinetic: &[Complex64],
    grid: &RingGrid,
    scratch: &mut [Complex64],
) {
    grid.fft_forward(u, scratch);
    grid.fft_forward(v, scratch);
    for ((a, b), f) in u.iter_mut().zip(v.iter_mut()).zip(kinetic) {
        *a *= f;
        *b *= f.conj();
    }
    grid.fft_inverse(u, scratch);
    grid.fft_inverse(v, scratch);
}

/// `u ← e^{-i s cos θ/ħ} u`, `v ← e^{+i s cos θ/ħ} v`.
pub fn apply_kick_to_modes(modes: &mut BogoliubovModeSet, strength: f64, kbar: f64) {
    if strength == 0.0 {
        return;
    }
    let theta = modes.grid.theta().to_vec();
    par::for_each_mut(&mut modes.modes, |m| {
        kick_in_place(&mut m.u, &theta, strength / kbar);
        kick_in_place(&mut m.v, &theta, -strength / kbar);
    });
}

/// Advances the condensate and all modes by one full Strang step of length `dt`.
pub fn bogoliubov_step(
    modes: &mut BogoliubovModeSet,
    field: &mut CondensateField,
    params: &PhysicalParams,
    dt: f64,
) -> Result<()> {
    let grid = field.grid().clone();
    let segment = FreeSegment {
        steps: 1,
        dt,
        kinetic: unfiltered_kinetic(&grid, params.kbar, dt),
    };
    advance_free(modes, field, params, &segment);
    if !modes
        .modes
        .iter()
        .all(|m| m.u.iter().chain(&m.v).all(|z| z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::NonFinite {
            kick: 0,
            time: field.time,
        });
    }
    Ok(())
}

fn unfiltered_kinetic(grid: &RingGrid, kbar: f64, dt: f64) -> Vec<Complex64> {
    let n = grid.n_points() as f64;
    grid.wavenumbers()
        .iter()
        .map(|&k| Complex64::from_polar(1.0 / n, -0.5 * kbar * k * k * dt))
        .collect()
}

fn advance_free(
    modes: &mut BogoliubovModeSet,
    field: &mut CondensateField,
    params: &PhysicalParams,
    segment: &FreeSegment,
) {
    let grid = field.grid().clone();
    let mut tables = Vec::with_capacity(segment.steps + 1);
    let mut scratch = grid.scratch();
    segment.evolve(&mut field.psi, &grid, params, &mut scratch, |psi, tau| {
        tables.push(NonlinearTangent::new(psi, params.g, tau, params.kbar));
    });
    field.time += segment.duration();
    let steps = segment.steps;
    par::for_each_mut(&mut modes.modes, |m| {
        let mut scratch = grid.scratch();
        for (s, table) in tables.iter().enumerate() {
            table.apply(&mut m.u, &mut m.v);
            if s < steps {
                kinetic_tangent(&mut m.u, &mut m.v, &segment.kinetic, &grid, &mut scratch);
            }
        }
    });
    modes.time = field.time;
}

/// Replaces every pair by `(Q u, Q* v)` with `Q = 1 - |ψ⟩⟨ψ|`.
pub fn project_onto_complement(modes: &mut BogoliubovModeSet, field: &CondensateField) {
    let grid = modes.grid.clone();
    let psi = &field.psi;
    let psi_conj: Vec<Complex64> = psi.iter().map(|z| z.conj()).collect();
    par::for_each_mut(&mut modes.modes, |m| {
        let cu = grid.inner(psi, &m.u);
        for (x, p) in m.u.iter_mut().zip(psi) {
            *x -= p * cu;
        }
        let cv = grid.inner(&psi_conj, &m.v);
        for (x, p) in m.v.iter_mut().zip(&psi_conj) {
            *x -= p * cv;
        }
    });
}

/// `N_ex = Σ_k ⟨v_k|v_k⟩`, counting folded modes with their weight.
pub fn noncondensed_number(modes: &BogoliubovModeSet) -> f64 {
    modes
        .modes
        .iter()
        .map(|m| m.weight * modes.grid.norm_sqr(&m.v))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NexSample {
    pub kick: usize,
    pub time: f64,
    pub nex: f64,
    /// True once `N_ex` has exceeded [`NEX_CUTOFF`] at or before this kick.
    pub exceeded_cutoff: bool,
}

/// `N_ex` after every kick.
#[derive(Debug, Clone, PartialEq)]
pub struct NexSeries {
    pub initial: f64,
    pub samples: Vec<NexSample>,
    /// First kick at which `N_ex > 10³`.
    pub cutoff_kick: Option<usize>,
}

impl NexSeries {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.nex).collect()
    }

    pub fn exceeded_cutoff(&self) -> bool {
        self.cutoff_kick.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub field: CondensateField,
    pub modes: BogoliubovModeSet,
    pub nex: NexSeries,
    pub energies: Vec<EnergyRecord>,
}

/// Co-evolves condensate and modes through `config.n_kicks` kick cycles,
/// stopping early once `N_ex` exceeds [`NEX_CUTOFF`].
///
/// Modes above the spectral cutoff of the schedule are dropped before the
/// first step.
pub fn evolve_coupled(
    field: &CondensateField,
    modes: &BogoliubovModeSet,
    params: &PhysicalParams,
    config: &EvolutionConfig,
) -> Result<CoupledRun> {
    config.validate(params)?;
    if field.grid() != modes.grid() {
        return Err(invalid("modes", "condensate and modes live on different grids"));
    }
    let mut field = field.clone();
    let mut modes = modes.clone();
    let grid = field.grid().clone();
    let schedule = KickSchedule::new(&grid, params, config);
    modes.modes.retain(|m| m.k.unsigned_abs() as usize <= schedule.cutoff);
    project_onto_complement(&mut modes, &field);
    let initial = noncondensed_number(&modes);
    let mut samples = Vec::with_capacity(config.n_kicks);
    let mut energies = Vec::new();
    let mut cutoff_kick = None;
    for cycle in 0..config.n_kicks {
        for stage in schedule.stages(cycle) {
            match *stage {
                Stage::Kick(s) => {
                    apply_kick_phase(&mut field, s, params.kbar);
                    apply_kick_to_modes(&mut modes, s, params.kbar);
                }
                Stage::Free(i) => advance_free(&mut modes, &mut field, params, &schedule.segments[i]),
            }
        }
        project_onto_complement(&mut modes, &field);
        let kick = cycle + 1;
        let nex = noncondensed_number(&modes);
        if !nex.is_finite() || !field.is_finite() {
            return Err(Error::NonFinite {
                kick,
                time: field.time,
            });
        }
        if nex > NEX_CUTOFF && cutoff_kick.is_none() {
            cutoff_kick = Some(kick);
        }
        samples.push(NexSample {
            kick,
            time: field.time,
            nex,
            exceeded_cutoff: cutoff_kick.is_some(),
        });
        let last = kick == config.n_kicks || cutoff_kick.is_some();
        if kick % config.record_stride == 0 || last {
            energies.push(EnergyRecord {
                kick,
                time: field.time,
                energy: condensate_energy(&field, params),
                populations: field.populations(config.n_populations),
            });
        }
        if cutoff_kick.is_some() {
            break;
        }
    }
    Ok(CoupledRun {
        field,
        modes,
        nex: NexSeries {
            initial,
            samples,
            cutoff_kick,
        },
        energies,
    })
}
