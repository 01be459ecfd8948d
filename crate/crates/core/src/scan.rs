//! One-dimensional parameter sweeps, growth classification and
//! instability-window extraction.

use crate::bogoliubov::{evolve_coupled, init_modes_discrete, NexSeries};
use crate::error::{invalid, Error, Result};
use crate::gpe::{init_homogeneous, EvolutionConfig};
use crate::grid::RingGrid;
use crate::par;
use crate::params::PhysicalParams;
use crate::perturbative::{closed_form_state, floquet_growth_rate, iterate_map, one_period_map, PerturbationState};
use crate::spectrum::ModeSpectrum;

/// Per-kick log-slope above which growth counts as exponential.
pub const RATE_THRESHOLD: f64 = 0.02;

/// Tolerance on `ln ρ` of the perturbative map. The effective double-kick
/// operator is not unitary (`ln I₀(Kε/2) ≈ (Kε)²/16`), so a strict `ρ > 1`
/// would flag every point.
pub const MAP_RATE_THRESHOLD: f64 = 1e-3;

/// `Σ_{l≥1}|a_l|²` beyond which the perturbative map is out of its regime.
pub const MAP_VALIDITY: f64 = 0.1;

/// Fewest samples [`classify_growth`] accepts without a cutoff crossing.
pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Period,
    G,
    KickStrength,
}

impl SweepParam {
    pub fn apply(self, params: &PhysicalParams, value: f64) -> PhysicalParams {
        match self {
            Self::Period => params.with_period(value),
            Self::G => params.with_g(value),
            Self::KickStrength => params.with_kick_strength(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    FullBogoliubov,
    PerturbativeMap,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `N_ex` after the last kick (condensate depletion `Σ_{l≠0}|a_l|²` for the
    /// perturbative engines).
    NexFinal,
    /// Condensate energy averaged over kicks `1..=N`.
    AvgEnergy,
    GrowthRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Stable,
    NearResonant,
    Unstable,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::NearResonant => "near_resonant",
            Self::Unstable => "unstable",
        }
    }
}

/// Numerical resolution of the full engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub n_points: usize,
    pub l_max: usize,
    /// Substeps per kick period; the gap of a kick pair gets a fifth as many.
    pub steps_per_period: f64,
    /// Fixed substep overriding `steps_per_period`.
    pub dt: Option<f64>,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_points: 256,
            l_max: 32,
            steps_per_period: 1000.0,
            dt: None,
        }
    }
}

impl Resolution {
    pub fn evolution(&self, params: &PhysicalParams, n_kicks: usize) -> EvolutionConfig {
        let mut config = EvolutionConfig::for_params(params, n_kicks).with_l_max(self.l_max);
        let scale = 1000.0 / self.steps_per_period;
        config.gap_dt *= scale;
        config.dt = self.dt.unwrap_or(params.period / self.steps_per_period);
        config
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub n_samples: usize,
    pub base: PhysicalParams,
    pub engine: Engine,
    pub n_kicks: usize,
    pub observable: Observable,
    pub resolution: Resolution,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(invalid("range", format!("need lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        if self.n_samples < 2 {
            return Err(invalid("n_samples", "must be >= 2"));
        }
        if self.n_kicks == 0 {
            return Err(invalid("n_kicks", "must be >= 1"));
        }
        Ok(())
    }

    /// Evenly spaced sample points including both ends.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n_samples - 1) as f64;
        (0..self.n_samples)
            .map(|i| if i + 1 == self.n_samples { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub observable: f64,
    pub classification: Classification,
    /// Fitted exponential rate per kick; zero unless the growth is exponential.
    pub rate: f64,
    pub cutoff_kick: Option<usize>,
    /// Engine failure at this point, if any; the other fields are then NaN/Stable.
    pub error: Option<String>,
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Period (in samples) of the strongest nonzero Fourier component.
fn dominant_period(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut best = (0.0, f64::INFINITY);
    for k in 1..=n / 2 {
        let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (j, v) in x.iter().enumerate() {
            re += (v - mean) * (w * j as f64).cos();
            im += (v - mean) * (w * j as f64).sin();
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, n as f64 / k as f64);
        }
    }
    best.1
}

/// Classifies a depletion series sampled once per kick.
///
/// The rate is the least-squares slope of `ln(max(N_ex − N_ex(0), 0) + floor)`
/// over the second half of the series, `floor = max(N_ex(0), 10⁻¹²)`. Growth
/// is `Unstable` when the cutoff was crossed, or when the rate exceeds
/// [`RATE_THRESHOLD`] and the maxima over four consecutive blocks of the
/// second half never decrease. A bounded series (second-half peak at most
/// twice the first-half peak) with a slow dominant oscillation, period of
/// 20 kicks or more, and an excursion above `N_ex(0)` is `NearResonant`.
pub fn classify_growth(series: &NexSeries) -> Result<(Classification, f64)> {
    let values = series.values();
    let crossed = series.exceeded_cutoff();
    let needed = if crossed { 2 } else { MIN_SAMPLES };
    if values.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: values.len(),
        });
    }
    let n0 = series.initial;
    let floor = n0.max(1e-12);
    let excess: Vec<f64> = values.iter().map(|v| (v - n0).max(0.0)).collect();
    let half = values.len() / 2;
    let tail = &excess[half..];
    let x: Vec<f64> = (half..values.len()).map(|i| i as f64).collect();
    let y: Vec<f64> = tail.iter().map(|e| (e + floor).ln()).collect();
    let rate = slope(&x, &y);
    if crossed {
        return Ok((Classification::Unstable, rate.max(0.0)));
    }
    let block = tail.len() / 4;
    let maxima: Vec<f64> = (0..4)
        .map(|b| tail[b * block..(b + 1) * block].iter().cloned().fold(0.0, f64::max))
        .collect();
    let monotone = maxima.windows(2).all(|w| w[1] >= w[0]);
    if rate > RATE_THRESHOLD && monotone {
        return Ok((Classification::Unstable, rate));
    }
    let first_peak = excess[..half].iter().cloned().fold(0.0, f64::max);
    let second_peak = tail.iter().cloned().fold(0.0, f64::max);
    let bounded = second_peak <= 2.0 * first_peak;
    let excursion = excess.iter().cloned().fold(0.0, f64::max) - excess.iter().cloned().fold(f64::INFINITY, f64::min);
    if bounded && excursion > n0 && dominant_period(&excess) >= 20.0 {
        return Ok((Classification::NearResonant, 0.0));
    }
    Ok((Classification::Stable, 0.0))
}

fn depletion_series(populations: impl Iterator<Item = f64>) -> NexSeries {
    use crate::bogoliubov::NexSample;
    let samples = populations
        .enumerate()
        .map(|(i, nex)| NexSample {
            kick: i + 1,
            time: f64::NAN,
            nex,
            exceeded_cutoff: false,
        })
        .collect();
    NexSeries {
        initial: 0.0,
        samples,
        cutoff_kick: None,
    }
}

fn average(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

struct PointResult {
    observable: f64,
    classification: Classification,
    rate: f64,
    cutoff_kick: Option<usize>,
}

fn observable_value(kind: Observable, nex_final: f64, avg_energy: f64, rate: f64) -> f64 {
    match kind {
        Observable::NexFinal => nex_final,
        Observable::AvgEnergy => avg_energy,
        Observable::GrowthRate => rate,
    }
}

fn run_full(spec: &SweepSpec, params: &PhysicalParams) -> Result<PointResult> {
    let grid = RingGrid::new(spec.resolution.n_points)?;
    let config = spec.resolution.evolution(params, spec.n_kicks);
    let modes = init_modes_discrete(params, &grid, &config)?;
    let run = evolve_coupled(&init_homogeneous(&grid), &modes, params, &config)?;
    let (classification, rate) = classify_growth(&run.nex)?;
    let nex_final = run.nex.samples.last().map_or(run.nex.initial, |s| s.nex);
    let avg_energy = average(run.energies.iter().map(|r| r.energy));
    Ok(PointResult {
        observable: observable_value(spec.observable, nex_final, avg_energy, rate),
        classification,
        rate,
        cutoff_kick: run.nex.cutoff_kick,
    })
}

fn run_map(spec: &SweepSpec, params: &PhysicalParams) -> Result<PointResult> {
    let l_max = spec.resolution.l_max;
    let spectrum = ModeSpectrum::new(params, l_max);
    let map = one_period_map(params, &spectrum, l_max)?;
    let traj = iterate_map(&map, &PerturbationState::ground(l_max), params, spec.n_kicks)?;
    let floquet = floquet_growth_rate(&map);
    let series = depletion_series(traj.samples.iter().map(|s| 2.0 * s.populations.iter().sum::<f64>()));
    // Leaving the linear regime plays the role of the N_ex cutoff.
    let cutoff_kick = traj
        .samples
        .iter()
        .find(|s| s.populations.iter().sum::<f64>() > MAP_VALIDITY)
        .map(|s| s.kick);
    let (classification, rate) = if floquet > MAP_RATE_THRESHOLD {
        (Classification::Unstable, floquet)
    } else if cutoff_kick.is_some() {
        (Classification::Unstable, floquet.max(0.0))
    } else if series.samples.len() >= MIN_SAMPLES {
        (classify_growth(&series)?.0, 0.0)
    } else {
        (Classification::Stable, 0.0)
    };
    let nex_final = series.samples.last().map_or(0.0, |s| s.nex);
    let avg_energy = average(traj.samples.iter().map(|s| s.energy));
    Ok(PointResult {
        observable: observable_value(spec.observable, nex_final, avg_energy, rate),
        classification,
        rate,
        cutoff_kick,
    })
}

fn run_closed(spec: &SweepSpec, params: &PhysicalParams) -> Result<PointResult> {
    use crate::perturbative::perturbative_energy;
    let l_max = spec.resolution.l_max;
    let spectrum = ModeSpectrum::new(params, l_max);
    let states = (1..=spec.n_kicks as u64)
        .map(|n| closed_form_state(n, params, &spectrum, l_max))
        .collect::<Result<Vec<_>>>()?;
    let series = depletion_series(states.iter().map(|s| 2.0 * s.populations().iter().sum::<f64>()));
    // A linear-response sum grows at most linearly in N, so the strongest
    // verdict is NearResonant; short-horizon log-slopes of N² would otherwise
    // read as exponential.
    let classification = if series.samples.len() >= MIN_SAMPLES {
        match classify_growth(&series)?.0 {
            Classification::Stable => Classification::Stable,
            _ => Classification::NearResonant,
        }
    } else {
        Classification::Stable
    };
    let rate = 0.0;
    let nex_final = series.samples.last().map_or(0.0, |s| s.nex);
    let avg_energy = average(states.iter().map(|s| perturbative_energy(&s.amplitudes, params)));
    Ok(PointResult {
        observable: observable_value(spec.observable, nex_final, avg_energy, rate),
        classification,
        rate,
        cutoff_kick: None,
    })
}

/// Evaluates one sweep point with the spec's engine.
pub fn run_point(spec: &SweepSpec, value: f64) -> SweepRow {
    let params = spec.param.apply(&spec.base, value);
    let result = params.validate().and_then(|()| match spec.engine {
        Engine::FullBogoliubov => run_full(spec, &params),
        Engine::PerturbativeMap => run_map(spec, &params),
        Engine::ClosedForm => run_closed(spec, &params),
    });
    match result {
        Ok(r) => SweepRow {
            param: value,
            observable: r.observable,
            classification: r.classification,
            rate: r.rate,
            cutoff_kick: r.cutoff_kick,
            error: None,
        },
        Err(e) => SweepRow {
            param: value,
            observable: f64::NAN,
            classification: Classification::Stable,
            rate: f64::NAN,
            cutoff_kick: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates the given parameter values in parallel; rows come back in input order.
pub fn run_points(spec: &SweepSpec, values: &[f64]) -> Vec<SweepRow> {
    par::map(values, |&v| run_point(spec, v))
}

/// One row per sample, in parameter order. Point failures are recorded in
/// the row and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(run_points(spec, &spec.values()))
}

/// Maximal runs of `Unstable` rows as `(lo, hi)` parameter intervals. Runs
/// separated by a single non-unstable row are merged.
pub fn extract_windows(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.classification != Classification::Unstable {
            continue;
        }
        match runs.last_mut() {
            Some(last) if i - last.1 <= 2 => last.1 = i,
            _ => runs.push((i, i)),
        }
    }
    runs.into_iter().map(|(a, b)| (rows[a].param, rows[b].param)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::NexSample;
    use crate::params::KickKind;
    use crate::resonance::{predict_single_mode_resonances, Sweep};
    use crate::spectrum::ModeSpectrum;

    fn series(initial: f64, values: impl Iterator<Item = f64>) -> NexSeries {
        let mut s = depletion_series(values);
        s.initial = initial;
        s
    }

    fn row(param: f64, c: Classification) -> SweepRow {
        SweepRow {
            param,
            observable: 0.0,
            classification: c,
            rate: 0.0,
            cutoff_kick: None,
            error: None,
        }
    }

    #[test]
    fn constant_series_is_stable() {
        let s = series(0.03, std::iter::repeat_n(0.03, 200));
        assert_eq!(classify_growth(&s).unwrap(), (Classification::Stable, 0.0));
        let s = series(0.0, std::iter::repeat_n(0.0, 50));
        assert_eq!(classify_growth(&s).unwrap(), (Classification::Stable, 0.0));
    }

    #[test]
    fn exponential_series_is_unstable() {
        let s = series(0.0, (1..=200).map(|n| (0.1 * n as f64).exp()));
        let (c, rate) = classify_growth(&s).unwrap();
        assert_eq!(c, Classification::Unstable);
        assert!((rate - 0.1).abs() < 0.005, "{rate}");

        // growth with superimposed oscillation
        let s = series(0.05, (1..=200).map(|n| 0.05 + 1e-3 * (0.05 * n as f64).exp() * (1.5 + (0.7 * n as f64).sin())));
        assert_eq!(classify_growth(&s).unwrap().0, Classification::Unstable);
    }

    #[test]
    fn sin_squared_envelope_is_near_resonant() {
        let d: f64 = 0.05;
        let s = series(0.0, (1..=200).map(|n| (d * n as f64).sin().powi(2) / (d * d)));
        assert_eq!(classify_growth(&s).unwrap(), (Classification::NearResonant, 0.0));
    }

    #[test]
    fn polynomial_growth_is_not_unstable() {
        let s = series(0.03, (1..=200).map(|n| 0.03 + 3e-4 * (n * n) as f64));
        assert_eq!(classify_growth(&s).unwrap(), (Classification::Stable, 0.0));
    }

    #[test]
    fn fast_small_oscillation_is_stable() {
        let s = series(0.03, (1..=200).map(|n| 0.03 + 1e-3 * (1.3 * n as f64).sin().powi(2)));
        assert_eq!(classify_growth(&s).unwrap().0, Classification::Stable);
    }

    #[test]
    fn cutoff_forces_unstable() {
        let mut s = series(0.03, (1..=12).map(|n| 0.03 * (0.9 * n as f64).exp()));
        s.cutoff_kick = Some(12);
        s.samples.last_mut().unwrap().exceeded_cutoff = true;
        let (c, rate) = classify_growth(&s).unwrap();
        assert_eq!(c, Classification::Unstable);
        assert!((rate - 0.9).abs() < 0.05);
    }

    #[test]
    fn short_series_rejected() {
        let s = series(0.0, (0..10).map(|_| 1.0));
        assert!(matches!(
            classify_growth(&s),
            Err(Error::InsufficientData { needed: 20, got: 10 })
        ));
        let _ = NexSample {
            kick: 0,
            time: 0.0,
            nex: 0.0,
            exceeded_cutoff: false,
        };
    }

    #[test]
    fn window_extraction() {
        use Classification::*;
        assert!(extract_windows(&[row(1.0, Stable), row(2.0, NearResonant)]).is_empty());
        let rows: Vec<SweepRow> = [Stable, Unstable, Unstable, Stable, Stable, Unstable, NearResonant, Unstable, Stable]
            .iter()
            .enumerate()
            .map(|(i, &c)| row(i as f64, c))
            .collect();
        assert_eq!(extract_windows(&rows), vec![(1.0, 2.0), (5.0, 7.0)]);
        assert_eq!(extract_windows(&rows[..3]), vec![(1.0, 2.0)]);
    }

    fn map_spec(param: SweepParam, lo: f64, hi: f64, n: usize, base: PhysicalParams) -> SweepSpec {
        SweepSpec {
            param,
            lo,
            hi,
            n_samples: n,
            base,
            engine: Engine::PerturbativeMap,
            n_kicks: 40,
            observable: Observable::NexFinal,
            resolution: Resolution {
                l_max: 8,
                ..Resolution::default()
            },
        }
    }

    #[test]
    fn spec_validation() {
        let base = PhysicalParams::single(1.0, 0.2, 10.0);
        let mut spec = map_spec(SweepParam::Period, 5.0, 20.0, 4, base);
        assert_eq!(spec.values(), vec![5.0, 10.0, 15.0, 20.0]);
        spec.hi = 5.0;
        assert!(run_sweep(&spec).is_err());
        spec.hi = 20.0;
        spec.n_samples = 1;
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn sweep_rows_in_order_and_order_independent() {
        let base = PhysicalParams::single(1.0, 0.2, 10.0);
        let spec = map_spec(SweepParam::Period, 5.0, 20.0, 16, base);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows.windows(2).all(|w| w[0].param < w[1].param));
        let mut reversed = spec.values();
        reversed.reverse();
        let mut back = run_points(&spec, &reversed);
        back.reverse();
        assert_eq!(rows, back);
    }

    #[test]
    fn point_failures_are_recorded() {
        let base = PhysicalParams::single(1.0, 0.2, 10.0);
        let spec = map_spec(SweepParam::G, -3.0, 1.0, 3, base);
        let rows = run_sweep(&spec).unwrap();
        assert!(rows[0].error.is_some());
        assert!(rows[0].observable.is_nan());
        assert!(rows[2].error.is_none());
    }

    #[test]
    fn map_sweep_locates_resonances() {
        // Driven resonances ω_l T = 2πn grow a_l linearly until the map leaves
        // its regime; two-mode resonances (ω₁+ω₂)T = 2πM are exponential.
        // Every map window must sit on one of them, and only (1,1) near 9.8.
        let base = PhysicalParams::single(1.0, 0.2, 10.0);
        let mut spec = map_spec(SweepParam::Period, 8.0, 12.0, 81, base);
        spec.n_kicks = 200;
        let rows = run_sweep(&spec).unwrap();
        let s = ModeSpectrum::new(&base, 8);
        let mut predicted: Vec<f64> = predict_single_mode_resonances(&base, 8, 8, Sweep::OverT { lo: 8.0, hi: 12.0 })
            .unwrap()
            .iter()
            .map(|r| r.value)
            .collect();
        predicted.extend((4..=5).map(|m| 2.0 * std::f64::consts::PI * m as f64 / (s.mode(1).omega + s.mode(2).omega)));
        let windows = extract_windows(&rows);
        for w in &windows {
            assert!(
                predicted.iter().any(|t| *t >= w.0 - 0.06 && *t <= w.1 + 0.06),
                "{w:?} not near {predicted:?}"
            );
        }
        let near: Vec<_> = windows.iter().filter(|w| w.0 < 10.3 && w.1 > 9.3).collect();
        assert_eq!(near.len(), 1, "{windows:?}");
        assert!(near[0].0 <= 9.823 && near[0].1 >= 9.823);
        assert_eq!(run_point(&spec, 13.0).classification, Classification::Stable);
    }

    #[test]
    fn closed_form_sweep_never_unstable() {
        let base = PhysicalParams::double(1.0, 1.0, 2.0, 0.04);
        let mut spec = map_spec(SweepParam::G, 1.0, 12.0, 23, base);
        spec.engine = Engine::ClosedForm;
        spec.observable = Observable::AvgEnergy;
        let rows = run_sweep(&spec).unwrap();
        assert!(rows.iter().all(|r| r.classification != Classification::Unstable));
        assert!(rows.iter().all(|r| r.observable >= r.param / (4.0 * std::f64::consts::PI) - 1e-12));
        assert_eq!(base.kick_kind, KickKind::DoublePair);
    }
}
