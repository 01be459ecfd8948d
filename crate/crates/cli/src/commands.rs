use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use kickbec::bogoliubov::{evolve_coupled, init_modes_discrete};
use kickbec::gpe::{condensate_energy, init_homogeneous};
use kickbec::perturbative::{closed_form_state, iterate_map, one_period_map, perturbative_energy, PerturbationState};
use kickbec::resonance::{predict_single_mode_resonances, predict_two_mode_resonances, ResonanceKind, Sweep};
use kickbec::scan::{extract_windows, run_sweep, Engine, Resolution, SweepParam, SweepSpec, MAP_VALIDITY};
use kickbec::spectrum::ModeSpectrum;
use kickbec::RingGrid;

use crate::config::RunConfig;

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The run stopped early because `N_ex` crossed the cutoff.
    Cutoff,
}

#[derive(Debug)]
pub enum CommandError {
    Config(String),
    Io(std::io::Error),
    Engine(kickbec::Error),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "{m}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<kickbec::Error> for CommandError {
    fn from(e: kickbec::Error) -> Self {
        Self::Engine(e)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn engine_name(engine: Engine) -> &'static str {
    match engine {
        Engine::FullBogoliubov => "full",
        Engine::PerturbativeMap => "map",
        Engine::ClosedForm => "closed",
    }
}

/// SHA-256 over the canonical config, the command and the engine.
pub fn config_hash(config: &RunConfig, command: &str, engine: Engine) -> String {
    let text = format!("{}command={command}\nengine={}\n", config.canonical(), engine_name(engine));
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_csv(dir: &Path, name: &str, hash: &str, header: &str, rows: &[String]) -> Result<(), CommandError> {
    let mut text = format!("# config-hash: {hash}\n{header}\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn resolution(config: &RunConfig) -> Resolution {
    Resolution {
        n_points: config.n_points,
        l_max: config.l_max,
        dt: config.dt,
        ..Resolution::default()
    }
}

struct TraceRow {
    kick: usize,
    time: f64,
    energy: f64,
    nex: f64,
    a1: f64,
    a2: f64,
    flag: bool,
}

pub fn simulate(config: &RunConfig, engine: Engine, out: &Path) -> Result<Status, CommandError> {
    let p = &config.params;
    let mut trace = Vec::new();
    let mut status = Status::Ok;
    let nex0;
    match engine {
        Engine::FullBogoliubov => {
            let grid = RingGrid::new(config.n_points)?;
            let evolution = resolution(config).evolution(p, config.n_kicks);
            let field = init_homogeneous(&grid);
            let modes = init_modes_discrete(p, &grid, &evolution)?;
            let run = evolve_coupled(&field, &modes, p, &evolution)?;
            nex0 = run.nex.initial;
            trace.push(TraceRow {
                kick: 0,
                time: 0.0,
                energy: condensate_energy(&field, p),
                nex: nex0,
                a1: 0.0,
                a2: 0.0,
                flag: false,
            });
            for (s, e) in run.nex.samples.iter().zip(&run.energies) {
                trace.push(TraceRow {
                    kick: s.kick,
                    time: s.time,
                    energy: e.energy,
                    nex: s.nex,
                    a1: e.populations[0],
                    a2: e.populations[1],
                    flag: s.exceeded_cutoff,
                });
            }
            if run.nex.exceeded_cutoff() {
                status = Status::Cutoff;
            }
        }
        Engine::PerturbativeMap | Engine::ClosedForm => {
            let l_max = config.l_max.max(2);
            let spectrum = ModeSpectrum::new(p, l_max);
            // (kick, |a_l|², energy) after each kick
            let samples: Vec<(usize, Vec<f64>, f64)> = if engine == Engine::PerturbativeMap {
                let map = one_period_map(p, &spectrum, l_max)?;
                iterate_map(&map, &PerturbationState::ground(l_max), p, config.n_kicks)?
                    .samples
                    .into_iter()
                    .map(|s| (s.kick, s.populations, s.energy))
                    .collect()
            } else {
                (1..=config.n_kicks as u64)
                    .map(|n| {
                        let s = closed_form_state(n, p, &spectrum, l_max)?;
                        Ok((s.kick, s.populations(), perturbative_energy(&s.amplitudes, p)))
                    })
                    .collect::<kickbec::Result<_>>()?
            };
            nex0 = 0.0;
            trace.push(TraceRow {
                kick: 0,
                time: 0.0,
                energy: perturbative_energy(&PerturbationState::ground(l_max).amplitudes, p),
                nex: 0.0,
                a1: 0.0,
                a2: 0.0,
                flag: false,
            });
            let mut flag = false;
            for (kick, pops, energy) in samples {
                let excited: f64 = pops.iter().sum();
                flag |= excited > MAP_VALIDITY;
                trace.push(TraceRow {
                    kick,
                    time: kick as f64 * p.period,
                    energy,
                    nex: 2.0 * excited,
                    a1: pops[0],
                    a2: pops[1],
                    flag,
                });
            }
        }
    }
    let rows: Vec<String> = trace
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.kick,
                num(r.time),
                num(r.energy),
                num(r.nex),
                num(r.nex - nex0),
                num(r.a1),
                num(r.a2),
                u8::from(r.flag)
            )
        })
        .collect();
    write_csv(
        out,
        "timeseries.csv",
        &config_hash(config, "simulate", engine),
        "kick,time,energy,nex,nex_minus_initial,a1_sq,a2_sq,cutoff_flag",
        &rows,
    )?;
    Ok(status)
}

pub fn scan(config: &RunConfig, engine: Engine, out: &Path) -> Result<Status, CommandError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CommandError::Config("scan needs sweep.param, sweep.lo and sweep.hi".into()))?;
    let spec = SweepSpec {
        param: sweep.param,
        lo: sweep.lo,
        hi: sweep.hi,
        n_samples: sweep.samples,
        base: config.params,
        engine,
        n_kicks: config.n_kicks,
        observable: sweep.observable,
        resolution: resolution(config),
    };
    let rows = run_sweep(&spec)?;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("warning: point {} failed: {e}", r.param);
        }
    }
    let hash = config_hash(config, "scan", engine);
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            let class = if r.error.is_some() { "failed" } else { r.classification.as_str() };
            let cutoff = r.cutoff_kick.map_or(String::new(), |k| k.to_string());
            format!("{},{},{},{},{}", num(r.param), num(r.observable), class, num(r.rate), cutoff)
        })
        .collect();
    write_csv(out, "sweep.csv", &hash, "param,observable,classification,rate,cutoff_kick", &lines)?;
    let windows: Vec<String> = extract_windows(&rows)
        .iter()
        .map(|(lo, hi)| format!("{},{}", num(*lo), num(*hi)))
        .collect();
    write_csv(out, "windows.csv", &hash, "lo,hi", &windows)?;
    Ok(Status::Ok)
}

pub fn predict(config: &RunConfig, out: &Path) -> Result<Status, CommandError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CommandError::Config("predict needs sweep.param, sweep.lo and sweep.hi".into()))?;
    let range = match sweep.param {
        SweepParam::Period => Sweep::OverT { lo: sweep.lo, hi: sweep.hi },
        SweepParam::G => Sweep::OverG { lo: sweep.lo, hi: sweep.hi },
        SweepParam::KickStrength => {
            return Err(CommandError::Config(
                "key 'sweep.param': resonance conditions do not depend on K".into(),
            ))
        }
    };
    let p = &config.params;
    let mut found = predict_single_mode_resonances(p, config.l_max, config.predict.n_max, range)?;
    if !config.predict.pairs.is_empty() {
        if sweep.param != SweepParam::G {
            return Err(CommandError::Config("key 'predict.pairs': two-mode predictions need sweep.param = g".into()));
        }
        found.extend(predict_two_mode_resonances(p, &config.predict.pairs, config.predict.m_max, range)?);
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    let rows: Vec<String> = found
        .iter()
        .map(|r| {
            let kind = match r.kind {
                ResonanceKind::SingleMode => "single",
                ResonanceKind::TwoMode => "two_mode",
            };
            let lprime = r.lprime.map_or(String::new(), |l| l.to_string());
            format!("{kind},{},{lprime},{},{}", r.l, r.order, num(r.value))
        })
        .collect();
    write_csv(
        out,
        "resonances.csv",
        &config_hash(config, "predict", Engine::ClosedForm),
        "kind,l,lprime,n_or_M,value",
        &rows,
    )?;
    Ok(Status::Ok)
}
