//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Every key may
//! appear once; unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt;

use kickbec::scan::{Engine, Observable, SweepParam};
use kickbec::{KickKind, PhysicalParams};

const KEYS: &[&str] = &[
    "g",
    "kbar",
    "K",
    "T",
    "epsilon",
    "kick_kind",
    "n_kicks",
    "dt",
    "l_max",
    "n_points",
    "engine",
    "sweep.param",
    "sweep.lo",
    "sweep.hi",
    "sweep.samples",
    "sweep.observable",
    "predict.n_max",
    "predict.m_max",
    "predict.pairs",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line, when the problem can be pinned to one.
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: key '{k}': {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key '{k}': {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub observable: Observable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictConfig {
    pub n_max: u32,
    pub m_max: u32,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub n_kicks: usize,
    pub dt: Option<f64>,
    pub l_max: usize,
    pub n_points: usize,
    pub engine: Option<Engine>,
    pub sweep: Option<SweepConfig>,
    pub predict: PredictConfig,
    entries: BTreeMap<String, (usize, String)>,
}

impl RunConfig {
    /// Canonical `key=value` text of the explicitly given entries, sorted by key.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, (_, v))| format!("{k}={v}\n"))
            .collect()
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(l, _)| *l)
    }

    /// Error pinned to the line where `key` was set, if it was.
    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line_of(key),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, raw: &str, what: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError {
        line: Some(line),
        key: Some(key.to_string()),
        message: format!("expected {what}, got '{raw}'"),
    })
}

pub fn parse_engine(raw: &str) -> Option<Engine> {
    match raw {
        "full" => Some(Engine::FullBogoliubov),
        "map" => Some(Engine::PerturbativeMap),
        "closed" => Some(Engine::ClosedForm),
        _ => None,
    }
}

fn parse_pairs(line: usize, raw: &str) -> Result<Vec<(usize, usize)>, ConfigError> {
    let bad = || ConfigError {
        line: Some(line),
        key: Some("predict.pairs".into()),
        message: format!("expected comma-separated pairs like '1-2, 2-3', got '{raw}'"),
    };
    raw.split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once('-').ok_or_else(bad)?;
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            if a == 0 || b == 0 {
                return Err(bad());
            }
            Ok((a, b))
        })
        .collect()
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError {
            line: Some(line),
            key: None,
            message: format!("expected 'key = value', got '{trimmed}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError {
                line: Some(line),
                key: Some(key.to_string()),
                message: "unknown key".into(),
            });
        }
        if let Some((first, _)) = entries.get(key) {
            return Err(ConfigError {
                line: Some(line),
                key: Some(key.to_string()),
                message: format!("already set on line {first}"),
            });
        }
        entries.insert(key.to_string(), (line, value.to_string()));
    }

    let get = |key: &str| entries.get(key).map(|(l, v)| (*l, v.as_str()));
    let float = |key: &str, default: f64| -> Result<f64, ConfigError> {
        get(key).map_or(Ok(default), |(l, v)| parse_value(l, key, v, "a number"))
    };
    let count = |key: &str, default: usize| -> Result<usize, ConfigError> {
        get(key).map_or(Ok(default), |(l, v)| parse_value(l, key, v, "a non-negative integer"))
    };

    let kick_kind = match get("kick_kind") {
        None | Some((_, "single")) => KickKind::Single,
        Some((_, "double")) => KickKind::DoublePair,
        Some((l, v)) => {
            return Err(ConfigError {
                line: Some(l),
                key: Some("kick_kind".into()),
                message: format!("expected 'single' or 'double', got '{v}'"),
            })
        }
    };
    let defaults = PhysicalParams::default();
    let params = PhysicalParams {
        g: float("g", defaults.g)?,
        kbar: float("kbar", defaults.kbar)?,
        kick_strength: float("K", defaults.kick_strength)?,
        period: float("T", defaults.period)?,
        epsilon: float("epsilon", 0.0)?,
        kick_kind,
    };
    let dt = match get("dt") {
        Some((l, v)) => Some(parse_value(l, "dt", v, "a number")?),
        None => None,
    };
    let engine = match get("engine") {
        Some((l, v)) => Some(parse_engine(v).ok_or_else(|| ConfigError {
            line: Some(l),
            key: Some("engine".into()),
            message: format!("expected full, map or closed, got '{v}'"),
        })?),
        None => None,
    };
    let sweep = match get("sweep.param") {
        None => {
            for key in ["sweep.lo", "sweep.hi", "sweep.samples", "sweep.observable"] {
                if let Some((l, _)) = get(key) {
                    return Err(ConfigError {
                        line: Some(l),
                        key: Some(key.into()),
                        message: "requires sweep.param".into(),
                    });
                }
            }
            None
        }
        Some((l, v)) => {
            let param = match v {
                "T" => SweepParam::Period,
                "g" => SweepParam::G,
                "K" => SweepParam::KickStrength,
                _ => {
                    return Err(ConfigError {
                        line: Some(l),
                        key: Some("sweep.param".into()),
                        message: format!("expected T, g or K, got '{v}'"),
                    })
                }
            };
            let observable = match get("sweep.observable") {
                None | Some((_, "nex")) => Observable::NexFinal,
                Some((_, "energy")) => Observable::AvgEnergy,
                Some((_, "rate")) => Observable::GrowthRate,
                Some((l, v)) => {
                    return Err(ConfigError {
                        line: Some(l),
                        key: Some("sweep.observable".into()),
                        message: format!("expected nex, energy or rate, got '{v}'"),
                    })
                }
            };
            let need = |key: &str| {
                get(key).map(|_| ()).ok_or_else(|| ConfigError {
                    line: Some(l),
                    key: Some(key.into()),
                    message: "required when sweep.param is set".into(),
                })
            };
            need("sweep.lo")?;
            need("sweep.hi")?;
            Some(SweepConfig {
                param,
                lo: float("sweep.lo", 0.0)?,
                hi: float("sweep.hi", 0.0)?,
                samples: count("sweep.samples", 151)?,
                observable,
            })
        }
    };
    let predict = PredictConfig {
        n_max: count("predict.n_max", 3)? as u32,
        m_max: count("predict.m_max", 12)? as u32,
        pairs: match get("predict.pairs") {
            Some((l, v)) => parse_pairs(l, v)?,
            None => Vec::new(),
        },
    };
    let config = RunConfig {
        params,
        n_kicks: count("n_kicks", 200)?,
        dt,
        l_max: count("l_max", 32)?,
        n_points: count("n_points", 256)?,
        engine,
        sweep,
        predict,
        entries,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    if let Err(kickbec::Error::InvalidParameter { name, reason }) = config.params.validate() {
        return Err(config.error(name, reason));
    }
    if config.n_kicks == 0 {
        return Err(config.error("n_kicks", "must be >= 1"));
    }
    if config.l_max == 0 {
        return Err(config.error("l_max", "must be >= 1"));
    }
    if config.n_points < 8 * config.l_max {
        return Err(config.error(
            "n_points",
            format!("must be at least 8 * l_max = {}", 8 * config.l_max),
        ));
    }
    if let Some(dt) = config.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config.error("dt", "must be > 0"));
        }
    }
    if let Some(s) = &config.sweep {
        if !(s.lo.is_finite() && s.hi.is_finite() && s.lo < s.hi) {
            return Err(config.error("sweep.hi", format!("empty range [{}, {}]", s.lo, s.hi)));
        }
        if s.samples < 2 {
            return Err(config.error("sweep.samples", "must be >= 2"));
        }
    }
    if config.predict.n_max == 0 {
        return Err(config.error("predict.n_max", "must be >= 1"));
    }
    if config.predict.m_max == 0 {
        return Err(config.error("predict.m_max", "must be >= 1"));
    }
    Ok(())
}
