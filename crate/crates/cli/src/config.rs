//! Experiment configuration: flat `key = value` files overlaid with flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;
use weakval_core::analysis::{DEFAULT_EPSILON, DEFAULT_SEARCH};
use weakval_core::meter::DIAGONAL_PRESELECTION;
use weakval_core::{weak_value_grid, CouplingConfig, DetectionConfig, Interval};

/// Every key a config file may contain, in echo order.
pub const KEYS: [&str; 15] = [
    "preset", "a_x", "a_y", "sigma", "theta_i", "theta_f", "aw_range", "shots", "efficiency",
    "dark_rate_hz", "gate_s", "seed", "epsilon", "search", "output",
];

const DETECTION_KEYS: [&str; 5] = ["shots", "efficiency", "dark_rate_hz", "gate_s", "seed"];

/// Where a setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: String, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path} line {line}"),
            Origin::Flag(flag) => write!(f, "flag {flag}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: expected `key = value`, found `{text}`")]
    Syntax { path: String, line: usize, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: Origin, key: String },
    #[error("{path} line {line}: `{key}` already set on line {first}")]
    Duplicate { path: String, line: usize, first: usize, key: String },
    #[error("{origin}: `{key}`: {message}")]
    Invalid { origin: Origin, key: String, message: String },
    #[error("missing required key `{key}` ({hint})")]
    Missing { key: String, hint: String },
    #[error("`{key}`: {message}")]
    Other { key: String, message: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Unvalidated settings, file first and flags on top.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Unreadable { path: label.clone(), source })?;
        Self::parse(&text, &label)
    }

    /// Parses config text; `label` names the source in error messages.
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = line.split_once('#').map_or(line, |(before, _)| before).trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { path: label.into(), line: line_no, text: content.into() });
            };
            let key = key.trim();
            let origin = Origin::File { path: label.into(), line: line_no };
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { origin, key: key.into() });
            }
            if let Some(Entry { origin: Origin::File { line: first, .. }, .. }) = raw.entries.get(key) {
                return Err(ConfigError::Duplicate { path: label.into(), line: line_no, first: *first, key: key.into() });
            }
            raw.entries.insert(key.into(), Entry { value: value.trim().into(), origin });
        }
        Ok(raw)
    }

    /// Sets `key` from a command-line flag, overriding any file value.
    pub fn set_flag(&mut self, key: &str, flag: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key));
        self.entries.insert(key.into(), Entry { value: value.into(), origin: Origin::Flag(flag.into()) });
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parsed<T>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|message| ConfigError::Invalid {
                origin: e.origin.clone(),
                key: key.into(),
                message,
            }),
        }
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        match self.get(key) {
            Some(e) => ConfigError::Invalid { origin: e.origin.clone(), key: key.into(), message: message.into() },
            None => ConfigError::Other { key: key.into(), message: message.into() },
        }
    }

    /// Validates every present key and resolves presets and defaults.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let number = |key: &str| self.parsed(key, parse_f64);

        let preset = self.parsed("preset", |v| {
            CouplingConfig::preset(v)
                .map(|c| (v.to_string(), c))
                .ok_or_else(|| format!("unknown preset `{v}` (expected `thin` or `thick`)"))
        })?;
        let a_x = number("a_x")?;
        let a_y = number("a_y")?;
        let sigma = number("sigma")?;
        for (key, v) in [("a_x", a_x), ("a_y", a_y)] {
            if v.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
                return Err(self.invalid(key, "must be finite and >= 0"));
            }
        }
        if sigma.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
            return Err(self.invalid("sigma", "must be finite and > 0"));
        }
        let coupling = match (&preset, a_x, a_y, sigma) {
            (Some((_, base)), ..) => Some(
                CouplingConfig::new(a_x.unwrap_or(base.a_x()), a_y.unwrap_or(base.a_y()), sigma.unwrap_or(base.sigma()))
                    .map_err(|e| ConfigError::Other { key: "preset".into(), message: e.to_string() })?,
            ),
            (None, Some(x), Some(y), Some(s)) => Some(
                CouplingConfig::new(x, y, s).map_err(|e| ConfigError::Other { key: "sigma".into(), message: e.to_string() })?,
            ),
            (None, None, None, None) => None,
            (None, ..) => {
                let missing = [("a_x", a_x), ("a_y", a_y), ("sigma", sigma)]
                    .into_iter()
                    .find(|(_, v)| v.is_none())
                    .map(|(k, _)| k)
                    .unwrap_or("preset");
                return Err(ConfigError::Missing {
                    key: missing.into(),
                    hint: "without a preset, a_x, a_y and sigma are all required".into(),
                });
            }
        };

        let theta_i = self.parsed("theta_i", parse_angle)?.unwrap_or(DIAGONAL_PRESELECTION);
        let angles = self.parsed("theta_f", |v| v.split(',').map(parse_angle).collect::<std::result::Result<Vec<_>, _>>())?;
        let range = self.parsed("aw_range", parse_range)?;
        let postselection = match (angles, range) {
            (Some(_), Some(_)) => return Err(self.invalid("aw_range", "give either theta_f or aw_range, not both")),
            (Some(a), None) => Some(Postselection::Angles(a)),
            (None, Some((lo, hi, n))) => {
                weak_value_grid(lo, hi, n, theta_i).map_err(|e| self.invalid("aw_range", e.to_string()))?;
                Some(Postselection::WeakValueRange { lo, hi, n })
            }
            (None, None) => None,
        };

        let detection = if DETECTION_KEYS.iter().any(|k| self.get(k).is_some()) {
            let d = DetectionConfig::default();
            let det = DetectionConfig {
                shots: self.parsed("shots", parse_count)?.unwrap_or(d.shots),
                efficiency: number("efficiency")?.unwrap_or(d.efficiency),
                dark_rate_hz: number("dark_rate_hz")?.unwrap_or(d.dark_rate_hz),
                gate_s: number("gate_s")?.unwrap_or(d.gate_s),
                seed: self.parsed("seed", |v| v.parse::<u64>().map_err(|e| format!("`{v}` is not a seed: {e}")))?.unwrap_or(d.seed),
            };
            if det.shots == 0 {
                return Err(self.invalid("shots", "must be at least 1"));
            }
            if !(0.0..=1.0).contains(&det.efficiency) {
                return Err(self.invalid("efficiency", "must lie in [0, 1]"));
            }
            if !(det.dark_rate_hz.is_finite() && det.dark_rate_hz >= 0.0) {
                return Err(self.invalid("dark_rate_hz", "must be finite and >= 0"));
            }
            if !(det.gate_s.is_finite() && det.gate_s > 0.0) {
                return Err(self.invalid("gate_s", "must be finite and > 0"));
            }
            Some(det)
        } else {
            None
        };

        let epsilon = number("epsilon")?.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(self.invalid("epsilon", "must be finite and > 0"));
        }
        let search = self.parsed("search", parse_interval)?.unwrap_or(DEFAULT_SEARCH);
        if !search.contains_interval(&Interval { lo: 0.0, hi: 1.0 }) {
            return Err(self.invalid("search", "must contain [0, 1]"));
        }

        Ok(ExperimentConfig {
            preset: preset.map(|(name, _)| name),
            coupling,
            theta_i,
            postselection,
            detection,
            epsilon,
            search,
            output: self.get("output").map(|e| PathBuf::from(&e.value)),
        })
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn parse_count(v: &str) -> std::result::Result<u64, String> {
    let v = v.trim();
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    // Accept integral floats such as 1e6.
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("`{v}` is not a non-negative integer")),
    }
}

/// Radians, or degrees with a `deg` suffix.
pub fn parse_angle(v: &str) -> std::result::Result<f64, String> {
    let v = v.trim();
    match v.strip_suffix("deg") {
        Some(d) => parse_f64(d).map(f64::to_radians).map_err(|_| format!("`{v}` is not an angle")),
        None => parse_f64(v).map_err(|_| format!("`{v}` is not an angle (radians, or degrees with a `deg` suffix)")),
    }
}

fn parse_range(v: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = v.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("`{v}` is not of the form lo:hi:n"));
    };
    let n: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a point count"))?;
    if n == 0 {
        return Err("point count must be at least 1".into());
    }
    Ok((parse_f64(lo)?, parse_f64(hi)?, n))
}

fn parse_interval(v: &str) -> std::result::Result<Interval, String> {
    let (lo, hi) = v.split_once(':').ok_or_else(|| format!("`{v}` is not of the form lo:hi"))?;
    Interval::new(parse_f64(lo)?, parse_f64(hi)?).map_err(|e| e.to_string())
}

/// How post-selection angles are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Postselection {
    Angles(Vec<f64>),
    /// `n` angles whose `<Pi_H>_w` is evenly spaced over `[lo, hi]`.
    WeakValueRange { lo: f64, hi: f64, n: usize },
}

impl Postselection {
    pub fn angles(&self, theta_i: f64) -> weakval_core::Result<Vec<f64>> {
        match self {
            Postselection::Angles(a) => Ok(a.clone()),
            Postselection::WeakValueRange { lo, hi, n } => weak_value_grid(*lo, *hi, *n, theta_i),
        }
    }
}

/// A fully validated configuration; commands pick what they need.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub coupling: Option<CouplingConfig>,
    pub theta_i: f64,
    pub postselection: Option<Postselection>,
    pub detection: Option<DetectionConfig>,
    pub epsilon: f64,
    pub search: Interval,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn require_coupling(&self) -> Result<CouplingConfig> {
        self.coupling.ok_or_else(|| ConfigError::Missing {
            key: "preset".into(),
            hint: "give a preset or a_x, a_y and sigma".into(),
        })
    }

    pub fn require_postselection(&self) -> Result<&Postselection> {
        self.postselection.as_ref().ok_or_else(|| ConfigError::Missing {
            key: "theta_f".into(),
            hint: "give theta_f or aw_range".into(),
        })
    }

    /// Effective settings as config-file lines; `output` is left out.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        if let Some(p) = &self.preset {
            put("preset", p.clone());
        }
        if let Some(c) = &self.coupling {
            put("a_x", c.a_x().to_string());
            put("a_y", c.a_y().to_string());
            put("sigma", c.sigma().to_string());
        }
        put("theta_i", self.theta_i.to_string());
        match &self.postselection {
            Some(Postselection::Angles(a)) => {
                put("theta_f", a.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
            }
            Some(Postselection::WeakValueRange { lo, hi, n }) => put("aw_range", format!("{lo}:{hi}:{n}")),
            None => {}
        }
        if let Some(d) = &self.detection {
            put("shots", d.shots.to_string());
            put("efficiency", d.efficiency.to_string());
            put("dark_rate_hz", d.dark_rate_hz.to_string());
            put("gate_s", d.gate_s.to_string());
            put("seed", d.seed.to_string());
        }
        put("epsilon", self.epsilon.to_string());
        put("search", format!("{}:{}", self.search.lo, self.search.hi));
        lines
    }
}

/// Hex SHA-256 of `key = value` lines.
pub fn hash_lines(lines: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    for (k, v) in lines {
        h.update(format!("{k} = {v}\n").as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
