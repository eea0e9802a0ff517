//! Run configuration files.
//!
//! The format is flat `key = value` text. Blank lines and `#` comments are
//! ignored, and every key except `mapping` may appear at most once.
//!
//! ```text
//! dim        = 4
//! cap_pole   = e4                  # 1-based axis, or a vector "0, 0, 1, 1"
//! cap_radius = pi/5                # number, pi, pi/m or k*pi/m
//! mapping    = rotation 1 2 0.8    # plane (i, j), 1-based, angle in radians
//! mapping    = rotation 1 3 0.5
//! mapping    = identity
//! mapping    = composition rotation 1 2 0.3 ; rotation 3 4 0.1
//! alphas     = 0.5, 0.5            # one weight per mapping, or:
//! schedule   = half                # half | alternating
//! alpha_lower = 0.25               # the bound a: weights must lie in [a, 1 - a]
//! x1         = random              # seeded point of the cap, or a vector
//! method     = both                # cq | shrinking | both
//! eps_step   = 1e-8
//! eps_residual = 1e-8
//! max_iter   = 10000
//! seed       = 0
//! output     = out/benchmark       # prefix for trace and summary files
//! ```
//!
//! Vectors are comma or whitespace separated and are normalized on load.
//! Required keys: `dim`, `cap_pole`, `cap_radius` and at least one `mapping`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::iteration::{Method, Problem, StopRule};
use crate::mappings::{AlphaSchedule, Mapping, MappingFamily, PlaneRotation};
use crate::region::Cap;
use crate::sphere::{random_point_in_cap, AmbientVector, SpherePoint};

/// A config problem, located by line (when it came from one) and key.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn err(line: Option<usize>, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Cq,
    Shrinking,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            Self::Cq => vec![Method::Cq],
            Self::Shrinking => vec![Method::Shrinking],
            Self::Both => vec![Method::Cq, Method::Shrinking],
        }
    }
}

impl FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cq" => Ok(Self::Cq),
            "shrinking" => Ok(Self::Shrinking),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown method {other:?} (cq, shrinking or both)")),
        }
    }
}

/// Named weight schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleName {
    /// Every weight is 1/2.
    Half,
    /// `a` and `1 - a` alternating in `n + i`.
    Alternating,
}

impl FromStr for ScheduleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "half" => Ok(Self::Half),
            "alternating" => Ok(Self::Alternating),
            other => Err(format!("unknown schedule {other:?} (half or alternating)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Constant(Vec<f64>),
    Named(ScheduleName),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    /// Drawn from the cap with the run seed.
    Random,
    Explicit(SpherePoint),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dim: usize,
    pub cap: Cap,
    pub mappings: Vec<Mapping>,
    pub weights: Weights,
    pub alpha_lower: f64,
    pub x1: StartPoint,
    pub method: MethodChoice,
    pub stop: StopRule,
    pub seed: u64,
    pub output: PathBuf,
}

/// Parses a real: a decimal number, `pi`, `pi/m`, `k*pi` or `k*pi/m`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let num = if let Some(k) = num.strip_suffix("pi") {
        let k = k.trim().trim_end_matches('*').trim();
        let k = match k {
            "" => 1.0,
            "-" => -1.0,
            k => k.parse::<f64>().map_err(|_| format!("cannot parse {s:?} as a number"))?,
        };
        k * PI
    } else {
        num.parse::<f64>()
            .map_err(|_| format!("cannot parse {s:?} as a number"))?
    };
    let v = match den {
        Some(d) => {
            let d = d
                .parse::<f64>()
                .map_err(|_| format!("cannot parse {s:?} as a number"))?;
            num / d
        }
        None => num,
    };
    if !v.is_finite() {
        return Err(format!("{s:?} is not a finite number"));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_real)
        .collect()
}

fn parse_unit(s: &str, dim: usize) -> Result<SpherePoint, String> {
    let v = parse_list(s)?;
    if v.len() != dim {
        return Err(format!("expected {dim} coordinates, got {}", v.len()));
    }
    let v = AmbientVector::new(v).map_err(|e| e.to_string())?;
    SpherePoint::from_vector(v).map_err(|e| e.to_string())
}

fn parse_pole(s: &str, dim: usize) -> Result<SpherePoint, String> {
    let t = s.trim();
    let axis = t.strip_prefix('e').unwrap_or(t);
    if let Ok(k) = axis.parse::<usize>() {
        if k == 0 || k > dim {
            return Err(format!("axis {k} is outside 1..={dim}"));
        }
        return Ok(SpherePoint::basis(dim, k - 1));
    }
    parse_unit(t, dim)
}

fn parse_rotation(words: &[&str], dim: usize) -> Result<PlaneRotation, String> {
    let [i, j, angle] = words else {
        return Err("rotation takes: i j angle".into());
    };
    let axis = |w: &str| -> Result<usize, String> {
        let k: usize = w.parse().map_err(|_| format!("bad axis {w:?}"))?;
        if k == 0 || k > dim {
            return Err(format!("axis {k} is outside 1..={dim}"));
        }
        Ok(k - 1)
    };
    PlaneRotation::new(axis(i)?, axis(j)?, parse_real(angle)?).map_err(|e| e.to_string())
}

fn parse_mapping(s: &str, dim: usize) -> Result<Mapping, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    match words.split_first() {
        Some((&"identity", [])) => Ok(Mapping::Identity),
        Some((&"rotation", rest)) => Ok(Mapping::Rotation(parse_rotation(rest, dim)?)),
        Some((&"composition", _)) => {
            let body = s.trim_start().trim_start_matches("composition");
            let parts = body
                .split(';')
                .map(|part| {
                    let w: Vec<&str> = part.split_whitespace().collect();
                    match w.split_first() {
                        Some((&"rotation", rest)) => parse_rotation(rest, dim),
                        _ => Err(format!("composition parts must be rotations, got {part:?}")),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Mapping::Composition(parts))
        }
        _ => Err(format!(
            "unknown mapping {s:?} (rotation, identity or composition)"
        )),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(None, "config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut single: HashMap<String, (usize, String)> = HashMap::new();
        let mut mapping_lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(Some(line), "syntax", "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(Some(line), key, "missing value"));
            }
            match key {
                "mapping" => mapping_lines.push((line, value.to_string())),
                "dim" | "cap_pole" | "cap_radius" | "alphas" | "schedule" | "alpha_lower"
                | "x1" | "method" | "eps_step" | "eps_residual" | "max_iter" | "seed"
                | "output" => {
                    if let Some((first, _)) = single.get(key) {
                        return Err(err(
                            Some(line),
                            key,
                            format!("already set on line {first}"),
                        ));
                    }
                    single.insert(key.to_string(), (line, value.to_string()));
                }
                other => return Err(err(Some(line), other, "unknown key")),
            }
        }

        let get = |key: &str| single.get(key).map(|(l, v)| (*l, v.as_str()));
        let require = |key: &str| get(key).ok_or_else(|| err(None, key, "required key is missing"));
        fn field<T>(line: usize, key: &str, r: Result<T, String>) -> Result<T, ConfigError> {
            r.map_err(|m| err(Some(line), key, m))
        }

        let (l, v) = require("dim")?;
        let dim: usize = field(l, "dim", v.parse().map_err(|_| format!("bad integer {v:?}")))?;
        if dim < 2 {
            return Err(err(Some(l), "dim", "dimension must be at least 2"));
        }

        let (pole_line, v) = require("cap_pole")?;
        let pole = field(pole_line, "cap_pole", parse_pole(v, dim))?;
        let (l, v) = require("cap_radius")?;
        let radius = field(l, "cap_radius", parse_real(v))?;
        if !(radius > 0.0 && radius < PI / 4.0) {
            return Err(err(
                Some(l),
                "cap_radius",
                format!("{radius} must lie in (0, pi/4)"),
            ));
        }
        let cap = field(l, "cap_radius", Cap::new(pole, radius).map_err(|e| e.to_string()))?;

        if mapping_lines.is_empty() {
            return Err(err(None, "mapping", "at least one mapping is required"));
        }
        let mappings = mapping_lines
            .iter()
            .map(|(l, v)| field(*l, "mapping", parse_mapping(v, dim)))
            .collect::<Result<Vec<_>, _>>()?;

        let weights = match (get("alphas"), get("schedule")) {
            (Some((l, _)), Some(_)) => {
                return Err(err(Some(l), "alphas", "give either alphas or schedule, not both"))
            }
            (Some((l, v)), None) => {
                let a = field(l, "alphas", parse_list(v))?;
                if a.len() != mappings.len() {
                    return Err(err(
                        Some(l),
                        "alphas",
                        format!("{} weights for {} mappings", a.len(), mappings.len()),
                    ));
                }
                Weights::Constant(a)
            }
            (None, Some((l, v))) => Weights::Named(field(l, "schedule", v.parse())?),
            (None, None) => Weights::Named(ScheduleName::Half),
        };

        let alpha_lower = match get("alpha_lower") {
            Some((l, v)) => field(l, "alpha_lower", parse_real(v))?,
            None => 0.25,
        };

        let x1 = match get("x1") {
            None => StartPoint::Random,
            Some((_, "random")) => StartPoint::Random,
            Some((l, v)) => StartPoint::Explicit(field(l, "x1", parse_unit(v, dim))?),
        };
        if let StartPoint::Explicit(x) = &x1 {
            if !cap.contains(x, 1e-12) {
                let l = get("x1").map(|(l, _)| l);
                return Err(err(l, "x1", "start point lies outside the cap"));
            }
        }

        let method = match get("method") {
            Some((l, v)) => field(l, "method", v.parse())?,
            None => MethodChoice::Both,
        };

        let mut stop = StopRule::default();
        for (key, slot) in [("eps_step", &mut stop.eps_step), ("eps_residual", &mut stop.eps_residual)] {
            if let Some((l, v)) = get(key) {
                *slot = field(l, key, parse_real(v))?;
            }
        }
        if let Some((l, v)) = get("max_iter") {
            stop.max_iter = field(l, "max_iter", v.parse().map_err(|_| format!("bad integer {v:?}")))?;
        }
        if let Err(e) = stop.validate() {
            return Err(err(None, "stop rule", e.to_string()));
        }

        let seed = match get("seed") {
            Some((l, v)) => field(l, "seed", v.parse().map_err(|_| format!("bad seed {v:?}")))?,
            None => 0,
        };
        let output = get("output").map_or_else(|| PathBuf::from("sphere-cq"), |(_, v)| PathBuf::from(v));

        let config = Self {
            dim,
            cap,
            mappings,
            weights,
            alpha_lower,
            x1,
            method,
            stop,
            seed,
            output,
        };
        // Surface family errors (weights, cap invariance) at load time.
        config.family().map_err(|e| {
            let weights_key = if get("alphas").is_some() { "alphas" } else { "schedule" };
            let (line, key) = match &e {
                crate::Error::AlphaOutOfRange { .. } => {
                    (get(weights_key).map(|(l, _)| l), weights_key)
                }
                crate::Error::CapNotInvariant { index, .. } => {
                    (mapping_lines.get(*index).map(|(l, _)| *l), "mapping")
                }
                _ => (get("alpha_lower").map(|(l, _)| l), "alpha_lower"),
            };
            err(line, key, e.to_string())
        })?;
        Ok(config)
    }

    pub fn schedule(&self) -> AlphaSchedule {
        match &self.weights {
            Weights::Constant(a) => AlphaSchedule::Constant(a.clone()),
            Weights::Named(ScheduleName::Half) => {
                AlphaSchedule::Constant(vec![0.5; self.mappings.len()])
            }
            Weights::Named(ScheduleName::Alternating) => {
                let a = self.alpha_lower;
                AlphaSchedule::Custom(Arc::new(move |n, i| {
                    if (n + i) % 2 == 0 {
                        a
                    } else {
                        1.0 - a
                    }
                }))
            }
        }
    }

    pub fn family(&self) -> crate::Result<MappingFamily> {
        MappingFamily::new(
            self.mappings.clone(),
            self.schedule(),
            self.alpha_lower,
            &self.cap,
        )
    }

    /// The start point under `seed`.
    pub fn start_point(&self, seed: u64) -> SpherePoint {
        match &self.x1 {
            StartPoint::Random => random_point_in_cap(self.cap.pole(), self.cap.radius(), seed),
            StartPoint::Explicit(x) => x.clone(),
        }
    }

    /// The problem under `seed`, with the fixed subspace of the family
    /// attached when it meets the cap.
    pub fn problem(&self, seed: u64) -> crate::Result<Problem> {
        let p = Problem::new(self.cap.clone(), self.family()?, self.start_point(seed))?;
        Ok(match p.clone().with_computed_fixed_set() {
            Ok(with) => with,
            Err(_) => p,
        })
    }
}
