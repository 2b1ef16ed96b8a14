//! Run configuration as a flat `key = value` text file.
//!
//! ```text
//! # comment
//! kind = convergence          # convergence | single | cavity | steady
//! example = ex1               # ex1 | ex2 | cavity
//! epsilon = -1                # -1 symmetric, +1 non-symmetric
//! sigma = 10
//! mu = 1
//! velocity_degree = 1
//! pressure_degree = 0
//! n = 4, 8, 16, 32
//! dt = h2                     # h2 (dt = 1/n^2) or a number
//! final_time = 1
//! tolerance = 1e-10           # Picard stopping tolerance
//! max_iters = 200
//! output = out
//! seed = 0
//! error_measure = exact       # exact | interpolant
//! initial_projection = solenoidal
//! snapshots = 25, 50
//! ```
//!
//! Unknown keys are errors. Every key is optional; missing keys keep the
//! preset of the chosen kind. `to_text` writes every key and parses back to
//! the same configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::ErrorMeasure;
use crate::error::{Error, Result};
use crate::exact::Manufactured;
use crate::forms::{FormConfig, Symmetry};
use crate::solver::InitialProjection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Convergence,
    Single,
    Cavity,
    Steady,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Single => "single",
            ExperimentKind::Cavity => "cavity",
            ExperimentKind::Steady => "steady",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(ExperimentKind::Convergence),
            "single" => Ok(ExperimentKind::Single),
            "cavity" => Ok(ExperimentKind::Cavity),
            "steady" => Ok(ExperimentKind::Steady),
            _ => Err(Error::Config(format!("unknown experiment kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Manufactured(Manufactured),
    /// Lid-driven cavity: zero forcing, `g = (1, 0)` on the top edge.
    Cavity,
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Example::Manufactured(m) => write!(f, "{m}"),
            Example::Cavity => f.write_str("cavity"),
        }
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "cavity" {
            Ok(Example::Cavity)
        } else {
            s.parse().map(Example::Manufactured)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    /// `dt = h^2 = 1/n^2`.
    MeshSquared,
    Explicit(f64),
}

impl DtPolicy {
    pub fn dt(self, n: usize) -> f64 {
        match self {
            DtPolicy::MeshSquared => 1.0 / (n * n) as f64,
            DtPolicy::Explicit(dt) => dt,
        }
    }
}

impl fmt::Display for DtPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtPolicy::MeshSquared => f.write_str("h2"),
            DtPolicy::Explicit(dt) => write!(f, "{dt}"),
        }
    }
}

impl FromStr for DtPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h2" => Ok(DtPolicy::MeshSquared),
            _ => parse_num(s, "dt").map(DtPolicy::Explicit),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub example: Example,
    pub symmetry: Symmetry,
    pub sigma: f64,
    pub mu: f64,
    pub velocity_degree: usize,
    pub pressure_degree: usize,
    pub meshes: Vec<usize>,
    pub dt: DtPolicy,
    pub final_time: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub output: PathBuf,
    pub seed: u64,
    pub error_measure: ErrorMeasure,
    pub initial_projection: InitialProjection,
    pub snapshots: Vec<f64>,
}

pub const KEYS: [&str; 17] = [
    "kind",
    "example",
    "epsilon",
    "sigma",
    "mu",
    "velocity_degree",
    "pressure_degree",
    "n",
    "dt",
    "final_time",
    "tolerance",
    "max_iters",
    "output",
    "seed",
    "error_measure",
    "initial_projection",
    "snapshots",
];

fn parse_num<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{s}`")))
}

fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_num(t, key))
        .collect()
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Defaults of an experiment kind: the P1-P0 polynomial study for the
    /// manufactured kinds, the `mu = 1/100` lid-driven cavity otherwise.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = RunConfig {
            kind,
            example: Example::Manufactured(Manufactured::Polynomial),
            symmetry: Symmetry::Sipg,
            sigma: 10.0,
            mu: 1.0,
            velocity_degree: 1,
            pressure_degree: 0,
            meshes: vec![4, 8, 16, 32],
            dt: DtPolicy::MeshSquared,
            final_time: 1.0,
            tolerance: 1e-10,
            max_iters: 200,
            output: PathBuf::from("out"),
            seed: 0,
            error_measure: ErrorMeasure::Exact,
            initial_projection: InitialProjection::Solenoidal,
            snapshots: Vec::new(),
        };
        match kind {
            ExperimentKind::Convergence => base,
            ExperimentKind::Single => RunConfig {
                meshes: vec![8],
                ..base
            },
            ExperimentKind::Cavity | ExperimentKind::Steady => RunConfig {
                example: Example::Cavity,
                sigma: 40.0,
                mu: 0.01,
                meshes: vec![32],
                dt: DtPolicy::Explicit(0.25),
                final_time: 75.0,
                ..base
            },
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "kind" => self.kind = v.parse()?,
            "example" => self.example = v.parse()?,
            "epsilon" => {
                self.symmetry = Symmetry::from_epsilon(parse_num(v, key)?).map_err(|e| Error::Config(e.to_string()))?
            }
            "sigma" => self.sigma = parse_num(v, key)?,
            "mu" => self.mu = parse_num(v, key)?,
            "velocity_degree" => self.velocity_degree = parse_num(v, key)?,
            "pressure_degree" => self.pressure_degree = parse_num(v, key)?,
            "n" => self.meshes = parse_list(v, key)?,
            "dt" => self.dt = v.parse()?,
            "final_time" => self.final_time = parse_num(v, key)?,
            "tolerance" => self.tolerance = parse_num(v, key)?,
            "max_iters" => self.max_iters = parse_num(v, key)?,
            "output" => self.output = PathBuf::from(v),
            "seed" => self.seed = parse_num(v, key)?,
            "error_measure" => self.error_measure = v.parse()?,
            "initial_projection" => {
                self.initial_projection = match v {
                    "solenoidal" => InitialProjection::Solenoidal,
                    "elementwise" => InitialProjection::Elementwise,
                    _ => return Err(Error::Config(format!("unknown initial projection `{v}`"))),
                }
            }
            "snapshots" => self.snapshots = parse_list(v, key)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies the `key = value` lines of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Parses a complete configuration. The `kind` line, if present, picks
    /// the preset the other keys refine.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = ExperimentKind::Convergence;
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if let Some((k, v)) = line.split_once('=') {
                if k.trim() == "kind" {
                    kind = v.trim().parse()?;
                }
            }
        }
        let mut cfg = RunConfig::preset(kind);
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let projection = match self.initial_projection {
            InitialProjection::Solenoidal => "solenoidal",
            InitialProjection::Elementwise => "elementwise",
        };
        let values = [
            self.kind.name().to_string(),
            self.example.to_string(),
            self.symmetry.epsilon().to_string(),
            self.sigma.to_string(),
            self.mu.to_string(),
            self.velocity_degree.to_string(),
            self.pressure_degree.to_string(),
            join(&self.meshes),
            self.dt.to_string(),
            self.final_time.to_string(),
            self.tolerance.to_string(),
            self.max_iters.to_string(),
            self.output.display().to_string(),
            self.seed.to_string(),
            self.error_measure.to_string(),
            projection.to_string(),
            join(&self.snapshots),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn forms(&self) -> Result<FormConfig> {
        FormConfig::new(self.symmetry, self.sigma, self.mu).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match (self.kind, self.example) {
            (ExperimentKind::Cavity | ExperimentKind::Steady, Example::Manufactured(m)) => {
                return bad(format!("kind `{}` needs example `cavity`, got `{m}`", self.kind.name()));
            }
            (ExperimentKind::Convergence | ExperimentKind::Single, Example::Cavity) => {
                return bad(format!(
                    "kind `{}` needs a manufactured example (ex1 or ex2)",
                    self.kind.name()
                ));
            }
            _ => {}
        }
        self.forms()?;
        if self.velocity_degree == 0 || self.velocity_degree > 4 {
            return bad(format!(
                "velocity_degree must lie in 1..=4, got {}",
                self.velocity_degree
            ));
        }
        if self.pressure_degree > self.velocity_degree {
            return bad(format!(
                "pressure_degree {} exceeds velocity_degree {}",
                self.pressure_degree, self.velocity_degree
            ));
        }
        if self.meshes.is_empty() || self.meshes.contains(&0) {
            return bad(format!("`n` needs positive mesh sizes, got [{}]", join(&self.meshes)));
        }
        if self.meshes.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("`n` must be strictly increasing, got [{}]", join(&self.meshes)));
        }
        if self.kind != ExperimentKind::Convergence && self.meshes.len() != 1 {
            return bad(format!("kind `{}` takes a single mesh size", self.kind.name()));
        }
        if let DtPolicy::Explicit(dt) = self.dt {
            if !(dt > 0.0 && dt < 1.0) {
                return bad(format!("dt must lie in (0, 1), got {dt}"));
            }
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("final_time must be positive, got {}", self.final_time));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self.snapshots.iter().any(|&t| !(t >= 0.0 && t <= self.final_time)) {
            return bad(format!(
                "snapshot times must lie in [0, final_time], got [{}]",
                join(&self.snapshots)
            ));
        }
        Ok(())
    }
}
