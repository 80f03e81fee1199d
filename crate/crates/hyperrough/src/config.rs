//! Run configuration: flat `key = value` files with command-line overrides.
//!
//! ```text
//! # comment
//! v0 = 0.1
//! hurst = -0.05, -0.25, -0.45, -0.49, -0.499
//! steps = 2000
//! ```
//!
//! Keys are listed in [`KEYS`]. Unknown keys, repeated keys and unparsable
//! values are config errors that name the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hyperrough_core::ModelParams;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "v0", "lambda", "theta", "nu", "horizon", "hurst", "steps", "paths", "seed", "out", "u_grid", "v_grid",
    "bins",
];

pub const DEFAULT_LADDER: [f64; 5] = [-0.05, -0.25, -0.45, -0.49, -0.499];
pub const DEFAULT_U_GRID: [f64; 5] = [-10.0, -5.0, 0.0, 5.0, 10.0];
pub const DEFAULT_V_GRID: [f64; 5] = [-4.0, -2.0, 0.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub hurst: Vec<f64>,
    pub steps: usize,
    pub paths: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            hurst: DEFAULT_LADDER.to_vec(),
            steps: 2000,
            paths: 10_000,
            seed: 42,
            out: PathBuf::from("out"),
            u_grid: DEFAULT_U_GRID.to_vec(),
            v_grid: DEFAULT_V_GRID.to_vec(),
            bins: 100,
        }
    }
}

/// Values given on the command line; each one replaces the file's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub hurst: Option<Vec<f64>>,
    pub steps: Option<usize>,
    pub paths: Option<u64>,
    pub u_grid: Option<Vec<f64>>,
    pub v_grid: Option<Vec<f64>>,
}

impl RunConfig {
    /// Defaults, then the optional file, then the overrides; validated.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (key, value) in parse_key_values(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "v0" => self.model.v0 = parse_num(key, value)?,
            "lambda" => self.model.lambda = parse_num(key, value)?,
            "theta" => self.model.theta = parse_num(key, value)?,
            "nu" => self.model.nu = parse_num(key, value)?,
            "horizon" => self.model.horizon = parse_num(key, value)?,
            "hurst" => self.hurst = parse_list(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "paths" => self.paths = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "u_grid" => self.u_grid = parse_list(key, value)?,
            "v_grid" => self.v_grid = parse_list(key, value)?,
            "bins" => self.bins = parse_num(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.hurst {
            self.hurst = v.clone();
        }
        if let Some(v) = o.steps {
            self.steps = v;
        }
        if let Some(v) = o.paths {
            self.paths = v;
        }
        if let Some(v) = &o.u_grid {
            self.u_grid = v.clone();
        }
        if let Some(v) = &o.v_grid {
            self.v_grid = v.clone();
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        if self.hurst.is_empty() {
            return Err(CliError::Config("hurst: the ladder is empty".into()));
        }
        if let Some(h) = self.hurst.iter().find(|h| !(**h > -0.5 && **h <= 0.5)) {
            return Err(CliError::Config(format!("hurst: every value must lie in (-1/2, 1/2], got {h}")));
        }
        if self.steps < 2 {
            return Err(CliError::Config(format!("steps: need N >= 2, got {}", self.steps)));
        }
        if self.paths < 1 {
            return Err(CliError::Config("paths: need at least one path".into()));
        }
        if self.bins < 10 {
            return Err(CliError::Config(format!("bins: need at least 10, got {}", self.bins)));
        }
        for (name, grid) in [("u_grid", &self.u_grid), ("v_grid", &self.v_grid)] {
            if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config(format!("{name}: need a nonempty list of finite numbers")));
            }
        }
        Ok(())
    }

    /// Canonical text of every setting that influences results (the output
    /// directory is excluded), keys sorted, floats in shortest round-trip form.
    pub fn canonical(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "bins={}", self.bins);
        let _ = writeln!(s, "horizon={:?}", m.horizon);
        let _ = writeln!(s, "hurst={}", list(&self.hurst));
        let _ = writeln!(s, "lambda={:?}", m.lambda);
        let _ = writeln!(s, "nu={:?}", m.nu);
        let _ = writeln!(s, "paths={}", self.paths);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "theta={:?}", m.theta);
        let _ = writeln!(s, "u_grid={}", list(&self.u_grid));
        let _ = writeln!(s, "v0={:?}", m.v0);
        let _ = writeln!(s, "v_grid={}", list(&self.v_grid));
        s
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Splits a config file into `(key, value)` pairs in file order.
pub fn parse_key_values(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
        }
        if let Some(prev) = seen.insert(k.to_string(), lineno + 1) {
            return Err(CliError::Config(format!("line {}: key '{k}' already set on line {prev}", lineno + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

pub fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}
