//! Run configuration: `key = value` files merged under command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hkgc::error::{Error, Result};
use hkgc::gaugefix::SolverConfig;
use hkgc::liecore::GroupSpec;
use hkgc::moduli::ModuliPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Invalid(format!("unknown format '{other}' (expected json or csv)"))),
        }
    }
}

/// Values that may come from a config file or a flag. `None` means unset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub group: Option<GroupSpec>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub extrapolate: Option<bool>,
    pub out: Option<PathBuf>,
    pub verbose: Option<bool>,
    pub point: Option<PathBuf>,
    pub points: Option<usize>,
    pub format: Option<Format>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Invalid(format!("cannot parse value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Invalid(format!("cannot parse value '{value}' for key '{key}' as a boolean"))),
    }
}

impl Settings {
    /// Parse `key = value` lines. `#` starts a comment; blank lines are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("config line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "group" => s.group = Some(value.parse()?),
                "grid" => s.grid = Some(parse(key, value)?),
                "tol" => s.tol = Some(parse(key, value)?),
                "seed" => s.seed = Some(parse(key, value)?),
                "extrapolate" => s.extrapolate = Some(parse_bool(key, value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "verbose" => s.verbose = Some(parse_bool(key, value)?),
                "point" => s.point = Some(PathBuf::from(value)),
                "points" => s.points = Some(parse(key, value)?),
                "format" => s.format = Some(value.parse()?),
                other => return Err(Error::Invalid(format!("config line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: Settings) -> Settings {
        Settings {
            group: over.group.or(self.group),
            grid: over.grid.or(self.grid),
            tol: over.tol.or(self.tol),
            seed: over.seed.or(self.seed),
            extrapolate: over.extrapolate.or(self.extrapolate),
            out: over.out.or(self.out),
            verbose: over.verbose.or(self.verbose),
            point: over.point.or(self.point),
            points: over.points.or(self.points),
            format: over.format.or(self.format),
        }
    }
}

/// Validated configuration handed to a command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub extrapolate: bool,
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub point: Option<PathBuf>,
    pub points: Option<usize>,
    pub format: Format,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    pub fn from_settings(s: Settings) -> Result<Self> {
        if let Some(n) = s.grid {
            if n < 8 {
                return Err(Error::GridTooSmall(n));
            }
        }
        if let Some(t) = s.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Invalid(format!("tolerance must be positive and finite, got {t}")));
            }
        }
        Ok(Self {
            group: s.group.unwrap_or_else(GroupSpec::su2),
            grid: s.grid,
            tol: s.tol,
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            extrapolate: s.extrapolate.unwrap_or(false),
            out: s.out,
            verbose: s.verbose.unwrap_or(false),
            point: s.point,
            points: s.points,
            format: s.format.unwrap_or(Format::Json),
        })
    }

    pub fn grid_or(&self, default: usize) -> usize {
        self.grid.unwrap_or(default)
    }

    pub fn solver(&self, base: SolverConfig) -> SolverConfig {
        SolverConfig { residual_tol: self.tol.unwrap_or(base.residual_tol), verbose: self.verbose, ..base }
    }

    /// The point from `--point`, or `None` when unset.
    pub fn load_point(&self) -> Result<Option<ModuliPoint>> {
        let Some(path) = &self.point else { return Ok(None) };
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read point {}: {e}", path.display())))?;
        let m: ModuliPoint =
            serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("malformed point {}: {e}", path.display())))?;
        m.check(&self.group)?;
        Ok(Some(m))
    }
}
