//! Experiment configuration: a flat `key = value` file with one section per
//! concern.
//!
//! ```toml
//! [manifold]
//! n = 256
//! length = 6.283185307179586
//! metric = "cosine"
//! amplitude = 0.3
//!
//! [semiclassics]
//! k_min = 3
//! k_max = 10
//! symbol = "bump"
//! algebra = "random"
//!
//! [run]
//! seed = 1            # or a string, for seeds above 2^63 - 1
//! output = "orbitlab-out"
//! ```
//!
//! Every key is optional; missing keys take the defaults of
//! [`ExperimentConfig::default`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::manifold::{GridManifold, Manifold};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricPreset {
    /// `c = 1`.
    Flat,
    /// `c(x) = 1 + amplitude * cos(2 pi x / L)`.
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolPreset {
    /// Two separable terms with compactly supported bump profiles.
    Bump,
    /// Two separable terms with narrow Gaussian profiles.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraPreset {
    /// `Z = (0, 0)`.
    Zero,
    /// `Z = (0, f)` with random `f`.
    Function,
    /// Random `Z = (X, f)`.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub length: f64,
    pub metric: MetricPreset,
    pub amplitude: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub symbol: SymbolPreset,
    pub algebra: AlgebraPreset,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 256,
            length: 2.0 * PI,
            metric: MetricPreset::Cosine,
            amplitude: 0.3,
            k_min: 3,
            k_max: 10,
            symbol: SymbolPreset::Bump,
            algebra: AlgebraPreset::Random,
            seed: 1,
            output: PathBuf::from("orbitlab-out"),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    manifold: RawManifold,
    #[serde(default)]
    semiclassics: RawSemiclassics,
    #[serde(default)]
    run: RawRun,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    n: Option<usize>,
    length: Option<f64>,
    metric: Option<MetricPreset>,
    amplitude: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSemiclassics {
    k_min: Option<u32>,
    k_max: Option<u32>,
    symbol: Option<SymbolPreset>,
    algebra: Option<AlgebraPreset>,
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written as
/// decimal strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawSeed {
    Int(u64),
    Text(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<RawSeed>,
    output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            field: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| syntax_error(text, &e))?;
        let d = Self::default();
        let seed = match raw.run.seed {
            None => d.seed,
            Some(RawSeed::Int(s)) => s,
            Some(RawSeed::Text(t)) => t.trim().parse().map_err(|_| Error::Config {
                line: key_line(text, "run", "seed"),
                field: "run.seed".into(),
                message: format!("expected an unsigned 64-bit integer, got '{t}'"),
            })?,
        };
        let cfg = Self {
            n: raw.manifold.n.unwrap_or(d.n),
            length: raw.manifold.length.unwrap_or(d.length),
            metric: raw.manifold.metric.unwrap_or(d.metric),
            amplitude: raw.manifold.amplitude.unwrap_or(d.amplitude),
            k_min: raw.semiclassics.k_min.unwrap_or(d.k_min),
            k_max: raw.semiclassics.k_max.unwrap_or(d.k_max),
            symbol: raw.semiclassics.symbol.unwrap_or(d.symbol),
            algebra: raw.semiclassics.algebra.unwrap_or(d.algebra),
            seed,
            output: raw.run.output.unwrap_or(d.output),
        };
        cfg.validate_in(Some(text))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_in(None)
    }

    fn validate_in(&self, text: Option<&str>) -> Result<()> {
        let fail = |section: &str, key: &str, message: String| Error::Config {
            line: text.and_then(|t| key_line(t, section, key)),
            field: format!("{section}.{key}"),
            message,
        };
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(fail(
                "manifold",
                "n",
                format!("must be a power of two >= 8, got {}", self.n),
            ));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(fail(
                "manifold",
                "length",
                format!("must be positive, got {}", self.length),
            ));
        }
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(fail(
                "manifold",
                "amplitude",
                format!("must lie in [0, 1), got {}", self.amplitude),
            ));
        }
        if self.k_min >= self.k_max {
            return Err(fail(
                "semiclassics",
                "k_max",
                format!("k_min ({}) must be smaller than k_max ({})", self.k_min, self.k_max),
            ));
        }
        if self.k_max > 30 {
            return Err(fail(
                "semiclassics",
                "k_max",
                format!("must be at most 30, got {}", self.k_max),
            ));
        }
        Ok(())
    }

    pub fn manifold(&self) -> Result<Manifold> {
        match self.metric {
            MetricPreset::Flat => GridManifold::new(self.n, self.length, |_| 1.0),
            MetricPreset::Cosine => GridManifold::cosine_with_length(self.n, self.length, self.amplitude),
        }
    }

    pub fn h_grid(&self) -> Vec<f64> {
        crate::semiclassics::dyadic_h_grid(self.k_min, self.k_max)
    }
}

/// Translate a parser error into a line/field diagnostic.
fn syntax_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map(|s| line_of(text, s.start));
    let field = backticked(e.message())
        .or_else(|| line.and_then(|l| key_on_line(text, l)))
        .unwrap_or_default();
    Error::Config {
        line,
        field,
        message: e.message().trim().to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

fn key_on_line(text: &str, line: usize) -> Option<String> {
    let l = text.lines().nth(line - 1)?;
    let key = l.split('=').next()?.trim().trim_matches(|c| c == '[' || c == ']');
    (!key.is_empty()).then(|| key.to_string())
}

/// Line of `key` inside `[section]`, if present.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if let Some(s) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = s.trim().to_string();
        } else if current == section && t.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    None
}
