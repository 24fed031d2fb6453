//! Run configuration: TOML (preferred) or JSON, validated before any
//! computation starts. Unknown keys are rejected everywhere.

use std::path::Path;

use bloch_core::bands::{BrillouinGrid, DEFAULT_GRID_COUNT, DEFAULT_TRUNCATION, DEFAULT_ZONE_MARGIN};
use bloch_core::wavepacket::{AmplitudeComponent, AmplitudeSpec};
use bloch_core::{FourierPotential, Units};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub amplitude: Option<AmplitudeConfig>,
    pub sweep: Option<SweepConfig>,
    pub times: Option<TimesConfig>,
    #[serde(default)]
    pub lambda: LambdaConfig,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Exactly one of `alpha` (dimensionless cosine), `cosine` (physical cosine
/// `A cos(qx)`, scaled with `[units]`) or `harmonics` (general, with `q` and
/// `v0`; an empty list is the free particle).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub alpha: Option<f64>,
    pub cosine: Option<CosineConfig>,
    pub harmonics: Option<Vec<HarmonicConfig>>,
    pub q: Option<f64>,
    pub v0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineConfig {
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub n: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_count")]
    pub count: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            count: DEFAULT_GRID_COUNT,
            margin: DEFAULT_ZONE_MARGIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Truncation half-width.
    #[serde(rename = "M", default = "default_truncation")]
    pub m: usize,
    #[serde(rename = "J_max", default)]
    pub j_max: usize,
    /// Escalation limit for `M` when the M vs 2M check fails.
    #[serde(rename = "max_M", default = "default_max_truncation")]
    pub max_m: usize,
    /// Run the M vs 2M check and escalate `M` until it passes.
    #[serde(default = "yes")]
    pub converge: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m: DEFAULT_TRUNCATION,
            j_max: 0,
            max_m: default_max_truncation(),
            converge: true,
        }
    }
}

/// Either `bands` (bump components) or `csv` (path to `z, j, re, im` rows).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub bands: Option<Vec<AmplitudeComponent>>,
    pub csv: Option<String>,
}

/// `alpha = [...]`, or a log-spaced range `min`, `max`, `points`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: Option<Vec<f64>>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
}

/// `values = [...]`, or `count` uniform samples on `[start, stop]`. With
/// `beats` instead of `stop`, the span is that many of the packet's longest
/// beat periods.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub beats: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    #[serde(default)]
    pub band: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default = "default_window")]
    pub half_window: f64,
    /// Explicit sample count; by default the smallest power of two meeting
    /// the Nyquist requirement.
    pub samples: Option<usize>,
    /// Time for `oracle-check`.
    #[serde(default)]
    pub t: f64,
    /// Number of ppos times cross-checked by `--self-check`.
    #[serde(default = "default_check_times")]
    pub check_times: usize,
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            half_window: default_window(),
            samples: None,
            t: 0.0,
            check_times: default_check_times(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub bands_file: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_grid_count() -> usize {
    DEFAULT_GRID_COUNT
}
fn default_margin() -> f64 {
    DEFAULT_ZONE_MARGIN
}
fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}
fn default_max_truncation() -> usize {
    800
}
fn default_window() -> f64 {
    256.0
}
fn default_check_times() -> usize {
    5
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl RunConfig {
    pub fn parse(text: &str, format: Format) -> Result<Self, CliError> {
        let cfg: RunConfig = match format {
            Format::Toml => toml::from_str(text).map_err(|e| config_err(e.to_string()))?,
            Format::Json => serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Picks the format from the extension, falling back to sniffing for `{`.
    pub fn parse_guess(text: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let format = match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("toml") => Format::Toml,
            _ if text.trim_start().starts_with('{') => Format::Json,
            _ => Format::Toml,
        };
        Self::parse(text, format)
    }

    /// SHA-256 of the canonical JSON form, so TOML and JSON spellings of the
    /// same configuration hash alike.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.potential {
            p.build(self.units)?;
        }
        BrillouinGrid::new(self.grid.count, self.grid.margin).map_err(|e| config_err(format!("grid: {e}")))?;
        if self.solver.m == 0 {
            return Err(config_err("solver.M must be at least 1"));
        }
        if self.solver.max_m < self.solver.m {
            return Err(config_err("solver.max_M must not be below solver.M"));
        }
        if let Some(a) = &self.amplitude {
            match (&a.bands, &a.csv) {
                (Some(b), None) if !b.is_empty() => {}
                (Some(_), None) => return Err(config_err("amplitude.bands is empty")),
                (None, Some(_)) => {}
                _ => return Err(config_err("amplitude needs exactly one of `bands` or `csv`")),
            }
        }
        if let Some(s) = &self.sweep {
            s.alphas()?;
        }
        if let Some(t) = &self.times {
            t.validate()?;
        }
        if !(self.oracle.half_window > 0.0 && self.oracle.half_window.is_finite()) {
            return Err(config_err("oracle.half_window must be positive"));
        }
        if !self.oracle.t.is_finite() {
            return Err(config_err("oracle.t must be finite"));
        }
        Ok(())
    }

    pub fn grid(&self) -> BrillouinGrid {
        BrillouinGrid::new(self.grid.count, self.grid.margin).expect("validated grid")
    }

    pub fn potential(&self) -> Result<FourierPotential, CliError> {
        self.potential
            .as_ref()
            .ok_or_else(|| config_err("missing [potential] block"))?
            .build(self.units)
    }

    pub fn amplitude_spec(&self) -> Result<&AmplitudeConfig, CliError> {
        self.amplitude.as_ref().ok_or_else(|| config_err("missing [amplitude] block"))
    }
}

impl PotentialConfig {
    /// The dimensionless potential.
    pub fn build(&self, units: Units) -> Result<FourierPotential, CliError> {
        let forms = [self.alpha.is_some(), self.cosine.is_some(), self.harmonics.is_some()];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(config_err("potential needs exactly one of `alpha`, `cosine` or `harmonics`"));
        }
        let wrap = |e: bloch_core::Error| config_err(format!("potential: {e}"));
        if let Some(alpha) = self.alpha {
            if self.q.is_some() || self.v0.is_some() {
                return Err(config_err("potential.alpha is dimensionless; `q` and `v0` do not apply"));
            }
            return FourierPotential::cosine_alpha(alpha).map_err(wrap);
        }
        if let Some(c) = &self.cosine {
            if self.q.is_some() || self.v0.is_some() {
                return Err(config_err("set `q` inside potential.cosine; `v0` does not apply"));
            }
            return FourierPotential::cosine(c.amplitude, c.q)
                .and_then(|p| p.scaled(units))
                .map_err(wrap);
        }
        let harmonics: Vec<(i64, Complex64)> = self
            .harmonics
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|h| (h.n, Complex64::new(h.re, h.im)))
            .collect();
        FourierPotential::from_harmonics(self.q.unwrap_or(1.0), self.v0.unwrap_or(0.0), &harmonics)
            .and_then(|p| p.scaled(units))
            .map_err(wrap)
    }

    /// Dimensionless cosine strength, when the potential is a cosine.
    pub fn alpha(&self, units: Units) -> Option<f64> {
        if let Some(a) = self.alpha {
            return Some(a);
        }
        let c = self.cosine.as_ref()?;
        bloch_core::potential::dimensionless_strength(c.amplitude, units.mu, units.hbar, c.q).ok()
    }
}

impl SweepConfig {
    pub fn alphas(&self) -> Result<Vec<f64>, CliError> {
        let list = match (&self.alpha, self.min, self.max, self.points) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(lo), Some(hi), Some(n)) => {
                if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
                    return Err(config_err("sweep needs 0 < min < max and points ≥ 2"));
                }
                let (a, b) = (lo.log10(), hi.log10());
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            hi
                        } else {
                            10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                        }
                    })
                    .collect()
            }
            _ => return Err(config_err("sweep needs either `alpha = [...]` or all of `min`, `max`, `points`")),
        };
        if list.is_empty() || list.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(config_err("sweep.alpha values must be positive and finite"));
        }
        Ok(list)
    }
}

impl TimesConfig {
    fn validate(&self) -> Result<(), CliError> {
        match (&self.values, self.count) {
            (Some(v), None) if self.start.is_none() && self.stop.is_none() && self.beats.is_none() => {
                if v.is_empty() || v.iter().any(|t| !t.is_finite()) {
                    return Err(config_err("times.values must be non-empty and finite"));
                }
            }
            (None, Some(n)) if n >= 1 => {
                if self.stop.is_some() == self.beats.is_some() {
                    return Err(config_err("times needs exactly one of `stop` or `beats`"));
                }
                let ends = [self.start, self.stop, self.beats];
                if ends.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(config_err("times bounds must be finite"));
                }
                if self.beats.is_some_and(|b| b <= 0.0) {
                    return Err(config_err("times.beats must be positive"));
                }
            }
            _ => return Err(config_err("times needs either `values` or `count` with `stop` or `beats`")),
        }
        Ok(())
    }

    /// Sample times; `beat_period` is used when the span is given in beats.
    pub fn resolve(&self, beat_period: Option<f64>) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        let n = self.count.expect("validated");
        let start = self.start.unwrap_or(0.0);
        let stop = match (self.stop, self.beats) {
            (Some(s), _) => s,
            (None, Some(b)) => {
                let period = beat_period
                    .ok_or_else(|| config_err("times.beats needs a packet occupying at least two bands"))?;
                start + b * period
            }
            _ => unreachable!("validated"),
        };
        if n == 1 {
            return Ok(vec![start]);
        }
        Ok((0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect())
    }
}

impl AmplitudeConfig {
    pub fn spec(&self) -> Option<AmplitudeSpec> {
        self.bands.as_ref().map(|b| AmplitudeSpec { bands: b.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[potential]
alpha = 1.0

[grid]
count = 401

[solver]
M = 40
J_max = 1

[amplitude]
bands = [
  { j = 0, kind = "bump", z0 = 0.25, w = 0.2 },
  { j = 1, kind = "bump", z0 = 0.25, w = 0.2, weight = [0.0, 1.0], phase = 0.5 },
]

[times]
count = 11
beats = 100.0
"#;

    #[test]
    fn parses_full_toml() {
        let cfg = RunConfig::parse(FULL, Format::Toml).unwrap();
        assert_eq!(cfg.solver.m, 40);
        assert_eq!(cfg.solver.j_max, 1);
        assert_eq!(cfg.grid.margin, DEFAULT_ZONE_MARGIN);
        assert_eq!(cfg.amplitude.as_ref().unwrap().bands.as_ref().unwrap()[1].weight, [0.0, 1.0]);
        let t = cfg.times.as_ref().unwrap().resolve(Some(2.0)).unwrap();
        assert_eq!(t.len(), 11);
        assert_eq!(t[10], 200.0);
    }

    #[test]
    fn json_and_toml_hash_alike() {
        let a = RunConfig::parse(FULL, Format::Toml).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let b = RunConfig::parse_guess(&json, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::parse("[potential]\nalpha = 2.0\n", Format::Toml).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse("[solver]\nM = 10\ntolerance = 3\n", Format::Toml).unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
        let err = RunConfig::parse("[potentail]\nalpha = 1.0\n", Format::Toml).unwrap_err();
        assert!(err.to_string().contains("potentail"), "{err}");
    }

    #[test]
    fn potential_forms() {
        let free = RunConfig::parse("[potential]\nharmonics = []\n", Format::Toml).unwrap();
        assert_eq!(free.potential().unwrap().max_harmonic(), 0);
        let phys = RunConfig::parse(
            "[units]\nmu = 2.0\nhbar = 1.0\n[potential]\ncosine = { A = 0.5, q = 1.0 }\n",
            Format::Toml,
        )
        .unwrap();
        // α = μA/(ħ²q²) = 1.
        assert!((phys.potential().unwrap().coefficient(1).re - 1.0).abs() < 1e-15);
        assert_eq!(phys.potential.as_ref().unwrap().alpha(phys.units), Some(1.0));
        assert!(RunConfig::parse("[potential]\nalpha = 1.0\nharmonics = []\n", Format::Toml).is_err());
        assert!(RunConfig::parse("[potential]\nalpha = -1.0\n", Format::Toml).is_err());
    }

    #[test]
    fn sweep_forms() {
        let s = SweepConfig { min: Some(0.01), max: Some(10.0), points: Some(4), ..Default::default() };
        let a = s.alphas().unwrap();
        assert_eq!(a.len(), 4);
        assert!((a[0] - 0.01).abs() < 1e-17 && a[3] == 10.0);
        assert!((a[1] - 0.1).abs() < 1e-15);
        assert!(SweepConfig::default().alphas().is_err());
    }

    #[test]
    fn bad_blocks_rejected() {
        assert!(RunConfig::parse("[grid]\ncount = 400\n", Format::Toml).is_err());
        assert!(RunConfig::parse("[amplitude]\nbands = []\n", Format::Toml).is_err());
        assert!(RunConfig::parse("[times]\ncount = 3\n", Format::Toml).is_err());
        assert!(RunConfig::parse("[solver]\nM = 0\n", Format::Toml).is_err());
    }
}
