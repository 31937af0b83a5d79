use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use swarmwave::fv::{Integrator, Noise};
use swarmwave::strip::{Sign, WaveClass};
use swarmwave::{Params, Potential};

use crate::CliError;

/// Contents of a `--config` file. Every section is optional; a subcommand
/// only reads the sections it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub model: ModelConfig,
    pub potential: Option<Potential>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub strip: Option<StripConfig>,
    pub annulus: Option<AnnulusConfig>,
    pub simulate: Option<SimulateConfig>,
    pub scan: Option<ScanConfig>,
    pub check: Option<CheckConfig>,
}

/// Model coefficients; unset entries come from the preset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub b: Option<f64>,
    pub b_prime: Option<f64>,
    pub theta_prime: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "defaults::quad")]
    pub quad: f64,
    #[serde(default = "defaults::root")]
    pub root: f64,
    /// Largest accepted normalised residual of a 512-interval profile; scaled
    /// by (512 / n)^2 for other sizes.
    #[serde(default = "defaults::residual")]
    pub residual: f64,
    #[serde(default = "defaults::strip_window")]
    pub strip_window: f64,
    #[serde(default = "defaults::annulus_window")]
    pub annulus_window: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad: defaults::quad(),
            root: defaults::root(),
            residual: defaults::residual(),
            strip_window: defaults::strip_window(),
            annulus_window: defaults::annulus_window(),
        }
    }
}

/// Either an absolute ell or a fraction of the critical value ell*.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EllChoice {
    pub ell: Option<f64>,
    pub ell_fraction: Option<f64>,
}

impl EllChoice {
    pub fn resolve(&self, star: impl FnOnce() -> swarmwave::Result<f64>) -> Result<f64, CliError> {
        match (self.ell, self.ell_fraction) {
            (Some(v), None) => Ok(v),
            (None, Some(f)) => Ok(f * star()?),
            (None, None) => Ok(0.0),
            (Some(_), Some(_)) => Err(CliError::Config("give either `ell` or `ell_fraction`, not both".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    #[serde(default = "defaults::z")]
    pub z: f64,
    pub ell: Option<f64>,
    pub ell_fraction: Option<f64>,
    #[serde(default = "defaults::class")]
    pub class: WaveClass,
    #[serde(default = "defaults::sign")]
    pub sign: Sign,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
}

impl StripConfig {
    pub fn ell_choice(&self) -> EllChoice {
        EllChoice { ell: self.ell, ell_fraction: self.ell_fraction }
    }
}

impl AnnulusConfig {
    pub fn ell_choice(&self) -> EllChoice {
        EllChoice { ell: self.ell, ell_fraction: self.ell_fraction }
    }
}

impl Default for StripConfig {
    fn default() -> Self {
        Self { z: defaults::z(), ell: None, ell_fraction: None, class: defaults::class(), sign: defaults::sign(), samples: defaults::samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    #[serde(default = "defaults::m")]
    pub m: f64,
    pub ell: Option<f64>,
    pub ell_fraction: Option<f64>,
    #[serde(default = "defaults::sign")]
    pub sign: Sign,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    pub sign_map: Option<SignMapConfig>,
}

impl Default for AnnulusConfig {
    fn default() -> Self {
        Self { m: defaults::m(), ell: None, ell_fraction: None, sign: defaults::sign(), samples: defaults::samples(), sign_map: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignMapConfig {
    /// Defaults to the wave's ell; may be negative.
    pub ell: Option<f64>,
    #[serde(default = "defaults::map_size")]
    pub nr: usize,
    #[serde(default = "defaults::map_size")]
    pub nrho: usize,
    /// Defaults to 1.5 times the largest density of the wave.
    pub rho_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "defaults::grid")]
    pub nx1: usize,
    #[serde(default = "defaults::grid")]
    pub nx2: usize,
    pub t_end: Option<f64>,
    pub output_every: Option<f64>,
    pub cfl: Option<f64>,
    pub rho_floor: Option<f64>,
    pub max_drift: Option<f64>,
    pub dt_min: Option<f64>,
    pub shock_factor: Option<f64>,
    pub integrator: Option<Integrator>,
    pub noise: Option<Noise>,
    /// Write a binary snapshot at every output time.
    #[serde(default = "defaults::yes")]
    pub snapshots: bool,
    /// Start from a snapshot file instead of a freshly built wave.
    pub initial: Option<PathBuf>,
    /// Initial wave; `ell_fraction` defaults to 1.
    pub wave: Option<StripConfig>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            nx1: defaults::grid(),
            nx2: defaults::grid(),
            t_end: None,
            output_every: None,
            cfl: None,
            rho_floor: None,
            max_drift: None,
            dt_min: None,
            shock_factor: None,
            integrator: None,
            noise: None,
            snapshots: true,
            initial: None,
            wave: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Strip,
    Annulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub kind: ScanKind,
    /// Values of b; defaults to the model's b.
    pub b: Option<Vec<f64>>,
    /// Winding numbers (strip) or angular numbers (annulus).
    #[serde(default)]
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Profile CSV with its JSON sidecar. Without it the wave described by
    /// the `strip` or `annulus` section is built and checked.
    pub profile: Option<PathBuf>,
}

mod defaults {
    use super::*;

    pub fn quad() -> f64 {
        swarmwave::quad::DEFAULT_TOL
    }
    pub fn root() -> f64 {
        1e-13
    }
    pub fn residual() -> f64 {
        1e-3
    }
    pub fn strip_window() -> f64 {
        0.4
    }
    pub fn annulus_window() -> f64 {
        0.25
    }
    pub fn z() -> f64 {
        2.0 * std::f64::consts::PI
    }
    pub fn m() -> f64 {
        1.0
    }
    pub fn class() -> WaveClass {
        WaveClass::Positive
    }
    pub fn sign() -> Sign {
        Sign::Plus
    }
    pub fn samples() -> usize {
        1024
    }
    pub fn map_size() -> usize {
        200
    }
    pub fn grid() -> usize {
        100
    }
    pub fn yes() -> bool {
        true
    }
}

/// Named parameter sets for the three simulation regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Nsh,
    LowNoise,
    LargeNoise,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Nsh, Preset::LowNoise, Preset::LargeNoise];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Nsh => "nsh",
            Preset::LowNoise => "low-noise",
            Preset::LargeNoise => "large-noise",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{s}` (expected nsh, low-noise or large-noise)")))
    }

    pub fn params(self) -> Params {
        let (b, tp) = match self {
            Preset::Nsh => (-0.03267, 0.0),
            Preset::LowNoise => (-0.03267, 0.01),
            Preset::LargeNoise => (-0.0308, 0.07),
        };
        Params { c1: 0.5, c2: 0.4, theta: 0.1, kappa: 0.1, b, b_prime: b, theta_prime: tp * b }
    }

    pub fn t_end(self) -> f64 {
        match self {
            Preset::Nsh => 4.0,
            Preset::LowNoise | Preset::LargeNoise => 2.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = &c.preset {
            Preset::parse(p)?;
        }
        Ok(c)
    }

    pub fn preset(&self) -> Result<Option<Preset>, CliError> {
        self.preset.as_deref().map(Preset::parse).transpose()
    }

    /// Preset (or NSH) coefficients with the explicit model entries applied.
    pub fn params(&self) -> Result<Params, CliError> {
        let mut p = self.preset()?.unwrap_or(Preset::Nsh).params();
        let m = &self.model;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.c1, m.c1);
        set(&mut p.c2, m.c2);
        set(&mut p.theta, m.theta);
        set(&mut p.kappa, m.kappa);
        set(&mut p.b, m.b);
        set(&mut p.b_prime, m.b_prime);
        set(&mut p.theta_prime, m.theta_prime);
        p.validate()?;
        Ok(p)
    }

    pub fn strip_potential(&self) -> Potential {
        self.potential.unwrap_or_else(Potential::strip_default)
    }

    pub fn annulus_potential(&self) -> Potential {
        self.potential.unwrap_or(Potential::AnnulusPower { r0: 1.0, r1: 2.0, beta: 0.75, scale: 1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[strip]\nzz = 1.0\n").is_err());
        assert!(RunConfig::parse("extra = 1\n").is_err());
        assert!(RunConfig::parse("[model]\nc3 = 1.0\n").is_err());
    }

    #[test]
    fn model_overrides_preset() {
        let c = RunConfig::parse("preset = \"large-noise\"\n[model]\nkappa = 0.2\n").unwrap();
        let p = c.params().unwrap();
        assert_eq!((p.b, p.kappa), (-0.0308, 0.2));
        assert!((p.theta_prime - 0.07 * -0.0308).abs() < 1e-18);
    }

    #[test]
    fn bad_preset_is_a_config_error() {
        assert!(matches!(RunConfig::parse("preset = \"loud\"\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn strip_section_defaults() {
        let c = RunConfig::parse("[strip]\nell_fraction = 0.5\n").unwrap();
        let s = c.strip.unwrap();
        assert_eq!(s.class, WaveClass::Positive);
        assert_eq!(s.ell_fraction, Some(0.5));
        assert_eq!(s.samples, 1024);
    }
}
