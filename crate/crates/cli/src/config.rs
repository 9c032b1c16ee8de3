//! Experiment configuration (TOML). Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use decaylab_core::decay::PropId;
use decaylab_core::forge::{Band, Geometry, PotentialSpec, SpectralData};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Check {
    P41,
    P42,
    P44,
    #[serde(rename = "AUDIT")]
    Audit,
    #[serde(rename = "KATO")]
    Kato,
    #[serde(rename = "MORAWETZ")]
    Morawetz,
    P52,
    P53,
    P61,
    P63,
    P71,
}

impl Check {
    pub fn decay(self) -> Option<PropId> {
        match self {
            Check::P52 => Some(PropId::P52),
            Check::P53 => Some(PropId::P53),
            Check::P61 => Some(PropId::P61),
            Check::P63 => Some(PropId::P63),
            Check::P71 => Some(PropId::P71),
            _ => None,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::Audit => "AUDIT",
            Check::Kato => "KATO",
            Check::Morawetz => "MORAWETZ",
            other => return write!(f, "{other:?}"),
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    #[default]
    Pass,
    Fail,
    VacuousPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub geometry: Geometry,
    pub points: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Critical { coupling: f64 },
    InverseQuartic { coupling: f64 },
}

impl PotentialConfig {
    pub fn spec(&self, geometry: Geometry) -> PotentialSpec {
        let d = geometry.space_dim();
        match *self {
            PotentialConfig::Zero => PotentialSpec::zero(d),
            PotentialConfig::Critical { coupling } => PotentialSpec::critical(coupling, d),
            PotentialConfig::InverseQuartic { coupling } => PotentialSpec::inverse_quartic(coupling, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandConfig {
    /// `[1e-3 |H|, λ_max]`
    #[default]
    Default,
    Everything,
    Custom { lo: f64, hi: f64 },
}

impl BandConfig {
    pub fn band(&self, spectral: &SpectralData) -> Band {
        match *self {
            BandConfig::Default => Band::default_for(spectral),
            BandConfig::Everything => Band::everything(),
            BandConfig::Custom { lo, hi } => Band { lo, hi },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TbPolicy {
    #[default]
    Fixed,
    Doubling,
}

fn default_tb() -> f64 {
    16.0
}
fn default_tb_cap() -> f64 {
    256.0
}
fn default_group_times() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    #[serde(default = "default_tb")]
    pub t_b: f64,
    #[serde(default)]
    pub policy: TbPolicy,
    #[serde(default = "default_tb_cap")]
    pub cap: f64,
    /// Build `B_h` from `K = 0` instead of the grid remainder.
    #[serde(default)]
    pub zero_remainder: bool,
    #[serde(default = "default_group_times")]
    pub group_times: Vec<f64>,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig { t_b: default_tb(), policy: TbPolicy::Fixed, cap: default_tb_cap(), zero_remainder: false, group_times: default_group_times() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// Eigenbasis for autocorrelations, Chebyshev for smoothing integrals.
    #[default]
    Auto,
    Chebyshev,
    Eigenbasis,
}

fn default_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    #[serde(default)]
    pub kernel: KernelChoice,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig { kernel: KernelChoice::Auto, tolerance: default_tolerance() }
    }
}

fn default_width() -> f64 {
    std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    /// `exp(-(x - x0)^2 / (2 width^2) + i k x)`; radially `r exp(-r^2 / (2 width^2))`.
    Gaussian {
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        momentum: f64,
    },
    Eigenvector { index: usize },
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig::Gaussian { width: default_width(), center: 0.0, momentum: 0.0 }
    }
}

fn default_t_lo() -> f64 {
    10.0
}
fn default_low_band_top() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "default_t_lo")]
    pub t_lo: f64,
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Defaults to 0.05 without a potential and 0.1 with one.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "default_low_band_top")]
    pub low_band_top: f64,
    #[serde(default = "yes")]
    pub split: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { t_lo: default_t_lo(), t_max: None, tolerance: None, low_band_top: default_low_band_top(), split: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KatoWeight {
    /// `|[V, iA] - cV|^{1/2}`
    #[default]
    KPotential,
    /// `|K_mat|^{1/2}` including the kinetic grid remainder.
    KMat,
    InverseRadius,
    /// `<x>^{-1}`
    Japanese,
}

fn default_samples() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothnessConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub weight: KatoWeight,
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Also run an eigenvector through the local-decay check.
    #[serde(default)]
    pub control: bool,
}

impl Default for SmoothnessConfig {
    fn default() -> Self {
        SmoothnessConfig { samples: default_samples(), weight: KatoWeight::KPotential, t_max: None, control: false }
    }
}

fn default_c() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub expected: Expected,
    pub seed: u64,
    pub propositions: Vec<Check>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub s: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub band: BandConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub smoothness: SmoothnessConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version);
        }
        if self.s != 0.0 && self.s != 0.5 {
            bail!("s must be 0 or 0.5, got {}", self.s);
        }
        if self.propositions.is_empty() {
            bail!("propositions must not be empty");
        }
        if !(self.grid.radius > 0.0) {
            bail!("grid.radius must be positive");
        }
        if self.smoothness.samples == 0 {
            bail!("smoothness.samples must be at least 1");
        }
        if self.propositions.contains(&Check::Morawetz) && self.grid.geometry == Geometry::Line1d {
            bail!("MORAWETZ is only defined for the radial three-dimensional geometry");
        }
        if let BandConfig::Custom { lo, hi } = self.band {
            if !(lo <= hi) {
                bail!("band.lo must not exceed band.hi");
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        self.potential.spec(self.grid.geometry)
    }

    pub fn decay_tolerance(&self) -> f64 {
        use decaylab_core::decay::{CLOSED_FORM_TOLERANCE, POTENTIAL_TOLERANCE};
        self.decay.tolerance.unwrap_or(match self.potential {
            PotentialConfig::Zero => CLOSED_FORM_TOLERANCE,
            _ => POTENTIAL_TOLERANCE,
        })
    }
}
