//! Scenario files: one JSON document per scenario with a `kind`, the
//! `physics` parameters for that kind, and optional `run` parameters.

use std::path::Path;

use num_complex::Complex64;
use pilotwave::field::nonrel::{Channel, Gauss1D, GaussComponent, NonRelField};
use pilotwave::field::two_particle::{Pairing, TwoParticleField};
use pilotwave::guidance::IntegratorConfig;
use pilotwave::nonrel_lab::{MeasurementScenario, DEFAULT_OVERLAP_TOLERANCE};
use pilotwave::rel_lab::ScenarioWindow;
use pilotwave::{FourVector, ModeSpec, Normalization, RelField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub physics: Physics,
    #[serde(default, skip_serializing_if = "RunParams::is_empty")]
    pub run: RunParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "physics", rename_all = "snake_case")]
pub enum Physics {
    RelField(RelFieldSpec),
    NonrelField(NonRelSpec),
    Measurement(MeasurementSpec),
    Window(WindowSpec),
    TwoParticle(TwoParticleSpec),
}

impl Physics {
    pub fn kind(&self) -> &'static str {
        match self {
            Physics::RelField(_) => "rel_field",
            Physics::NonrelField(_) => "nonrel_field",
            Physics::Measurement(_) => "measurement",
            Physics::Window(_) => "window",
            Physics::TwoParticle(_) => "two_particle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationSpec {
    #[default]
    UnitCharge,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    /// Integer wave numbers, one per spatial dimension.
    pub k: Vec<i64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelFieldSpec {
    pub mass: f64,
    pub box_length: f64,
    #[serde(default = "one")]
    pub spatial_dim: usize,
    #[serde(default)]
    pub normalization: NormalizationSpec,
    pub modes: Vec<ModeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    #[serde(flatten)]
    pub field: RelFieldSpec,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussJson {
    pub center: f64,
    #[serde(default)]
    pub velocity: f64,
    pub width: f64,
}

impl From<GaussJson> for Gauss1D {
    fn from(g: GaussJson) -> Self {
        Gauss1D::new(g.center, g.velocity, g.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    /// One factor per configuration axis.
    pub factors: Vec<GaussJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonRelSpec {
    pub mass: f64,
    pub gaussians: Vec<GaussianJson>,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub system: GaussJson,
    pub pointer: GaussJson,
}

fn default_overlap() -> f64 {
    DEFAULT_OVERLAP_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub mass: f64,
    pub channels: Vec<ChannelJson>,
    pub final_time: f64,
    #[serde(default = "default_overlap")]
    pub overlap_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingSpec {
    Symmetrized,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoParticleSpec {
    pub mass: f64,
    pub box_length: f64,
    pub f: Vec<ModeJson>,
    pub g: Vec<ModeJson>,
    pub pairing: PairingSpec,
    /// Start events (t, x) of the two particles, both at s = 0.
    pub starts: [[f64; 2]; 2],
}

/// Run parameters; command-line flags override them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Number of time slices for field dumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<[f64; 2]>,
    /// Trajectory start points: (t, x) for relativistic kinds, configuration
    /// coordinates for nonrelativistic ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<Vec<f64>>>,
    /// Curve-parameter span of relativistic traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Exclusivity snapshot times for measurements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
    /// Trajectories compared in the effective-collapse check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse_n: Option<usize>,
}

impl RunParams {
    pub fn is_empty(&self) -> bool {
        *self == RunParams::default()
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if let Some(v) = self.rel_tolerance {
            cfg.rel_tolerance = v;
        }
        if let Some(v) = self.abs_tolerance {
            cfg.abs_tolerance = v;
        }
        if let Some(v) = self.crossing_tolerance {
            cfg.crossing_tolerance = v;
        }
        if let Some(v) = self.node_threshold {
            cfg.node_threshold = v;
        }
        if let Some(v) = self.max_steps {
            cfg.max_steps = v;
        }
        cfg
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("scenario parse error: {e}")))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            )));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialisation: fixed key order, shortest round-trip floats.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serialises")
    }

    pub fn pretty_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serialises");
        s.push('\n');
        s
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

fn modes(specs: &[ModeJson], dim: usize) -> Result<Vec<ModeSpec>, CliError> {
    specs
        .iter()
        .map(|m| {
            if m.k.len() != dim {
                return Err(CliError::Input(format!(
                    "mode has {} wave numbers, expected {dim}",
                    m.k.len()
                )));
            }
            let mut k = [0i64; 3];
            k[..dim].copy_from_slice(&m.k);
            Ok(ModeSpec::new(Complex64::new(m.re, m.im), k))
        })
        .collect()
}

impl RelFieldSpec {
    pub fn build(&self) -> Result<RelField, CliError> {
        let norm = match self.normalization {
            NormalizationSpec::UnitCharge => Normalization::UnitCharge,
            NormalizationSpec::Raw => Normalization::Raw,
        };
        Ok(RelField::new(
            self.mass,
            self.box_length,
            self.spatial_dim,
            &modes(&self.modes, self.spatial_dim)?,
            norm,
        )?)
    }

    pub fn from_modes(mass: f64, box_length: f64, specs: &[ModeSpec]) -> Self {
        Self {
            mass,
            box_length,
            spatial_dim: 1,
            normalization: NormalizationSpec::UnitCharge,
            modes: specs
                .iter()
                .map(|m| ModeJson {
                    re: m.amplitude.re,
                    im: m.amplitude.im,
                    k: vec![m.wave_numbers[0]],
                })
                .collect(),
        }
    }
}

impl WindowSpec {
    pub fn build(&self) -> Result<ScenarioWindow, CliError> {
        Ok(ScenarioWindow::new(self.field.build()?, self.t0, self.t1)?)
    }
}

impl NonRelSpec {
    pub fn build(&self) -> Result<NonRelField, CliError> {
        let comps = self
            .gaussians
            .iter()
            .map(|g| {
                GaussComponent::new(
                    Complex64::new(g.re, g.im),
                    g.factors.iter().map(|&f| f.into()).collect(),
                )
            })
            .collect();
        Ok(NonRelField::new(self.mass, comps)?)
    }
}

impl MeasurementSpec {
    pub fn build(&self) -> Result<MeasurementScenario, CliError> {
        let channels = self
            .channels
            .iter()
            .map(|c| Channel {
                coefficient: Complex64::new(c.re, c.im),
                system: c.system.into(),
                pointer: c.pointer.into(),
            })
            .collect();
        Ok(MeasurementScenario::with_overlap_tolerance(
            self.mass,
            channels,
            self.final_time,
            self.overlap_tolerance,
        )?)
    }
}

impl TwoParticleSpec {
    pub fn build(&self) -> Result<TwoParticleField, CliError> {
        let f = RelField::new(
            self.mass,
            self.box_length,
            1,
            &modes(&self.f, 1)?,
            Normalization::UnitCharge,
        )?;
        let g = RelField::new(
            self.mass,
            self.box_length,
            1,
            &modes(&self.g, 1)?,
            Normalization::UnitCharge,
        )?;
        let pairing = match self.pairing {
            PairingSpec::Symmetrized => Pairing::Symmetrized,
            PairingSpec::Product => Pairing::Product,
        };
        Ok(TwoParticleField::new(f, g, pairing)?)
    }

    pub fn start_events(&self) -> [FourVector; 2] {
        self.starts.map(|[t, x]| FourVector::tx(t, x))
    }
}
