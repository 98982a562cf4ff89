//! JSON run descriptions. Lengths are in μm (crystal in mm), angles in
//! degrees; everything is converted to SI on build.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QoctError, Result};
use crate::interferometer::{delay_grid, BeamSplitter};
use crate::materials::{by_name, IndexModel};
use crate::sample::{Interface, Layer, LayeredSample};
use crate::spdc::{gaussian_spectrum, Spectrum, SpectrumGrid, TwinPhotonSource, SPEED_OF_LIGHT};

fn default_material() -> String {
    "bbo".into()
}

fn default_grid_points() -> usize {
    4096
}

fn default_min_lobes() -> usize {
    3
}

fn default_reflectance() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdcSourceConfig {
    pub pump_wavelength_nm: f64,
    pub crystal_length_mm: f64,
    #[serde(default = "default_material")]
    pub material: String,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_min_lobes")]
    pub min_lobes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSourceConfig {
    pub center_wavelength_nm: f64,
    pub fwhm_nm: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceConfig {
    Spdc(SpdcSourceConfig),
    Gaussian(GaussianSourceConfig),
}

impl Default for SourceConfig {
    /// 1.5 mm BBO pumped at 400 nm.
    fn default() -> Self {
        SourceConfig::Spdc(SpdcSourceConfig {
            pump_wavelength_nm: 400.0,
            crystal_length_mm: 1.5,
            material: default_material(),
            grid_points: default_grid_points(),
            min_lobes: default_min_lobes(),
        })
    }
}

impl SourceConfig {
    pub fn grid_points(&self) -> usize {
        match self {
            SourceConfig::Spdc(s) => s.grid_points,
            SourceConfig::Gaussian(g) => g.grid_points,
        }
    }

    pub fn set_grid_points(&mut self, points: usize) {
        match self {
            SourceConfig::Spdc(s) => s.grid_points = points,
            SourceConfig::Gaussian(g) => g.grid_points = points,
        }
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        match self {
            SourceConfig::Spdc(s) => {
                let source = TwinPhotonSource::phase_matched(
                    s.pump_wavelength_nm * 1e-9,
                    s.crystal_length_mm * 1e-3,
                    by_name(&s.material)?,
                )?;
                source.spectrum(&SpectrumGrid {
                    points: s.grid_points,
                    min_lobes: s.min_lobes,
                    half_width: None,
                })
            }
            SourceConfig::Gaussian(g) => {
                if !(g.center_wavelength_nm > 0.0 && g.fwhm_nm > 0.0) {
                    return Err(QoctError::Argument(
                        "Gaussian source needs positive wavelength and FWHM".into(),
                    ));
                }
                let lambda = g.center_wavelength_nm * 1e-9;
                let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda;
                let fwhm = omega0 * g.fwhm_nm * 1e-9 / lambda;
                gaussian_spectrum(omega0, fwhm, g.grid_points, None)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialSpec {
    Named(String),
    Indices { n_o: f64, n_e: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub d_um: f64,
    #[serde(default)]
    pub alpha_deg: f64,
    pub material: MaterialSpec,
    /// Evaluate δ at the source centre frequency only.
    #[serde(default)]
    pub freeze_retardance: bool,
    /// Injected GVD, centred on the source frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gvd_fs2_per_mm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    /// `[re, im]`.
    pub r: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(default)]
    pub interfaces: Vec<InterfaceConfig>,
    #[serde(default)]
    pub layers: Vec<LayerConfig>,
}

/// fs²/mm → s²/m.
const FS2_PER_MM: f64 = 1e-27;

impl LayerConfig {
    pub fn build(&self, omega0: f64) -> Result<Layer> {
        let (ordinary, extraordinary) = match &self.material {
            MaterialSpec::Named(name) => {
                let m = by_name(name)?;
                (m.ordinary, m.extraordinary)
            }
            MaterialSpec::Indices { n_o, n_e } => {
                if !(*n_o > 1.0 && *n_e > 1.0 && *n_o < 3.0 && *n_e < 3.0) {
                    return Err(QoctError::Argument(format!(
                        "indices must lie in (1, 3), got n_o = {n_o}, n_e = {n_e}"
                    )));
                }
                (IndexModel::constant(*n_o), IndexModel::constant(*n_e))
            }
        };
        let mut layer = Layer::new(self.d_um * 1e-6, self.alpha_deg.to_radians(), ordinary, extraordinary)?;
        if self.freeze_retardance {
            layer = layer.with_frozen_retardance(omega0);
        }
        if let Some(gvd) = self.gvd_fs2_per_mm {
            layer = layer.with_gvd(gvd * FS2_PER_MM, omega0);
        }
        Ok(layer)
    }
}

impl SampleConfig {
    /// Resolves frequency-dependent options against the source centre ω₀.
    pub fn build(&self, omega0: f64) -> Result<LayeredSample> {
        let interfaces = self
            .interfaces
            .iter()
            .map(|i| Interface::new(Complex64::new(i.r[0], i.r[1])))
            .collect::<Result<Vec<_>>>()?;
        let layers = self
            .layers
            .iter()
            .map(|l| l.build(omega0))
            .collect::<Result<Vec<_>>>()?;
        LayeredSample::new(interfaces, layers)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub start_um: f64,
    pub stop_um: f64,
    pub points: usize,
}

impl DelayConfig {
    /// Delays in metres.
    pub fn grid(&self) -> Result<Vec<f64>> {
        Ok(delay_grid(self.start_um, self.stop_um, self.points)?
            .into_iter()
            .map(|x| x * 1e-6)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleRef {
    Inline(SampleConfig),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub source: SourceConfig,
    pub sample: SampleRef,
    pub delays: DelayConfig,
    #[serde(default = "default_reflectance")]
    pub beam_splitter_reflectance: f64,
    /// Seed recorded for randomized utilities; the simulation itself is
    /// deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn beam_splitter(&self) -> Result<BeamSplitter> {
        BeamSplitter::new(self.beam_splitter_reflectance)
    }

    /// The sample description, reading it from disk if referenced by path.
    /// Relative paths resolve against `base`.
    pub fn sample_config(&self, base: Option<&Path>) -> Result<SampleConfig> {
        match &self.sample {
            SampleRef::Inline(s) => Ok(s.clone()),
            SampleRef::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                read_json(&path)
            }
        }
    }
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| QoctError::Parse(format!("{what}: {e}")))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| QoctError::io(path, e))?;
    parse_json(&text, &path.display().to_string())
}
