//! JSON run configuration. Unknown keys are rejected and every quantity
//! carries its unit in the key name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{CrossSection, Layer, LayerStack, Substrate};
use crate::model::SivParameters;
use crate::population::{PositionDistribution, SamplingFrame};
use crate::spectra::PeakParams;
use crate::thermal::ThermalReference;

pub const SCHEMA_VERSION: u32 = 1;

/// Nanobeam cross-section used by the shipped scenario: an isosceles
/// triangle 260 nm wide at the coated face and 107 nm deep.
pub fn default_stack() -> LayerStack {
    LayerStack {
        substrate: Substrate::diamond(CrossSection::triangle(260.0, 107.0).expect("valid triangle")),
        film: Layer::silicon_nitride(60.0, 700.0),
        biaxiality_factor: 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationConfig {
    pub position: PositionDistribution,
    /// Frame in which the intrinsic strain components are drawn.
    pub intrinsic_frame: SamplingFrame,
    /// Add the calibrated intrinsic strain to the post-deposition ensemble.
    pub post_includes_intrinsic: bool,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            position: PositionDistribution::default(),
            intrinsic_frame: SamplingFrame::Defect,
            post_includes_intrinsic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarlo {
    pub n: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self { n: 1_000_000, seed: 20_190_601 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationTargets {
    pub pre_mean_ghz: f64,
    pub post_mean_ghz: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self { pre_mean_ghz: 119.0, post_mean_ghz: 608.0 }
    }
}

/// Grids of the plot-ready report tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportGrid {
    pub gss_bin_ghz: f64,
    pub gss_max_ghz: f64,
    pub top_gss_min_ghz: f64,
    pub top_gss_max_ghz: f64,
    pub top_gss_step_ghz: f64,
    pub temp_min_k: f64,
    pub temp_max_k: f64,
    pub temp_step_k: f64,
}

impl Default for ReportGrid {
    fn default() -> Self {
        Self {
            gss_bin_ghz: 10.0,
            gss_max_ghz: 3000.0,
            top_gss_min_ghz: 46.0,
            top_gss_max_ghz: 2000.0,
            top_gss_step_ghz: 2.0,
            temp_min_k: 0.1,
            temp_max_k: 4.0,
            temp_step_k: 0.05,
        }
    }
}

fn linspace_steps(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(Error::Config(format!("invalid grid {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(Error::Config(format!("grid {lo}..{hi} step {step} is too fine")));
    }
    // Rounded to 1e-9 so decimal steps print cleanly.
    Ok((0..=n).map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9).collect())
}

impl ReportGrid {
    pub fn gss_edges(&self) -> Result<Vec<f64>> {
        linspace_steps(0.0, self.gss_max_ghz, self.gss_bin_ghz)
    }

    pub fn top_gss(&self) -> Result<Vec<f64>> {
        linspace_steps(self.top_gss_min_ghz, self.top_gss_max_ghz, self.top_gss_step_ghz)
    }

    pub fn temps(&self) -> Result<Vec<f64>> {
        linspace_steps(self.temp_min_k, self.temp_max_k, self.temp_step_k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub siv: SivParameters,
    #[serde(default = "default_stack")]
    pub mechanics: LayerStack,
    #[serde(default)]
    pub population: PopulationConfig,
    #[serde(default)]
    pub thermal: ThermalReference,
    #[serde(default)]
    pub spectra: PeakParams,
    #[serde(default)]
    pub monte_carlo: MonteCarlo,
    #[serde(default)]
    pub calibration: CalibrationTargets,
    #[serde(default)]
    pub report: ReportGrid,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            siv: SivParameters::default(),
            mechanics: default_stack(),
            population: PopulationConfig::default(),
            thermal: ThermalReference::default(),
            spectra: PeakParams::default(),
            monte_carlo: MonteCarlo::default(),
            calibration: CalibrationTargets::default(),
            report: ReportGrid::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.siv.validate()?;
        self.mechanics.validate()?;
        self.population.position.validate()?;
        self.thermal.validate()?;
        self.spectra.validate()?;
        if self.monte_carlo.n == 0 {
            return Err(Error::Config("monte_carlo.n must be positive".into()));
        }
        self.report.gss_edges()?;
        self.report.top_gss()?;
        self.report.temps()?;
        Ok(())
    }
}
