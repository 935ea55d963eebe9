//! Monte Carlo ensembles of SiV emitters and the fits that calibrate them.
//!
//! Random inputs are drawn once per ensemble ([`PreDepositionDraws`],
//! [`PostDepositionDraws`]) and then pushed through the physical model for any
//! parameter value. Calibration therefore compares parameter values on common
//! random numbers, and the ensemble mean is monotone in the fitted parameter.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{self, LayerStack, StrainField};
use crate::model::{self, DefectOrientation, SivParameters};
use crate::rng::{Domain, StreamFactory};
use crate::roots;
use crate::stats::{self, Binning, Summary};
use crate::tensor::{Frame, StrainTensor};

/// Rejection attempts before a depth draw is declared impossible.
const MAX_DEPTH_ATTEMPTS: usize = 100;
/// Fixed reduction chunk; partial sums are combined in chunk order.
const CHUNK: usize = 8192;
/// Allowed gap between a calibrated ensemble mean and its target.
pub const CALIBRATION_TOLERANCE_GHZ: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingFrame {
    #[default]
    Defect,
    Crystal,
}

/// Zero-mean i.i.d. Gaussian strain on each of the six tensor components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicStrainModel {
    pub sigma: f64,
    #[serde(default)]
    pub frame: SamplingFrame,
}

impl IntrinsicStrainModel {
    pub fn new(sigma: f64) -> Self {
        Self { sigma, frame: SamplingFrame::Defect }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameters(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionDistribution {
    pub aperture_x_nm: f64,
    pub aperture_y_nm: f64,
    pub depth_mean_nm: f64,
    pub depth_straggle_nm: f64,
}

impl Default for PositionDistribution {
    fn default() -> Self {
        Self { aperture_x_nm: 60.0, aperture_y_nm: 60.0, depth_mean_nm: 35.0, depth_straggle_nm: 6.0 }
    }
}

impl PositionDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = self.aperture_x_nm > 0.0
            && self.aperture_y_nm > 0.0
            && self.depth_mean_nm > 0.0
            && self.depth_straggle_nm >= 0.0
            && [self.aperture_x_nm, self.aperture_y_nm, self.depth_mean_nm, self.depth_straggle_nm]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!("invalid position distribution {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Position {
    pub x_nm: f64,
    pub y_nm: f64,
    pub depth_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmitterSample {
    /// Absent for ensembles without a spatial model.
    pub position: Option<Position>,
    pub orientation_id: u8,
    /// Crystal frame.
    pub strain: StrainTensor,
    pub gss_ghz: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub samples: Vec<EmitterSample>,
    pub summary: Summary,
}

impl EnsembleResult {
    fn from_samples(samples: Vec<EmitterSample>, binning: Binning) -> Result<Self> {
        let gss: Vec<f64> = samples.iter().map(|s| s.gss_ghz).collect();
        let summary = stats::summarize_with(&gss, binning)?;
        Ok(Self { samples, summary })
    }

    pub fn gss(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gss_ghz).collect()
    }

    /// Median Frobenius norm of the per-emitter strain tensors.
    pub fn median_strain_magnitude(&self) -> f64 {
        let m: Vec<f64> = self.samples.iter().map(|s| s.strain.magnitude()).collect();
        stats::Ecdf::new(&m).map(|e| e.quantile(0.5)).unwrap_or(f64::NAN)
    }
}

fn orientation(id: u8) -> DefectOrientation {
    DefectOrientation::from_id(id).expect("orientation ids are drawn from 0..4")
}

fn normals6<R: Rng>(rng: &mut R) -> [f64; 6] {
    std::array::from_fn(|_| StandardNormal.sample(rng))
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::EmptyRequest("ensemble size must be at least 1"))
    } else {
        Ok(())
    }
}

/// Order-stable parallel mean of `f(i)` over `0..n`.
fn chunked_mean<F>(n: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let partials = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc += f(i)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(partials.iter().sum::<f64>() / n as f64)
}

/// Random inputs of a pre-deposition ensemble.
pub struct PreDepositionDraws {
    orientation: Vec<u8>,
    normals: Vec<[f64; 6]>,
}

impl PreDepositionDraws {
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        check_count(n)?;
        let streams = StreamFactory::new(seed, Domain::PreDeposition);
        let (orientation, normals) = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.stream(i);
                let o = rng.random_range(0..DefectOrientation::COUNT as u8);
                (o, normals6(&mut rng))
            })
            .unzip();
        Ok(Self { orientation, normals })
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    fn sample(&self, i: usize, model: &IntrinsicStrainModel, params: &SivParameters) -> Result<EmitterSample> {
        let o = orientation(self.orientation[i]);
        let comps = self.normals[i].map(|z| model.sigma * z);
        let (crystal, defect) = match model.frame {
            SamplingFrame::Defect => {
                let d = StrainTensor::new(comps, Frame::Defect)?;
                (model::crystal_frame_strain(&d, &o)?, d)
            }
            SamplingFrame::Crystal => {
                let c = StrainTensor::new(comps, Frame::Crystal)?;
                (c, model::defect_frame_strain(&c, &o)?)
            }
        };
        let gss = model::splitting_raw(&model::eg_couplings_raw(&defect.components(), params), params.lambda_so_ghz);
        Ok(EmitterSample { position: None, orientation_id: o.id(), strain: crystal, gss_ghz: gss })
    }

    pub fn realize(
        &self,
        model: &IntrinsicStrainModel,
        params: &SivParameters,
        binning: Binning,
    ) -> Result<EnsembleResult> {
        model.validate()?;
        params.validate()?;
        let samples =
            (0..self.len()).into_par_iter().map(|i| self.sample(i, model, params)).collect::<Result<Vec<_>>>()?;
        EnsembleResult::from_samples(samples, binning)
    }

    pub fn mean_gss(&self, model: &IntrinsicStrainModel, params: &SivParameters) -> Result<f64> {
        model.validate()?;
        params.validate()?;
        chunked_mean(self.len(), |i| Ok(self.sample(i, model, params)?.gss_ghz))
    }
}

pub fn sample_pre_deposition(
    n: usize,
    model: &IntrinsicStrainModel,
    params: &SivParameters,
    seed: u64,
) -> Result<EnsembleResult> {
    PreDepositionDraws::generate(n, seed)?.realize(model, params, Binning::default())
}

/// Random inputs of a post-deposition ensemble.
pub struct PostDepositionDraws {
    positions: Vec<Position>,
    orientation: Vec<u8>,
    normals: Vec<[f64; 6]>,
}

impl PostDepositionDraws {
    pub fn generate(n: usize, pos: &PositionDistribution, substrate_depth_nm: f64, seed: u64) -> Result<Self> {
        check_count(n)?;
        pos.validate()?;
        let streams = StreamFactory::new(seed, Domain::PostDeposition);
        let drawn = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.stream(i);
                let o = rng.random_range(0..DefectOrientation::COUNT as u8);
                let x_nm = (rng.random::<f64>() - 0.5) * pos.aperture_x_nm;
                let y_nm = (rng.random::<f64>() - 0.5) * pos.aperture_y_nm;
                let mut depth = None;
                for _ in 0..MAX_DEPTH_ATTEMPTS {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let d = pos.depth_mean_nm + pos.depth_straggle_nm * z;
                    if (0.0..=substrate_depth_nm).contains(&d) {
                        depth = Some(d);
                        break;
                    }
                }
                let depth_nm = depth.ok_or_else(|| {
                    Error::DegenerateGeometry(format!(
                        "no implantation depth inside the {substrate_depth_nm} nm substrate after {MAX_DEPTH_ATTEMPTS} draws"
                    ))
                })?;
                Ok((Position { x_nm, y_nm, depth_nm }, o, normals6(&mut rng)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut positions = Vec::with_capacity(n);
        let mut orientation = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for (p, o, z) in drawn {
            positions.push(p);
            orientation.push(o);
            normals.push(z);
        }
        Ok(Self { positions, orientation, normals })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn sample(
        &self,
        i: usize,
        field: &StrainField,
        params: &SivParameters,
        intrinsic: Option<&IntrinsicStrainModel>,
    ) -> Result<EmitterSample> {
        let o = orientation(self.orientation[i]);
        let p = self.positions[i];
        let beam = mechanics::strain_at(field, p.depth_nm)?;
        let mut crystal = mechanics::beam_to_crystal(&beam)?;
        let mut defect = model::defect_frame_strain(&crystal, &o)?;
        if let Some(m) = intrinsic {
            let comps = self.normals[i].map(|z| m.sigma * z);
            match m.frame {
                SamplingFrame::Defect => {
                    defect = defect.try_add(&StrainTensor::new(comps, Frame::Defect)?)?;
                    crystal = model::crystal_frame_strain(&defect, &o)?;
                }
                SamplingFrame::Crystal => {
                    crystal = crystal.try_add(&StrainTensor::new(comps, Frame::Crystal)?)?;
                    defect = model::defect_frame_strain(&crystal, &o)?;
                }
            }
        }
        let gss = model::splitting_raw(&model::eg_couplings_raw(&defect.components(), params), params.lambda_so_ghz);
        Ok(EmitterSample { position: Some(p), orientation_id: o.id(), strain: crystal, gss_ghz: gss })
    }

    pub fn realize(
        &self,
        field: &StrainField,
        params: &SivParameters,
        intrinsic: Option<&IntrinsicStrainModel>,
        binning: Binning,
    ) -> Result<EnsembleResult> {
        params.validate()?;
        if let Some(m) = intrinsic {
            m.validate()?;
        }
        let samples = (0..self.len())
            .into_par_iter()
            .map(|i| self.sample(i, field, params, intrinsic))
            .collect::<Result<Vec<_>>>()?;
        EnsembleResult::from_samples(samples, binning)
    }

    pub fn mean_gss(
        &self,
        field: &StrainField,
        params: &SivParameters,
        intrinsic: Option<&IntrinsicStrainModel>,
    ) -> Result<f64> {
        params.validate()?;
        if let Some(m) = intrinsic {
            m.validate()?;
        }
        chunked_mean(self.len(), |i| Ok(self.sample(i, field, params, intrinsic)?.gss_ghz))
    }
}

pub fn sample_post_deposition(
    n: usize,
    pos: &PositionDistribution,
    field: &StrainField,
    params: &SivParameters,
    intrinsic: Option<&IntrinsicStrainModel>,
    seed: u64,
) -> Result<EnsembleResult> {
    PostDepositionDraws::generate(n, pos, field.substrate_depth_nm, seed)?.realize(
        field,
        params,
        intrinsic,
        Binning::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub value: f64,
    pub achieved_mean_ghz: f64,
}

fn check_target(target_mean_ghz: f64, params: &SivParameters) -> Result<()> {
    params.validate()?;
    if !target_mean_ghz.is_finite() || target_mean_ghz < params.lambda_so_ghz {
        return Err(Error::Infeasible(format!(
            "target mean {target_mean_ghz} GHz is below the unstrained splitting {} GHz",
            params.lambda_so_ghz
        )));
    }
    Ok(())
}

/// Bisection on a parameter `x ≥ 0` for which `mean(x)` is nondecreasing.
fn fit_nonnegative<F>(target: f64, initial_hi: f64, mean: F) -> Result<CalibrationResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let at_zero = mean(0.0)?;
    if at_zero > target {
        return Err(Error::Infeasible(format!("target {target} GHz below the zero-parameter mean {at_zero} GHz")));
    }
    if at_zero == target {
        return Ok(CalibrationResult { value: 0.0, achieved_mean_ghz: at_zero });
    }
    let mut hi = initial_hi;
    let mut doublings = 0;
    while mean(hi)? < target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Infeasible(format!("target {target} GHz not reachable")));
        }
    }
    let value = roots::bisect_increasing(|x| Ok(mean(x)? - target), 0.0, hi, 0.0, 200)?;
    let achieved = mean(value)?;
    if (achieved - target).abs() > CALIBRATION_TOLERANCE_GHZ {
        return Err(Error::Infeasible(format!("calibration stalled at mean {achieved} GHz for target {target} GHz")));
    }
    Ok(CalibrationResult { value, achieved_mean_ghz: achieved })
}

/// Fits σ of the intrinsic strain model so the pre-deposition mean Δ_GSS hits the target.
pub fn calibrate_sigma(
    target_mean_ghz: f64,
    n: usize,
    seed: u64,
    params: &SivParameters,
    frame: SamplingFrame,
) -> Result<CalibrationResult> {
    check_target(target_mean_ghz, params)?;
    let draws = PreDepositionDraws::generate(n, seed)?;
    calibrate_sigma_on(&draws, target_mean_ghz, params, frame)
}

pub fn calibrate_sigma_on(
    draws: &PreDepositionDraws,
    target_mean_ghz: f64,
    params: &SivParameters,
    frame: SamplingFrame,
) -> Result<CalibrationResult> {
    check_target(target_mean_ghz, params)?;
    fit_nonnegative(target_mean_ghz, 1e-6, |sigma| draws.mean_gss(&IntrinsicStrainModel { sigma, frame }, params))
}

/// Fits the equivalent film stress (MPa, tensile) so the post-deposition mean Δ_GSS hits the target.
pub fn calibrate_film_stress(
    target_mean_ghz: f64,
    stack: &LayerStack,
    pos: &PositionDistribution,
    params: &SivParameters,
    intrinsic: Option<&IntrinsicStrainModel>,
    n: usize,
    seed: u64,
) -> Result<CalibrationResult> {
    check_target(target_mean_ghz, params)?;
    stack.validate()?;
    let draws = PostDepositionDraws::generate(n, pos, stack.substrate.cross_section_nm.depth_nm(), seed)?;
    calibrate_film_stress_on(&draws, target_mean_ghz, stack, params, intrinsic)
}

pub fn calibrate_film_stress_on(
    draws: &PostDepositionDraws,
    target_mean_ghz: f64,
    stack: &LayerStack,
    params: &SivParameters,
    intrinsic: Option<&IntrinsicStrainModel>,
) -> Result<CalibrationResult> {
    check_target(target_mean_ghz, params)?;
    fit_nonnegative(target_mean_ghz, 100.0, |stress| {
        let field = mechanics::solve_beam_state(&stack.with_film_stress(stress))?;
        draws.mean_gss(&field, params, intrinsic).map_err(|e| match e {
            Error::InvalidStrain(m) => {
                Error::Infeasible(format!("film stress {stress} MPa leaves small-strain regime: {m}"))
            }
            other => other,
        })
    })
}
