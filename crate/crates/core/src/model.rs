//! Strain response of the SiV ground-state manifold.
//!
//! The orbital doublet couples to strain through the two E_g combinations
//!
//! ```text
//! α = d (ε_xx − ε_yy) + f ε_zx
//! β = −2 d ε_xy + f ε_yz
//! ```
//!
//! evaluated in the defect frame, and the splitting between the two lower
//! orbital branches is `Δ = sqrt(λ_SO² + 4 (α² + β²))`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, Frame, StrainTensor};

/// Spin-orbit splitting of an unstrained SiV ground state.
pub const DEFAULT_LAMBDA_SO_GHZ: f64 = 46.0;
/// Ground-state E_g susceptibility `d`, 1.3 PHz/strain (Meesala et al., PRB 97, 205444, 2018).
pub const DEFAULT_D_GHZ_PER_STRAIN: f64 = 1.3e6;
/// Ground-state E_g susceptibility `f`, −1.7 PHz/strain (same source).
pub const DEFAULT_F_GHZ_PER_STRAIN: f64 = -1.7e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SivParameters {
    pub lambda_so_ghz: f64,
    pub d_ghz_per_strain: f64,
    pub f_ghz_per_strain: f64,
}

impl Default for SivParameters {
    fn default() -> Self {
        Self {
            lambda_so_ghz: DEFAULT_LAMBDA_SO_GHZ,
            d_ghz_per_strain: DEFAULT_D_GHZ_PER_STRAIN,
            f_ghz_per_strain: DEFAULT_F_GHZ_PER_STRAIN,
        }
    }
}

impl SivParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_so_ghz.is_finite() && self.lambda_so_ghz > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "lambda_so_ghz must be positive, got {}",
                self.lambda_so_ghz
            )));
        }
        if !self.d_ghz_per_strain.is_finite() || !self.f_ghz_per_strain.is_finite() {
            return Err(Error::InvalidParameters("strain susceptibilities must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgCouplings {
    pub alpha: f64,
    pub beta: f64,
}

/// One of the four `<111>` symmetry axes a SiV can align with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectOrientation {
    id: u8,
    axis: Vector3<f64>,
    rotation: Matrix3<f64>,
}

/// Axis and X direction of each orientation, in crystal coordinates.
///
/// Orientations 1..3 are the images of orientation 0 under the two-fold
/// rotations about z, y and x, so their frames are related by symmetries of
/// the cubic lattice.
const ORIENTATION_TABLE: [([f64; 3], [f64; 3]); 4] = [
    ([1.0, 1.0, 1.0], [1.0, 1.0, -2.0]),
    ([-1.0, -1.0, 1.0], [-1.0, -1.0, -2.0]),
    ([-1.0, 1.0, -1.0], [-1.0, 1.0, 2.0]),
    ([1.0, -1.0, -1.0], [1.0, -1.0, 2.0]),
];

impl DefectOrientation {
    pub const COUNT: usize = 4;

    pub fn from_id(id: u8) -> Result<Self> {
        let (axis, x) = ORIENTATION_TABLE
            .get(id as usize)
            .ok_or_else(|| Error::InvalidParameters(format!("orientation id {id} not in 0..4")))?;
        let z = Vector3::from(*axis).normalize();
        let x = Vector3::from(*x).normalize();
        let y = z.cross(&x);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Ok(Self { id, axis: z, rotation })
    }

    pub fn all() -> [Self; 4] {
        [0, 1, 2, 3].map(|i| Self::from_id(i).expect("table index"))
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    /// Crystal-to-defect rotation; rows are the defect X, Y, Z axes.
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }
}

pub fn defect_frame_strain(eps_crystal: &StrainTensor, orientation: &DefectOrientation) -> Result<StrainTensor> {
    eps_crystal.expect_frame(Frame::Crystal)?;
    Ok(tensor::rotate_unchecked(eps_crystal, orientation.rotation(), Frame::Defect))
}

/// Inverse of [`defect_frame_strain`].
pub fn crystal_frame_strain(eps_defect: &StrainTensor, orientation: &DefectOrientation) -> Result<StrainTensor> {
    eps_defect.expect_frame(Frame::Defect)?;
    Ok(tensor::rotate_unchecked(eps_defect, &orientation.rotation().transpose(), Frame::Crystal))
}

pub fn eg_couplings(eps_defect: &StrainTensor, params: &SivParameters) -> Result<EgCouplings> {
    eps_defect.expect_frame(Frame::Defect)?;
    Ok(eg_couplings_raw(&eps_defect.components(), params))
}

#[inline]
pub(crate) fn eg_couplings_raw(c: &[f64; 6], params: &SivParameters) -> EgCouplings {
    let [xx, yy, _zz, xy, yz, zx] = *c;
    let d = params.d_ghz_per_strain;
    let f = params.f_ghz_per_strain;
    EgCouplings { alpha: d * (xx - yy) + f * zx, beta: -2.0 * d * xy + f * yz }
}

pub fn ground_state_splitting(c: &EgCouplings, params: &SivParameters) -> Result<f64> {
    params.validate()?;
    Ok(splitting_raw(c, params.lambda_so_ghz))
}

#[inline]
pub(crate) fn splitting_raw(c: &EgCouplings, lambda_so: f64) -> f64 {
    (lambda_so * lambda_so + 4.0 * (c.alpha * c.alpha + c.beta * c.beta)).sqrt()
}

/// Convenience composition: crystal-frame strain to Δ_GSS for one orientation.
pub fn splitting_for(
    eps_crystal: &StrainTensor,
    orientation: &DefectOrientation,
    params: &SivParameters,
) -> Result<f64> {
    let d = defect_frame_strain(eps_crystal, orientation)?;
    ground_state_splitting(&eg_couplings(&d, params)?, params)
}
