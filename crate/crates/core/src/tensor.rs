//! Symmetric small-strain tensors tagged with the coordinate frame they are
//! expressed in.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible strain component; beyond this linear elasticity is meaningless.
pub const MAX_STRAIN_COMPONENT: f64 = 0.1;

/// Tolerance on `RᵀR = I` and `det R = 1` accepted by [`rotate_strain`].
pub const ROTATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Cubic crystal axes `[100]`, `[010]`, `[001]`.
    Crystal,
    /// Cantilever frame: y along the beam, x in-plane across it, z up.
    Beam,
    /// Defect frame: Z along the `<111>` symmetry axis.
    Defect,
}

/// Symmetric strain stored as `(xx, yy, zz, xy, yz, zx)` tensor components
/// (not engineering shear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainTensor {
    components: [f64; 6],
    frame: Frame,
}

impl StrainTensor {
    pub fn new(components: [f64; 6], frame: Frame) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::InvalidStrain(format!("component {i} is not finite")));
            }
            if c.abs() >= MAX_STRAIN_COMPONENT {
                return Err(Error::InvalidStrain(format!("component {i} = {c} outside small-strain regime")));
            }
        }
        Ok(Self { components, frame })
    }

    pub fn zero(frame: Frame) -> Self {
        Self { components: [0.0; 6], frame }
    }

    pub fn hydrostatic(s: f64, frame: Frame) -> Result<Self> {
        Self::new([s, s, s, 0.0, 0.0, 0.0], frame)
    }

    /// Builds a tensor from a matrix, averaging the off-diagonal pairs.
    pub fn from_matrix(m: &Matrix3<f64>, frame: Frame) -> Result<Self> {
        Self::new(
            [
                m[(0, 0)],
                m[(1, 1)],
                m[(2, 2)],
                0.5 * (m[(0, 1)] + m[(1, 0)]),
                0.5 * (m[(1, 2)] + m[(2, 1)]),
                0.5 * (m[(2, 0)] + m[(0, 2)]),
            ],
            frame,
        )
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [xx, yy, zz, xy, yz, zx] = self.components;
        Matrix3::new(xx, xy, zx, xy, yy, yz, zx, yz, zz)
    }

    pub fn components(&self) -> [f64; 6] {
        self.components
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn xx(&self) -> f64 {
        self.components[0]
    }
    pub fn yy(&self) -> f64 {
        self.components[1]
    }
    pub fn zz(&self) -> f64 {
        self.components[2]
    }
    pub fn xy(&self) -> f64 {
        self.components[3]
    }
    pub fn yz(&self) -> f64 {
        self.components[4]
    }
    pub fn zx(&self) -> f64 {
        self.components[5]
    }

    pub fn trace(&self) -> f64 {
        self.components[0] + self.components[1] + self.components[2]
    }

    /// Frobenius norm `sqrt(ε:ε)`; rotation invariant.
    pub fn magnitude(&self) -> f64 {
        let [xx, yy, zz, xy, yz, zx] = self.components;
        (xx * xx + yy * yy + zz * zz + 2.0 * (xy * xy + yz * yz + zx * zx)).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.components.map(|c| c * k), self.frame)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.frame != other.frame {
            return Err(Error::FrameMismatch { expected: self.frame, found: other.frame });
        }
        let mut c = self.components;
        for (a, b) in c.iter_mut().zip(other.components) {
            *a += b;
        }
        Self::new(c, self.frame)
    }

    pub(crate) fn expect_frame(&self, expected: Frame) -> Result<()> {
        if self.frame == expected {
            Ok(())
        } else {
            Err(Error::FrameMismatch { expected, found: self.frame })
        }
    }
}

/// Checks that `rot` is a proper rotation within [`ROTATION_TOLERANCE`].
pub fn check_rotation(rot: &Matrix3<f64>) -> Result<()> {
    if rot.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidRotation("non-finite entry".into()));
    }
    let defect = (rot.transpose() * rot - Matrix3::identity()).abs().max();
    if defect > ROTATION_TOLERANCE {
        return Err(Error::InvalidRotation(format!("not orthonormal (|RᵀR - I| = {defect:e})")));
    }
    let det = rot.determinant();
    if (det - 1.0).abs() > ROTATION_TOLERANCE {
        return Err(Error::InvalidRotation(format!("determinant {det} is not +1")));
    }
    Ok(())
}

/// Returns `R ε Rᵀ` tagged with `target`.
pub fn rotate_strain(eps: &StrainTensor, rot: &Matrix3<f64>, target: Frame) -> Result<StrainTensor> {
    check_rotation(rot)?;
    Ok(rotate_unchecked(eps, rot, target))
}

/// Rotation for matrices already known to be proper (fixed frame tables).
pub(crate) fn rotate_unchecked(eps: &StrainTensor, rot: &Matrix3<f64>, target: Frame) -> StrainTensor {
    let m = rot * eps.to_matrix() * rot.transpose();
    StrainTensor {
        components: [
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
            0.5 * (m[(2, 0)] + m[(0, 2)]),
        ],
        frame: target,
    }
}

/// Rotation by `angle` (radians) about the z axis.
pub fn rotation_about_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
