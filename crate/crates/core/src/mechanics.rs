//! Thin-film stressor on a free-standing cantilever, treated as a composite
//! Euler–Bernoulli beam.
//!
//! The film is given a stress-free (misfit) strain `ε* = −σ_f (1 − ν_f) / E_f`,
//! i.e. its intrinsic biaxial stress divided by the biaxial modulus. The
//! composite section then takes the axial strain `ε(u) = e₀ + κ u` (u is depth
//! below the film/substrate interface) that makes the net axial force and
//! bending moment vanish. The substrate strain across the beam is taken as
//! `biaxiality_factor` times the axial strain, and the out-of-plane strain
//! follows from a traction-free top surface.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, Frame, StrainTensor};

pub const DIAMOND_YOUNGS_GPA: f64 = 1100.0;
pub const DIAMOND_POISSON: f64 = 0.07;
pub const SIN_YOUNGS_GPA: f64 = 250.0;
pub const SIN_POISSON: f64 = 0.25;

/// Film thickness above this fraction of the substrate depth triggers a warning.
const THIN_FILM_WARN_RATIO: f64 = 0.2;
const MAX_VERTICES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub thickness_nm: f64,
    pub youngs_modulus_gpa: f64,
    pub poisson_ratio: f64,
    /// Tensile positive.
    pub intrinsic_stress_mpa: f64,
}

impl Layer {
    pub fn silicon_nitride(thickness_nm: f64, intrinsic_stress_mpa: f64) -> Self {
        Self { thickness_nm, youngs_modulus_gpa: SIN_YOUNGS_GPA, poisson_ratio: SIN_POISSON, intrinsic_stress_mpa }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_nm.is_finite() && self.thickness_nm > 0.0) {
            return Err(Error::InvalidGeometry(format!("film thickness {} nm must be positive", self.thickness_nm)));
        }
        validate_elastic(self.youngs_modulus_gpa, self.poisson_ratio)?;
        if !self.intrinsic_stress_mpa.is_finite() {
            return Err(Error::InvalidParameters("film stress must be finite".into()));
        }
        Ok(())
    }

    /// Stress-free strain of the film when released from the substrate.
    pub fn misfit_strain(&self) -> f64 {
        -self.intrinsic_stress_mpa * 1e-3 * (1.0 - self.poisson_ratio) / self.youngs_modulus_gpa
    }
}

fn validate_elastic(e: f64, nu: f64) -> Result<()> {
    if !(e.is_finite() && e > 0.0) {
        return Err(Error::InvalidParameters(format!("Young's modulus {e} GPa must be positive")));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::InvalidParameters(format!("Poisson ratio {nu} outside [0, 0.5)")));
    }
    Ok(())
}

/// Substrate cross-section in the plane normal to the beam axis.
///
/// Vertices are `(lateral, height)` pairs in nm, counterclockwise. The film
/// sits on the horizontal edge at maximum height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct CrossSection {
    vertices: Vec<[f64; 2]>,
    top: f64,
    bottom: f64,
    surface_width: f64,
}

impl TryFrom<Vec<[f64; 2]>> for CrossSection {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CrossSection> for Vec<[f64; 2]> {
    fn from(c: CrossSection) -> Self {
        c.vertices
    }
}

impl CrossSection {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if n > MAX_VERTICES {
            return Err(Error::InvalidGeometry(format!("polygon has {n} vertices (max {MAX_VERTICES})")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite vertex coordinate".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidGeometry(format!("repeated vertex at index {i}")));
            }
        }
        let twice_area: f64 = (0..n)
            .map(|i| {
                let [y0, z0] = vertices[i];
                let [y1, z1] = vertices[(i + 1) % n];
                y0 * z1 - y1 * z0
            })
            .sum();
        if !(twice_area > 0.0) {
            return Err(Error::InvalidGeometry(
                "polygon must have positive area with counterclockwise vertex order".into(),
            ));
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidGeometry("polygon edges self-intersect".into()));
        }
        let top = vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
        let bottom = vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
        let surface_width = (0..n)
            .filter_map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                (a[1] == top && b[1] == top).then(|| (a[0] - b[0]).abs())
            })
            .fold(0.0, f64::max);
        if surface_width == 0.0 {
            return Err(Error::InvalidGeometry("no horizontal top edge to carry the film".into()));
        }
        Ok(Self { vertices, top, bottom, surface_width })
    }

    /// Inverted isosceles triangle: flat top of width `top_width_nm`, apex `depth_nm` below.
    pub fn triangle(top_width_nm: f64, depth_nm: f64) -> Result<Self> {
        let h = top_width_nm / 2.0;
        Self::new(vec![[-h, 0.0], [0.0, -depth_nm], [h, 0.0]])
    }

    pub fn rectangle(width_nm: f64, depth_nm: f64) -> Result<Self> {
        let h = width_nm / 2.0;
        Self::new(vec![[-h, -depth_nm], [h, -depth_nm], [h, 0.0], [-h, 0.0]])
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Width of the film-bearing top edge.
    pub fn surface_width_nm(&self) -> f64 {
        self.surface_width
    }

    /// Depth of the lowest vertex below the top surface.
    pub fn depth_nm(&self) -> f64 {
        self.top - self.bottom
    }

    /// `(∫dA, ∫u dA, ∫u² dA)` with `u` the depth below the top surface.
    fn depth_moments(&self) -> (f64, f64, f64) {
        let n = self.vertices.len();
        let (mut a, mut s, mut i2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let [y0, h0] = self.vertices[i];
            let [y1, h1] = self.vertices[(i + 1) % n];
            let (z0, z1) = (h0 - self.top, h1 - self.top);
            let c = y0 * z1 - y1 * z0;
            a += c;
            s += (z0 + z1) * c;
            i2 += (z0 * z0 + z0 * z1 + z1 * z1) * c;
        }
        (a / 2.0, -s / 6.0, i2 / 12.0)
    }
}

fn is_simple(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (v[j], v[(j + 1) % n]);
            if adjacent {
                // Adjacent edges may only share their common vertex: reject folding back.
                let shared = if j == i + 1 { b } else { a };
                let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(p, shared, q) == 0.0 && dot_sub(p, shared, q) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// `(p − s)·(q − s)`: positive when p and q lie on the same side of s.
fn dot_sub(p: [f64; 2], s: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - s[0]) * (q[0] - s[0]) + (p[1] - s[1]) * (q[1] - s[1])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionProperties {
    pub area_nm2: f64,
    /// Depth of the centroid below the top surface.
    pub centroid_depth_nm: f64,
    /// `E · I` about the horizontal centroidal axis, in the units of `E` times nm⁴.
    pub bending_stiffness: f64,
}

pub fn section_properties(cs: &CrossSection, youngs_modulus: f64) -> Result<SectionProperties> {
    if !(youngs_modulus.is_finite() && youngs_modulus > 0.0) {
        return Err(Error::InvalidParameters(format!("Young's modulus {youngs_modulus} must be positive")));
    }
    let (a, s, i0) = cs.depth_moments();
    if !(a > 0.0) {
        return Err(Error::InvalidGeometry("zero-area polygon".into()));
    }
    let c = s / a;
    Ok(SectionProperties { area_nm2: a, centroid_depth_nm: c, bending_stiffness: youngs_modulus * (i0 - a * c * c) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Substrate {
    pub youngs_modulus_gpa: f64,
    pub poisson_ratio: f64,
    pub cross_section_nm: CrossSection,
}

impl Substrate {
    pub fn diamond(cross_section_nm: CrossSection) -> Self {
        Self { youngs_modulus_gpa: DIAMOND_YOUNGS_GPA, poisson_ratio: DIAMOND_POISSON, cross_section_nm }
    }
}

/// Film-on-cantilever stack. The beam axis is fixed along crystal `[110]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerStack {
    pub substrate: Substrate,
    pub film: Layer,
    #[serde(default = "default_biaxiality")]
    pub biaxiality_factor: f64,
}

fn default_biaxiality() -> f64 {
    1.0
}

impl LayerStack {
    pub fn validate(&self) -> Result<()> {
        validate_elastic(self.substrate.youngs_modulus_gpa, self.substrate.poisson_ratio)?;
        self.film.validate()?;
        if !self.biaxiality_factor.is_finite() {
            return Err(Error::InvalidParameters("biaxiality_factor must be finite".into()));
        }
        let depth = self.substrate.cross_section_nm.depth_nm();
        // Calibration re-validates on every step; one warning is enough.
        static THIN_FILM_WARNED: std::sync::Once = std::sync::Once::new();
        if self.film.thickness_nm > THIN_FILM_WARN_RATIO * depth {
            THIN_FILM_WARNED.call_once(|| {
                log::warn!(
                    "film thickness {} nm exceeds {:.0}% of substrate depth {} nm; thin-film assumptions are stretched",
                    self.film.thickness_nm,
                    THIN_FILM_WARN_RATIO * 100.0,
                    depth
                );
            });
        }
        Ok(())
    }

    pub fn with_film_stress(&self, stress_mpa: f64) -> Self {
        let mut s = self.clone();
        s.film.intrinsic_stress_mpa = stress_mpa;
        s
    }
}

/// Solved axial strain state of the composite beam; uniform along its length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrainField {
    pub neutral_axis_depth_nm: f64,
    /// Axial strain at the neutral axis.
    pub membrane_strain: f64,
    /// `dε_yy/du` with `u` the depth, in 1/nm.
    pub curvature_per_nm: f64,
    pub biaxiality_factor: f64,
    pub substrate_poisson: f64,
    pub substrate_depth_nm: f64,
}

impl StrainField {
    /// Field with no strain anywhere.
    pub fn unstrained(substrate_depth_nm: f64, substrate_poisson: f64) -> Self {
        Self {
            neutral_axis_depth_nm: 0.0,
            membrane_strain: 0.0,
            curvature_per_nm: 0.0,
            biaxiality_factor: 1.0,
            substrate_poisson,
            substrate_depth_nm,
        }
    }

    /// Axial (along-beam) strain at `depth_nm`, without domain checks.
    #[inline]
    pub fn axial_strain(&self, depth_nm: f64) -> f64 {
        self.membrane_strain + self.curvature_per_nm * (depth_nm - self.neutral_axis_depth_nm)
    }
}

pub fn solve_beam_state(stack: &LayerStack) -> Result<StrainField> {
    stack.validate()?;
    let cs = &stack.substrate.cross_section_nm;
    let es = stack.substrate.youngs_modulus_gpa;
    let ef = stack.film.youngs_modulus_gpa;
    let t = stack.film.thickness_nm;
    let w = cs.surface_width_nm();

    let (a_s, s_s, i_s) = cs.depth_moments();
    // Film rectangle occupies u in [−t, 0].
    let a_f = w * t;
    let s_f = -w * t * t / 2.0;
    let i_f = w * t * t * t / 3.0;

    let ea = es * a_s + ef * a_f;
    let es1 = es * s_s + ef * s_f;
    let ei = es * i_s + ef * i_f;
    let misfit = stack.film.misfit_strain();
    let r0 = ef * misfit * a_f;
    let r1 = ef * misfit * s_f;

    let det = ea * ei - es1 * es1;
    if !(det > 0.0) {
        return Err(Error::DegenerateGeometry("singular composite section stiffness".into()));
    }
    let e0 = (r0 * ei - r1 * es1) / det;
    let kappa = (ea * r1 - es1 * r0) / det;
    let neutral = es1 / ea;

    Ok(StrainField {
        neutral_axis_depth_nm: neutral,
        membrane_strain: e0 + kappa * neutral,
        curvature_per_nm: kappa,
        biaxiality_factor: stack.biaxiality_factor,
        substrate_poisson: stack.substrate.poisson_ratio,
        substrate_depth_nm: cs.depth_nm(),
    })
}

/// Beam-frame strain tensor at a depth below the film/substrate interface.
pub fn strain_at(field: &StrainField, depth_nm: f64) -> Result<StrainTensor> {
    if !(depth_nm >= 0.0 && depth_nm <= field.substrate_depth_nm) {
        return Err(Error::OutOfDomain { depth_nm, max_nm: field.substrate_depth_nm });
    }
    let eyy = field.axial_strain(depth_nm);
    let exx = field.biaxiality_factor * eyy;
    let nu = field.substrate_poisson;
    let ezz = -nu * (exx + eyy) / (1.0 - nu);
    StrainTensor::new([exx, eyy, ezz, 0.0, 0.0, 0.0], Frame::Beam)
}

/// Columns are the beam x, y, z axes in crystal coordinates:
/// x ∥ [1 −1 0], y ∥ [110], z ∥ [001].
pub fn beam_rotation() -> Matrix3<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(r, r, 0.0, -r, r, 0.0, 0.0, 0.0, 1.0)
}

pub fn beam_to_crystal(eps_beam: &StrainTensor) -> Result<StrainTensor> {
    eps_beam.expect_frame(Frame::Beam)?;
    Ok(tensor::rotate_unchecked(eps_beam, &beam_rotation(), Frame::Crystal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(stress: f64) -> LayerStack {
        LayerStack {
            substrate: Substrate::diamond(CrossSection::triangle(260.0, 107.0).unwrap()),
            film: Layer::silicon_nitride(60.0, stress),
            biaxiality_factor: 1.0,
        }
    }

    /// Horizontal chord length of the section at depth `u`, by edge crossing.
    fn chord(cs: &CrossSection, u: f64) -> f64 {
        let z = cs.top - u;
        let v = cs.vertices();
        let mut xs = Vec::new();
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            if (a[1] <= z && b[1] > z) || (b[1] <= z && a[1] > z) {
                xs.push(a[0] + (z - a[1]) / (b[1] - a[1]) * (b[0] - a[0]));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.chunks(2).map(|p| if p.len() == 2 { p[1] - p[0] } else { 0.0 }).sum()
    }

    #[test]
    fn rectangle_properties() {
        let cs = CrossSection::rectangle(200.0, 50.0).unwrap();
        let p = section_properties(&cs, 1.0).unwrap();
        assert!((p.area_nm2 - 10_000.0).abs() < 1e-9);
        assert!((p.centroid_depth_nm - 25.0).abs() < 1e-12);
        assert!((p.bending_stiffness - 200.0 * 50f64.powi(3) / 12.0).abs() < 1e-6);
    }

    #[test]
    fn triangle_properties() {
        let cs = CrossSection::triangle(300.0, 120.0).unwrap();
        let p = section_properties(&cs, 2.0).unwrap();
        assert!((p.area_nm2 - 300.0 * 120.0 / 2.0).abs() < 1e-9);
        // Apex down: centroid sits h/3 below the flat top (2h/3 above the apex).
        assert!((p.centroid_depth_nm - 40.0).abs() < 1e-12);
        assert!((p.bending_stiffness - 2.0 * 300.0 * 120f64.powi(3) / 36.0).abs() < 1e-3);
    }

    #[test]
    fn cyclic_permutation_invariance() {
        let v = vec![[-130.0, 0.0], [-20.0, -80.0], [0.0, -107.0], [40.0, -60.0], [130.0, 0.0]];
        let base = section_properties(&CrossSection::new(v.clone()).unwrap(), 1100.0).unwrap();
        for k in 1..v.len() {
            let mut r = v.clone();
            r.rotate_left(k);
            let p = section_properties(&CrossSection::new(r).unwrap(), 1100.0).unwrap();
            assert!((p.area_nm2 - base.area_nm2).abs() <= 1e-12 * base.area_nm2);
            assert!((p.centroid_depth_nm - base.centroid_depth_nm).abs() <= 1e-12 * base.centroid_depth_nm);
            assert!((p.bending_stiffness - base.bending_stiffness).abs() <= 1e-11 * base.bending_stiffness);
        }
    }

    #[test]
    fn invalid_polygons_rejected() {
        // clockwise
        assert!(CrossSection::new(vec![[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0]]).is_err());
        // collinear
        assert!(CrossSection::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        // bow-tie
        assert!(CrossSection::new(vec![[0.0, 0.0], [1.0, -1.0], [1.0, 0.0], [0.0, -1.0]]).is_err());
        // no flat top edge
        assert!(CrossSection::new(vec![[-1.0, -1.0], [1.0, -1.0], [0.0, 0.0]]).is_err());
        assert!(CrossSection::new(vec![[0.0, 0.0], [f64::NAN, 1.0], [1.0, 1.0]]).is_err());
        assert!(CrossSection::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn zero_stress_gives_zero_field() {
        let f = solve_beam_state(&stack(0.0)).unwrap();
        assert_eq!(f.membrane_strain, 0.0);
        assert_eq!(f.curvature_per_nm, 0.0);
        for d in [0.0, 35.0, 107.0] {
            assert_eq!(strain_at(&f, d).unwrap().components().map(f64::abs), [0.0; 6]);
        }
    }

    #[test]
    fn doubled_stress_doubles_field_exactly() {
        let a = solve_beam_state(&stack(350.0)).unwrap();
        let b = solve_beam_state(&stack(700.0)).unwrap();
        assert_eq!(b.membrane_strain, 2.0 * a.membrane_strain);
        assert_eq!(b.curvature_per_nm, 2.0 * a.curvature_per_nm);
        assert_eq!(b.neutral_axis_depth_nm, a.neutral_axis_depth_nm);
    }

    #[test]
    fn neutral_axis_has_membrane_strain_only() {
        let f = solve_beam_state(&stack(700.0)).unwrap();
        let e = strain_at(&f, f.neutral_axis_depth_nm).unwrap();
        assert!((e.yy() - f.membrane_strain).abs() < 1e-18);
        let bent = StrainField { membrane_strain: 0.0, ..f };
        assert_eq!(strain_at(&bent, bent.neutral_axis_depth_nm).unwrap().yy(), 0.0);
    }

    #[test]
    fn strain_at_rejects_outside_depths() {
        let f = solve_beam_state(&stack(700.0)).unwrap();
        assert!(matches!(strain_at(&f, -1.0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(strain_at(&f, 107.5), Err(Error::OutOfDomain { .. })));
        assert!(strain_at(&f, f64::NAN).is_err());
    }

    #[test]
    fn out_of_plane_strain_from_free_surface() {
        let f = solve_beam_state(&stack(700.0)).unwrap();
        let e = strain_at(&f, 35.0).unwrap();
        assert_eq!(e.xx(), e.yy());
        let nu = DIAMOND_POISSON;
        assert!((e.zz() + nu * 2.0 * e.yy() / (1.0 - nu)).abs() < 1e-18);
        assert_eq!([e.xy(), e.yz(), e.zx()], [0.0; 3]);
    }

    #[test]
    fn tensile_film_compresses_substrate_surface() {
        let s = stack(700.0);
        let f = solve_beam_state(&s).unwrap();
        let surface = f.axial_strain(0.0);
        let film_stress = s.film.youngs_modulus_gpa * (surface - s.film.misfit_strain());
        assert!(surface < 0.0);
        assert!(film_stress > 0.0);
    }

    #[test]
    fn force_and_moment_balance_by_slicing() {
        let s = stack(700.0);
        let f = solve_beam_state(&s).unwrap();
        let cs = &s.substrate.cross_section_nm;
        let ef = s.film.youngs_modulus_gpa;
        let es = s.substrate.youngs_modulus_gpa;
        let misfit = s.film.misfit_strain();
        let t = s.film.thickness_nm;
        let w = cs.surface_width_nm();
        let slices = 200_000;
        let (mut force, mut moment) = (0.0, 0.0);
        let du = t / slices as f64;
        for k in 0..slices {
            let u = -t + (k as f64 + 0.5) * du;
            let sig = ef * (f.axial_strain(u) - misfit);
            force += sig * w * du;
            moment += sig * w * u * du;
        }
        let h = cs.depth_nm();
        let du = h / slices as f64;
        for k in 0..slices {
            let u = (k as f64 + 0.5) * du;
            let sig = es * f.axial_strain(u);
            let b = chord(cs, u);
            force += sig * b * du;
            moment += sig * b * u * du;
        }
        let scale_f = ef * misfit.abs() * w * t;
        let scale_m = scale_f * (h + t);
        assert!(force.abs() < 1e-6 * scale_f, "force {force:e} vs {scale_f:e}");
        assert!(moment.abs() < 1e-6 * scale_m, "moment {moment:e} vs {scale_m:e}");
    }

    /// Classical two-layer curvature for a free strain mismatch `mismatch`
    /// between layer 1 (thickness t1, modulus e1) and layer 2.
    fn bilayer_curvature(t1: f64, e1: f64, t2: f64, e2: f64, mismatch: f64) -> f64 {
        let m = t1 / t2;
        let n = e1 / e2;
        let h = t1 + t2;
        6.0 * mismatch * (1.0 + m).powi(2) / (h * (3.0 * (1.0 + m).powi(2) + (1.0 + m * n) * (m * m + 1.0 / (m * n))))
    }

    #[test]
    fn rectangle_matches_bilayer_closed_form() {
        for (ts, tf) in [(1000.0, 10.0), (2000.0, 5.0), (500.0, 50.0)] {
            let s = LayerStack {
                substrate: Substrate::diamond(CrossSection::rectangle(400.0, ts).unwrap()),
                film: Layer::silicon_nitride(tf, 1000.0),
                biaxiality_factor: 1.0,
            };
            let f = solve_beam_state(&s).unwrap();
            let want = bilayer_curvature(ts, DIAMOND_YOUNGS_GPA, tf, SIN_YOUNGS_GPA, -s.film.misfit_strain());
            let rel = (f.curvature_per_nm.abs() - want.abs()).abs() / want.abs();
            assert!(rel < 1e-9, "ts={ts} tf={tf}: {} vs {want} ({rel:e})", f.curvature_per_nm);
        }
    }

    #[test]
    fn beam_to_crystal_examples() {
        let z = StrainTensor::zero(Frame::Beam);
        assert_eq!(beam_to_crystal(&z).unwrap().components().map(f64::abs), [0.0; 6]);
        let h = StrainTensor::hydrostatic(1e-4, Frame::Beam).unwrap();
        let hc = beam_to_crystal(&h).unwrap();
        for (i, c) in hc.components().iter().enumerate() {
            assert!((c - if i < 3 { 1e-4 } else { 0.0 }).abs() < 1e-19);
        }
        let e = StrainTensor::new([0.0, 2e-4, 0.0, 0.0, 0.0, 0.0], Frame::Beam).unwrap();
        let c = beam_to_crystal(&e).unwrap();
        assert_eq!(c.frame(), Frame::Crystal);
        assert!((c.xx() - 1e-4).abs() < 1e-19 && (c.yy() - 1e-4).abs() < 1e-19);
        assert!((c.xy() - 1e-4).abs() < 1e-19 && c.zz().abs() < 1e-20);
        assert!(matches!(beam_to_crystal(&c), Err(Error::FrameMismatch { .. })));
        tensor::check_rotation(&beam_rotation()).unwrap();
    }
}
