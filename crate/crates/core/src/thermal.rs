//! Phonon-limited operating temperature.
//!
//! The upward phonon rate between the orbital branches scales as
//! `Δ³ · n_th(Δ, T)`. An emitter with splitting `Δ` is taken to be operable up
//! to the temperature at which that rate equals the rate of a reference
//! emitter at its known-good temperature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// `h / k_B` in kelvin per GHz (exact SI constants).
pub const H_OVER_KB_K_PER_GHZ: f64 = 6.626_070_15e-34 / 1.380_649e-23 * 1e9;

pub const DEFAULT_GSS_REF_GHZ: f64 = 554.0;
pub const DEFAULT_TEMP_REF_K: f64 = 1.5;

/// Bracket for the operating-temperature search.
pub const T_OP_MIN_K: f64 = 1e-3;
pub const T_OP_MAX_K: f64 = 300.0;
const T_OP_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Occupation {
    /// `1 / (e^x − 1)`
    #[default]
    BoseEinstein,
    /// `e^−x`
    Boltzmann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalReference {
    pub gss_ref_ghz: f64,
    pub temp_ref_k: f64,
    #[serde(default)]
    pub occupation: Occupation,
}

impl Default for ThermalReference {
    fn default() -> Self {
        Self { gss_ref_ghz: DEFAULT_GSS_REF_GHZ, temp_ref_k: DEFAULT_TEMP_REF_K, occupation: Occupation::BoseEinstein }
    }
}

impl ThermalReference {
    pub fn validate(&self) -> Result<()> {
        check_domain(self.gss_ref_ghz, self.temp_ref_k)
    }

    fn ln_rate_ref(&self) -> f64 {
        ln_rate(self.gss_ref_ghz, self.temp_ref_k, self.occupation)
    }
}

fn check_domain(gss: f64, temp: f64) -> Result<()> {
    if !(gss.is_finite() && gss > 0.0) {
        return Err(Error::InvalidDomain(format!("splitting must be positive, got {gss} GHz")));
    }
    if !(temp.is_finite() && temp > 0.0) {
        return Err(Error::InvalidDomain(format!("temperature must be positive, got {temp} K")));
    }
    Ok(())
}

fn ln_occupation(x: f64, model: Occupation) -> f64 {
    match model {
        Occupation::Boltzmann => -x,
        // ln(e^x − 1) = x + ln(1 − e^−x) stays finite for large x.
        Occupation::BoseEinstein if x > 30.0 => -x - (-(-x).exp()).ln_1p(),
        Occupation::BoseEinstein => -x.exp_m1().ln(),
    }
}

fn ln_rate(gss: f64, temp: f64, model: Occupation) -> f64 {
    3.0 * gss.ln() + ln_occupation(H_OVER_KB_K_PER_GHZ * gss / temp, model)
}

/// Bose–Einstein phonon occupation at frequency `gss_ghz` and temperature `temp_k`.
pub fn thermal_occupation(gss_ghz: f64, temp_k: f64) -> Result<f64> {
    occupation_with(Occupation::BoseEinstein, gss_ghz, temp_k)
}

pub fn occupation_with(model: Occupation, gss_ghz: f64, temp_k: f64) -> Result<f64> {
    check_domain(gss_ghz, temp_k)?;
    let x = H_OVER_KB_K_PER_GHZ * gss_ghz / temp_k;
    Ok(match model {
        Occupation::BoseEinstein => 1.0 / x.exp_m1(),
        Occupation::Boltzmann => (-x).exp(),
    })
}

/// `Δ³ n_th(Δ, T)` relative to the same quantity at the reference point.
pub fn gamma_up_relative(gss_ghz: f64, temp_k: f64, reference: &ThermalReference) -> Result<f64> {
    check_domain(gss_ghz, temp_k)?;
    reference.validate()?;
    Ok((ln_rate(gss_ghz, temp_k, reference.occupation) - reference.ln_rate_ref()).exp())
}

/// Temperature at which an emitter with splitting `gss_ghz` sees the same
/// upward phonon rate as the reference emitter at its reference temperature.
pub fn operational_temperature(gss_ghz: f64, reference: &ThermalReference) -> Result<f64> {
    check_domain(gss_ghz, 1.0)?;
    reference.validate()?;
    let target = reference.ln_rate_ref();
    let model = reference.occupation;
    roots::bisect_increasing(|t| Ok(ln_rate(gss_ghz, t, model) - target), T_OP_MIN_K, T_OP_MAX_K, 0.0, T_OP_MAX_ITER)
        .map_err(|e| match e {
            Error::Bracket(_) => Error::InvalidDomain(format!(
                "operating temperature for {gss_ghz} GHz lies outside [{T_OP_MIN_K}, {T_OP_MAX_K}] K"
            )),
            other => other,
        })
}

/// Operating temperature of every emitter, in input order.
pub fn operational_temperatures(gss_ghz: &[f64], reference: &ThermalReference) -> Result<Vec<f64>> {
    gss_ghz.par_iter().map(|&g| operational_temperature(g, reference)).collect()
}

/// Fraction of `t_op` values at or above each temperature.
pub fn survival_fractions(t_op: &[f64], temps_k: &[f64]) -> Result<Vec<(f64, f64)>> {
    if t_op.is_empty() {
        return Err(Error::EmptyRequest("operability curve of an empty ensemble"));
    }
    if temps_k.windows(2).any(|w| !(w[0] <= w[1])) || temps_k.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("temperature grid must be finite and ascending".into()));
    }
    let mut sorted = t_op.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(temps_k
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|&v| v < t);
            (t, (sorted.len() - below) as f64 / n)
        })
        .collect())
}

/// For each temperature, the fraction of emitters with `T_op ≥ T`.
pub fn operability_curve(gss_ghz: &[f64], temps_k: &[f64], reference: &ThermalReference) -> Result<Vec<(f64, f64)>> {
    if gss_ghz.is_empty() {
        return Err(Error::EmptyRequest("operability curve of an empty ensemble"));
    }
    survival_fractions(&operational_temperatures(gss_ghz, reference)?, temps_k)
}
