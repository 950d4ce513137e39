//! Double resonance of 1550 nm and 775 nm light in a half-monolithic
//! plano-concave cavity, together with quasi-phase-matching.
//!
//! The crystal's flat back face carries the HR coating and holds the mode
//! waist; the curved coupler sits an air gap `l_air` in front of it. Both
//! fields share the geometry, so resonance at both wavelengths is tuned by
//! the air gap (coarse) and the crystal temperature (fine), with the
//! wavelength-dependent Gouy phase and coating phases breaking the trivial
//! factor-of-two relation between the two round-trip phases.

pub mod abcd;
pub mod dispersion;
mod solver;

use std::f64::consts::PI;

pub use dispersion::{DispersionModel, IndexLaw};
pub use solver::{find_operating_points, ScanGrid, ScanReport, Tolerances};

use crate::error::{Error, Result};

/// Fundamental vacuum wavelength; the harmonic is exactly half.
pub const FUNDAMENTAL_WAVELENGTH_M: f64 = 1550e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Fundamental,
    Harmonic,
}

impl Field {
    pub fn wavelength_m(self) -> f64 {
        match self {
            Field::Fundamental => FUNDAMENTAL_WAVELENGTH_M,
            Field::Harmonic => 0.5 * FUNDAMENTAL_WAVELENGTH_M,
        }
    }

    fn coating_phase(self, geom: &CavityGeometry) -> f64 {
        match self {
            Field::Fundamental => geom.coating_phase_f_rad,
            Field::Harmonic => geom.coating_phase_h_rad,
        }
    }
}

/// Lengths are in metres; `l_crystal_m` is at the dispersion model's
/// reference temperature. `mirror_radius_m` may be infinite (flat coupler).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    pub l_air_m: f64,
    pub l_crystal_m: f64,
    pub mirror_radius_m: f64,
    pub coating_phase_f_rad: f64,
    pub coating_phase_h_rad: f64,
}

impl CavityGeometry {
    pub fn new(l_air_m: f64, l_crystal_m: f64, mirror_radius_m: f64) -> Self {
        Self {
            l_air_m,
            l_crystal_m,
            mirror_radius_m,
            coating_phase_f_rad: 0.0,
            coating_phase_h_rad: 0.0,
        }
    }

    pub fn with_coating_phases(mut self, f_rad: f64, h_rad: f64) -> Self {
        self.coating_phase_f_rad = f_rad;
        self.coating_phase_h_rad = h_rad;
        self
    }

    pub fn with_air_gap(mut self, l_air_m: f64) -> Self {
        self.l_air_m = l_air_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_air_m >= 0.0 && self.l_air_m.is_finite()) {
            return Err(Error::domain(format!("air gap {} m must be ≥ 0", self.l_air_m)));
        }
        if !(self.l_crystal_m > 0.0 && self.l_crystal_m.is_finite()) {
            return Err(Error::domain(format!("crystal length {} m must be > 0", self.l_crystal_m)));
        }
        if !(self.mirror_radius_m > 0.0) {
            return Err(Error::domain(format!("mirror radius {} m must be > 0", self.mirror_radius_m)));
        }
        if !(self.coating_phase_f_rad.is_finite() && self.coating_phase_h_rad.is_finite()) {
            return Err(Error::domain("coating phases must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub l_air_m: f64,
    pub temperature_c: f64,
    /// Fundamental longitudinal order `m` (round-trip phase ≈ 2πm).
    pub order: i64,
    pub detune_f_rad: f64,
    pub detune_h_rad: f64,
    pub qpm_mismatch_rad: f64,
    pub qpm_efficiency: f64,
    pub score: f64,
}

/// Reduce a phase to (−π, π].
pub fn normalize_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub(crate) fn crystal_length(geom: &CavityGeometry, disp: &DispersionModel, temperature_c: f64) -> f64 {
    geom.l_crystal_m * disp.length_factor(temperature_c)
}

/// One-way Gouy phase from the flat-face waist to the coupler:
/// `ψ = arctan √(L_eff/(R − L_eff))` with `L_eff = l_air + l_crystal(T)/n`.
pub fn gouy_phase_one_way(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    field: Field,
    temperature_c: f64,
) -> Result<f64> {
    geom.validate()?;
    let n = disp.index(field.wavelength_m(), temperature_c)?;
    if geom.mirror_radius_m.is_infinite() {
        return Ok(0.0);
    }
    let l_eff = geom.l_air_m + crystal_length(geom, disp, temperature_c) / n;
    let r = geom.mirror_radius_m;
    if l_eff >= r {
        return Err(Error::Unstable(format!(
            "effective length {l_eff} m is not shorter than the mirror radius {r} m"
        )));
    }
    Ok((l_eff / (r - l_eff)).sqrt().atan())
}

/// Round-trip phase without reduction mod 2π.
pub fn round_trip_phase_unwrapped(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    field: Field,
    temperature_c: f64,
) -> Result<f64> {
    let psi = gouy_phase_one_way(geom, disp, field, temperature_c)?;
    let lambda = field.wavelength_m();
    let n = disp.index(lambda, temperature_c)?;
    let optical = geom.l_air_m + n * crystal_length(geom, disp, temperature_c);
    Ok(4.0 * PI / lambda * optical - 2.0 * psi + field.coating_phase(geom))
}

/// Round-trip phase reduced to (−π, π]; zero means resonance.
pub fn round_trip_phase(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    field: Field,
    temperature_c: f64,
) -> Result<f64> {
    round_trip_phase_unwrapped(geom, disp, field, temperature_c).map(normalize_phase)
}

/// `Δk·L_c(T)/2` with `Δk = 2π(n_h/λ_h − 2n_f/λ_f − 1/Λ(T))`.
///
/// The poling period expands with the crystal, so `L_c/Λ` is temperature
/// independent. An infinite period means no poling.
pub fn qpm_mismatch(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    poling_period_m: f64,
    temperature_c: f64,
) -> Result<f64> {
    if !(poling_period_m > 0.0) {
        return Err(Error::domain(format!("poling period {poling_period_m} m must be > 0")));
    }
    let (lf, lh) = (Field::Fundamental.wavelength_m(), Field::Harmonic.wavelength_m());
    let nf = disp.index(lf, temperature_c)?;
    let nh = disp.index(lh, temperature_c)?;
    let lc = crystal_length(geom, disp, temperature_c);
    Ok(PI * lc * (nh / lh - 2.0 * nf / lf) - PI * geom.l_crystal_m / poling_period_m)
}

/// Poling period that phase-matches exactly at `temperature_c`.
pub fn matched_poling_period(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    temperature_c: f64,
) -> Result<f64> {
    let (lf, lh) = (Field::Fundamental.wavelength_m(), Field::Harmonic.wavelength_m());
    let nf = disp.index(lf, temperature_c)?;
    let nh = disp.index(lh, temperature_c)?;
    let dk = nh / lh - 2.0 * nf / lf;
    if dk == 0.0 {
        return Ok(f64::INFINITY);
    }
    let period = geom.l_crystal_m / (crystal_length(geom, disp, temperature_c) * dk);
    if period <= 0.0 {
        return Err(Error::Infeasible(format!(
            "first-order QPM needs a positive period; got {period} m"
        )));
    }
    Ok(period)
}

/// `sinc²(x)` with `sinc(0) = 1`.
pub fn qpm_efficiency(mismatch_rad: f64) -> f64 {
    if mismatch_rad == 0.0 {
        1.0
    } else {
        let s = mismatch_rad.sin() / mismatch_rad;
        s * s
    }
}
