//! Paraxial ray-transfer matrices for the half-monolithic cavity.
//!
//! Uses physical (not reduced) ray slopes, so refraction at the crystal face
//! appears as an explicit interface matrix. This is an independent route to
//! the Gouy phase: the one-way Gouy phase of a two-mirror standing-wave
//! cavity is half the round-trip phase `arccos((A + D)/2)`.

use std::ops::Mul;

use super::{crystal_length, CavityGeometry, Field};
use super::dispersion::DispersionModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RayMatrix {
    pub const IDENTITY: RayMatrix = RayMatrix { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn propagation(distance: f64) -> Self {
        Self { a: 1.0, b: distance, c: 0.0, d: 1.0 }
    }

    /// Flat interface from index `n1` into index `n2`.
    pub fn flat_interface(n1: f64, n2: f64) -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: n1 / n2 }
    }

    /// Reflection off a concave mirror of radius `radius` (infinite = flat).
    pub fn mirror(radius: f64) -> Self {
        Self { a: 1.0, b: 0.0, c: -2.0 / radius, d: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn half_trace(&self) -> f64 {
        0.5 * (self.a + self.d)
    }
}

impl Mul for RayMatrix {
    type Output = RayMatrix;

    /// `self * rhs`: apply `rhs` first.
    fn mul(self, r: RayMatrix) -> RayMatrix {
        RayMatrix {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// Round trip starting just after reflection at the coupler: air gap,
/// into the crystal, through it, off the flat HR back, back out, air gap,
/// coupler.
pub fn round_trip_matrix(l_air: f64, l_crystal: f64, n: f64, mirror_radius: f64) -> RayMatrix {
    let path = [
        RayMatrix::propagation(l_air),
        RayMatrix::flat_interface(1.0, n),
        RayMatrix::propagation(l_crystal),
        RayMatrix::mirror(f64::INFINITY),
        RayMatrix::propagation(l_crystal),
        RayMatrix::flat_interface(n, 1.0),
        RayMatrix::propagation(l_air),
        RayMatrix::mirror(mirror_radius),
    ];
    path.iter().fold(RayMatrix::IDENTITY, |acc, m| *m * acc)
}

/// Round-trip Gouy phase of a stable ray matrix with unit determinant.
pub fn round_trip_gouy(m: &RayMatrix) -> Result<f64> {
    let h = m.half_trace();
    // 1 − h² = −BC − (A − D)²/4 when det = 1, free of cancellation.
    let sin2 = -m.b * m.c - 0.25 * (m.a - m.d) * (m.a - m.d);
    if !(h.abs() < 1.0) || !(sin2 > 0.0) {
        return Err(Error::Unstable(format!("(A + D)/2 = {h} outside (−1, 1)")));
    }
    Ok(sin2.sqrt().atan2(h))
}

/// One-way Gouy phase from the round-trip ray matrix.
pub fn gouy_phase_abcd(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    field: Field,
    temperature_c: f64,
) -> Result<f64> {
    if geom.mirror_radius_m.is_infinite() {
        return Ok(0.0);
    }
    let n = disp.index(field.wavelength_m(), temperature_c)?;
    let lc = crystal_length(geom, disp, temperature_c);
    let m = round_trip_matrix(geom.l_air_m, lc, n, geom.mirror_radius_m);
    Ok(0.5 * round_trip_gouy(&m)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_determinant() {
        let m = round_trip_matrix(0.02, 0.0093, 1.8, 0.05);
        assert!((m.det() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn empty_cavity_matches_g_parameter() {
        // Plano-concave of length L: round-trip Gouy = 2 arccos √(1 − L/R).
        let (l, r) = (0.03, 0.05);
        let m = round_trip_matrix(l, 0.0, 1.0, r);
        let g = round_trip_gouy(&m).unwrap();
        assert!((g - 2.0 * (1.0 - l / r).sqrt().acos()).abs() < 1e-12);
        assert!(round_trip_gouy(&round_trip_matrix(0.06, 0.0, 1.0, 0.05)).is_err());
    }
}
