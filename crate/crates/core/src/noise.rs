//! Quadrature-noise spectra of a lossy parametric down-conversion cavity
//! operated below oscillation threshold.
//!
//! All variances are linear and normalised to shot noise (vacuum = 1). The
//! spectra depend on the sideband frequency only through `2πf/κ`, and are
//! independent of the analyzer resolution bandwidth once normalised.
//!
//! The anti-squeezed variance diverges as the pump parameter approaches one
//! at `f = 0`; it is finite everywhere in the admissible domain but unbounded.

use std::f64::consts::{LN_10, TAU};

use crate::error::{Error, Result};

/// Parameters of the below-threshold cavity noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModelParams {
    /// Total detection efficiency.
    pub eta: f64,
    /// Cavity decay rate in rad/s.
    pub kappa: f64,
    /// Pump power relative to the oscillation threshold.
    pub epsilon: f64,
}

impl NoiseModelParams {
    pub fn new(eta: f64, kappa: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            eta,
            kappa,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the full-width-half-maximum linewidth in Hz,
    /// using `κ = 2π · fwhm`.
    pub fn from_fwhm_hz(eta: f64, fwhm_hz: f64, epsilon: f64) -> Result<Self> {
        Self::new(eta, TAU * fwhm_hz, epsilon)
    }

    pub fn fwhm_hz(&self) -> f64 {
        self.kappa / TAU
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::domain(format!("eta = {} outside [0, 1]", self.eta)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain(format!(
                "epsilon = {} outside [0, 1); the model only holds below threshold",
                self.epsilon
            )));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain(format!("kappa = {} must be positive", self.kappa)));
        }
        Ok(())
    }
}

/// Squeezed and anti-squeezed variances at one sideband frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureVariancePair {
    pub v_x: f64,
    pub v_y: f64,
    pub frequency_hz: f64,
}

/// Dark (electronic) noise level relative to the measured shot noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkNoiseContext {
    /// Dark noise power relative to shot noise in dB; negative.
    pub clearance_db: f64,
    /// Whether the dark noise has already been removed from the data.
    pub subtracted: bool,
}

impl DarkNoiseContext {
    pub fn new(clearance_db: f64) -> Result<Self> {
        if !(clearance_db < 0.0) {
            return Err(Error::domain(format!(
                "dark-noise clearance must be negative, got {clearance_db} dB"
            )));
        }
        Ok(Self {
            clearance_db,
            subtracted: false,
        })
    }

    /// No dark noise at all.
    pub fn none() -> Self {
        Self {
            clearance_db: f64::NEG_INFINITY,
            subtracted: false,
        }
    }

    /// Dark power as a linear fraction of the measured shot-noise power.
    pub fn linear_level(&self) -> f64 {
        if self.clearance_db == f64::NEG_INFINITY {
            0.0
        } else {
            10f64.powf(self.clearance_db / 10.0)
        }
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if f >= 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("frequency {f} Hz must be finite and non-negative")))
    }
}

/// `4(2πf/κ)²`, the detuning term shared by both quadratures.
#[inline]
pub(crate) fn detuning_term(kappa: f64, f: f64) -> f64 {
    let r = TAU * f / kappa;
    4.0 * r * r
}

#[inline]
pub(crate) fn squeezed_unchecked(eta: f64, kappa: f64, epsilon: f64, f: f64) -> f64 {
    let s = epsilon.sqrt();
    let y = detuning_term(kappa, f);
    // Same value as 1 − 4ηs/[(1+s)² + y] without cancellation near ε → 1.
    ((1.0 - s) * (1.0 - s) + y + 4.0 * (1.0 - eta) * s) / ((1.0 + s) * (1.0 + s) + y)
}

#[inline]
pub(crate) fn antisqueezed_unchecked(eta: f64, kappa: f64, epsilon: f64, f: f64) -> f64 {
    let s = epsilon.sqrt();
    1.0 + eta * 4.0 * s / ((1.0 - s) * (1.0 - s) + detuning_term(kappa, f))
}

/// Squeezed-quadrature variance `1 − η·4√ε / [(1+√ε)² + 4(2πf/κ)²]`.
pub fn squeezed_variance(params: &NoiseModelParams, f: f64) -> Result<f64> {
    params.validate()?;
    check_frequency(f)?;
    Ok(squeezed_unchecked(params.eta, params.kappa, params.epsilon, f))
}

/// Anti-squeezed-quadrature variance `1 + η·4√ε / [(1−√ε)² + 4(2πf/κ)²]`.
///
/// Unbounded as `ε → 1` at `f = 0`.
pub fn antisqueezed_variance(params: &NoiseModelParams, f: f64) -> Result<f64> {
    params.validate()?;
    check_frequency(f)?;
    Ok(antisqueezed_unchecked(params.eta, params.kappa, params.epsilon, f))
}

pub fn quadrature_pair(params: &NoiseModelParams, f: f64) -> Result<QuadratureVariancePair> {
    Ok(QuadratureVariancePair {
        v_x: squeezed_variance(params, f)?,
        v_y: antisqueezed_variance(params, f)?,
        frequency_hz: f,
    })
}

/// Variance of the quadrature selected by local-oscillator phase `theta`
/// (θ = 0 squeezed, θ = π/2 anti-squeezed).
pub fn quadrature_variance(params: &NoiseModelParams, f: f64, theta: f64) -> Result<f64> {
    let pair = quadrature_pair(params, f)?;
    let (s, c) = theta.sin_cos();
    Ok(pair.v_x * c * c + pair.v_y * s * s)
}

/// Power ratio to decibels.
pub fn db_from_linear(v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(10.0 * v.log10())
    } else {
        Err(Error::domain(format!("cannot express {v} in dB")))
    }
}

pub fn linear_from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// `d(dB)/dv = 10 / (v ln 10)`.
#[inline]
pub(crate) fn db_slope(v: f64) -> f64 {
    10.0 / (v * LN_10)
}

/// Removes dark noise from a trace value normalised to the measured shot
/// noise. Signal and shot reference both carry the dark power, so the
/// corrected ratio is `(m − d)/(1 − d)`.
pub fn dark_noise_correct(measured_db: f64, ctx: &DarkNoiseContext) -> Result<f64> {
    if ctx.subtracted {
        return Err(Error::domain("dark noise was already subtracted from this trace"));
    }
    let d = ctx.linear_level();
    if d >= 1.0 {
        return Err(Error::domain("dark noise is not below shot noise"));
    }
    let m = linear_from_db(measured_db);
    if m <= d {
        return Err(Error::domain(format!(
            "measured level {measured_db} dB is at or below the dark noise ({} dB)",
            ctx.clearance_db
        )));
    }
    db_from_linear((m - d) / (1.0 - d))
}

/// Inverse of [`dark_noise_correct`]: what a detector with the given dark
/// clearance would display, normalised to its own (dark-inclusive) shot level.
pub fn add_dark_noise(corrected_db: f64, ctx: &DarkNoiseContext) -> Result<f64> {
    let d = ctx.linear_level();
    if d >= 1.0 {
        return Err(Error::domain("dark noise is not below shot noise"));
    }
    db_from_linear(linear_from_db(corrected_db) * (1.0 - d) + d)
}

/// Pump parameter `P_pump / P_thrs`.
pub fn epsilon_from_powers(p_pump_mw: f64, p_thrs_mw: f64) -> Result<f64> {
    if !(p_thrs_mw > 0.0) {
        return Err(Error::domain(format!("threshold power {p_thrs_mw} mW must be positive")));
    }
    if !(p_pump_mw >= 0.0) {
        return Err(Error::domain(format!("pump power {p_pump_mw} mW must be non-negative")));
    }
    if p_pump_mw >= p_thrs_mw {
        return Err(Error::domain(format!(
            "pump power {p_pump_mw} mW is at or above threshold {p_thrs_mw} mW"
        )));
    }
    Ok(p_pump_mw / p_thrs_mw)
}

/// Pump parameter needed to reach `target_db` of squeezing at sideband `f`.
///
/// With `d = 1 − v` and `x = 2·(2πf/κ)` the squeezed variance rearranges to
/// `d·s² + (2d − 4η)·s + d·(1 + x²) = 0` in `s = √ε`; the smaller root is
/// the below-threshold solution.
pub fn required_epsilon(target_db: f64, eta: f64, kappa: f64, f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("eta = {eta} outside [0, 1]")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("kappa = {kappa} must be positive")));
    }
    check_frequency(f)?;
    if !target_db.is_finite() {
        return Err(Error::domain(format!("target {target_db} dB is not finite")));
    }
    if target_db > 0.0 {
        return Err(Error::domain(format!(
            "target {target_db} dB is above shot noise; squeezing targets are ≤ 0 dB"
        )));
    }
    let d = 1.0 - linear_from_db(target_db);
    if d == 0.0 {
        return Ok(0.0);
    }
    let x2 = detuning_term(kappa, f);
    // Best reachable as ε → 1⁻; the bound itself is not attainable.
    let d_max = 4.0 * eta / (4.0 + x2);
    if d >= d_max {
        let best = if d_max > 0.0 {
            format!("{:.3} dB", 10.0 * (1.0 - d_max).log10())
        } else {
            "0 dB".to_owned()
        };
        return Err(Error::Infeasible(format!(
            "{target_db} dB of squeezing at {f} Hz needs more than threshold pump \
             (limit {best} for eta = {eta})"
        )));
    }
    let b = 2.0 * d - 4.0 * eta;
    let c = d * (1.0 + x2);
    let disc = b * b - 4.0 * d * c;
    // Smaller root in the cancellation-free form 2c / (−b + √disc).
    let s = 2.0 * c / (-b + disc.max(0.0).sqrt());
    Ok((s * s).min(1.0 - f64::EPSILON))
}
