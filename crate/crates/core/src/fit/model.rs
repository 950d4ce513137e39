//! The fit model in transformed coordinates.
//!
//! Parameter vector layout: `[ln κ | ln fwhm, logit η, logit ε₀, logit ε₁, …]`.
//! The transforms keep every trial point inside the physical domain
//! (κ > 0, 0 < η < 1, 0 < ε < 1) without explicit bounds.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::noise::{db_slope, detuning_term};

/// Which linewidth quantity the first coordinate parameterises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaParameter {
    /// `ln κ` with κ in rad/s.
    #[default]
    DecayRate,
    /// `ln(κ/2π)` with the linewidth in Hz.
    FwhmHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quadrature {
    Squeezed,
    Antisqueezed,
}

/// One retained measurement point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub dataset: usize,
    pub quadrature: Quadrature,
    pub frequency_hz: f64,
    pub measured_db: f64,
}

pub(crate) fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Natural-space parameters of a joint fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    /// Decay rate in rad/s.
    pub kappa: f64,
    pub eta: f64,
    pub epsilons: Vec<f64>,
}

impl FitParams {
    pub fn fwhm_hz(&self) -> f64 {
        self.kappa / TAU
    }
}

/// Points plus parameterisation; everything the residual function needs.
#[derive(Debug, Clone)]
pub struct FitModel {
    pub points: Vec<FitPoint>,
    pub n_datasets: usize,
    pub kappa_parameter: KappaParameter,
}

impl FitModel {
    pub fn n_params(&self) -> usize {
        2 + self.n_datasets
    }

    pub fn encode(&self, p: &FitParams) -> DVector<f64> {
        let mut x = DVector::zeros(self.n_params());
        x[0] = match self.kappa_parameter {
            KappaParameter::DecayRate => p.kappa.ln(),
            KappaParameter::FwhmHz => (p.kappa / TAU).ln(),
        };
        x[1] = logit(p.eta);
        for (i, e) in p.epsilons.iter().enumerate() {
            x[2 + i] = logit(*e);
        }
        x
    }

    pub fn decode(&self, x: &DVector<f64>) -> FitParams {
        let kappa = match self.kappa_parameter {
            KappaParameter::DecayRate => x[0].exp(),
            KappaParameter::FwhmHz => TAU * x[0].exp(),
        };
        FitParams {
            kappa,
            eta: logistic(x[1]),
            epsilons: (0..self.n_datasets).map(|i| logistic(x[2 + i])).collect(),
        }
    }

    /// Model value in dB for each point.
    pub fn model_db(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.decode(x);
        DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|pt| 10.0 * variance(&p, pt).log10()),
        )
    }

    /// Model minus measurement, in dB.
    pub fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut r = self.model_db(x);
        for (ri, pt) in r.iter_mut().zip(&self.points) {
            *ri -= pt.measured_db;
        }
        r
    }

    /// Closed-form Jacobian of [`residuals`](Self::residuals) with respect
    /// to the transformed coordinates.
    pub fn analytic_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let p = self.decode(x);
        let mut jac = DMatrix::zeros(self.points.len(), self.n_params());
        for (row, pt) in self.points.iter().enumerate() {
            let eps = p.epsilons[pt.dataset];
            let s = eps.sqrt();
            let y = detuning_term(p.kappa, pt.frequency_hz);
            let (sign, base, dbase_ds) = match pt.quadrature {
                Quadrature::Squeezed => (-1.0, (1.0 + s) * (1.0 + s), 2.0 * (1.0 + s)),
                Quadrature::Antisqueezed => (1.0, (1.0 - s) * (1.0 - s), -2.0 * (1.0 - s)),
            };
            let d = base + y;
            let g = 4.0 * s / d;
            let v = 1.0 + sign * p.eta * g;
            let k = db_slope(v);
            // dκ/dx₀ = κ, and dy/dκ = −2y/κ.
            jac[(row, 0)] = k * sign * p.eta * 8.0 * s * y / (d * d);
            jac[(row, 1)] = k * sign * g * p.eta * (1.0 - p.eta);
            // ds/dw = s(1 − ε)/2 for w = logit ε.
            let dg_ds = 4.0 / d - 4.0 * s * dbase_ds / (d * d);
            jac[(row, 2 + pt.dataset)] = k * sign * p.eta * dg_ds * s * (1.0 - eps) / 2.0;
        }
        jac
    }
}

fn variance(p: &FitParams, pt: &FitPoint) -> f64 {
    let eps = p.epsilons[pt.dataset];
    match pt.quadrature {
        Quadrature::Squeezed => crate::noise::squeezed_unchecked(p.eta, p.kappa, eps, pt.frequency_hz),
        Quadrature::Antisqueezed => {
            crate::noise::antisqueezed_unchecked(p.eta, p.kappa, eps, pt.frequency_hz)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_inverse_of_logit() {
        for p in [1e-9, 0.05, 0.5, 0.952, 1.0 - 1e-9] {
            assert!((logistic(logit(p)) - p).abs() < 1e-15);
        }
        assert_eq!(logistic(-800.0), 0.0);
        assert_eq!(logistic(800.0), 1.0);
    }

    #[test]
    fn encode_decode() {
        for kp in [KappaParameter::DecayRate, KappaParameter::FwhmHz] {
            let m = FitModel { points: vec![], n_datasets: 2, kappa_parameter: kp };
            let p = FitParams { kappa: TAU * 109.8e6, eta: 0.952, epsilons: vec![0.857, 0.086] };
            let q = m.decode(&m.encode(&p));
            assert!((q.kappa / p.kappa - 1.0).abs() < 1e-14);
            assert!((q.eta - p.eta).abs() < 1e-14);
            assert!((q.epsilons[1] - 0.086).abs() < 1e-14);
        }
    }
}
