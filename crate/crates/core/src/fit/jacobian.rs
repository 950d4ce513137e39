//! Jacobian strategies for the fit residuals, selectable by name.

use nalgebra::{DMatrix, DVector};

use super::model::FitModel;
use crate::error::Result;
use crate::registry::Registry;

pub trait JacobianStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn jacobian(&self, model: &FitModel, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Closed-form derivatives.
#[derive(Debug, Default, Clone, Copy)]
pub struct Analytic;

impl JacobianStrategy for Analytic {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn jacobian(&self, model: &FitModel, x: &DVector<f64>) -> DMatrix<f64> {
        model.analytic_jacobian(x)
    }
}

/// Central differences with step `h_j = ∛ε_mach · max(1, |x_j|)`.
#[derive(Debug, Default, Clone, Copy)]
pub struct CentralDifference;

impl CentralDifference {
    pub fn step(xj: f64) -> f64 {
        f64::EPSILON.cbrt() * xj.abs().max(1.0)
    }
}

impl JacobianStrategy for CentralDifference {
    fn name(&self) -> &'static str {
        "central-difference"
    }

    fn jacobian(&self, model: &FitModel, x: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(model.points.len(), x.len());
        let mut xp = x.clone();
        for j in 0..x.len() {
            let h = Self::step(x[j]);
            xp[j] = x[j] + h;
            let up = model.model_db(&xp);
            xp[j] = x[j] - h;
            let down = model.model_db(&xp);
            xp[j] = x[j];
            // Effective step after rounding of x ± h.
            let span = (x[j] + h) - (x[j] - h);
            jac.set_column(j, &((up - down) / span));
        }
        jac
    }
}

pub type JacobianRegistry = Registry<dyn JacobianStrategy, ()>;

/// `analytic` and `central-difference`.
pub fn builtin_registry() -> JacobianRegistry {
    let mut reg: JacobianRegistry = Registry::new("jacobian strategy");
    reg.register("analytic", |_| Ok(Box::new(Analytic)))
        .register("central-difference", |_| Ok(Box::new(CentralDifference)));
    reg
}

pub fn by_name(name: &str) -> Result<Box<dyn JacobianStrategy>> {
    builtin_registry().create(name, &())
}
