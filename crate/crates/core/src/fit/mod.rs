//! Joint least-squares fit of squeezed and anti-squeezed spectra.
//!
//! All datasets share the cavity decay rate κ and detection efficiency η;
//! each dataset (one pump power) has its own pump parameter ε. Residuals are
//! taken in dB with equal weights, and points inside the exclusion windows
//! are dropped before anything else sees them.

mod init;
pub mod jacobian;
pub mod lm;
pub mod model;

use std::f64::consts::TAU;

use nalgebra::DVector;

pub use jacobian::{builtin_registry, JacobianStrategy};
pub use lm::{Convergence, Termination};
pub use model::{FitModel, FitParams, FitPoint, KappaParameter, Quadrature};

use crate::error::{Error, Result};
use crate::trace::{apply_exclusions, ExclusionWindow, TraceData, TraceKind};

/// One pump setting: a squeezed and/or an anti-squeezed trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub squeezed: Option<TraceData>,
    pub antisqueezed: Option<TraceData>,
}

impl Dataset {
    pub fn pair(squeezed: TraceData, antisqueezed: TraceData) -> Self {
        Self {
            squeezed: Some(squeezed),
            antisqueezed: Some(antisqueezed),
        }
    }

    pub fn squeezed_only(squeezed: TraceData) -> Self {
        Self {
            squeezed: Some(squeezed),
            antisqueezed: None,
        }
    }

    fn traces(&self) -> impl Iterator<Item = (Quadrature, &TraceData)> {
        self.squeezed
            .iter()
            .map(|t| (Quadrature::Squeezed, t))
            .chain(self.antisqueezed.iter().map(|t| (Quadrature::Antisqueezed, t)))
    }
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub datasets: Vec<Dataset>,
    pub exclusions: Vec<ExclusionWindow>,
    /// Starting point; derived from the data when absent.
    pub initial_guess: Option<FitParams>,
    pub convergence: Convergence,
    pub kappa_parameter: KappaParameter,
    /// Registered name of the Jacobian strategy.
    pub jacobian: String,
}

impl FitProblem {
    /// Problem with the default lock-modulation exclusion and solver settings.
    pub fn new(datasets: Vec<Dataset>) -> Self {
        Self {
            datasets,
            exclusions: vec![ExclusionWindow::lock_modulation()],
            initial_guess: None,
            convergence: Convergence::default(),
            kappa_parameter: KappaParameter::default(),
            jacobian: "analytic".to_owned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("fit needs at least one dataset".into()));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, ds) in self.datasets.iter().enumerate() {
            if ds.squeezed.is_none() && ds.antisqueezed.is_none() {
                return Err(Error::Config(format!("dataset {i} has no traces")));
            }
            for (q, t) in ds.traces() {
                t.validate()?;
                let expected = match q {
                    Quadrature::Squeezed => TraceKind::Squeezed,
                    Quadrature::Antisqueezed => TraceKind::Antisqueezed,
                };
                if t.kind != expected {
                    return Err(Error::Config(format!(
                        "dataset {i}: expected a {expected} trace, got {}",
                        t.kind
                    )));
                }
                let (a, b) = t.span().expect("validated trace is non-empty");
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        for w in &self.exclusions {
            if !w.overlaps(lo, hi) {
                return Err(Error::Config(format!(
                    "exclusion window [{}, {}] Hz lies outside the data span [{lo}, {hi}] Hz",
                    w.start_hz, w.stop_hz
                )));
            }
        }
        if let Some(g) = &self.initial_guess {
            if g.epsilons.len() != self.datasets.len() {
                return Err(Error::Config("initial guess needs one epsilon per dataset".into()));
            }
            let ok = g.kappa > 0.0
                && g.kappa.is_finite()
                && g.eta > 0.0
                && g.eta < 1.0
                && g.epsilons.iter().all(|e| *e > 0.0 && *e < 1.0);
            if !ok {
                return Err(Error::Config(
                    "initial guess must satisfy kappa > 0, 0 < eta < 1, 0 < epsilon < 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Retained points in residual order: dataset, then squeezed before
    /// anti-squeezed, then frequency.
    pub fn model(&self) -> Result<FitModel> {
        self.validate()?;
        let mut points = Vec::new();
        for (i, ds) in self.datasets.iter().enumerate() {
            for (q, t) in ds.traces() {
                let kept = apply_exclusions(t, &self.exclusions)?;
                let source = if kept.dark_subtracted || kept.dark_clearance_db.is_none() {
                    kept
                } else {
                    kept.dark_corrected()?
                };
                points.extend(source.frequencies_hz.iter().zip(&source.power_db).map(|(f, p)| FitPoint {
                    dataset: i,
                    quadrature: q,
                    frequency_hz: *f,
                    measured_db: *p,
                }));
            }
        }
        Ok(FitModel {
            points,
            n_datasets: self.datasets.len(),
            kappa_parameter: self.kappa_parameter,
        })
    }

    pub fn initial_params(&self) -> Result<FitParams> {
        match &self.initial_guess {
            Some(g) => Ok(g.clone()),
            None => {
                let m = self.model()?;
                Ok(init::initial_guess(&m.points, m.n_datasets))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdErrors {
    pub kappa: f64,
    pub fwhm_hz: f64,
    pub eta: f64,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kappa_hat: f64,
    pub fwhm_hz: f64,
    pub eta_hat: f64,
    pub epsilons_hat: Vec<f64>,
    pub residual_rms_db: f64,
    pub std_errors: StdErrors,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Objective `½Σr²` at the start and after each accepted step.
    pub cost_history: Vec<f64>,
    pub n_points: usize,
}

impl FitResult {
    pub fn params(&self) -> FitParams {
        FitParams {
            kappa: self.kappa_hat,
            eta: self.eta_hat,
            epsilons: self.epsilons_hat.clone(),
        }
    }
}

/// dB residuals (model − measured) of `problem` at `params`.
pub fn residuals(problem: &FitProblem, params: &FitParams) -> Result<Vec<f64>> {
    let model = problem.model()?;
    if params.epsilons.len() != model.n_datasets {
        return Err(Error::Config("one epsilon per dataset required".into()));
    }
    let p = params;
    if !(p.kappa > 0.0) || !(0.0..=1.0).contains(&p.eta) || !p.epsilons.iter().all(|e| (0.0..1.0).contains(e)) {
        return Err(Error::domain("fit parameters outside the model domain"));
    }
    Ok(model
        .points
        .iter()
        .map(|pt| {
            let eps = p.epsilons[pt.dataset];
            let v = match pt.quadrature {
                Quadrature::Squeezed => crate::noise::squeezed_unchecked(p.eta, p.kappa, eps, pt.frequency_hz),
                Quadrature::Antisqueezed => {
                    crate::noise::antisqueezed_unchecked(p.eta, p.kappa, eps, pt.frequency_hz)
                }
            };
            10.0 * v.log10() - pt.measured_db
        })
        .collect())
}

/// Runs the damped least-squares fit.
///
/// Non-convergence is not an error: the best parameters found are returned
/// with `converged == false`. A singular normal matrix at the optimum is
/// reported as [`Error::Degenerate`].
pub fn fit_joint(problem: &FitProblem) -> Result<FitResult> {
    let model = problem.model()?;
    let strategy = jacobian::by_name(&problem.jacobian)?;
    let n = model.n_params();
    let m = model.points.len();
    if m < n {
        return Err(Error::Degenerate(format!("{m} points cannot determine {n} parameters")));
    }
    let start = match &problem.initial_guess {
        Some(g) => g.clone(),
        None => init::initial_guess(&model.points, model.n_datasets),
    };
    let x0 = model.encode(&start);

    let out = lm::minimize(
        |x| model.residuals(x),
        |x| strategy.jacobian(&model, x),
        x0,
        &problem.convergence,
    );

    let p = model.decode(&out.x);
    let jac = strategy.jacobian(&model, &out.x);
    let normal = jac.transpose() * &jac;
    let dof = (m - n).max(1) as f64;
    let sigma2 = 2.0 * out.cost / dof;
    let cov = normal
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .filter(|c| c.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Degenerate("normal matrix is singular at the optimum".into()))?;
    let se = |j: usize| (sigma2 * cov[(j, j)]).max(0.0).sqrt();

    let kappa_se = p.kappa * se(0);
    Ok(FitResult {
        kappa_hat: p.kappa,
        fwhm_hz: p.kappa / TAU,
        eta_hat: p.eta,
        epsilons_hat: p.epsilons.clone(),
        residual_rms_db: (2.0 * out.cost / m as f64).sqrt(),
        std_errors: StdErrors {
            kappa: kappa_se,
            fwhm_hz: kappa_se / TAU,
            eta: p.eta * (1.0 - p.eta) * se(1),
            epsilons: p
                .epsilons
                .iter()
                .enumerate()
                .map(|(i, e)| e * (1.0 - e) * se(2 + i))
                .collect(),
        },
        iterations: out.iterations,
        converged: out.converged,
        termination: out.termination,
        cost_history: out.cost_history,
        n_points: m,
    })
}

/// Largest elementwise relative deviation between the analytic Jacobian
/// and central finite differences at `params`.
///
/// Entries are compared relative to their own magnitude, floored at 1e−6 of
/// the column's largest entry so structurally tiny derivatives do not
/// dominate.
pub fn jacobian_check(problem: &FitProblem, params: &FitParams) -> Result<f64> {
    let model = problem.model()?;
    if params.epsilons.len() != model.n_datasets {
        return Err(Error::Config("one epsilon per dataset required".into()));
    }
    let x: DVector<f64> = model.encode(params);
    let a = jacobian::Analytic.jacobian(&model, &x);
    let fd = jacobian::CentralDifference.jacobian(&model, &x);
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        let col_scale = a.column(j).amax();
        if col_scale == 0.0 {
            continue;
        }
        for i in 0..a.nrows() {
            let denom = a[(i, j)].abs().max(1e-6 * col_scale);
            worst = worst.max((a[(i, j)] - fd[(i, j)]).abs() / denom);
        }
    }
    Ok(worst)
}
