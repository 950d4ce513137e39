//! Damped Gauss–Newton (Levenberg–Marquardt) minimisation of `½‖r(x)‖²`.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub max_iterations: usize,
    /// Absolute bound on the accepted step norm in transformed space.
    pub step_tolerance: f64,
    /// Relative bound on the decrease of the objective per accepted step.
    pub residual_tolerance: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            residual_tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    ResidualTolerance,
    /// Residuals vanish to machine precision.
    ExactFit,
    /// No damped step reduces the objective any further.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: DVector<f64>,
    pub residuals: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Objective after the starting point and after each accepted step.
    pub cost_history: Vec<f64>,
}

const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e16;

fn half_sq(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

pub fn minimize<R, J>(residual: R, jacobian: J, x0: DVector<f64>, conv: &Convergence) -> LmOutcome
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = x0;
    let mut r = residual(&x);
    let mut cost = half_sq(&r);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    'outer: while iterations < conv.max_iterations {
        if cost <= 1e-30 * r.len().max(1) as f64 {
            termination = Termination::ExactFit;
            break;
        }
        iterations += 1;
        let jac = jacobian(&x);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;

        loop {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        termination = Termination::Stalled;
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial = &x + &step;
            let r_trial = residual(&trial);
            let c_trial = half_sq(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let decrease = cost - c_trial;
                let step_norm = step.norm();
                x = trial;
                r = r_trial;
                cost = c_trial;
                history.push(cost);
                lambda = (lambda / 10.0).max(LAMBDA_MIN);
                if step_norm <= conv.step_tolerance {
                    termination = Termination::StepTolerance;
                    break 'outer;
                }
                if decrease <= conv.residual_tolerance * cost {
                    termination = Termination::ResidualTolerance;
                    break 'outer;
                }
                break;
            }
            if step.norm() <= conv.step_tolerance {
                // Even the undamped-ish step is below tolerance: at the minimum.
                termination = Termination::StepTolerance;
                break 'outer;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }

    let converged = match termination {
        Termination::MaxIterations => false,
        Termination::Stalled => {
            // Stalling at a stationary point is success; elsewhere it is not.
            let jac = jacobian(&x);
            let g = jac.transpose() * &r;
            g.amax() <= 1e-8 * (1.0 + cost)
        }
        _ => true,
    };

    LmOutcome {
        x,
        residuals: r,
        cost,
        iterations,
        converged,
        termination,
        cost_history: history,
    }
}
