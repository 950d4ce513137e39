use std::f64::consts::TAU;

use sqzlab::fit::{fit_joint, jacobian_check, residuals, Dataset, FitParams, FitProblem, KappaParameter};
use sqzlab::noise::{DarkNoiseContext, NoiseModelParams};
use sqzlab::sim::{synth_datasets, AnalyzerSettings, GaussianDb, Noiseless, Span, VideoAverage};
use sqzlab::trace::{ExclusionWindow, TraceKind};

const REFERENCE_EPS: [f64; 4] = [0.857, 0.476, 0.263, 0.086];

fn settings() -> AnalyzerSettings {
    AnalyzerSettings {
        rbw_hz: 300e3,
        vbw_hz: 300.0,
        span: Span::Swept {
            start_hz: 3e6,
            stop_hz: 25e6,
            n_points: 221,
        },
    }
}

fn truths(eta: f64, fwhm: f64, eps: &[f64]) -> Vec<NoiseModelParams> {
    eps.iter()
        .map(|e| NoiseModelParams::from_fwhm_hz(eta, fwhm, *e).unwrap())
        .collect()
}

fn reference_problem(seed: u64, sigma_db: f64) -> FitProblem {
    let stats = GaussianDb::new(sigma_db).unwrap();
    let ds = synth_datasets(&truths(0.952, 109.8e6, &REFERENCE_EPS), &settings(), &DarkNoiseContext::none(), seed, &stats)
        .unwrap();
    FitProblem::new(ds)
}

fn truth_params() -> FitParams {
    FitParams {
        kappa: TAU * 109.8e6,
        eta: 0.952,
        epsilons: REFERENCE_EPS.to_vec(),
    }
}

#[test]
fn eight_trace_recovery() {
    let r = fit_joint(&reference_problem(1, 0.05)).unwrap();
    assert!(r.converged, "{:?}", r.termination);
    assert!((r.fwhm_hz / 109.8e6 - 1.0).abs() < 0.02, "{}", r.fwhm_hz);
    assert!((r.eta_hat - 0.952).abs() < 0.01, "{}", r.eta_hat);
    for (e, t) in r.epsilons_hat.iter().zip(REFERENCE_EPS) {
        assert!((e - t).abs() < 0.02, "{e} vs {t}");
    }
    assert!((r.residual_rms_db - 0.05).abs() < 0.005, "{}", r.residual_rms_db);
    assert!(r.std_errors.eta > 0.0 && r.std_errors.kappa > 0.0);
    // Two traces per dataset, 221 points each, 21 inside the lock window.
    assert_eq!(r.n_points, 8 * 200);
}

#[test]
fn noiseless_single_dataset_exact() {
    let ds = synth_datasets(&truths(0.93, 80e6, &[0.6]), &settings(), &DarkNoiseContext::none(), 0, &Noiseless).unwrap();
    let r = fit_joint(&FitProblem::new(ds)).unwrap();
    assert!(r.converged);
    assert!((r.fwhm_hz / 80e6 - 1.0).abs() < 1e-8, "{}", r.fwhm_hz);
    assert!((r.eta_hat - 0.93).abs() < 1e-8);
    assert!((r.epsilons_hat[0] - 0.6).abs() < 1e-8);
}

#[test]
fn residuals_zero_at_truth_and_grow_with_eta() {
    let ds = synth_datasets(&truths(0.952, 109.8e6, &REFERENCE_EPS), &settings(), &DarkNoiseContext::none(), 0, &Noiseless).unwrap();
    let p = FitProblem::new(ds);
    let r0 = residuals(&p, &truth_params()).unwrap();
    assert!(r0.iter().all(|r| r.abs() < 1e-12));
    let mut off = truth_params();
    off.eta += 0.01;
    let r1 = residuals(&p, &off).unwrap();
    let rms = |r: &[f64]| (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
    assert!(rms(&r1) > rms(&r0) && rms(&r1) > 1e-3);
}

#[test]
fn residual_rms_at_truth_matches_noise() {
    let p = reference_problem(3, 0.05);
    let r = residuals(&p, &truth_params()).unwrap();
    let rms = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
    assert!((rms - 0.05).abs() < 0.004, "{rms}");
}

#[test]
fn objective_never_increases() {
    let r = fit_joint(&reference_problem(5, 0.05)).unwrap();
    assert!(r.cost_history.len() > 1);
    assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn excluded_points_have_no_influence() {
    let base = reference_problem(8, 0.05);
    let mut poked = base.clone();
    for ds in &mut poked.datasets {
        for t in [ds.squeezed.as_mut().unwrap(), ds.antisqueezed.as_mut().unwrap()] {
            for (f, p) in t.frequencies_hz.iter().zip(t.power_db.iter_mut()) {
                if (16.5e6..=18.5e6).contains(f) {
                    *p -= 0.7;
                }
            }
        }
    }
    assert_ne!(base.datasets, poked.datasets);
    assert_eq!(fit_joint(&base).unwrap(), fit_joint(&poked).unwrap());
}

#[test]
fn fwhm_parameterisation_gives_same_linewidth() {
    let base = reference_problem(9, 0.05);
    let mut alt = base.clone();
    alt.kappa_parameter = KappaParameter::FwhmHz;
    let a = fit_joint(&base).unwrap();
    let b = fit_joint(&alt).unwrap();
    assert!((a.fwhm_hz / b.fwhm_hz - 1.0).abs() < 1e-8, "{} {}", a.fwhm_hz, b.fwhm_hz);
    assert!((a.eta_hat - b.eta_hat).abs() < 1e-8);
}

#[test]
fn finite_difference_strategy_agrees() {
    let base = reference_problem(10, 0.05);
    let mut fd = base.clone();
    fd.jacobian = "central-difference".into();
    let a = fit_joint(&base).unwrap();
    let b = fit_joint(&fd).unwrap();
    assert!((a.fwhm_hz / b.fwhm_hz - 1.0).abs() < 1e-6);
    assert!((a.eta_hat - b.eta_hat).abs() < 1e-6);
    let mut bad = base;
    bad.jacobian = "secant".into();
    assert!(fit_joint(&bad).is_err());
}

#[test]
fn jacobian_matches_finite_differences() {
    let p = reference_problem(0, 0.05);
    let dev = jacobian_check(&p, &truth_params()).unwrap();
    assert!(dev < 1e-6, "{dev}");
    let mut near_zero = truth_params();
    near_zero.epsilons = vec![1e-4, 3e-4, 1e-3, 2e-5];
    let dev = jacobian_check(&p, &near_zero).unwrap();
    assert!(dev < 1e-5, "{dev}");
}

#[test]
fn scale_invariance_of_f_over_kappa() {
    let stretch = |k: f64| {
        let s = AnalyzerSettings {
            span: Span::Swept {
                start_hz: 3e6 * k,
                stop_hz: 25e6 * k,
                n_points: 221,
            },
            ..settings()
        };
        let ds = synth_datasets(&truths(0.952, 109.8e6 * k, &REFERENCE_EPS), &s, &DarkNoiseContext::none(), 4, &GaussianDb::new(0.05).unwrap())
            .unwrap();
        let mut p = FitProblem::new(ds);
        p.exclusions = vec![ExclusionWindow::new(16.5e6 * k, 18.5e6 * k).unwrap()];
        p
    };
    let (a, b) = (stretch(1.0), stretch(10.0));
    let mut pa = truth_params();
    pa.epsilons = vec![0.8, 0.5, 0.2, 0.1];
    let mut pb = pa.clone();
    pb.kappa *= 10.0;
    // Frequencies and linewidth both ×10: residuals must coincide.
    let ra = residuals(&a, &pa).unwrap();
    let rb = residuals(&b, &pb).unwrap();
    assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x - y).abs() < 1e-11, "{x} {y}");
    }
}

#[test]
fn squeezed_only_inflates_eta_error() {
    let full = reference_problem(12, 0.05);
    let sq_only = FitProblem::new(
        full.datasets
            .iter()
            .map(|d| Dataset::squeezed_only(d.squeezed.clone().unwrap()))
            .collect(),
    );
    let a = fit_joint(&full).unwrap();
    let b = fit_joint(&sq_only).unwrap();
    assert!(b.converged);
    assert!(b.std_errors.eta > 3.0 * a.std_errors.eta, "{} vs {}", b.std_errors.eta, a.std_errors.eta);
    assert!(b.std_errors.epsilons[0] > 3.0 * a.std_errors.epsilons[0]);
}

#[test]
fn video_averaged_input_recovers_truth() {
    // vbw chosen so the video average gives ≈0.05 dB rms.
    let n_eff = (10.0 / std::f64::consts::LN_10 / 0.05f64).powi(2);
    let s = AnalyzerSettings { vbw_hz: 300e3 / n_eff, ..settings() };
    let ds = synth_datasets(&truths(0.952, 109.8e6, &REFERENCE_EPS), &s, &DarkNoiseContext::none(), 21, &VideoAverage::new(n_eff).unwrap())
        .unwrap();
    let r = fit_joint(&FitProblem::new(ds)).unwrap();
    assert!((r.fwhm_hz / 109.8e6 - 1.0).abs() < 0.02);
    assert!((r.eta_hat - 0.952).abs() < 0.01);
}

#[test]
fn dark_noise_is_removed_before_fitting() {
    let ds = synth_datasets(&truths(0.952, 109.8e6, &REFERENCE_EPS), &settings(), &DarkNoiseContext::new(-24.9).unwrap(), 0, &Noiseless)
        .unwrap();
    assert!(ds[0].squeezed.as_ref().unwrap().dark_clearance_db.is_some());
    let r = fit_joint(&FitProblem::new(ds)).unwrap();
    assert!((r.eta_hat - 0.952).abs() < 1e-7, "{}", r.eta_hat);
}

#[test]
fn invalid_problems() {
    assert!(fit_joint(&FitProblem::new(vec![])).is_err());
    let mut p = reference_problem(0, 0.05);
    p.exclusions = vec![ExclusionWindow::new(40e6, 50e6).unwrap()];
    assert!(fit_joint(&p).is_err());
    let mut p = reference_problem(0, 0.05);
    let ds = &mut p.datasets[0];
    std::mem::swap(&mut ds.squeezed, &mut ds.antisqueezed);
    assert!(fit_joint(&p).is_err());
    let mut p = reference_problem(0, 0.05);
    p.initial_guess = Some(FitParams { kappa: 1e9, eta: 0.9, epsilons: vec![0.5] });
    assert!(fit_joint(&p).is_err());
    let _ = TraceKind::Shot;
}
