use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sqzlab::fit::{fit_joint, FitProblem};
use sqzlab::noise::{db_from_linear, quadrature_variance, squeezed_variance, DarkNoiseContext, NoiseModelParams};
use sqzlab::sim::{
    phase_averaged_variance, synth_datasets, synth_spectrum, AnalyzerSettings, GaussianDb, Noiseless, RngStream, Span,
    VideoAverage,
};
use sqzlab::trace::{parse_trace_csv, TraceKind};

fn settings(vbw_hz: f64, n_points: usize) -> AnalyzerSettings {
    AnalyzerSettings {
        rbw_hz: 300e3,
        vbw_hz,
        span: Span::Swept {
            start_hz: 3e6,
            stop_hz: 25e6,
            n_points,
        },
    }
}

#[test]
fn estimates_within_three_standard_errors() {
    let mut draws = ChaCha20Rng::seed_from_u64(2024);
    let stats = GaussianDb::new(0.05).unwrap();
    let mut covered = 0;
    for trial in 0..100u64 {
        let eta: f64 = draws.random_range(0.8..0.999);
        let fwhm: f64 = draws.random_range(50e6..300e6);
        let eps: Vec<f64> = (0..4).map(|_| draws.random_range(0.05..0.9)).collect();
        let truths: Vec<_> = eps
            .iter()
            .map(|e| NoiseModelParams::from_fwhm_hz(eta, fwhm, *e).unwrap())
            .collect();
        let ds = synth_datasets(&truths, &settings(300.0, 221), &DarkNoiseContext::none(), trial, &stats).unwrap();
        let r = fit_joint(&FitProblem::new(ds)).unwrap();
        let se = &r.std_errors;
        let ok = r.converged
            && (r.fwhm_hz - fwhm).abs() < 3.0 * se.fwhm_hz
            && (r.eta_hat - eta).abs() < 3.0 * se.eta
            && r
                .epsilons_hat
                .iter()
                .zip(&eps)
                .zip(&se.epsilons)
                .all(|((e, t), s)| (e - t).abs() < 3.0 * s);
        covered += ok as usize;
    }
    assert!(covered >= 95, "{covered}/100 trials within 3 SE");
}

#[test]
fn sample_mean_converges_to_model() {
    // Linear power is unbiased under video averaging; the mean of the
    // displayed linear value must match the model within 3σ/√N.
    let truth = NoiseModelParams::from_fwhm_hz(0.952, 109.8e6, 0.857).unwrap();
    let s = settings(30e3, 45);
    let n_eff = s.n_eff();
    let stats = VideoAverage::new(n_eff).unwrap();
    let seeds = 1000;
    let traces: Vec<_> = (0..seeds)
        .map(|seed| {
            synth_spectrum(&truth, TraceKind::Squeezed, &s, &DarkNoiseContext::none(), RngStream::new(seed, 0), &stats)
                .unwrap()
        })
        .collect();
    let exact = synth_spectrum(&truth, TraceKind::Squeezed, &s, &DarkNoiseContext::none(), RngStream::new(0, 0), &Noiseless)
        .unwrap();
    for (k, model_db) in exact.power_db.iter().enumerate() {
        let model = 10f64.powf(model_db / 10.0);
        let mean = traces.iter().map(|t| 10f64.powf(t.power_db[k] / 10.0)).sum::<f64>() / seeds as f64;
        let sigma = model / n_eff.sqrt();
        assert!(
            (mean - model).abs() < 3.0 * sigma / (seeds as f64).sqrt(),
            "point {k}: {mean} vs {model}"
        );
    }
}

#[test]
fn jitter_never_deepens_squeezing() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let p = NoiseModelParams::new(
            rng.random_range(0.0..=1.0),
            rng.random_range(1e6..1e10),
            rng.random_range(0.0..0.99),
        )
        .unwrap();
        let f = rng.random_range(0.0..1e9);
        let sigma = rng.random_range(0.0..1.0);
        let jittered = phase_averaged_variance(&p, f, 0.0, sigma).unwrap();
        let clean = squeezed_variance(&p, f).unwrap();
        assert!(jittered >= clean - 1e-15, "{jittered} < {clean}");
        assert_eq!(phase_averaged_variance(&p, f, 0.3, 0.0).unwrap(), quadrature_variance(&p, f, 0.3).unwrap());
    }
}

#[test]
fn synthetic_export_reimports_bit_identically() {
    let truth = NoiseModelParams::from_fwhm_hz(0.952, 109.8e6, 0.857).unwrap();
    let dark = DarkNoiseContext::new(-24.9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (i, kind) in [TraceKind::Squeezed, TraceKind::Antisqueezed].into_iter().enumerate() {
        let t = synth_spectrum(&truth, kind, &settings(300.0, 221), &dark, RngStream::new(5, i as u64), &VideoAverage::new(1000.0).unwrap())
            .unwrap();
        let path = dir.path().join(format!("{kind}.csv"));
        t.write_csv(&path).unwrap();
        let back = parse_trace_csv(&path).unwrap();
        assert_eq!(back, t);
        assert!(back.power_db.iter().zip(&t.power_db).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn shot_trace_is_zero_db_on_average() {
    let s = settings(300.0, 101);
    let t = synth_spectrum(
        &NoiseModelParams::new(0.9, 1e9, 0.5).unwrap(),
        TraceKind::Shot,
        &s,
        &DarkNoiseContext::none(),
        RngStream::new(3, 0),
        &VideoAverage::new(s.n_eff()).unwrap(),
    )
    .unwrap();
    let mean = t.power_db.iter().sum::<f64>() / t.len() as f64;
    assert!(mean.abs() < 0.02, "{mean}");
    assert!(db_from_linear(1.0).unwrap() == 0.0);
}
