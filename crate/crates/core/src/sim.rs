//! Synthetic spectrum-analyzer measurements of a squeezed-vacuum source.
//!
//! Every displayed point is drawn from an [`AnalyzerStatistics`] strategy
//! around the expected power `v·(1 − d) + d`, i.e. the model variance plus a
//! frequency-flat dark level `d`, normalised to the (dark-inclusive) shot
//! noise. [`crate::noise::dark_noise_correct`] is the exact inverse of this
//! normalisation.
//!
//! Randomness comes from ChaCha20 seeded with `seed` and switched to stream
//! `stream`, so traces generated in parallel from `(seed, index)` pairs are
//! independent of execution order.

use std::collections::BTreeMap;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::Dataset;
use crate::noise::{
    antisqueezed_variance, quadrature_pair, quadrature_variance, squeezed_variance, DarkNoiseContext, NoiseModelParams,
};
use crate::registry::Registry;
use crate::trace::{Axis, TraceData, TraceKind};

pub type SimRng = ChaCha20Rng;

pub const RNG_NAME: &str = "ChaCha20";

/// Identifies one reproducible random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Span {
    Swept {
        start_hz: f64,
        stop_hz: f64,
        n_points: usize,
    },
    Zero {
        center_hz: f64,
        duration_s: f64,
        n_points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSettings {
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub span: Span,
}

impl AnalyzerSettings {
    /// Number of independent power samples averaged per displayed point.
    pub fn n_eff(&self) -> f64 {
        self.rbw_hz / self.vbw_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vbw_hz > 0.0 && self.rbw_hz >= self.vbw_hz && self.rbw_hz.is_finite()) {
            return Err(Error::Config(format!(
                "need rbw >= vbw > 0, got rbw = {} Hz, vbw = {} Hz",
                self.rbw_hz, self.vbw_hz
            )));
        }
        match self.span {
            Span::Swept {
                start_hz,
                stop_hz,
                n_points,
            } => {
                if n_points < 2 || !(start_hz >= 0.0 && stop_hz > start_hz && stop_hz.is_finite()) {
                    return Err(Error::Config(
                        "swept span needs 0 <= start < stop and at least 2 points".into(),
                    ));
                }
            }
            Span::Zero {
                center_hz,
                duration_s,
                n_points,
            } => {
                if n_points < 2 || !(center_hz >= 0.0 && duration_s > 0.0 && duration_s.is_finite()) {
                    return Err(Error::Config(
                        "zero span needs centre >= 0, duration > 0 and at least 2 points".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evenly spaced abscissa (Hz for swept, s for zero span).
    pub fn grid(&self) -> Vec<f64> {
        let (a, b, n) = match self.span {
            Span::Swept {
                start_hz,
                stop_hz,
                n_points,
            } => (start_hz, stop_hz, n_points),
            Span::Zero {
                duration_s,
                n_points,
                ..
            } => (0.0, duration_s, n_points),
        };
        let step = (b - a) / (n - 1) as f64;
        (0..n)
            .map(|k| if k + 1 == n { b } else { a + step * k as f64 })
            .collect()
    }
}

/// Linear local-oscillator phase ramp with optional Gaussian jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScan {
    pub start_rad: f64,
    pub rate_rad_per_s: f64,
    /// RMS phase jitter in rad.
    pub sigma_theta: f64,
}

impl PhaseScan {
    pub fn fixed(theta: f64) -> Self {
        Self {
            start_rad: theta,
            rate_rad_per_s: 0.0,
            sigma_theta: 0.0,
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.start_rad + self.rate_rad_per_s * t
    }
}

/// How a displayed trace value scatters around its expected power.
pub trait AnalyzerStatistics: Send + Sync {
    fn name(&self) -> &'static str;
    /// One displayed linear power given the expected power `mean`.
    fn display(&self, mean: f64, rng: &mut SimRng) -> f64;
}

/// Mean of `n_eff` exponential power samples, drawn as
/// `Gamma(n_eff, mean/n_eff)`.
#[derive(Debug, Clone, Copy)]
pub struct VideoAverage {
    n_eff: f64,
}

impl VideoAverage {
    pub fn new(n_eff: f64) -> Result<Self> {
        if !(n_eff >= 1.0 && n_eff.is_finite()) {
            return Err(Error::Config(format!("video averaging needs n_eff >= 1, got {n_eff}")));
        }
        Ok(Self { n_eff })
    }
}

impl AnalyzerStatistics for VideoAverage {
    fn name(&self) -> &'static str {
        "video-average"
    }

    fn display(&self, mean: f64, rng: &mut SimRng) -> f64 {
        Gamma::new(self.n_eff, mean / self.n_eff)
            .expect("shape and scale are positive")
            .sample(rng)
    }
}

/// Additive Gaussian scatter of fixed width in dB.
#[derive(Debug, Clone, Copy)]
pub struct GaussianDb {
    sigma_db: f64,
}

impl GaussianDb {
    pub fn new(sigma_db: f64) -> Result<Self> {
        if !(sigma_db >= 0.0 && sigma_db.is_finite()) {
            return Err(Error::Config(format!("sigma_db must be non-negative, got {sigma_db}")));
        }
        Ok(Self { sigma_db })
    }
}

impl AnalyzerStatistics for GaussianDb {
    fn name(&self) -> &'static str {
        "gaussian-db"
    }

    fn display(&self, mean: f64, rng: &mut SimRng) -> f64 {
        let noise = Normal::new(0.0, self.sigma_db).expect("finite sigma").sample(rng);
        mean * 10f64.powf(noise / 10.0)
    }
}

/// The infinite-averaging limit: the expected power itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct Noiseless;

impl AnalyzerStatistics for Noiseless {
    fn name(&self) -> &'static str {
        "noiseless"
    }

    fn display(&self, mean: f64, _rng: &mut SimRng) -> f64 {
        mean
    }
}

/// Construction parameters shared by the statistics strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsParams {
    pub n_eff: f64,
    pub sigma_db: f64,
}

pub type StatsRegistry = Registry<dyn AnalyzerStatistics, StatsParams>;

/// `video-average`, `gaussian-db` and `noiseless`.
pub fn builtin_registry() -> StatsRegistry {
    let mut reg: StatsRegistry = Registry::new("analyzer statistics");
    reg.register("video-average", |p| Ok(Box::new(VideoAverage::new(p.n_eff)?)))
        .register("gaussian-db", |p| Ok(Box::new(GaussianDb::new(p.sigma_db)?)))
        .register("noiseless", |_| Ok(Box::new(Noiseless)));
    reg
}

/// Expected variance when the LO phase is `Normal(theta_mean, sigma²)`:
/// `v_x(1 + c)/2 + v_y(1 − c)/2` with `c = e^{−2σ²} cos 2θ̄`.
pub fn phase_averaged_variance(
    truth: &NoiseModelParams,
    f: f64,
    theta_mean: f64,
    sigma_theta: f64,
) -> Result<f64> {
    if !(sigma_theta >= 0.0) {
        return Err(Error::domain(format!("phase jitter {sigma_theta} rad must be non-negative")));
    }
    if sigma_theta == 0.0 {
        return quadrature_variance(truth, f, theta_mean);
    }
    let pair = quadrature_pair(truth, f)?;
    let c = (-2.0 * sigma_theta * sigma_theta).exp() * (2.0 * theta_mean).cos();
    Ok(pair.v_x * (1.0 + c) / 2.0 + pair.v_y * (1.0 - c) / 2.0)
}

fn displayed_db(expected: f64, stats: &dyn AnalyzerStatistics, rng: &mut SimRng) -> f64 {
    // A positive draw can still underflow for absurd settings; keep the
    // trace finite.
    10.0 * stats.display(expected, rng).max(f64::MIN_POSITIVE).log10()
}

fn metadata(
    truth: &NoiseModelParams,
    stats: &dyn AnalyzerStatistics,
    rng: RngStream,
) -> BTreeMap<String, String> {
    let mut extra = BTreeMap::new();
    extra.insert("rng".into(), RNG_NAME.into());
    extra.insert("seed".into(), rng.seed.to_string());
    extra.insert("stream".into(), rng.stream.to_string());
    extra.insert("statistics".into(), stats.name().into());
    extra.insert("truth_eta".into(), truth.eta.to_string());
    extra.insert("truth_fwhm_hz".into(), truth.fwhm_hz().to_string());
    extra.insert("truth_epsilon".into(), truth.epsilon.to_string());
    extra
}

/// Synthetic swept-span trace of the given kind.
pub fn synth_spectrum(
    truth: &NoiseModelParams,
    kind: TraceKind,
    settings: &AnalyzerSettings,
    dark: &DarkNoiseContext,
    rng_stream: RngStream,
    stats: &dyn AnalyzerStatistics,
) -> Result<TraceData> {
    truth.validate()?;
    settings.validate()?;
    if !matches!(settings.span, Span::Swept { .. }) {
        return Err(Error::Config("synth_spectrum needs a swept span".into()));
    }
    let d = dark.linear_level();
    let freqs = settings.grid();
    let mut rng = rng_stream.rng();
    let mut power_db = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let v = match kind {
            TraceKind::Squeezed => squeezed_variance(truth, f)?,
            TraceKind::Antisqueezed => antisqueezed_variance(truth, f)?,
            TraceKind::Shot => 1.0,
            TraceKind::Dark => 0.0,
            TraceKind::PhaseScan => {
                return Err(Error::Config("use zero_span_phase_scan for phase scans".into()))
            }
        };
        power_db.push(displayed_db(v * (1.0 - d) + d, stats, &mut rng));
    }
    Ok(TraceData {
        axis: Axis::FrequencyHz,
        frequencies_hz: freqs,
        power_db,
        kind,
        rbw_hz: settings.rbw_hz,
        vbw_hz: settings.vbw_hz,
        lo_power_mw: None,
        pump_power_mw: None,
        dark_subtracted: false,
        dark_clearance_db: (d > 0.0).then_some(dark.clearance_db),
        extra: metadata(truth, stats, rng_stream),
    })
}

/// Zero-span record at sideband `f` while the LO phase follows `scan`.
pub fn zero_span_phase_scan(
    truth: &NoiseModelParams,
    f: f64,
    scan: &PhaseScan,
    settings: &AnalyzerSettings,
    dark: &DarkNoiseContext,
    rng_stream: RngStream,
    stats: &dyn AnalyzerStatistics,
) -> Result<TraceData> {
    truth.validate()?;
    settings.validate()?;
    if !matches!(settings.span, Span::Zero { .. }) {
        return Err(Error::Config("zero_span_phase_scan needs a zero span".into()));
    }
    let d = dark.linear_level();
    let times = settings.grid();
    let mut rng = rng_stream.rng();
    let mut power_db = Vec::with_capacity(times.len());
    for &t in &times {
        let v = phase_averaged_variance(truth, f, scan.theta(t), scan.sigma_theta)?;
        power_db.push(displayed_db(v * (1.0 - d) + d, stats, &mut rng));
    }
    let mut extra = metadata(truth, stats, rng_stream);
    extra.insert("center_hz".into(), f.to_string());
    extra.insert("sigma_theta_rad".into(), scan.sigma_theta.to_string());
    Ok(TraceData {
        axis: Axis::TimeS,
        frequencies_hz: times,
        power_db,
        kind: TraceKind::PhaseScan,
        rbw_hz: settings.rbw_hz,
        vbw_hz: settings.vbw_hz,
        lo_power_mw: None,
        pump_power_mw: None,
        dark_subtracted: false,
        dark_clearance_db: (d > 0.0).then_some(dark.clearance_db),
        extra,
    })
}

/// Squeezed/anti-squeezed pairs for each truth, generated in parallel.
/// Dataset `i` uses streams `2i` and `2i + 1`.
pub fn synth_datasets(
    truths: &[NoiseModelParams],
    settings: &AnalyzerSettings,
    dark: &DarkNoiseContext,
    seed: u64,
    stats: &dyn AnalyzerStatistics,
) -> Result<Vec<Dataset>> {
    truths
        .par_iter()
        .enumerate()
        .map(|(i, truth)| {
            let i = i as u64;
            let sq = synth_spectrum(truth, TraceKind::Squeezed, settings, dark, RngStream::new(seed, 2 * i), stats)?;
            let asq =
                synth_spectrum(truth, TraceKind::Antisqueezed, settings, dark, RngStream::new(seed, 2 * i + 1), stats)?;
            Ok(Dataset::pair(sq, asq))
        })
        .collect()
}
