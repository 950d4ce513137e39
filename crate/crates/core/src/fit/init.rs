//! Closed-form starting point for the joint fit.
//!
//! For a Lorentzian-type spectrum, `1/|v − 1|` is linear in `f²`:
//! `1/(1 − v_x) = [(1+s)² + c f²]/(4ηs)` and `1/(v_y − 1) = [(1−s)² + c f²]/(4ηs)`
//! with the same slope `c = 16π²/κ²`. Weighted straight-line fits give the
//! dc levels `α±` and slopes, from which
//!
//! - `s = √ε` follows from `α₊/α₋ = ((1+s)/(1−s))²`,
//! - κ from the half-depth frequency `√(α₋/β₋)` of the widest anti-squeezed
//!   trace, where `2·2πf/κ = 1 − s`,
//! - η from the deepest squeezed point at the lowest frequency.

use std::f64::consts::{PI, TAU};

use super::model::{FitParams, FitPoint, Quadrature};

const DEFAULT_FWHM_HZ: f64 = 100e6;
const DEFAULT_ETA: f64 = 0.9;

#[derive(Debug, Clone, Copy)]
struct Line {
    intercept: f64,
    slope: f64,
}

/// Weighted regression of `1/|v−1|` on `f²`; `None` when ill-posed.
fn lorentz_line<'a>(points: impl Iterator<Item = &'a FitPoint>) -> Option<Line> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut n = 0;
    for pt in points {
        let v = 10f64.powf(pt.measured_db / 10.0);
        let dev = (v - 1.0).abs();
        let right_side = match pt.quadrature {
            Quadrature::Squeezed => v < 1.0,
            Quadrature::Antisqueezed => v > 1.0,
        };
        if !right_side || dev < 1e-6 {
            continue;
        }
        // z = 1/dev has standard deviation ∝ v/dev².
        let w = (dev * dev / v).powi(2);
        let x = pt.frequency_hz * pt.frequency_hz;
        let z = 1.0 / dev;
        sw += w;
        sx += w * x;
        sy += w * z;
        sxx += w * x * x;
        sxy += w * x * z;
        n += 1;
    }
    if n < 2 {
        return None;
    }
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    (intercept > 0.0 && slope > 0.0 && intercept.is_finite()).then_some(Line { intercept, slope })
}

/// Smaller root of `s² + b s + 1 = 0`, if real and positive.
fn reciprocal_root(b: f64) -> Option<f64> {
    let disc = b * b - 4.0;
    (disc >= 0.0 && b < 0.0).then(|| 2.0 / (-b + disc.sqrt()))
}

pub(crate) fn initial_guess(points: &[FitPoint], n_datasets: usize) -> FitParams {
    let mut sq = vec![None; n_datasets];
    let mut asq = vec![None; n_datasets];
    for (i, (s, a)) in sq.iter_mut().zip(asq.iter_mut()).enumerate() {
        let of = |q| points.iter().filter(move |p| p.dataset == i && p.quadrature == q);
        *s = lorentz_line(of(Quadrature::Squeezed));
        *a = lorentz_line(of(Quadrature::Antisqueezed));
    }

    let s_root: Vec<f64> = (0..n_datasets)
        .map(|i| {
            let s = match (sq[i], asq[i]) {
                (Some(p), Some(m)) => {
                    let r = (p.intercept / m.intercept).sqrt();
                    Some((r - 1.0) / (r + 1.0))
                }
                // (1−s)² = 4ηα₋ s
                (None, Some(m)) => reciprocal_root(-(2.0 + 4.0 * DEFAULT_ETA * m.intercept)),
                // (1+s)² = 4ηα₊ s
                (Some(p), None) => reciprocal_root(2.0 - 4.0 * DEFAULT_ETA * p.intercept),
                (None, None) => None,
            };
            s.filter(|s| s.is_finite() && *s > 0.0).unwrap_or(0.5).clamp(0.03, 0.99)
        })
        .collect();

    let widest = (0..n_datasets)
        .filter_map(|i| asq[i].map(|m| (i, (m.intercept / m.slope).sqrt())))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let kappa = match widest {
        Some((i, f_half)) => 4.0 * PI * f_half / (1.0 - s_root[i]),
        None => (0..n_datasets)
            .filter_map(|i| sq[i].map(|p| 4.0 * PI * (p.intercept / p.slope).sqrt() / (1.0 + s_root[i])))
            .next()
            .unwrap_or(TAU * DEFAULT_FWHM_HZ),
    };
    let kappa = if kappa.is_finite() && kappa > 0.0 { kappa } else { TAU * DEFAULT_FWHM_HZ };

    let y = |f: f64| 4.0 * (TAU * f / kappa).powi(2);
    let deepest = points
        .iter()
        .filter(|p| p.quadrature == Quadrature::Squeezed)
        .min_by(|a, b| {
            a.measured_db
                .total_cmp(&b.measured_db)
                .then(a.frequency_hz.total_cmp(&b.frequency_hz))
        });
    let eta = match deepest {
        Some(pt) => {
            let s = s_root[pt.dataset];
            let v = 10f64.powf(pt.measured_db / 10.0);
            (1.0 - v) * ((1.0 + s).powi(2) + y(pt.frequency_hz)) / (4.0 * s)
        }
        None => points
            .iter()
            .max_by(|a, b| a.measured_db.total_cmp(&b.measured_db))
            .map(|pt| {
                let s = s_root[pt.dataset];
                let v = 10f64.powf(pt.measured_db / 10.0);
                (v - 1.0) * ((1.0 - s).powi(2) + y(pt.frequency_hz)) / (4.0 * s)
            })
            .unwrap_or(DEFAULT_ETA),
    };
    let eta = if eta.is_finite() { eta.clamp(0.05, 0.999) } else { DEFAULT_ETA };

    FitParams {
        kappa,
        eta,
        epsilons: s_root.iter().map(|s| (s * s).clamp(1e-3, 0.98)).collect(),
    }
}
