//! Operating-point search over air gap and crystal temperature.
//!
//! For each temperature row the fundamental round-trip phase is sampled on
//! the air-gap grid and every crossing of `2πm` is refined by bisection, so
//! the fundamental is exactly resonant at each candidate. Along each order
//! `m` the harmonic detune is then followed across rows and its sign changes
//! are refined by bisection in temperature. Candidates are re-evaluated from
//! scratch before being filtered and scored.
//!
//! Score: `qpm_efficiency − (|detune_f| + |detune_h|)/score_scale_rad`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{
    qpm_efficiency, qpm_mismatch, round_trip_phase, round_trip_phase_unwrapped,
    CavityGeometry, DispersionModel, Field, OperatingPoint,
};
use crate::error::{Error, Result};

const BISECTION_STEPS: usize = 80;
const ROOT_STEPS: usize = 60;
/// Largest phase change allowed between neighbouring grid samples.
const MAX_STEP_PHASE: f64 = PI / 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub l_air_start_m: f64,
    pub l_air_stop_m: f64,
    pub l_air_step_m: f64,
    pub t_start_c: f64,
    pub t_stop_c: f64,
    pub t_step_c: f64,
}

impl ScanGrid {
    fn axis(start: f64, stop: f64, step: f64, what: &str) -> Result<Vec<f64>> {
        if !(start.is_finite() && stop >= start && step > 0.0) {
            return Err(Error::domain(format!(
                "{what} scan needs start ≤ stop and a positive step"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn air_gaps(&self) -> Result<Vec<f64>> {
        Self::axis(self.l_air_start_m, self.l_air_stop_m, self.l_air_step_m, "air-gap")
    }

    pub fn temperatures(&self) -> Result<Vec<f64>> {
        Self::axis(self.t_start_c, self.t_stop_c, self.t_step_c, "temperature")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub detune_rad: f64,
    pub min_qpm_efficiency: f64,
    /// Detune weight in the score; a detune of this size costs one unit.
    pub score_scale_rad: f64,
}

impl Tolerances {
    pub fn new(detune_rad: f64, min_qpm_efficiency: f64) -> Self {
        Self {
            detune_rad,
            min_qpm_efficiency,
            score_scale_rad: PI,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.detune_rad > 0.0 && self.detune_rad <= PI) {
            return Err(Error::domain("detune tolerance must be in (0, π]"));
        }
        if !(0.0..=1.0).contains(&self.min_qpm_efficiency) {
            return Err(Error::domain("minimum QPM efficiency must be in [0, 1]"));
        }
        if !(self.score_scale_rad > 0.0) {
            return Err(Error::domain("score scale must be positive"));
        }
        Ok(())
    }

    pub fn accepts(&self, p: &OperatingPoint) -> bool {
        p.detune_f_rad.abs() < self.detune_rad
            && p.detune_h_rad.abs() < self.detune_rad
            && p.qpm_efficiency >= self.min_qpm_efficiency
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    /// Accepted points in `(l_air, T)` lexicographic order.
    pub points: Vec<OperatingPoint>,
    /// Highest-scoring rejected candidate, reported when `points` is empty.
    pub near_miss: Option<OperatingPoint>,
    pub rows: usize,
    pub orders: usize,
}

impl ScanReport {
    /// Points sorted by descending score (ties by position).
    pub fn ranked(&self) -> Vec<OperatingPoint> {
        let mut v = self.points.clone();
        v.sort_by(|a, b| b.score.total_cmp(&a.score));
        v
    }
}

struct Ctx<'a> {
    geom: CavityGeometry,
    disp: &'a DispersionModel,
    poling_period_m: f64,
    tol: Tolerances,
}

impl Ctx<'_> {
    fn phase_f(&self, l_air: f64, t: f64) -> Result<f64> {
        round_trip_phase_unwrapped(&self.geom.with_air_gap(l_air), self.disp, Field::Fundamental, t)
    }

    fn detune_h(&self, l_air: f64, t: f64) -> Result<f64> {
        round_trip_phase(&self.geom.with_air_gap(l_air), self.disp, Field::Harmonic, t)
    }

    /// Air gap in `[lo, hi]` where the fundamental phase equals `2πm`.
    ///
    /// Illinois false position; the phase is nearly linear in the gap.
    fn resonant_gap(&self, m: i64, mut lo: f64, mut hi: f64, t: f64) -> Result<Option<f64>> {
        let target = 2.0 * PI * m as f64;
        let mut f_lo = self.phase_f(lo, t)? - target;
        let mut f_hi = self.phase_f(hi, t)? - target;
        if f_lo > 0.0 || f_hi < 0.0 {
            return Ok(None);
        }
        let mut side = 0i8;
        for _ in 0..ROOT_STEPS {
            if f_lo == 0.0 {
                return Ok(Some(lo));
            }
            if f_hi == 0.0 {
                return Ok(Some(hi));
            }
            let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
                if x <= lo || x >= hi {
                    break;
                }
            }
            let fx = self.phase_f(x, t)? - target;
            if fx < 0.0 {
                lo = x;
                f_lo = fx;
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                f_hi = fx;
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
            }
        }
        let (e_lo, e_hi) = ((self.phase_f(lo, t)? - target).abs(), (self.phase_f(hi, t)? - target).abs());
        Ok(Some(if e_lo <= e_hi { lo } else { hi }))
    }

    fn evaluate(&self, l_air: f64, t: f64, order: i64) -> Result<OperatingPoint> {
        let geom = self.geom.with_air_gap(l_air);
        let detune_f = round_trip_phase(&geom, self.disp, Field::Fundamental, t)?;
        let detune_h = round_trip_phase(&geom, self.disp, Field::Harmonic, t)?;
        let mismatch = qpm_mismatch(&geom, self.disp, self.poling_period_m, t)?;
        let eff = qpm_efficiency(mismatch);
        Ok(OperatingPoint {
            l_air_m: l_air,
            temperature_c: t,
            order,
            detune_f_rad: detune_f,
            detune_h_rad: detune_h,
            qpm_mismatch_rad: mismatch,
            qpm_efficiency: eff,
            score: eff - (detune_f.abs() + detune_h.abs()) / self.tol.score_scale_rad,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Crossing {
    order: i64,
    l_air: f64,
    detune_h: f64,
}

fn scan_row(ctx: &Ctx, gaps: &[f64], t: f64) -> Result<Vec<Crossing>> {
    let phases = gaps.iter().map(|&l| ctx.phase_f(l, t)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 0..gaps.len().saturating_sub(1) {
        let k0 = (phases[i] / (2.0 * PI)).floor() as i64;
        let k1 = (phases[i + 1] / (2.0 * PI)).floor() as i64;
        // Include an exact hit on the first sample.
        let first = if i == 0 && phases[0] == 2.0 * PI * k0 as f64 { k0 } else { k0 + 1 };
        for m in first..=k1 {
            if let Some(l) = ctx.resonant_gap(m, gaps[i], gaps[i + 1], t)? {
                out.push(Crossing { order: m, l_air: l, detune_h: ctx.detune_h(l, t)? });
            }
        }
    }
    Ok(out)
}

/// Harmonic detune root in `[t0, t1]` along fundamental order `m`.
fn refine_temperature(
    ctx: &Ctx,
    m: i64,
    (t0, a): (f64, &Crossing),
    (t1, b): (f64, &Crossing),
) -> Result<Option<(f64, f64)>> {
    let margin = 0.125 * Field::Fundamental.wavelength_m();
    let lo = a.l_air.min(b.l_air) - margin;
    let hi = a.l_air.max(b.l_air) + margin;
    let along = |t: f64| -> Result<Option<(f64, f64)>> {
        Ok(match ctx.resonant_gap(m, lo, hi, t)? {
            Some(l) => Some((l, ctx.detune_h(l, t)?)),
            None => None,
        })
    };
    let (mut ta, mut tb) = (t0, t1);
    let mut ha = a.detune_h;
    let mut best = if a.detune_h.abs() <= b.detune_h.abs() {
        (a.l_air, t0, a.detune_h)
    } else {
        (b.l_air, t1, b.detune_h)
    };
    for _ in 0..BISECTION_STEPS {
        let tm = 0.5 * (ta + tb);
        if tm <= ta || tm >= tb {
            break;
        }
        let Some((l, h)) = along(tm)? else { return Ok(None) };
        if h.abs() < best.2.abs() {
            best = (l, tm, h);
        }
        if h == 0.0 {
            break;
        }
        if (h < 0.0) == (ha < 0.0) {
            ta = tm;
            ha = h;
        } else {
            tb = tm;
        }
    }
    Ok(Some((best.0, best.1)))
}

fn check_resolution(ctx: &Ctx, grid: &ScanGrid, gaps: &[f64], temps: &[f64]) -> Result<()> {
    let per_gap = 4.0 * PI / Field::Harmonic.wavelength_m() * grid.l_air_step_m;
    if gaps.len() > 1 && per_gap >= MAX_STEP_PHASE {
        return Err(Error::ScanResolution(format!(
            "air-gap step {} m moves the harmonic phase by {per_gap:.3} rad (limit π/4)",
            grid.l_air_step_m
        )));
    }
    if temps.len() > 1 {
        let corners = [gaps[0], gaps[gaps.len() - 1]];
        for &l in &corners {
            for w in temps.windows(2) {
                let geom = |t| {
                    let g = ctx.geom.with_air_gap(l);
                    Ok::<_, Error>(
                        round_trip_phase_unwrapped(&g, ctx.disp, Field::Harmonic, t)?
                            - 2.0 * round_trip_phase_unwrapped(&g, ctx.disp, Field::Fundamental, t)?,
                    )
                };
                let step = (geom(w[1])? - geom(w[0])?).abs();
                if step >= MAX_STEP_PHASE {
                    return Err(Error::ScanResolution(format!(
                        "temperature step {} °C moves the harmonic detune by {step:.3} rad (limit π/4)",
                        grid.t_step_c
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Searches the grid for simultaneous resonance of both fields with
/// sufficient QPM efficiency.
///
/// An empty result is not an error; the best rejected candidate is then
/// returned as `near_miss`.
pub fn find_operating_points(
    geom: &CavityGeometry,
    disp: &DispersionModel,
    poling_period_m: f64,
    grid: &ScanGrid,
    tol: &Tolerances,
) -> Result<ScanReport> {
    tol.validate()?;
    let gaps = grid.air_gaps()?;
    let temps = grid.temperatures()?;
    let ctx = Ctx { geom: *geom, disp, poling_period_m, tol: *tol };
    for &l in [gaps[0], gaps[gaps.len() - 1]].iter() {
        ctx.geom.with_air_gap(l).validate()?;
        for &t in [temps[0], temps[temps.len() - 1]].iter() {
            ctx.evaluate(l, t, 0)?;
        }
    }
    check_resolution(&ctx, grid, &gaps, &temps)?;

    let rows: Vec<Vec<Crossing>> = temps
        .par_iter()
        .map(|&t| scan_row(&ctx, &gaps, t))
        .collect::<Result<_>>()?;

    let mut by_order: BTreeMap<i64, Vec<(usize, Crossing)>> = BTreeMap::new();
    for (j, row) in rows.iter().enumerate() {
        for c in row {
            by_order.entry(c.order).or_default().push((j, *c));
        }
    }
    let orders: Vec<(i64, Vec<(usize, Crossing)>)> = by_order.into_iter().collect();

    let per_order: Vec<(Vec<OperatingPoint>, Option<OperatingPoint>)> = orders
        .par_iter()
        .map(|(m, track)| order_candidates(&ctx, *m, track, &temps))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut near_miss: Option<OperatingPoint> = None;
    for (accepted, miss) in per_order {
        points.extend(accepted);
        if let Some(p) = miss {
            if near_miss.is_none_or(|q| p.score > q.score) {
                near_miss = Some(p);
            }
        }
    }
    points.sort_by(|a, b| {
        a.l_air_m
            .total_cmp(&b.l_air_m)
            .then(a.temperature_c.total_cmp(&b.temperature_c))
    });
    Ok(ScanReport {
        near_miss: if points.is_empty() { near_miss } else { None },
        points,
        rows: temps.len(),
        orders: orders.len(),
    })
}

fn order_candidates(
    ctx: &Ctx,
    m: i64,
    track: &[(usize, Crossing)],
    temps: &[f64],
) -> Result<(Vec<OperatingPoint>, Option<OperatingPoint>)> {
    // (air gap, temperature) pairs at which the fundamental is resonant.
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for (j, c) in track {
        if c.detune_h.abs() < ctx.tol.detune_rad {
            raw.push((c.l_air, temps[*j]));
        }
    }
    for w in track.windows(2) {
        let ((j0, a), (j1, b)) = (w[0], w[1]);
        if j1 != j0 + 1 {
            continue;
        }
        let straddles = (a.detune_h <= 0.0) != (b.detune_h <= 0.0);
        if straddles && (a.detune_h - b.detune_h).abs() < PI {
            if let Some(p) = refine_temperature(ctx, m, (temps[j0], &a), (temps[j1], &b))? {
                raw.push(p);
            }
        }
    }
    raw.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut evaluated = Vec::with_capacity(raw.len());
    for (l, t) in raw {
        evaluated.push(ctx.evaluate(l, t, m)?);
    }
    // Merge candidates closer than 1.5 temperature steps, keeping the
    // smallest harmonic detune.
    let step = if temps.len() > 1 { temps[1] - temps[0] } else { f64::INFINITY };
    let mut merged: Vec<OperatingPoint> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for p in evaluated {
        let joins = p.temperature_c - last_t <= 1.5 * step;
        last_t = p.temperature_c;
        match merged.last_mut() {
            Some(q) if joins => {
                if p.detune_h_rad.abs() < q.detune_h_rad.abs() {
                    *q = p;
                }
            }
            _ => merged.push(p),
        }
    }
    let (accepted, rejected): (Vec<_>, Vec<_>) = merged.into_iter().partition(|p| ctx.tol.accepts(p));

    let mut miss = rejected.into_iter().max_by(|a, b| a.score.total_cmp(&b.score));
    if accepted.is_empty() {
        for (j, c) in track {
            let p = ctx.evaluate(c.l_air, temps[*j], m)?;
            if miss.is_none_or(|q| p.score > q.score) {
                miss = Some(p);
            }
        }
    }
    Ok((accepted, miss))
}
