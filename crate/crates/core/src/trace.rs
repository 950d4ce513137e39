//! Spectrum-analyzer traces and their CSV representation.
//!
//! A trace file is plain CSV preceded by `# key=value` metadata lines:
//!
//! ```text
//! # kind=squeezed
//! # rbw_hz=300000
//! # vbw_hz=300
//! # lo_power_mw=12
//! frequency_hz,power_db
//! 3000000,-12.61
//! 3100000,-12.60
//! ```
//!
//! `kind`, `rbw_hz` and `vbw_hz` are mandatory. Zero-span traces use a
//! `time_s` axis column instead of `frequency_hz`. Unrecognised metadata keys
//! are preserved verbatim. Numbers are written in shortest round-trip form,
//! so writing and re-reading a trace is lossless.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{dark_noise_correct, DarkNoiseContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceKind {
    Squeezed,
    Antisqueezed,
    Shot,
    Dark,
    /// Zero-span record taken while the local-oscillator phase is swept.
    PhaseScan,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Squeezed => "squeezed",
            TraceKind::Antisqueezed => "antisqueezed",
            TraceKind::Shot => "shot",
            TraceKind::Dark => "dark",
            TraceKind::PhaseScan => "phase_scan",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "squeezed" => TraceKind::Squeezed,
            "antisqueezed" => TraceKind::Antisqueezed,
            "shot" => TraceKind::Shot,
            "dark" => TraceKind::Dark,
            "phase_scan" => TraceKind::PhaseScan,
            other => return Err(Error::Trace(format!("unknown trace kind `{other}`"))),
        })
    }
}

/// What the abscissa of a trace measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    FrequencyHz,
    /// Zero-span acquisition time.
    TimeS,
}

impl Axis {
    pub fn column(&self) -> &'static str {
        match self {
            Axis::FrequencyHz => "frequency_hz",
            Axis::TimeS => "time_s",
        }
    }
}

/// A frequency window `[start_hz, stop_hz]` removed before fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionWindow {
    pub start_hz: f64,
    pub stop_hz: f64,
}

impl ExclusionWindow {
    pub fn new(start_hz: f64, stop_hz: f64) -> Result<Self> {
        if !(start_hz.is_finite() && stop_hz.is_finite() && start_hz < stop_hz) {
            return Err(Error::Config(format!(
                "exclusion window [{start_hz}, {stop_hz}] Hz is empty or not finite"
            )));
        }
        Ok(Self { start_hz, stop_hz })
    }

    /// ±1 MHz around the 17.5 MHz cavity-lock modulation.
    pub fn lock_modulation() -> Self {
        Self {
            start_hz: 16.5e6,
            stop_hz: 18.5e6,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.start_hz && f <= self.stop_hz
    }

    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.start_hz <= hi && self.stop_hz >= lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceData {
    pub axis: Axis,
    /// Abscissa values; frequencies in Hz or times in s depending on `axis`.
    pub frequencies_hz: Vec<f64>,
    /// Power relative to shot noise in dB.
    pub power_db: Vec<f64>,
    pub kind: TraceKind,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub lo_power_mw: Option<f64>,
    pub pump_power_mw: Option<f64>,
    pub dark_subtracted: bool,
    /// Dark noise relative to shot noise, if known.
    pub dark_clearance_db: Option<f64>,
    /// Any other metadata, e.g. the generator of a synthetic trace.
    pub extra: BTreeMap<String, String>,
}

impl TraceData {
    /// A frequency-axis trace with no optional metadata.
    pub fn new(
        kind: TraceKind,
        frequencies_hz: Vec<f64>,
        power_db: Vec<f64>,
        rbw_hz: f64,
        vbw_hz: f64,
    ) -> Result<Self> {
        let t = Self {
            axis: Axis::FrequencyHz,
            frequencies_hz,
            power_db,
            kind,
            rbw_hz,
            vbw_hz,
            lo_power_mw: None,
            pump_power_mw: None,
            dark_subtracted: false,
            dark_clearance_db: None,
            extra: BTreeMap::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_hz.is_empty()
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.frequencies_hz.first()?, *self.frequencies_hz.last()?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies_hz.len() != self.power_db.len() {
            return Err(Error::Trace(format!(
                "{} abscissa values but {} power values",
                self.frequencies_hz.len(),
                self.power_db.len()
            )));
        }
        if self.is_empty() {
            return Err(Error::Trace("trace has no points".into()));
        }
        if let Some(i) = self.frequencies_hz.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Trace(format!(
                "{} not strictly increasing at point {}",
                self.axis.column(),
                i + 1
            )));
        }
        if let Some(i) = self
            .frequencies_hz
            .iter()
            .chain(&self.power_db)
            .position(|x| !x.is_finite())
        {
            return Err(Error::Trace(format!("non-finite value at index {i}")));
        }
        if !(self.rbw_hz > 0.0 && self.vbw_hz > 0.0) {
            return Err(Error::Trace("rbw_hz and vbw_hz must be positive".into()));
        }
        if self.kind == TraceKind::Squeezed {
            if let Some(p) = self.power_db.iter().find(|p| **p >= 1.0) {
                return Err(Error::Trace(format!(
                    "squeezed trace reaches {p} dB above shot noise"
                )));
            }
        }
        Ok(())
    }

    /// Copy with the dark noise removed point by point.
    pub fn dark_corrected(&self) -> Result<TraceData> {
        if self.dark_subtracted {
            return Ok(self.clone());
        }
        let Some(clearance) = self.dark_clearance_db else {
            return Err(Error::Trace("trace carries no dark-noise clearance".into()));
        };
        let ctx = DarkNoiseContext::new(clearance)?;
        let power_db = self
            .power_db
            .iter()
            .map(|p| dark_noise_correct(*p, &ctx))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceData {
            power_db,
            dark_subtracted: true,
            ..self.clone()
        })
    }

    /// Renders the trace in the CSV format described in the module docs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut meta = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "# {k}={v}");
        };
        meta("kind", &self.kind);
        meta("rbw_hz", &self.rbw_hz);
        meta("vbw_hz", &self.vbw_hz);
        if let Some(v) = self.lo_power_mw {
            meta("lo_power_mw", &v);
        }
        if let Some(v) = self.pump_power_mw {
            meta("pump_power_mw", &v);
        }
        meta("dark_subtracted", &self.dark_subtracted);
        if let Some(v) = self.dark_clearance_db {
            meta("dark_clearance_db", &v);
        }
        for (k, v) in &self.extra {
            meta(k, v);
        }
        let _ = writeln!(out, "{},power_db", self.axis.column());
        for (f, p) in self.frequencies_hz.iter().zip(&self.power_db) {
            let _ = writeln!(out, "{f},{p}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

/// Reads a trace file, validating metadata and data rows.
pub fn parse_trace_csv(path: impl AsRef<Path>) -> Result<TraceData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace_str(&text, path)
}

/// Parses trace CSV text; `origin` is only used in error messages.
pub fn parse_trace_str(text: &str, origin: &Path) -> Result<TraceData> {
    let mut meta: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut axis = None;
    let mut xs = Vec::new();
    let mut ys = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if axis.is_some() {
                return Err(parse_err(origin, lineno, "metadata after the header line"));
            }
            let Some((k, v)) = rest.split_once('=') else {
                // Free-form comment.
                continue;
            };
            let key = k.trim().to_owned();
            if meta.contains_key(&key) {
                return Err(parse_err(origin, lineno, format!("duplicate metadata key `{key}`")));
            }
            meta.insert(key, (lineno, v.trim().to_owned()));
            continue;
        }
        if axis.is_none() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            axis = Some(match cols.as_slice() {
                ["frequency_hz", "power_db"] => Axis::FrequencyHz,
                ["time_s", "power_db"] => Axis::TimeS,
                _ => {
                    return Err(parse_err(
                        origin,
                        lineno,
                        format!("expected header `frequency_hz,power_db`, found `{line}`"),
                    ))
                }
            });
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(origin, lineno, "expected exactly two columns"));
        };
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| parse_err(origin, lineno, format!("`{}` is not a number", s.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(origin, lineno, "non-finite value"))
            }
        };
        let (x, y) = (parse(a)?, parse(b)?);
        if let Some(&prev) = xs.last() {
            if x == prev {
                return Err(parse_err(origin, lineno, format!("duplicate abscissa value {x}")));
            }
            if x < prev {
                return Err(parse_err(origin, lineno, format!("abscissa {x} decreases (previous {prev})")));
            }
        }
        xs.push(x);
        ys.push(y);
    }

    let Some(axis) = axis else {
        return Err(parse_err(origin, text.lines().count().max(1), "missing header line"));
    };
    if xs.is_empty() {
        return Err(parse_err(origin, text.lines().count(), "no data rows"));
    }

    let mut take = |key: &str| meta.remove(key);
    let required = |v: Option<(usize, String)>, key: &str| {
        v.ok_or_else(|| parse_err(origin, 1, format!("missing mandatory metadata `{key}`")))
    };
    let num = |(line, v): (usize, String), key: &str| -> Result<f64> {
        v.parse::<f64>()
            .map_err(|_| parse_err(origin, line, format!("metadata `{key}` is not a number: `{v}`")))
    };

    let (kind_line, kind_str) = required(take("kind"), "kind")?;
    let kind = kind_str
        .parse::<TraceKind>()
        .map_err(|e| parse_err(origin, kind_line, e.to_string()))?;
    let rbw_hz = num(required(take("rbw_hz"), "rbw_hz")?, "rbw_hz")?;
    let vbw_hz = num(required(take("vbw_hz"), "vbw_hz")?, "vbw_hz")?;
    let lo_power_mw = take("lo_power_mw").map(|v| num(v, "lo_power_mw")).transpose()?;
    let pump_power_mw = take("pump_power_mw").map(|v| num(v, "pump_power_mw")).transpose()?;
    let dark_clearance_db = take("dark_clearance_db")
        .map(|v| num(v, "dark_clearance_db"))
        .transpose()?;
    let dark_subtracted = match take("dark_subtracted") {
        None => false,
        Some((line, v)) => v
            .parse::<bool>()
            .map_err(|_| parse_err(origin, line, format!("dark_subtracted must be true/false, got `{v}`")))?,
    };
    let extra = meta.into_iter().map(|(k, (_, v))| (k, v)).collect();

    let trace = TraceData {
        axis,
        frequencies_hz: xs,
        power_db: ys,
        kind,
        rbw_hz,
        vbw_hz,
        lo_power_mw,
        pump_power_mw,
        dark_subtracted,
        dark_clearance_db,
        extra,
    };
    trace
        .validate()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?;
    Ok(trace)
}

/// Removes every point inside any of `windows`; the input is left untouched.
pub fn apply_exclusions(trace: &TraceData, windows: &[ExclusionWindow]) -> Result<TraceData> {
    let (frequencies_hz, power_db): (Vec<f64>, Vec<f64>) = trace
        .frequencies_hz
        .iter()
        .zip(&trace.power_db)
        .filter(|(f, _)| !windows.iter().any(|w| w.contains(**f)))
        .map(|(f, p)| (*f, *p))
        .unzip();
    if frequencies_hz.is_empty() {
        return Err(Error::Trace("exclusion windows remove every point of the trace".into()));
    }
    Ok(TraceData {
        frequencies_hz,
        power_db,
        ..trace.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_trace() -> TraceData {
        let f: Vec<f64> = (0..=220).map(|k| 3e6 + 1e5 * k as f64).collect();
        let p = vec![-3.0; f.len()];
        TraceData::new(TraceKind::Squeezed, f, p, 300e3, 300.0).unwrap()
    }

    fn parse(text: &str) -> Result<TraceData> {
        parse_trace_str(text, Path::new("t.csv"))
    }

    #[test]
    fn exclusion_removes_lock_band() {
        let t = grid_trace();
        let out = apply_exclusions(&t, &[ExclusionWindow::lock_modulation()]).unwrap();
        assert_eq!(out.len(), t.len() - 21);
        assert!(out.frequencies_hz.iter().all(|f| *f < 16.5e6 || *f > 18.5e6));
        assert_eq!(t.len(), 221);
    }

    #[test]
    fn exclusion_edge_cases() {
        let t = grid_trace();
        assert_eq!(apply_exclusions(&t, &[]).unwrap(), t);
        let all = ExclusionWindow::new(0.0, 1e9).unwrap();
        assert!(apply_exclusions(&t, &[all]).is_err());
        assert!(ExclusionWindow::new(5.0, 5.0).is_err());
    }

    #[test]
    fn parses_three_rows() {
        let t = parse(
            "# kind=antisqueezed\n# rbw_hz=300000\n# vbw_hz=300\n# lo_power_mw=12\n\
             frequency_hz,power_db\n1e6,20.1\n2e6,19.5\n3e6,18.0\n",
        )
        .unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.kind, TraceKind::Antisqueezed);
        assert_eq!(t.lo_power_mw, Some(12.0));
        assert_eq!(t.power_db[2], 18.0);
    }

    #[test]
    fn duplicate_frequency_names_line() {
        let err = parse("# kind=shot\n# rbw_hz=1\n# vbw_hz=1\nfrequency_hz,power_db\n1,0\n2,0\n2,0\n").unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 7);
                assert!(msg.contains("duplicate"), "{msg}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        let bad_row = parse("# kind=shot\n# rbw_hz=1\n# vbw_hz=1\nfrequency_hz,power_db\n1,0\n2,x\n").unwrap_err();
        assert!(matches!(bad_row, Error::Parse { line: 6, .. }), "{bad_row}");
        let extra_col = parse("# kind=shot\n# rbw_hz=1\n# vbw_hz=1\nfrequency_hz,power_db\n1,0,4\n").unwrap_err();
        assert!(matches!(extra_col, Error::Parse { line: 5, .. }));
        let missing = parse("# kind=shot\n# rbw_hz=1\nfrequency_hz,power_db\n1,0\n").unwrap_err();
        assert!(missing.to_string().contains("vbw_hz"), "{missing}");
        let decreasing = parse("# kind=shot\n# rbw_hz=1\n# vbw_hz=1\nfrequency_hz,power_db\n2,0\n1,0\n").unwrap_err();
        assert!(matches!(decreasing, Error::Parse { line: 6, .. }));
        let kind = parse("# kind=bright\n# rbw_hz=1\n# vbw_hz=1\nfrequency_hz,power_db\n1,0\n").unwrap_err();
        assert!(matches!(kind, Error::Parse { line: 1, .. }));
        let header = parse("# kind=shot\n# rbw_hz=1\n# vbw_hz=1\nf,p\n1,0\n").unwrap_err();
        assert!(matches!(header, Error::Parse { line: 4, .. }));
        let squeezed_above = parse("# kind=squeezed\n# rbw_hz=1\n# vbw_hz=1\nfrequency_hz,power_db\n1,2.0\n").unwrap_err();
        assert!(squeezed_above.to_string().contains("above shot"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = grid_trace();
        t.power_db = t.frequencies_hz.iter().map(|f| -12.0 + (f * 1.234e-7).sin() / 3.0).collect();
        t.lo_power_mw = Some(12.0);
        t.dark_clearance_db = Some(-24.9);
        t.extra.insert("rng".into(), "ChaCha20".into());
        let back = parse(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv(), t.to_csv());
    }

    #[test]
    fn dark_correction_of_trace() {
        let mut t = grid_trace();
        t.dark_clearance_db = Some(-24.9);
        t.power_db.iter_mut().for_each(|p| *p = -13.1);
        let c = t.dark_corrected().unwrap();
        assert!(c.dark_subtracted);
        assert!((c.power_db[0] + 13.383).abs() < 1e-3);
        t.dark_clearance_db = None;
        assert!(t.dark_corrected().is_err());
    }
}
