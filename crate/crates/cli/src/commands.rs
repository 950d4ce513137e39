use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use sqzlab::cavity::{
    buildup_factor, buildup_interval, design_pump_power_for_eta, escape_efficiency, optimal_input_coupler,
    total_efficiency, BuildupConfig, EfficiencyBudget, Toleranced,
};
use sqzlab::coresonance::dispersion::builtin_registry as index_laws;
use sqzlab::coresonance::{
    find_operating_points, matched_poling_period, CavityGeometry, DispersionModel, OperatingPoint, ScanGrid,
    Tolerances,
};
use sqzlab::fit::{fit_joint, residuals, Dataset, FitProblem, KappaParameter, Quadrature};
use sqzlab::noise::{antisqueezed_variance, db_from_linear, required_epsilon, squeezed_variance, DarkNoiseContext, NoiseModelParams};
use sqzlab::sim::{
    builtin_registry as statistics, synth_datasets, zero_span_phase_scan, AnalyzerSettings, PhaseScan, RngStream, Span,
    StatsParams,
};
use sqzlab::trace::{parse_trace_csv, Axis, ExclusionWindow, TraceKind};

use crate::args::*;
use crate::config::{self, CoresonanceFile, SimulateFile};
use crate::format::{db, fixed, sig, table};
use crate::svg::{self, Chart, Series};
use crate::CliError;

type Res = Result<(), CliError>;

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Res {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> Res {
    if a.points < 2 || !(a.stop_hz > a.start_hz && a.start_hz >= 0.0) {
        return Err(CliError::Usage("need 0 <= start < stop and at least 2 points".into()));
    }
    if a.log && a.start_hz <= 0.0 {
        return Err(CliError::Usage("logarithmic spacing needs start > 0".into()));
    }
    let n = a.points;
    let freqs: Vec<f64> = (0..n)
        .map(|k| {
            let u = k as f64 / (n - 1) as f64;
            if a.log {
                a.start_hz * (a.stop_hz / a.start_hz).powf(u)
            } else {
                a.start_hz + u * (a.stop_hz - a.start_hz)
            }
        })
        .collect();
    let mut curves = Vec::new();
    for &eps in &a.epsilons {
        let p = NoiseModelParams::from_fwhm_hz(a.eta, a.fwhm_hz, eps)?;
        let mut sq = Vec::with_capacity(n);
        let mut asq = Vec::with_capacity(n);
        for &f in &freqs {
            sq.push(db_from_linear(squeezed_variance(&p, f)?)?);
            asq.push(db_from_linear(antisqueezed_variance(&p, f)?)?);
        }
        curves.push((eps, sq, asq));
    }
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("frequency_hz,epsilon,squeezed_db,antisqueezed_db\n");
            for (eps, sq, asq) in &curves {
                for k in 0..n {
                    let _ = writeln!(s, "{},{eps},{},{}", freqs[k], db(sq[k]), db(asq[k]));
                }
            }
            s
        }
        Format::Table => {
            let freqs = &freqs;
            let rows: Vec<Vec<String>> = curves
                .iter()
                .flat_map(|(eps, sq, asq)| {
                    (0..n).map(move |k| {
                        vec![format!("{:.3}", freqs[k] / 1e6), format!("{eps}"), db(sq[k]), db(asq[k])]
                    })
                })
                .collect();
            table(&["f (MHz)", "epsilon", "squeezed (dB)", "anti-squeezed (dB)"], &rows)
        }
        Format::Svg => {
            let mut series = Vec::new();
            for (eps, sq, asq) in &curves {
                let xs: Vec<f64> = freqs.iter().map(|f| f / 1e6).collect();
                series.push(Series { label: format!("squeezed, ε = {eps}"), xs: xs.clone(), ys: sq.clone() });
                series.push(Series { label: format!("anti-squeezed, ε = {eps}"), xs, ys: asq.clone() });
            }
            svg::render(&Chart {
                title: format!("η = {}, κ/2π = {} MHz", a.eta, a.fwhm_hz / 1e6),
                x_label: "frequency (MHz)".into(),
                y_label: "noise power (dB rel. shot noise)".into(),
                log_x: a.log,
                series,
            })
            .map_err(CliError::Usage)?
        }
    };
    write_or_print(a.out.as_deref(), &text, out)
}

fn parse_window(s: &str) -> Result<ExclusionWindow, CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("exclusion `{s}` is not START:STOP")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("exclusion `{s}`: `{v}` is not a number")))
    };
    Ok(ExclusionWindow::new(parse(lo)?, parse(hi)?)?)
}

pub fn fit(a: &FitArgs, out: &mut dyn Write) -> Res {
    let mut squeezed = Vec::new();
    let mut anti = Vec::new();
    for path in &a.traces {
        let t = parse_trace_csv(path)?;
        match t.kind {
            TraceKind::Squeezed => squeezed.push(t),
            TraceKind::Antisqueezed => anti.push(t),
            k => return Err(CliError::Usage(format!("{}: cannot fit a {k} trace", path.display()))),
        }
    }
    let n = squeezed.len().max(anti.len());
    let mut sq = squeezed.into_iter();
    let mut asq = anti.into_iter();
    let datasets: Vec<Dataset> = (0..n)
        .map(|_| Dataset { squeezed: sq.next(), antisqueezed: asq.next() })
        .collect();

    let mut problem = FitProblem::new(datasets);
    if a.no_lock_exclusion {
        problem.exclusions.clear();
    }
    for w in &a.exclude {
        problem.exclusions.push(parse_window(w)?);
    }
    problem.kappa_parameter = match a.kappa_param {
        KappaParam::DecayRate => KappaParameter::DecayRate,
        KappaParam::Fwhm => KappaParameter::FwhmHz,
    };
    problem.jacobian = a.jacobian.clone();
    if let Some(m) = a.max_iterations {
        problem.convergence.max_iterations = m;
    }
    let r = fit_joint(&problem)?;

    let se = &r.std_errors;
    let mut rows = vec![
        vec!["fwhm (MHz)".into(), format!("{:.3}", r.fwhm_hz / 1e6), format!("{:.3}", se.fwhm_hz / 1e6)],
        vec!["eta".into(), format!("{:.4}", r.eta_hat), format!("{:.4}", se.eta)],
    ];
    for (i, (e, s)) in r.epsilons_hat.iter().zip(&se.epsilons).enumerate() {
        rows.push(vec![format!("epsilon[{i}]"), format!("{e:.4}"), format!("{s:.4}")]);
    }
    writeln!(
        out,
        "joint fit: {} datasets, {} points, {} iterations, termination {:?}",
        n, r.n_points, r.iterations, r.termination
    )?;
    out.write_all(table(&["parameter", "estimate", "std error"], &rows).as_bytes())?;
    writeln!(out, "residual rms: {} dB", db(r.residual_rms_db))?;

    if let Some(path) = &a.residuals {
        let model = problem.model()?;
        let res = residuals(&problem, &r.params())?;
        let mut s = String::from("dataset,quadrature,frequency_hz,measured_db,residual_db\n");
        for (p, e) in model.points.iter().zip(&res) {
            let q = match p.quadrature {
                Quadrature::Squeezed => "squeezed",
                Quadrature::Antisqueezed => "antisqueezed",
            };
            let _ = writeln!(s, "{},{q},{},{},{e}", p.dataset, p.frequency_hz, p.measured_db);
        }
        write_or_print(Some(path), &s, out)?;
    }
    if !r.converged {
        return Err(CliError::Numerical(format!("fit did not converge ({:?})", r.termination)));
    }
    Ok(())
}

fn cavity(c: &CouplerArgs) -> Result<BuildupConfig, CliError> {
    Ok(BuildupConfig::new(c.r1, c.r2, c.v_ar, c.v_ktp)?)
}

pub fn buildup(a: &BuildupArgs, out: &mut dyn Write) -> Res {
    let cfg = cavity(&a.cavity)?;
    let b = buildup_factor(&cfg)?;
    writeln!(out, "round-trip visibility V: {:.5}", cfg.v())?;
    writeln!(out, "build-up factor: {} (≈{})", sig(b, 3), sig(b, 2))?;
    if let Some(t) = a.tol {
        let c = &a.cavity;
        let iv = buildup_interval(
            Toleranced::new(c.r1, t),
            Toleranced::new(c.r2, t),
            Toleranced::new(c.v_ar, t),
            Toleranced::new(c.v_ktp, t),
        )?;
        writeln!(out, "build-up range for ±{t}: [{}, {}]", sig(iv.min, 3), sig(iv.max, 3))?;
    }
    let m = optimal_input_coupler(cfg.r2, cfg.v())?;
    writeln!(out, "impedance-matched R1: {:.5} (build-up {})", m.r1, sig(m.buildup, 3))?;
    if let Some(r1) = a.new_r1 {
        let new = BuildupConfig { r1, ..cfg };
        let bn = buildup_factor(&new)?;
        writeln!(out, "build-up at R1 = {r1}: {} (≈{})", sig(bn, 3), sig(bn, 2))?;
        writeln!(out, "pump power scale factor: {}", sig(b / bn, 3))?;
    }
    Ok(())
}

fn budget_of(f: &BudgetFlags) -> EfficiencyBudget {
    EfficiencyBudget {
        visibility: f.visibility,
        eta_pd: f.eta_pd,
        eta_pr: f.eta_pr,
        t1: f.t1,
        l_rt: f.loss,
    }
}

pub fn budget(a: &BudgetArgs, out: &mut dyn Write) -> Res {
    let b = budget_of(&a.budget);
    let esc = escape_efficiency(b.t1, b.l_rt)?;
    let total = total_efficiency(&b)?;
    let rows = vec![
        vec!["visibility²".into(), format!("{:.4}", b.visibility * b.visibility)],
        vec!["photodiode".into(), format!("{:.4}", b.eta_pd)],
        vec!["propagation".into(), format!("{:.4}", b.eta_pr)],
        vec!["escape".into(), format!("{esc:.4}")],
        vec!["total".into(), format!("{total:.4}")],
    ];
    out.write_all(table(&["efficiency", "value"], &rows).as_bytes())?;
    Ok(())
}

pub fn design(a: &DesignArgs, out: &mut dyn Write) -> Res {
    let (eta, source) = match a.eta {
        Some(e) => (e, "given"),
        None => (total_efficiency(&budget_of(&a.budget))?, "budget"),
    };
    let kappa = TAU * a.fwhm_hz;
    let cfg = cavity(&a.cavity)?;
    let eps = required_epsilon(a.target_db, eta, kappa, a.f_hz)?;
    writeln!(out, "detection efficiency: {eta:.4} ({source})")?;
    writeln!(out, "required pump parameter epsilon: {eps:.4}")?;
    writeln!(out, "pump power, current coupler (R1 = {}): {:.2} mW", cfg.r1, eps * a.p_thrs_mw)?;
    if let Some(r1) = a.new_r1 {
        let new = BuildupConfig::new(r1, cfg.r2, cfg.v_ar, cfg.v_ktp)?;
        let p = design_pump_power_for_eta(a.target_db, a.f_hz, eta, &cfg, &new, a.p_thrs_mw, kappa)?;
        writeln!(out, "pump power, new coupler (R1 = {r1}): {p:.2} mW")?;
    }
    Ok(())
}

struct SimulateRun {
    seed: u64,
    out_dir: PathBuf,
    statistics: String,
    sigma_db: f64,
    dark: Option<f64>,
    eta: f64,
    fwhm_hz: f64,
    epsilons: Vec<f64>,
    settings: AnalyzerSettings,
    zero: Option<config::ZeroSpanBlock>,
}

fn simulate_run(a: &SimulateArgs) -> Result<SimulateRun, CliError> {
    let file: Option<SimulateFile> = a.config.as_deref().map(config::load).transpose()?;
    let base = a.config.as_deref();
    let f = file.clone().unwrap_or(SimulateFile {
        seed: None,
        output_dir: None,
        statistics: None,
        sigma_db: None,
        dark_clearance_db: None,
        truth: None,
        analyzer: None,
        zero_span: None,
    });
    let out_dir = match (&a.out_dir, &f.output_dir, base) {
        (Some(d), _, _) => d.clone(),
        (None, Some(d), Some(cfg)) => config::resolve(cfg, d),
        _ => return Err(CliError::Usage("simulate needs --out-dir or output_dir in the config".into())),
    };
    let truth = f.truth.as_ref();
    let an = f.analyzer.as_ref();
    let epsilons = if a.epsilons.is_empty() {
        truth.map(|t| t.epsilons.clone()).unwrap_or_else(|| vec![0.857, 0.476, 0.263, 0.086])
    } else {
        a.epsilons.clone()
    };
    let rbw_hz = a.rbw_hz.or(an.map(|x| x.rbw_hz)).unwrap_or(300e3);
    let vbw_hz = a.vbw_hz.or(an.map(|x| x.vbw_hz)).unwrap_or(300.0);
    let span = match &f.zero_span {
        Some(z) => Span::Zero { center_hz: z.center_hz, duration_s: z.duration_s, n_points: z.n_points },
        None => Span::Swept {
            start_hz: a.start_hz.or(an.map(|x| x.start_hz)).unwrap_or(3e6),
            stop_hz: a.stop_hz.or(an.map(|x| x.stop_hz)).unwrap_or(25e6),
            n_points: a.points.or(an.map(|x| x.n_points)).unwrap_or(221),
        },
    };
    Ok(SimulateRun {
        seed: a.seed.or(f.seed).unwrap_or(0),
        out_dir,
        statistics: a.statistics.clone().or(f.statistics.clone()).unwrap_or_else(|| "video-average".into()),
        sigma_db: a.sigma_db.or(f.sigma_db).unwrap_or(f64::NAN),
        dark: a.dark_clearance_db.or(f.dark_clearance_db),
        eta: a.eta.or(truth.map(|t| t.eta)).unwrap_or(0.952),
        fwhm_hz: a.fwhm_hz.or(truth.map(|t| t.kappa_fwhm_hz)).unwrap_or(109.8e6),
        epsilons,
        settings: AnalyzerSettings { rbw_hz, vbw_hz, span },
        zero: f.zero_span,
    })
}

pub fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Res {
    let run = simulate_run(a)?;
    run.settings.validate()?;
    let stats = statistics().create(
        &run.statistics,
        &StatsParams { n_eff: run.settings.n_eff(), sigma_db: run.sigma_db },
    )?;
    let dark = match run.dark {
        Some(c) => DarkNoiseContext::new(c)?,
        None => DarkNoiseContext::none(),
    };
    let truths = run
        .epsilons
        .iter()
        .map(|e| NoiseModelParams::from_fwhm_hz(run.eta, run.fwhm_hz, *e))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(&run.out_dir)
        .map_err(|e| CliError::Usage(format!("{}: {e}", run.out_dir.display())))?;
    let mut written = Vec::new();
    match &run.zero {
        Some(z) => {
            let scan = PhaseScan { start_rad: z.start_rad, rate_rad_per_s: z.rate_rad_per_s, sigma_theta: z.sigma_theta_rad };
            for (i, truth) in truths.iter().enumerate() {
                let t = zero_span_phase_scan(
                    truth,
                    z.center_hz,
                    &scan,
                    &run.settings,
                    &dark,
                    RngStream::new(run.seed, i as u64),
                    stats.as_ref(),
                )?;
                written.push((format!("phase_scan_{i:02}.csv"), t));
            }
        }
        None => {
            let ds = synth_datasets(&truths, &run.settings, &dark, run.seed, stats.as_ref())?;
            for (i, d) in ds.into_iter().enumerate() {
                let (sq, asq) = (d.squeezed.expect("paired"), d.antisqueezed.expect("paired"));
                written.push((format!("trace_{i:02}_squeezed.csv"), sq));
                written.push((format!("trace_{i:02}_antisqueezed.csv"), asq));
            }
        }
    }
    for (name, t) in &written {
        t.write_csv(run.out_dir.join(name))?;
        writeln!(out, "wrote {name}")?;
    }
    Ok(())
}

fn point_row(rank: usize, p: &OperatingPoint) -> Vec<String> {
    vec![
        rank.to_string(),
        format!("{:.6}", p.l_air_m * 1e3),
        format!("{:.4}", p.temperature_c),
        fixed(p.detune_f_rad * 1e3, 4),
        fixed(p.detune_h_rad * 1e3, 4),
        fixed(p.qpm_efficiency, 4),
        fixed(p.score, 4),
    ]
}

const POINT_HEADER: [&str; 7] = ["rank", "l_air (mm)", "T (°C)", "detune_f (mrad)", "detune_h (mrad)", "qpm eff", "score"];

pub fn coresonance(a: &CoresonanceArgs, out: &mut dyn Write) -> Res {
    let cfg: CoresonanceFile = config::load(&a.config)?;
    let disp = DispersionModel::from_file(config::resolve(&a.config, &cfg.dispersion_file), &index_laws())?;
    let g = &cfg.geometry;
    let geom = CavityGeometry::new(cfg.scan.l_air_start_m, g.l_crystal_m, g.mirror_radius_m)
        .with_coating_phases(g.coating_phase_f_rad, g.coating_phase_h_rad);
    let period = match (cfg.poling_period_m, cfg.qpm_matched_at_c) {
        (Some(p), None) => p,
        (None, Some(t)) => matched_poling_period(&geom, &disp, t)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of poling_period_m and qpm_matched_at_c".into(),
            ))
        }
    };
    let s = &cfg.scan;
    let grid = ScanGrid {
        l_air_start_m: s.l_air_start_m,
        l_air_stop_m: s.l_air_stop_m,
        l_air_step_m: s.l_air_step_m,
        t_start_c: s.t_start_c,
        t_stop_c: s.t_stop_c,
        t_step_c: s.t_step_c,
    };
    let mut tol = Tolerances::new(cfg.tolerances.detune_rad, cfg.tolerances.min_qpm_efficiency);
    if let Some(scale) = cfg.tolerances.score_scale_rad {
        tol.score_scale_rad = scale;
    }
    let report = find_operating_points(&geom, &disp, period, &grid, &tol)?;

    writeln!(out, "index law: {}", disp.law_name())?;
    writeln!(out, "poling period: {:.4} um", period * 1e6)?;
    writeln!(out, "temperature rows: {}, fundamental orders: {}", report.rows, report.orders)?;
    writeln!(out, "accepted points: {}", report.points.len())?;
    if report.points.is_empty() {
        writeln!(out, "no operating point within tolerances; best near miss:")?;
        let rows: Vec<_> = report.near_miss.iter().map(|p| point_row(0, p)).collect();
        out.write_all(table(&POINT_HEADER, &rows).as_bytes())?;
    } else {
        let rows: Vec<_> = report
            .ranked()
            .iter()
            .take(a.top)
            .enumerate()
            .map(|(i, p)| point_row(i + 1, p))
            .collect();
        out.write_all(table(&POINT_HEADER, &rows).as_bytes())?;
    }
    if let Some(path) = &a.out {
        let mut csv = String::from(
            "l_air_m,temperature_c,order,detune_f_rad,detune_h_rad,qpm_mismatch_rad,qpm_efficiency,score\n",
        );
        for p in &report.points {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                p.l_air_m, p.temperature_c, p.order, p.detune_f_rad, p.detune_h_rad, p.qpm_mismatch_rad,
                p.qpm_efficiency, p.score
            );
        }
        write_or_print(Some(path), &csv, out)?;
    }
    Ok(())
}

pub fn plot(a: &PlotArgs, out: &mut dyn Write) -> Res {
    let mut series = Vec::new();
    let mut axis = None;
    for path in &a.inputs {
        let t = parse_trace_csv(path)?;
        if axis.is_some_and(|ax| ax != t.axis) {
            return Err(CliError::Usage("cannot mix frequency and time traces in one plot".into()));
        }
        axis = Some(t.axis);
        let scale = if t.axis == Axis::FrequencyHz { 1e-6 } else { 1.0 };
        series.push(Series {
            label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            xs: t.frequencies_hz.iter().map(|x| x * scale).collect(),
            ys: t.power_db,
        });
    }
    let x_label = match axis {
        Some(Axis::TimeS) => "time (s)",
        _ => "frequency (MHz)",
    };
    let chart = Chart {
        title: a.title.clone().unwrap_or_else(|| "noise power spectra".into()),
        x_label: x_label.into(),
        y_label: "noise power (dB rel. shot noise)".into(),
        log_x: a.log_x,
        series,
    };
    let text = svg::render(&chart).map_err(CliError::Usage)?;
    write_or_print(Some(&a.out), &text, out)?;
    writeln!(out, "wrote {}", a.out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())?;
    Ok(())
}
