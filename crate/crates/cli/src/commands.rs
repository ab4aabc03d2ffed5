use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cohradar_core::analytic::{self, theory_curve};
use cohradar_core::correlator::MIN_OVERSAMPLING;
use cohradar_core::estimator::{self, BreakpointFit, RangeReport};
use cohradar_core::io::{read_sweep_csv, sweep_rows, write_sweep_csv, SweepRow};
use cohradar_core::montecarlo::{run_monte_carlo, MonteCarloSummary};
use cohradar_core::{run_sweep, spectrum, waveform, CorrelatorOptions, SweepPlan};
use log::info;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        info!("writing {}", path.display());
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn sweep_csv(&self, name: &str, rows: &[SweepRow]) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        write_sweep_csv(&mut w, rows)?;
        w.flush()?;
        Ok(())
    }
}

fn options(cfg: &ScenarioConfig) -> CorrelatorOptions {
    CorrelatorOptions {
        double_frequency: cfg.double_frequency,
        keep_slow_time: false,
    }
}

#[derive(Serialize)]
struct SweepReport<'a> {
    command: &'static str,
    points: usize,
    total_sweep_time_s: f64,
    outputs: Vec<&'static str>,
    config: &'a ScenarioConfig,
}

pub fn sweep(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    let plan = cfg.plan()?;
    let scene = cfg.scene()?;
    let record = run_sweep(&plan, &scene, cfg.mode(), options(cfg))?;
    let rows = sweep_rows(&record, &theory_curve(&plan, &scene))?;
    out.sweep_csv("sweep.csv", &rows)?;
    out.json(
        "sweep.json",
        &SweepReport {
            command: "sweep",
            points: plan.points(),
            total_sweep_time_s: analytic::total_sweep_time(&plan),
            outputs: vec!["sweep.csv"],
            config: cfg,
        },
    )
}

#[derive(Serialize)]
struct MonteCarloReport<'a> {
    command: &'static str,
    trials: usize,
    max_mean_error: f64,
    max_mean_error_se: f64,
    max_std_error: f64,
    outputs: Vec<String>,
    config: &'a ScenarioConfig,
}

pub fn montecarlo(cfg: &ScenarioConfig, out: &Output, write_trials: bool) -> Result<(), CliError> {
    if cfg.trials < 2 {
        return Err(CliError::Precondition(format!("montecarlo needs trials >= 2, got {}", cfg.trials)));
    }
    let plan = cfg.plan()?;
    let scene = cfg.scene()?;
    let (records, summary) = run_monte_carlo(&plan, &scene, cfg.mode(), options(cfg), cfg.trials)?;
    write_summary_csv(out, &summary)?;
    let mut outputs = vec!["montecarlo.csv".to_string()];
    if write_trials {
        let theory = theory_curve(&plan, &scene);
        for (t, rec) in records.iter().enumerate() {
            let name = format!("trial_{t:04}.csv");
            out.sweep_csv(&name, &sweep_rows(rec, &theory)?)?;
            outputs.push(name);
        }
    }
    out.json(
        "montecarlo.json",
        &MonteCarloReport {
            command: "montecarlo",
            trials: summary.trials,
            max_mean_error: summary.max_mean_error,
            max_mean_error_se: summary.max_mean_error_se,
            max_std_error: summary.max_std_error,
            outputs,
            config: cfg,
        },
    )
}

fn write_summary_csv(out: &Output, summary: &MonteCarloSummary) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out.create("montecarlo.csv")?);
    w.write_record(["m", "l_m_meters", "mean_c_norm", "std_c_norm", "theory_mean", "theory_std"])?;
    for p in &summary.points {
        w.write_record([
            p.m.to_string(),
            p.l_m.to_string(),
            p.mean.to_string(),
            p.std.to_string(),
            p.theory_mean.to_string(),
            p.theory_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub struct AnalyzeArgs {
    pub files: Vec<PathBuf>,
    pub targets: Option<usize>,
    pub max_targets: usize,
    pub delay_offset_m: f64,
    pub threshold: f64,
}

#[derive(Serialize)]
struct AnalyzeConfig {
    files: Vec<String>,
    targets: Option<usize>,
    max_targets: usize,
    delay_offset_m: f64,
    f_threshold: f64,
}

#[derive(Serialize)]
struct FileFit {
    file: String,
    breakpoints: Vec<f64>,
    sse: f64,
}

#[derive(Serialize)]
struct AnalyzeReport {
    command: &'static str,
    verdict: &'static str,
    targets: usize,
    /// F-ratio of one break against a straight line on the trial-mean curve.
    f_statistic: f64,
    report: Option<RangeReport>,
    fits: Vec<FileFit>,
    config: AnalyzeConfig,
}

fn load_sweep(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_sweep_csv(BufReader::new(file)).map_err(|e| match CliError::from(e) {
        CliError::Schema(msg) => CliError::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn analyze(args: &AnalyzeArgs, out: &Output) -> Result<(), CliError> {
    if args.files.is_empty() {
        return Err(CliError::Schema("analyze: no sweep files given".into()));
    }
    let sweeps = args
        .files
        .iter()
        .map(|p| load_sweep(p))
        .collect::<Result<Vec<_>, _>>()?;
    let xs: Vec<f64> = sweeps[0].iter().map(|r| r.l_m_meters).collect();
    for (path, rows) in args.files.iter().zip(&sweeps) {
        if rows.len() != xs.len() || rows.iter().zip(&xs).any(|(r, &x)| r.l_m_meters != x) {
            return Err(CliError::Schema(format!(
                "{}: coherence grid differs from {}",
                path.display(),
                args.files[0].display()
            )));
        }
    }
    let curves: Vec<Vec<f64>> = sweeps.iter().map(|rows| rows.iter().map(|r| r.c_norm).collect()).collect();
    let mean: Vec<f64> = (0..xs.len())
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64)
        .collect();

    let detection = estimator::detect_breakpoint(&xs, &mean, args.threshold)?;
    let k = match args.targets {
        Some(k) => k,
        None => estimator::select_breakpoint_count(&xs, &mean, args.max_targets, args.threshold)?,
    };
    let (report, fits) = if k == 0 {
        (None, Vec::new())
    } else {
        let fits = curves
            .iter()
            .map(|ys| estimator::fit_k_breakpoints(&xs, ys, k))
            .collect::<Result<Vec<BreakpointFit>, _>>()?;
        (Some(estimator::ranges_from_trials(&fits, args.delay_offset_m)?), fits)
    };
    let names: Vec<String> = args.files.iter().map(|p| p.display().to_string()).collect();
    out.json(
        "analysis.json",
        &AnalyzeReport {
            command: "analyze",
            verdict: if k == 0 { "no target" } else { "targets found" },
            targets: k,
            f_statistic: detection.f_statistic,
            report,
            fits: names
                .iter()
                .zip(&fits)
                .map(|(file, f)| FileFit {
                    file: file.clone(),
                    breakpoints: f.breakpoints.clone(),
                    sse: f.sse,
                })
                .collect(),
            config: AnalyzeConfig {
                files: names,
                targets: args.targets,
                max_targets: args.max_targets,
                delay_offset_m: args.delay_offset_m,
                f_threshold: args.threshold,
            },
        },
    )
}

#[derive(Serialize)]
pub struct PlanReport {
    pub tau0_s: f64,
    pub delta_tau_s: f64,
    pub points: usize,
    pub pulses: usize,
    pub carrier_hz: f64,
    pub total_sweep_time_s: f64,
    pub max_bandwidth_hz: f64,
    pub tradeoff_bandwidth_hz: f64,
    pub carrier_hop_hz: f64,
    pub baseline_resolution_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_m: Option<f64>,
    /// Baseline resolution over the given physical separation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution_ratio: Option<f64>,
}

pub fn plan_report(plan: &SweepPlan, separation_m: Option<f64>) -> Result<PlanReport, CliError> {
    let t_tot = analytic::total_sweep_time(plan);
    let bw = analytic::max_bandwidth(plan.tau0())?;
    let baseline = analytic::baseline_resolution(bw)?;
    let resolution_ratio = match separation_m {
        Some(s) if !(s > 0.0 && s.is_finite()) => {
            return Err(CliError::Schema(format!("separation: must be positive, got {s}")))
        }
        Some(s) => Some(baseline / s),
        None => None,
    };
    Ok(PlanReport {
        tau0_s: plan.tau0(),
        delta_tau_s: plan.delta_tau(),
        points: plan.points(),
        pulses: plan.pulses(),
        carrier_hz: plan.carrier_hz(),
        total_sweep_time_s: t_tot,
        max_bandwidth_hz: bw,
        tradeoff_bandwidth_hz: analytic::tradeoff_bandwidth(t_tot, plan.pulses(), plan.points(), plan.delta_tau())?,
        carrier_hop_hz: analytic::carrier_hop_bandwidth(plan.tau0())?,
        baseline_resolution_m: baseline,
        separation_m,
        resolution_ratio,
    })
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    command: &'static str,
    #[serde(flatten)]
    report: PlanReport,
    config: &'a ScenarioConfig,
}

pub fn plan(cfg: &ScenarioConfig, separation_m: Option<f64>, out: Option<&Output>) -> Result<(), CliError> {
    let doc = PlanOutput {
        command: "plan",
        report: plan_report(&cfg.plan()?, separation_m)?,
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&doc)?;
    println!("{text}");
    if let Some(out) = out {
        out.json("plan.json", &doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumPoint {
    m: usize,
    tau_m_s: f64,
    file: String,
    null_to_null_hz: f64,
    expected_hz: f64,
    relative_error: f64,
    total_power: f64,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    command: &'static str,
    fs_hz: f64,
    segment_samples: usize,
    floor: f64,
    points: Vec<SpectrumPoint>,
    /// `max power / min power - 1` over the selected points.
    power_spread: f64,
    config: &'a ScenarioConfig,
}

/// Density level, relative to the peak, below which the lobe edge search
/// starts looking for the null.
const NULL_FLOOR: f64 = 0.05;

pub fn spectrum(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    let plan = cfg.plan()?;
    let fs = cfg.fs();
    let carrier = plan.carrier_hz();
    if fs < MIN_OVERSAMPLING * carrier {
        return Err(CliError::Precondition(format!(
            "fs = {fs} Hz is below {MIN_OVERSAMPLING} x carrier ({} Hz)",
            MIN_OVERSAMPLING * carrier
        )));
    }
    let selected = cfg.spectrum_points.clone().unwrap_or_else(|| {
        let last = plan.points() - 1;
        let mut v = vec![0, last / 2, last];
        v.dedup();
        v
    });
    // Segments span about 32 pulses so the lobe is resolved well.
    let segment = ((32.0 * plan.tau0() * fs).ceil() as usize).next_power_of_two();
    let mut points = Vec::with_capacity(selected.len());
    for &m in &selected {
        let tau = plan.coherence_time(m)?;
        let schedule = plan.phase_schedule(m)?;
        let x = waveform::sample_window(&schedule, carrier, fs)?;
        if x.len() < segment {
            return Err(CliError::Precondition(format!(
                "point {m}: {} samples, fewer than one {segment}-sample segment; raise pulses",
                x.len()
            )));
        }
        let s = spectrum::welch(&x, fs, segment)?;
        let width = spectrum::null_to_null_width(&s, NULL_FLOOR)?;
        let file = format!("spectrum_m{m}.csv");
        let mut w = csv::Writer::from_writer(out.create(&file)?);
        w.write_record(["freq_hz", "psd_per_hz"])?;
        for (f, p) in s.freqs.iter().zip(&s.psd) {
            w.write_record([f.to_string(), p.to_string()])?;
        }
        w.flush()?;
        let expected = 2.0 / tau;
        points.push(SpectrumPoint {
            m,
            tau_m_s: tau,
            file,
            null_to_null_hz: width.width_hz,
            expected_hz: expected,
            relative_error: width.width_hz / expected - 1.0,
            total_power: s.total_power(),
        });
    }
    let p_max = points.iter().map(|p| p.total_power).fold(f64::MIN, f64::max);
    let p_min = points.iter().map(|p| p.total_power).fold(f64::MAX, f64::min);
    out.json(
        "spectrum.json",
        &SpectrumReport {
            command: "spectrum",
            fs_hz: fs,
            segment_samples: segment,
            floor: NULL_FLOOR,
            points,
            power_spread: p_max / p_min - 1.0,
            config: cfg,
        },
    )
}
