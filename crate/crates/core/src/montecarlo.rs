//! Repeated sweeps with independent phase and noise realizations.
//!
//! Trial `t` reseeds both the phase schedule and the channel noise from the
//! base seeds, so a run is a pure function of `(plan, scene, trials)` and
//! the result does not depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{theory_curve, TheoryCurve};
use crate::correlator::{run_sweep, CorrelatorOptions, Mode, SweepRecord};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scene::Scene;
use crate::waveform::SweepPlan;

/// Plan and scene of trial `trial`.
pub fn trial_inputs(plan: &SweepPlan, scene: &Scene, trial: usize) -> (SweepPlan, Scene) {
    (
        plan.clone().with_seed(derive_seed(plan.seed(), trial)),
        scene.clone().with_noise_seed(derive_seed(scene.noise_seed, trial)),
    )
}

/// Runs `trials` sweeps, returned in trial order.
pub fn run_trials(
    plan: &SweepPlan,
    scene: &Scene,
    mode: Mode,
    opts: CorrelatorOptions,
    trials: usize,
) -> Result<Vec<SweepRecord>> {
    if trials == 0 {
        return Err(Error::Precondition("at least one trial required".into()));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let (p, s) = trial_inputs(plan, scene, t);
            run_sweep(&p, &s, mode, opts)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointStats {
    pub m: usize,
    pub l_m: f64,
    pub mean: f64,
    /// Unbiased sample deviation across trials.
    pub std: f64,
    pub theory_mean: f64,
    pub theory_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub points: Vec<PointStats>,
    /// `max |mean - theory_mean| / theory_std`.
    pub max_mean_error: f64,
    /// `max |mean - theory_mean| / (theory_std / sqrt(trials))`.
    pub max_mean_error_se: f64,
    /// `max |std / theory_std - 1|`.
    pub max_std_error: f64,
}

/// Per-point sample statistics of `C̃_m` against `theory`. Points where the
/// theory deviation is zero are left out of the maxima.
pub fn summarize(records: &[SweepRecord], theory: &TheoryCurve) -> Result<MonteCarloSummary> {
    if records.len() < 2 {
        return Err(Error::Precondition(format!(
            "statistics need at least 2 trials, got {}",
            records.len()
        )));
    }
    let points = theory.l_m.len();
    if records.iter().any(|r| r.points.len() != points) {
        return Err(Error::invalid("records", "sweep length differs from theory grid"));
    }
    let t = records.len() as f64;
    let mut out = Vec::with_capacity(points);
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for m in 0..points {
        let mean = records.iter().map(|r| r.points[m].c_norm).sum::<f64>() / t;
        let var = records
            .iter()
            .map(|r| (r.points[m].c_norm - mean).powi(2))
            .sum::<f64>()
            / (t - 1.0);
        let stats = PointStats {
            m,
            l_m: theory.l_m[m],
            mean,
            std: var.sqrt(),
            theory_mean: theory.mean[m],
            theory_std: theory.std[m],
        };
        if stats.theory_std > 0.0 {
            worst_mean = worst_mean.max((stats.mean - stats.theory_mean).abs() / stats.theory_std);
            worst_std = worst_std.max((stats.std / stats.theory_std - 1.0).abs());
        }
        out.push(stats);
    }
    Ok(MonteCarloSummary {
        trials: records.len(),
        points: out,
        max_mean_error: worst_mean,
        max_mean_error_se: worst_mean * t.sqrt(),
        max_std_error: worst_std,
    })
}

/// [`run_trials`] followed by [`summarize`] against the scene's theory curve.
pub fn run_monte_carlo(
    plan: &SweepPlan,
    scene: &Scene,
    mode: Mode,
    opts: CorrelatorOptions,
    trials: usize,
) -> Result<(Vec<SweepRecord>, MonteCarloSummary)> {
    if trials < 2 {
        return Err(Error::Precondition(format!("need at least 2 trials, got {trials}")));
    }
    let records = run_trials(plan, scene, mode, opts, trials)?;
    let summary = summarize(&records, &theory_curve(plan, scene))?;
    Ok((records, summary))
}
