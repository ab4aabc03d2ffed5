//! Closed-form expectations and deviations of the receiver output, and the
//! sweep-time / bandwidth relations of a plan.
//!
//! Lengths are round-trip coherence lengths in meters; `k` is the carrier
//! wavenumber in rad/m. Means are of the normalized output `C̃_m = l_m C_m`;
//! deviations are of the raw output `C_m` unless stated otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::{Scene, Snr, Target};
use crate::waveform::SweepPlan;
use crate::SPEED_OF_LIGHT;

/// Single stationary target: `(A/2)(l_m - l) cos(kl)` inside the window,
/// zero otherwise.
pub fn sst_mean(l_m: f64, l: f64, attenuation: f64, k: f64) -> f64 {
    if l_m > l {
        0.5 * attenuation * (l_m - l) * (k * l).cos()
    } else {
        0.0
    }
}

/// Deviation of `C_m` for a single stationary target:
/// `(A/2) sqrt((1/2N)(l/l_m)² + 1/SNR)` inside the window and
/// `(A/2) sqrt(1/2N + 1/SNR)` outside.
pub fn sst_std(l_m: f64, l: f64, attenuation: f64, pulses: usize, snr: Snr) -> f64 {
    std_branch(l_m > l, l / l_m, attenuation, pulses, snr)
}

fn std_branch(inside: bool, ratio: f64, attenuation: f64, pulses: usize, snr: Snr) -> f64 {
    let jitter = if inside { ratio * ratio } else { 1.0 };
    0.5 * attenuation * (jitter / (2.0 * pulses as f64) + snr.inverse()).sqrt()
}

/// Sum of [`sst_mean`] over the targets inside the window.
pub fn mst_mean(l_m: f64, targets: &[Target], k: f64) -> f64 {
    targets
        .iter()
        .map(|t| sst_mean(l_m, t.roundtrip_length(), t.attenuation(), k))
        .sum()
}

/// Root-sum-square of the per-target [`sst_std`] terms.
pub fn mst_std(l_m: f64, targets: &[Target], pulses: usize, snr: Snr) -> f64 {
    targets
        .iter()
        .map(|t| sst_std(l_m, t.roundtrip_length(), t.attenuation(), pulses, snr).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `sin(N x) / (N sin x)`, with the removable singularity at `x = jπ`
/// replaced by its limit `cos(N x) / cos(x)`.
pub fn dirichlet(pulses: usize, x: f64) -> f64 {
    let n = pulses as f64;
    let s = x.sin();
    if s.abs() < 1e-12 {
        (n * x).cos() / x.cos()
    } else {
        (n * x).sin() / (n * s)
    }
}

/// Whether a target starting at `l` with speed `v` is inside the coherence
/// window at sweep index `m`: `l_m > l + 2 m N (v/c) l_m`.
pub fn moving_inside_window(l_m: f64, l: f64, v: f64, pulses: usize, m: f64) -> bool {
    l_m > l + 2.0 * m * pulses as f64 * (v / SPEED_OF_LIGHT) * l_m
}

/// Single moving target:
///
/// ```text
/// (A/2)(l_m - l) cos(k(l + (N-1)(v/c) l_m)) sin(N k l_m v/c) / (N sin(k l_m v/c))
/// ```
///
/// when [`moving_inside_window`] holds, zero otherwise. `m` is the sweep
/// index at which `l_m` occurs.
pub fn smt_mean(l_m: f64, l: f64, attenuation: f64, k: f64, v: f64, pulses: usize, m: f64) -> f64 {
    if !moving_inside_window(l_m, l, v, pulses, m) {
        return 0.0;
    }
    let beta = v / SPEED_OF_LIGHT;
    let phase = k * (l + (pulses as f64 - 1.0) * beta * l_m);
    0.5 * attenuation * (l_m - l) * phase.cos() * dirichlet(pulses, k * l_m * beta)
}

/// Deviation of `C_m` for a single moving target. Motion leaves the
/// deviation unchanged; only the window condition moves.
pub fn smt_std(
    l_m: f64,
    l: f64,
    attenuation: f64,
    v: f64,
    pulses: usize,
    m: f64,
    snr: Snr,
) -> f64 {
    std_branch(moving_inside_window(l_m, l, v, pulses, m), l / l_m, attenuation, pulses, snr)
}

/// Sweep index of coherence time `tau_m`: `(M-1)(tau_m - tau0)/Δτ`, zero for
/// a flat sweep.
pub fn sweep_index(plan: &SweepPlan, tau_m: f64) -> f64 {
    if plan.delta_tau() == 0.0 {
        0.0
    } else {
        (plan.points() - 1) as f64 * (tau_m - plan.tau0()) / plan.delta_tau()
    }
}

/// `T_tot = N Σ tau_m = ((2 tau0 + Δτ)/2) N M`.
pub fn total_sweep_time(plan: &SweepPlan) -> f64 {
    0.5 * (2.0 * plan.tau0() + plan.delta_tau()) * plan.pulses() as f64 * plan.points() as f64
}

/// Null-to-null transmitted bandwidth `2 / tau0`.
pub fn max_bandwidth(tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(Error::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    Ok(2.0 / tau0)
}

/// The same bandwidth expressed through the sweep time:
/// `2 / (T_tot/(N M) - Δτ/2)`.
pub fn tradeoff_bandwidth(t_tot: f64, pulses: usize, points: usize, delta_tau: f64) -> Result<f64> {
    let denom = t_tot / (pulses as f64 * points as f64) - 0.5 * delta_tau;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "sweep time {t_tot:e} s too short for N={pulses}, M={points}, Δτ={delta_tau:e}"
        )));
    }
    Ok(2.0 / denom)
}

/// Extra carrier sweep needed to avoid correlation nulls: `1 / (2 tau0)`.
pub fn carrier_hop_bandwidth(tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(Error::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    Ok(0.5 / tau0)
}

/// Conventional pulsed / FMCW range resolution `c / (2 BW)`.
pub fn baseline_resolution(bw: f64) -> Result<f64> {
    if !(bw > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bw}")));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bw))
}

/// Smallest `|cos(k l)|` over the targets at carrier `carrier_hz`.
pub fn min_abs_cos(carrier_hz: f64, lengths: &[f64]) -> f64 {
    let k = std::f64::consts::TAU * carrier_hz / SPEED_OF_LIGHT;
    lengths.iter().map(|&l| (k * l).cos().abs()).fold(f64::INFINITY, f64::min)
}

/// Candidate carrier maximizing `min_i |cos(k l_i)|`; ties go to the lowest
/// frequency.
pub fn pick_carrier(candidates: &[f64], lengths: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &f in candidates {
        if !(f > 0.0) {
            return Err(Error::invalid("candidates", format!("non-positive frequency {f}")));
        }
        let score = min_abs_cos(f, lengths);
        best = match best {
            Some((bf, bs)) if bs > score || (bs == score && bf <= f) => Some((bf, bs)),
            _ => Some((f, score)),
        };
    }
    best.map(|(f, _)| f)
        .ok_or_else(|| Error::invalid("candidates", "no carrier candidates"))
}

/// Expected `C̃_m` and its deviation on a plan's coherence grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryCurve {
    pub l_m: Vec<f64>,
    pub mean: Vec<f64>,
    /// Deviation of `C̃_m`, i.e. `l_m * σ_{C_m}`.
    pub std: Vec<f64>,
}

/// Theory for a scene on the plan grid. Means add over targets (moving ones
/// use [`smt_mean`]) plus `l_m` times any DC bias. The deviation combines the
/// per-target jitter terms with the channel noise referenced to
/// [`Scene::noise_reference_attenuation`], which equals the root-sum-square
/// form for any non-empty scene.
pub fn theory_curve(plan: &SweepPlan, scene: &Scene) -> TheoryCurve {
    let k = plan.wavenumber();
    let n = plan.pulses();
    let lengths = plan.coherence_lengths();
    let noise_var = 0.25 * scene.noise_reference_attenuation().powi(2) * scene.snr.inverse();
    let mut mean = Vec::with_capacity(lengths.len());
    let mut std = Vec::with_capacity(lengths.len());
    for (m, &l_m) in lengths.iter().enumerate() {
        let idx = m as f64;
        let mut mu = l_m * scene.dc_bias;
        let mut var = noise_var;
        for t in &scene.targets {
            let (l, a, v) = (t.roundtrip_length(), t.attenuation(), t.radial_velocity());
            mu += smt_mean(l_m, l, a, k, v, n, idx);
            var += smt_std(l_m, l, a, v, n, idx, Snr::Noiseless).powi(2);
        }
        mean.push(mu);
        std.push(l_m * var.sqrt());
    }
    TheoryCurve {
        l_m: lengths,
        mean,
        std,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SPEED_OF_LIGHT as C;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn sst_mean_examples() {
        assert_eq!(sst_mean(25.0, 25.0, 1.0, 3.0), 0.0);
        let k = TAU / 25.0; // kl = 2π
        assert!((sst_mean(26.0, 25.0, 1.0, k) - 0.5).abs() < 1e-12);
        let k = FRAC_PI_2 / 25.0;
        for l_m in [25.5, 26.0, 30.0] {
            assert!(sst_mean(l_m, 25.0, 1.0, k).abs() < 1e-15);
        }
        assert_eq!(sst_mean(24.0, 25.0, 1.0, k), 0.0);
    }

    #[test]
    fn sst_std_examples() {
        let s = sst_std(1.0, 0.9, 1.0, 5000, Snr::Noiseless);
        assert!((s - 0.5 * (0.81f64 / 1e4).sqrt()).abs() < 1e-15);
        assert!((s - 4.5e-3).abs() < 1e-12);
        let out = sst_std(20.0, 25.0, 1.0, 5000, Snr::Noiseless);
        assert!((out - 0.5 * (1.0f64 / 1e4).sqrt()).abs() < 1e-15);
        // Inside-window form: Var = (A²/8N)(τ/τ_m)².
        let v = sst_std(30.0, 24.0, 0.7, 1000, Snr::Noiseless).powi(2);
        assert!((v - 0.49 / 8000.0 * 0.64).abs() < 1e-15);
        // Far past the target only the noise floor remains.
        let far = sst_std(1e9, 25.0, 0.6, 1000, Snr::Linear(1000.0));
        assert!((far - 0.3 * (1e-3f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn mst_reductions() {
        let t = Target::stationary(23.6, 0.8).unwrap();
        let k = 50.0;
        let snr = Snr::Linear(1000.0);
        for l_m in [22.0, 23.6, 24.0, 27.0] {
            assert_eq!(mst_mean(l_m, &[t], k), sst_mean(l_m, 23.6, 0.8, k));
            assert_eq!(mst_std(l_m, &[t], 1000, snr), sst_std(l_m, 23.6, 0.8, 1000, snr));
            assert_eq!(mst_mean(l_m, &[t, t], k), 2.0 * sst_mean(l_m, 23.6, 0.8, k));
        }
        assert_eq!(mst_mean(22.0, &[], k), 0.0);
        let far = Target::stationary(40.0, 1.0).unwrap();
        let s = mst_std(30.0, &[far, far], 5000, Snr::Noiseless);
        assert!((s - 2f64.sqrt() * 0.5 * (1.0 / 10000f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mst_is_additive_over_disjoint_lists() {
        let a = [Target::stationary(23.6, 1.0).unwrap()];
        let b = [Target::stationary(25.4, 0.5).unwrap(), Target::stationary(26.1, 0.3).unwrap()];
        let all = [a[0], b[0], b[1]];
        for i in 0..100 {
            let l_m = 22.0 + 0.05 * i as f64;
            let lhs = mst_mean(l_m, &all, 49.0);
            let rhs = mst_mean(l_m, &a, 49.0) + mst_mean(l_m, &b, 49.0);
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn smt_reduces_to_sst_when_stationary() {
        let k = 50.3;
        for i in 0..1000 {
            let l_m = 28.0 + 0.005 * i as f64;
            let m = i as f64 / 10.0;
            assert_eq!(smt_mean(l_m, 30.0, 0.9, k, 0.0, 1000, m), sst_mean(l_m, 30.0, 0.9, k));
        }
    }

    #[test]
    fn moving_breakpoint_recedes() {
        let plan = SweepPlan::from_lengths(28.0, 5.0, 100, 1000).unwrap();
        let k = plan.wavenumber();
        let first_nonzero = |v: f64| {
            plan.coherence_lengths()
                .iter()
                .enumerate()
                .find(|(m, &l_m)| smt_mean(l_m, 30.0, 1.0, k, v, 1000, *m as f64) != 0.0)
                .map(|(_, &l)| l)
                .unwrap()
        };
        let still = first_nonzero(0.0);
        let fast = first_nonzero(55.6);
        assert!(fast > still + 0.1, "{fast} vs {still}");
        // At 10 m/s the kernel stays close to one.
        let x = k * 31.0 * 10.0 / C;
        assert!((dirichlet(1000, x) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dirichlet_limits() {
        assert!((dirichlet(10, 0.0) - 1.0).abs() < 1e-15);
        assert!((dirichlet(10, PI) - (-1.0)).abs() < 1e-12);
        assert!((dirichlet(11, PI) - 1.0).abs() < 1e-12);
        let x: f64 = 1e-3;
        let direct = (10.0 * x).sin() / (10.0 * x.sin());
        assert!((dirichlet(10, x) - direct).abs() < 1e-15);
    }

    #[test]
    fn sweep_time_and_bandwidth() {
        let plan = SweepPlan::from_lengths(22.0, 5.0, 500, 5000).unwrap();
        let t = total_sweep_time(&plan);
        assert!((t - 0.204).abs() / 0.204 < 0.01, "{t}");
        let bw = max_bandwidth(plan.tau0()).unwrap();
        assert!((bw - 27.25e6).abs() / 27.25e6 < 1e-3, "{bw}");
        let tb = tradeoff_bandwidth(t, 5000, 500, plan.delta_tau()).unwrap();
        assert!((tb - bw).abs() / bw < 1e-12);
        assert!((max_bandwidth(27.0 / C).unwrap() - 22.2e6).abs() / 22.2e6 < 1e-3);
        assert!(max_bandwidth(0.0).is_err());
        assert!(tradeoff_bandwidth(1e-9, 5000, 500, plan.delta_tau()).is_err());
        let single = SweepPlan::new(1e-7, 0.0, 2, 2).unwrap();
        assert_eq!(total_sweep_time(&single), 4e-7);
        let doubled = single.clone().with_pulses(4).unwrap();
        assert_eq!(total_sweep_time(&doubled), 2.0 * total_sweep_time(&single));
    }

    #[test]
    fn carrier_hop_examples() {
        assert!((carrier_hop_bandwidth(20.0 / C).unwrap() / 7.5e6 - 1.0).abs() < 1e-3);
        assert!((carrier_hop_bandwidth(30.0 / C).unwrap() / 5.0e6 - 1.0).abs() < 1e-3);
        assert!(carrier_hop_bandwidth(1e6).unwrap() < 1e-6);
        assert!(carrier_hop_bandwidth(-1.0).is_err());
    }

    #[test]
    fn baseline_resolution_examples() {
        let r = baseline_resolution(27.2e6).unwrap();
        assert!((r - 5.51).abs() < 0.01, "{r}");
        assert!((baseline_resolution(1e9).unwrap() - 0.15).abs() < 1e-3);
        assert!(r / 0.32 > 10.0);
        assert!(baseline_resolution(0.0).is_err());
    }

    #[test]
    fn pick_carrier_cases() {
        assert_eq!(pick_carrier(&[1.0e9], &[25.0]).unwrap(), 1.0e9);
        assert!(pick_carrier(&[], &[25.0]).is_err());
        // f0 puts kl at π/2 for l = 25 m.
        let f0 = C / (4.0 * 25.0);
        let f1 = C / 25.0;
        assert_eq!(pick_carrier(&[f0, f1], &[25.0]).unwrap(), f1);
        // Ties go to the lower frequency.
        assert_eq!(pick_carrier(&[2.0 * f1, f1], &[25.0]).unwrap(), f1);
    }

    #[test]
    fn theory_curve_grid() {
        let plan = SweepPlan::from_lengths(22.0, 5.0, 50, 1000).unwrap();
        let scene = Scene::new(vec![Target::stationary(25.0, 1.0).unwrap()], Snr::Linear(1000.0));
        let curve = theory_curve(&plan, &scene);
        assert_eq!(curve.l_m, plan.coherence_lengths());
        let k = plan.wavenumber();
        for (i, &l_m) in curve.l_m.iter().enumerate() {
            assert!((curve.mean[i] - sst_mean(l_m, 25.0, 1.0, k)).abs() < 1e-12);
            let s = l_m * sst_std(l_m, 25.0, 1.0, 1000, Snr::Linear(1000.0));
            assert!((curve.std[i] - s).abs() < 1e-12);
            assert!(curve.std[i] >= 0.0);
            if l_m <= 25.0 {
                assert_eq!(curve.mean[i], 0.0);
            }
        }
    }
}
