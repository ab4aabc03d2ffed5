//! Monte Carlo checks of the receiver against independent closed forms.

use cohradar_core::analytic::sst_std;
use cohradar_core::correlator::{correlate_point_semianalytic, correlate_point_sampled};
use cohradar_core::montecarlo::run_trials;
use cohradar_core::{Mode, Scene, Snr, SweepPlan, Target, SPEED_OF_LIGHT};

fn sample_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `C_m` at the first point of a two-point plan starting at `l_m`, over
/// `trials` phase seeds.
fn point_trials(l_m: f64, scene: &Scene, pulses: usize, carrier: Option<f64>, trials: u64) -> Vec<f64> {
    let mut base = SweepPlan::from_lengths(l_m, 1.0, 2, pulses).unwrap();
    if let Some(f) = carrier {
        base = base.with_carrier(f).unwrap();
    }
    (0..trials)
        .map(|s| {
            let plan = base.clone().with_seed(s);
            correlate_point_semianalytic(&plan, scene, 0, Default::default()).unwrap().c_raw
        })
        .collect()
}

#[test]
fn noiseless_std_inside_window() {
    let (l_m, l, pulses) = (25.0, 22.5, 1000);
    let scene = Scene::noiseless(vec![Target::stationary(l, 1.0).unwrap()]);
    let (_, std) = sample_moments(&point_trials(l_m, &scene, pulses, None, 10_000));
    let theory = sst_std(l_m, l, 1.0, pulses, Snr::Noiseless);
    assert!((std / theory - 1.0).abs() < 0.05, "{std} vs {theory}");
}

#[test]
fn noiseless_std_outside_window_at_whole_pulse_delay() {
    // A delay of exactly two pulses lines the echo up with whole foreign
    // pulses, where the outside-window formula is exact.
    let (l_m, pulses) = (25.0, 1000);
    let scene = Scene::noiseless(vec![Target::stationary(2.0 * l_m, 1.0).unwrap()]);
    let (_, std) = sample_moments(&point_trials(l_m, &scene, pulses, None, 10_000));
    let theory = sst_std(l_m, 2.0 * l_m, 1.0, pulses, Snr::Noiseless);
    assert!((std / theory - 1.0).abs() < 0.05, "{std} vs {theory}");
}

#[test]
fn noiseless_std_outside_window_fractional_delay() {
    // Echo straddles two foreign pulses with fractions δ and 1 - δ; their
    // jitter adds in quadrature, so the deviation is the whole-pulse value
    // times sqrt(δ² + (1 - δ)²).
    let (l_m, pulses) = (25.0, 1000);
    let l = 1.2 * l_m;
    let scene = Scene::noiseless(vec![Target::stationary(l, 1.0).unwrap()]);
    let (_, std) = sample_moments(&point_trials(l_m, &scene, pulses, None, 10_000));
    let whole = sst_std(l_m, l, 1.0, pulses, Snr::Noiseless);
    let delta: f64 = 0.2;
    let exact = whole * (delta.powi(2) + (1.0 - delta).powi(2)).sqrt();
    assert!((std / exact - 1.0).abs() < 0.05, "{std} vs {exact}");
    assert!(std < 0.9 * whole);
}

#[test]
fn zero_mean_outside_window() {
    let plan = SweepPlan::from_lengths(22.0, 5.0, 20, 500).unwrap().with_seed(3);
    let scene = Scene::noiseless(vec![Target::stationary(30.0, 1.0).unwrap()]);
    let trials = 500;
    let recs = run_trials(&plan, &scene, Mode::SemiAnalytic, Default::default(), trials).unwrap();
    for m in 0..plan.points() {
        let l_m = plan.coherence_length(m).unwrap();
        let vals: Vec<f64> = recs.iter().map(|r| r.points[m].c_norm).collect();
        let (mean, _) = sample_moments(&vals);
        let sigma = l_m * sst_std(l_m, 30.0, 1.0, plan.pulses(), Snr::Noiseless);
        assert!(mean.abs() <= 4.0 * sigma / (trials as f64).sqrt(), "m={m}: {mean}");
    }
}

#[test]
fn half_amplitude_one_meter_into_window() {
    // cos(k l) = 1 at l = 25 m for a carrier of 200 c / 25 m.
    let carrier = 200.0 * SPEED_OF_LIGHT / 25.0;
    let scene = Scene::noiseless(vec![Target::stationary(25.0, 0.8).unwrap()]);
    let trials = 500;
    let vals: Vec<f64> = point_trials(26.0, &scene, 1000, Some(carrier), trials)
        .iter()
        .map(|c| 26.0 * c)
        .collect();
    let (mean, _) = sample_moments(&vals);
    let sigma = 26.0 * sst_std(26.0, 25.0, 0.8, 1000, Snr::Noiseless);
    assert!((mean - 0.4).abs() <= 4.0 * sigma / (trials as f64).sqrt(), "{mean}");
}

#[test]
fn noise_only_sampled_output_is_small() {
    let plan = SweepPlan::from_lengths(22.0, 5.0, 3, 20).unwrap().with_seed(8);
    let scene = Scene::new(vec![], Snr::Linear(1.0)).with_noise_seed(8);
    let fs = 8.0 * plan.carrier_hz();
    for m in 0..plan.points() {
        let c = correlate_point_sampled(&plan, &scene, m, fs).unwrap();
        let samples = (plan.pulses() as f64 * plan.coherence_time(m).unwrap() * fs).ceil();
        assert!(c.abs() <= 5.0 * scene.noise_sigma() / samples.sqrt(), "m={m}: {c}");
    }
}

#[test]
fn noisy_std_matches_noise_floor_far_outside() {
    let (l_m, pulses) = (25.0, 200);
    let scene = Scene::new(vec![Target::stationary(2.0 * l_m, 1.0).unwrap()], Snr::Linear(100.0));
    let vals: Vec<f64> = (0..4000u64)
        .map(|s| {
            let plan = SweepPlan::from_lengths(l_m, 1.0, 2, pulses).unwrap().with_seed(s);
            let sc = scene.clone().with_noise_seed(s + 1);
            correlate_point_semianalytic(&plan, &sc, 0, Default::default()).unwrap().c_raw
        })
        .collect();
    let (_, std) = sample_moments(&vals);
    let theory = sst_std(l_m, 2.0 * l_m, 1.0, pulses, Snr::Linear(100.0));
    assert!((std / theory - 1.0).abs() < 0.05, "{std} vs {theory}");
}
