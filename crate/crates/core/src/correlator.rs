//! The correlation receiver.
//!
//! Each sweep point mixes the echo with the still-transmitting signal and
//! averages over the `N * tau_m` window:
//!
//! ```text
//! C_m = 1/(N tau_m) ∫_{T_m}^{T_m + N tau_m} S(t) r(t) dt,   C̃_m = l_m C_m
//! ```
//!
//! Two evaluations are provided. The semi-analytic one integrates every
//! constant-phase sub-segment in closed form and is fast enough for full-size
//! sweeps. The sampled one applies the trapezoid rule to the time-domain
//! product and serves as an independent check at small scale.
//!
//! Moving targets in the semi-analytic receiver follow the per-pulse freeze
//! and sequential-scan approximation: within sweep point `m` the delay of
//! pulse `n` is `tau + 2 n tau_m v / c`, and the target only counts as inside
//! the coherence window when `tau_m > tau + 2 m N tau_m v / c`. Otherwise the
//! echo is evaluated at the displaced delay, where it carries no correlated
//! part.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scene::{Scene, Target};
use crate::waveform::{make_phase_schedule, pulse_index, PhaseSchedule, SweepPlan};
use crate::SPEED_OF_LIGHT;

/// Minimum oversampling of the carrier for the sampled receiver.
pub const MIN_OVERSAMPLING: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    #[serde(rename = "semianalytic")]
    SemiAnalytic,
    Sampled {
        /// Sample rate in Hz, at least [`MIN_OVERSAMPLING`] times the carrier.
        fs: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatorOptions {
    /// Keep the `2ω` mixing products in the semi-analytic integrals.
    pub double_frequency: bool,
    /// Return per-pulse I/Q outputs alongside `C_m`.
    pub keep_slow_time: bool,
}

impl Default for CorrelatorOptions {
    fn default() -> Self {
        CorrelatorOptions {
            double_frequency: true,
            keep_slow_time: false,
        }
    }
}

/// Receiver output of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointOutput {
    pub c_raw: f64,
    /// Per-pulse complex output `(1/tau_m) ∫_pulse (cos, sin)(ωt + φ_n) r(t) dt`.
    /// The real parts average to `C_m` minus any DC bias.
    pub slow_time: Option<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub m: usize,
    /// Coherence length `c * tau_m`, meters.
    pub l_m: f64,
    pub c_raw: f64,
    /// `l_m * c_raw`.
    pub c_norm: f64,
    pub slow_time: Option<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub plan: SweepPlan,
    pub scene: Scene,
    pub points: Vec<SweepPoint>,
}

impl SweepRecord {
    pub fn lengths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.l_m).collect()
    }

    pub fn c_norm(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.c_norm).collect()
    }

    pub fn c_raw(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.c_raw).collect()
    }
}

/// Closed-form `∫_a^b (cos, sin)(ωt + φ_n) cos(ω(t - d) + φ_j) dt`.
#[inline]
fn mixed_segment(omega: f64, d: f64, phi_n: f64, phi_j: f64, a: f64, b: f64, dbl: bool) -> Complex64 {
    let (sin_diff, cos_diff) = (omega * d + phi_n - phi_j).sin_cos();
    let len = b - a;
    let mut re = len * cos_diff;
    let mut im = len * sin_diff;
    if dbl {
        let s = phi_n + phi_j - omega * d;
        let (sb, cb) = (2.0 * omega * b + s).sin_cos();
        let (sa, ca) = (2.0 * omega * a + s).sin_cos();
        let inv = 0.5 / omega;
        re += (sb - sa) * inv;
        im -= (cb - ca) * inv;
    }
    Complex64::new(0.5 * re, 0.5 * im)
}

/// Delay and per-pulse delay step of `target` at sweep point `m` under the
/// sequential-scan approximation.
fn sequential_delay(target: &Target, m: usize, pulses: usize, tau: f64) -> (f64, f64) {
    let beta = target.radial_velocity() / SPEED_OF_LIGHT;
    let step = 2.0 * tau * beta;
    let displaced = 2.0 * m as f64 * pulses as f64 * tau * beta;
    let base = if tau > target.delay() + displaced {
        target.delay()
    } else {
        target.delay() + displaced
    };
    (base, step)
}

/// Semi-analytic receiver output for sweep point `m`.
pub fn correlate_point_semianalytic(
    plan: &SweepPlan,
    scene: &Scene,
    m: usize,
    opts: CorrelatorOptions,
) -> Result<PointOutput> {
    let schedule = make_phase_schedule(plan, m)?;
    correlate_schedule(plan, scene, m, &schedule, opts)
}

/// Semi-analytic receiver output for an explicit phase schedule of sweep
/// point `m` (for example [`PhaseSchedule::constant`]).
pub fn correlate_schedule(
    plan: &SweepPlan,
    scene: &Scene,
    m: usize,
    schedule: &PhaseSchedule,
    opts: CorrelatorOptions,
) -> Result<PointOutput> {
    let pulses = schedule.len();
    if pulses != plan.pulses() {
        return Err(Error::invalid("schedule", "pulse count differs from the plan"));
    }
    let tau = schedule.pulse_duration();
    let t_start = schedule.start_time();
    let omega = plan.omega();
    let phases = schedule.phases();
    let dbl = opts.double_frequency;

    let mut slow = vec![Complex64::new(0.0, 0.0); pulses];
    for target in &scene.targets {
        let (base, step) = sequential_delay(target, m, pulses, tau);
        let gain = target.attenuation() / tau;
        for (n, out) in slow.iter_mut().enumerate() {
            let d = base + n as f64 * step;
            let p = pulse_index(d, tau);
            let frac = ((d - p as f64 * tau) / tau).max(0.0);
            let t0 = t_start + n as f64 * tau;
            let t1 = t0 + tau;
            let phi_n = phases[n];
            // Echo index of the later part of the pulse.
            let j = n as i64 - p;
            let phase_of = |j: i64| {
                if j >= 0 {
                    phases[j as usize]
                } else {
                    schedule.phase_at(j)
                }
            };
            let mut acc = Complex64::new(0.0, 0.0);
            let split = if frac > 0.0 {
                let split = t0 + frac * tau;
                acc += mixed_segment(omega, d, phi_n, phase_of(j - 1), t0, split, dbl);
                split
            } else {
                t0
            };
            acc += mixed_segment(omega, d, phi_n, phase_of(j), split, t1, dbl);
            *out += gain * acc;
        }
    }

    let inv_snr = scene.snr.inverse();
    if inv_snr > 0.0 {
        // Per-pulse deviation chosen so the N-pulse average carries
        // (A_ref / 2) / sqrt(SNR).
        let sigma = 0.5 * scene.noise_reference_attenuation() * (pulses as f64 * inv_snr).sqrt();
        let mut noise = rng::stream(scene.noise_seed, m, rng::Domain::Noise);
        for out in slow.iter_mut() {
            let re: f64 = noise.sample(StandardNormal);
            let im: f64 = noise.sample(StandardNormal);
            *out += Complex64::new(sigma * re, sigma * im);
        }
    }

    let c_raw = slow.iter().map(|z| z.re).sum::<f64>() / pulses as f64 + scene.dc_bias;
    Ok(PointOutput {
        c_raw,
        slow_time: opts.keep_slow_time.then_some(slow),
    })
}

/// Time-sampled receiver output for sweep point `m`: trapezoid rule over
/// `[T_m, T_m + N tau_m]` at sample rate `fs`. Echo delays follow the
/// continuous law `tau + 2 v t / c`.
pub fn correlate_point_sampled(plan: &SweepPlan, scene: &Scene, m: usize, fs: f64) -> Result<f64> {
    if !(fs >= MIN_OVERSAMPLING * plan.carrier_hz()) {
        return Err(Error::Precondition(format!(
            "sample rate {fs:e} Hz below {MIN_OVERSAMPLING} x carrier {:e} Hz",
            plan.carrier_hz()
        )));
    }
    let schedule = make_phase_schedule(plan, m)?;
    let omega = plan.omega();
    let carrier = plan.carrier_hz();
    let start = schedule.start_time();
    let span = schedule.end_time() - start;
    let intervals = (span * fs).ceil() as usize;
    let h = span / intervals as f64;
    let product = |k: usize| {
        let t = start + k as f64 * h;
        let rx = scene.echo_sample(&schedule, carrier, t) + scene.noise_sample(&schedule, t);
        schedule.sample_clamped(omega, t) * rx
    };
    let inner: f64 = (1..intervals).map(product).sum();
    let total = inner + 0.5 * (product(0) + product(intervals));
    Ok(total * h / span + scene.dc_bias)
}

/// Evaluates every sweep point of `plan` against `scene`.
pub fn run_sweep(
    plan: &SweepPlan,
    scene: &Scene,
    mode: Mode,
    opts: CorrelatorOptions,
) -> Result<SweepRecord> {
    let points = (0..plan.points())
        .into_par_iter()
        .map(|m| {
            let l_m = plan.coherence_length(m)?;
            let (c_raw, slow_time) = match mode {
                Mode::SemiAnalytic => {
                    let out = correlate_point_semianalytic(plan, scene, m, opts)?;
                    (out.c_raw, out.slow_time)
                }
                Mode::Sampled { fs } => (correlate_point_sampled(plan, scene, m, fs)?, None),
            };
            Ok(SweepPoint {
                m,
                l_m,
                c_raw,
                c_norm: l_m * c_raw,
                slow_time,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRecord {
        plan: plan.clone(),
        scene: scene.clone(),
        points,
    })
}
