//! Point targets and the receive-channel noise model.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::waveform::PhaseSchedule;
use crate::SPEED_OF_LIGHT;

/// Radial speeds at or above this are rejected; the delay law assumes `|v| ≪ c`.
pub const MAX_RADIAL_VELOCITY: f64 = 1.0e3;

/// A point scatterer. `roundtrip_length` is the two-way path `l = c * tau`;
/// the physical range is half of it. Positive velocity recedes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    roundtrip_length: f64,
    attenuation: f64,
    radial_velocity: f64,
}

impl Target {
    pub fn new(roundtrip_length: f64, attenuation: f64, radial_velocity: f64) -> Result<Self> {
        if !(roundtrip_length > 0.0 && roundtrip_length.is_finite()) {
            return Err(Error::invalid(
                "roundtrip_length",
                format!("must be positive, got {roundtrip_length}"),
            ));
        }
        if !(attenuation > 0.0 && attenuation <= 1.0) {
            return Err(Error::invalid(
                "attenuation",
                format!("must lie in (0, 1], got {attenuation}"),
            ));
        }
        if !(radial_velocity.abs() < MAX_RADIAL_VELOCITY) {
            return Err(Error::invalid(
                "radial_velocity",
                format!("|v| must be below {MAX_RADIAL_VELOCITY} m/s, got {radial_velocity}"),
            ));
        }
        Ok(Target {
            roundtrip_length,
            attenuation,
            radial_velocity,
        })
    }

    pub fn stationary(roundtrip_length: f64, attenuation: f64) -> Result<Self> {
        Self::new(roundtrip_length, attenuation, 0.0)
    }

    /// Target at physical (one-way) range `range`.
    pub fn at_range(range: f64, attenuation: f64, radial_velocity: f64) -> Result<Self> {
        Self::new(2.0 * range, attenuation, radial_velocity)
    }

    pub fn roundtrip_length(&self) -> f64 {
        self.roundtrip_length
    }

    pub fn range(&self) -> f64 {
        0.5 * self.roundtrip_length
    }

    pub fn attenuation(&self) -> f64 {
        self.attenuation
    }

    pub fn radial_velocity(&self) -> f64 {
        self.radial_velocity
    }

    /// Round-trip delay at scan start.
    pub fn delay(&self) -> f64 {
        self.roundtrip_length / SPEED_OF_LIGHT
    }

    /// Delay at absolute time `t`: `tau + 2 v t / c`.
    pub fn delay_at(&self, t: f64) -> f64 {
        self.delay() + 2.0 * self.radial_velocity * t / SPEED_OF_LIGHT
    }
}

/// Receive-channel signal-to-noise ratio, `A² / (2σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Snr {
    Noiseless,
    Linear(f64),
}

impl Snr {
    pub fn from_db(db: f64) -> Result<Self> {
        Self::linear(10f64.powf(db / 10.0))
    }

    pub fn linear(value: f64) -> Result<Self> {
        if !(value > 0.0) {
            return Err(Error::invalid("snr", format!("must be positive, got {value}")));
        }
        Ok(if value.is_infinite() {
            Snr::Noiseless
        } else {
            Snr::Linear(value)
        })
    }

    /// `1 / SNR`, zero when noiseless.
    pub fn inverse(&self) -> f64 {
        match *self {
            Snr::Noiseless => 0.0,
            Snr::Linear(s) => 1.0 / s,
        }
    }
}

/// Targets plus channel noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub targets: Vec<Target>,
    pub snr: Snr,
    pub noise_seed: u64,
    /// Constant offset added to the receiver output `C_m`, modeling leakage
    /// between the antennas. Zero by default.
    pub dc_bias: f64,
}

impl Scene {
    pub fn new(targets: Vec<Target>, snr: Snr) -> Self {
        Scene {
            targets,
            snr,
            noise_seed: 0,
            dc_bias: 0.0,
        }
    }

    pub fn noiseless(targets: Vec<Target>) -> Self {
        Self::new(targets, Snr::Noiseless)
    }

    pub fn with_noise_seed(mut self, seed: u64) -> Self {
        self.noise_seed = seed;
        self
    }

    pub fn with_dc_bias(mut self, bias: f64) -> Self {
        self.dc_bias = bias;
        self
    }

    pub fn is_moving(&self) -> bool {
        self.targets.iter().any(|t| t.radial_velocity != 0.0)
    }

    /// Amplitude the SNR is referenced to: the root-sum-square of the target
    /// attenuations, or a unit carrier for an empty scene.
    pub fn noise_reference_attenuation(&self) -> f64 {
        if self.targets.is_empty() {
            1.0
        } else {
            self.targets.iter().map(|t| t.attenuation.powi(2)).sum::<f64>().sqrt()
        }
    }

    /// Per-sample noise deviation of the receive channel.
    pub fn noise_sigma(&self) -> f64 {
        match self.snr {
            Snr::Noiseless => 0.0,
            Snr::Linear(s) => self.noise_reference_attenuation() / (2.0 * s).sqrt(),
        }
    }

    /// Noiseless echo `Σ A_i S(t - tau_i(t))` at absolute time `t`. Echoes
    /// of pulses before the window carry phantom phases.
    pub fn echo_sample(&self, schedule: &PhaseSchedule, carrier_hz: f64, t: f64) -> f64 {
        let omega = TAU * carrier_hz;
        self.targets
            .iter()
            .map(|target| {
                let emitted = t - target.delay_at(t);
                let n = schedule.index_at(emitted);
                target.attenuation * (omega * emitted + schedule.phase_at(n)).cos()
            })
            .sum()
    }

    /// Gaussian channel noise at absolute time `t`, keyed by the noise seed,
    /// the sweep point of `schedule` and the bit pattern of `t`.
    pub fn noise_sample(&self, schedule: &PhaseSchedule, t: f64) -> f64 {
        let sigma = self.noise_sigma();
        if sigma == 0.0 {
            return 0.0;
        }
        let point = match schedule.source() {
            crate::waveform::PhaseSource::Random { point, .. } => point,
            crate::waveform::PhaseSource::Constant(_) => 0,
        };
        let mut r = rng::stream_at(self.noise_seed, point, rng::Domain::Noise, t.to_bits());
        let z: f64 = r.sample(StandardNormal);
        sigma * z
    }
}

/// Per-sample noise deviation realizing `snr` against a unit carrier
/// attenuated by `attenuation`: `σ = A / sqrt(2 SNR)`.
pub fn noise_std_from_snr(attenuation: f64, snr: Snr) -> Result<f64> {
    match snr {
        Snr::Noiseless => Ok(0.0),
        Snr::Linear(s) if s > 0.0 => Ok(attenuation / (2.0 * s).sqrt()),
        Snr::Linear(s) => Err(Error::invalid("snr", format!("must be positive, got {s}"))),
    }
}

/// Received amplitude `Σ A_i S(t - tau_i(t)) + n(t)` for `t` inside the
/// transmission window of `schedule`.
pub fn received_sample(
    scene: &Scene,
    schedule: &PhaseSchedule,
    carrier_hz: f64,
    t: f64,
) -> Result<f64> {
    let (start, end) = (schedule.start_time(), schedule.end_time());
    if !(t >= start && t < end) {
        return Err(Error::OutsideWindow { t, start, end });
    }
    Ok(scene.echo_sample(schedule, carrier_hz, t) + scene.noise_sample(schedule, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{make_phase_schedule, SweepPlan};

    #[test]
    fn noise_std_examples() {
        assert_eq!(noise_std_from_snr(1.0, Snr::Linear(0.5)).unwrap(), 1.0);
        assert_eq!(noise_std_from_snr(1.0, Snr::Noiseless).unwrap(), 0.0);
        let sigma = noise_std_from_snr(0.5, Snr::from_db(30.0).unwrap()).unwrap();
        assert!((sigma - 0.5 / 2000f64.sqrt()).abs() < 1e-15);
        assert!((sigma - 0.01118).abs() < 1e-5);
        assert!(noise_std_from_snr(1.0, Snr::Linear(0.0)).is_err());
        assert!(noise_std_from_snr(1.0, Snr::Linear(-1.0)).is_err());
        assert!(noise_std_from_snr(1.0, Snr::Linear(1e300)).unwrap() < 1e-150);
    }

    #[test]
    fn target_validation() {
        assert!(Target::new(25.0, 1.0, 0.0).is_ok());
        assert!(Target::new(0.0, 1.0, 0.0).is_err());
        assert!(Target::new(25.0, 0.0, 0.0).is_err());
        assert!(Target::new(25.0, 1.5, 0.0).is_err());
        assert!(Target::new(25.0, 1.0, 1.0e3).is_err());
        assert_eq!(Target::at_range(12.5, 1.0, 0.0).unwrap().roundtrip_length(), 25.0);
        assert!(Snr::linear(0.0).is_err());
    }

    #[test]
    fn empty_noiseless_scene_is_silent() {
        let plan = SweepPlan::from_lengths(22.0, 5.0, 4, 16).unwrap();
        let s = make_phase_schedule(&plan, 1).unwrap();
        let scene = Scene::noiseless(vec![]);
        for i in 0..100 {
            let t = s.start_time() + i as f64 * 1e-8;
            assert_eq!(received_sample(&scene, &s, plan.carrier_hz(), t).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_delay_echo_is_transmit() {
        // A 1 nm round trip is far below one sample of carrier phase error.
        let plan = SweepPlan::from_lengths(22.0, 5.0, 4, 16).unwrap().with_seed(4);
        let s = make_phase_schedule(&plan, 2).unwrap();
        let scene = Scene::noiseless(vec![Target::stationary(1e-9, 1.0).unwrap()]);
        let f = plan.carrier_hz();
        for i in 0..200 {
            let t = s.start_time() + 1e-10 + i as f64 * 3.1e-9;
            let rx = received_sample(&scene, &s, f, t).unwrap();
            let tx = s.sample(f, t).unwrap();
            assert!((rx - tx).abs() < 1e-6, "{rx} vs {tx}");
        }
    }

    #[test]
    fn echo_phase_windows() {
        // Target at l = 25 m, l_m inside (22, 27): during [nτ_m, nτ_m + τ) the echo
        // carries φ_{n-1}, afterwards φ_n.
        let plan = SweepPlan::from_lengths(22.0, 5.0, 11, 32).unwrap().with_seed(8);
        let m = 8; // l_m = 26 m
        let s = make_phase_schedule(&plan, m).unwrap();
        let target = Target::stationary(25.0, 1.0).unwrap();
        let scene = Scene::noiseless(vec![target]);
        let f = plan.carrier_hz();
        let omega = plan.omega();
        let tau = target.delay();
        for n in 1..31usize {
            let base = s.start_time() + n as f64 * s.pulse_duration();
            let early = base + 0.5 * tau;
            let late = base + tau + 0.5 * (s.pulse_duration() - tau);
            let expect_early = (omega * (early - tau) + s.phases()[n - 1]).cos();
            let expect_late = (omega * (late - tau) + s.phases()[n]).cos();
            assert!((scene.echo_sample(&s, f, early) - expect_early).abs() < 1e-9);
            assert!((scene.echo_sample(&s, f, late) - expect_late).abs() < 1e-9);
        }
        // n = 0 early part uses the phantom pulse.
        let early = s.start_time() + 0.5 * tau;
        let expect = (omega * (early - tau) + s.phase_at(-1)).cos();
        assert!((scene.echo_sample(&s, f, early) - expect).abs() < 1e-9);
    }

    #[test]
    fn superposition_is_exact_when_noiseless() {
        let plan = SweepPlan::from_lengths(22.0, 5.0, 4, 16).unwrap().with_seed(1);
        let s = make_phase_schedule(&plan, 3).unwrap();
        let targets = vec![
            Target::stationary(23.6, 0.7).unwrap(),
            Target::new(25.4, 0.4, 12.0).unwrap(),
            Target::stationary(30.0, 0.2).unwrap(),
        ];
        let all = Scene::noiseless(targets.clone());
        let f = plan.carrier_hz();
        for i in 0..100 {
            let t = s.start_time() + i as f64 * 7.7e-9;
            let sum: f64 = targets
                .iter()
                .map(|tg| Scene::noiseless(vec![*tg]).echo_sample(&s, f, t))
                .sum();
            assert_eq!(all.echo_sample(&s, f, t), sum);
        }
    }

    #[test]
    fn noise_level_and_determinism() {
        let plan = SweepPlan::from_lengths(22.0, 5.0, 4, 2000).unwrap().with_seed(1);
        let s = make_phase_schedule(&plan, 0).unwrap();
        let scene = Scene::new(vec![], Snr::Linear(0.5)).with_noise_seed(77);
        let f = plan.carrier_hz();
        let n = 20000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let t = s.start_time() + i as f64 * 5e-9;
            let a = received_sample(&scene, &s, f, t).unwrap();
            assert_eq!(a, received_sample(&scene, &s, f, t).unwrap());
            sum += a;
            sum_sq += a * a;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var.sqrt() - 1.0).abs() < 0.03);
    }
}
