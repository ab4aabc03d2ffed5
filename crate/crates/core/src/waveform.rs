//! The partially coherent transmit signal.
//!
//! `S(t) = cos(ωt + φ(t))`, where `φ` is piecewise constant: sweep point `m`
//! holds `N` pulses of length `tau_m`, each with an i.i.d. uniform phase.
//! Coherence times step linearly from `tau0` to `tau0 + delta_tau` over `M`
//! sweep points.

use std::f64::consts::TAU;

use log::warn;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::{DEFAULT_CARRIER_HZ, SPEED_OF_LIGHT};

/// Below this many carrier cycles per pulse the closed-form oracles lose
/// accuracy.
pub const MIN_CYCLES_PER_PULSE: f64 = 10.0;

/// Full parameterization of one coherence sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    tau0: f64,
    delta_tau: f64,
    points: usize,
    pulses: usize,
    carrier_hz: f64,
    seed: u64,
}

impl SweepPlan {
    /// Plan over coherence times `[tau0, tau0 + delta_tau]` with `points`
    /// sweep points of `pulses` phase jumps each, at the default carrier.
    pub fn new(tau0: f64, delta_tau: f64, points: usize, pulses: usize) -> Result<Self> {
        let plan = SweepPlan {
            tau0,
            delta_tau,
            points,
            pulses,
            carrier_hz: DEFAULT_CARRIER_HZ,
            seed: 0,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Same as [`SweepPlan::new`] with the sweep given as coherence lengths in
    /// meters (`l = c * tau`).
    pub fn from_lengths(l0: f64, span: f64, points: usize, pulses: usize) -> Result<Self> {
        Self::new(l0 / SPEED_OF_LIGHT, span / SPEED_OF_LIGHT, points, pulses)
    }

    pub fn with_carrier(mut self, carrier_hz: f64) -> Result<Self> {
        self.carrier_hz = carrier_hz;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_pulses(mut self, pulses: usize) -> Result<Self> {
        self.pulses = pulses;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::invalid("tau0", format!("must be positive, got {}", self.tau0)));
        }
        if !(self.delta_tau >= 0.0 && self.delta_tau.is_finite()) {
            return Err(Error::invalid(
                "delta_tau",
                format!("must be non-negative, got {}", self.delta_tau),
            ));
        }
        if self.points < 2 {
            return Err(Error::invalid("points", format!("need at least 2, got {}", self.points)));
        }
        if self.pulses < 2 {
            return Err(Error::invalid("pulses", format!("need at least 2, got {}", self.pulses)));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(Error::invalid(
                "carrier_hz",
                format!("must be positive, got {}", self.carrier_hz),
            ));
        }
        if self.cycles_per_pulse() < MIN_CYCLES_PER_PULSE {
            warn!(
                "only {:.1} carrier cycles per pulse; closed-form oracles assume many",
                self.cycles_per_pulse()
            );
        }
        Ok(())
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn delta_tau(&self) -> f64 {
        self.delta_tau
    }

    /// Number of coherence sweep points `M`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Number of phase jumps per sweep point `N`.
    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Angular carrier frequency ω.
    pub fn omega(&self) -> f64 {
        TAU * self.carrier_hz
    }

    /// Carrier wavenumber `k = ω / c`.
    pub fn wavenumber(&self) -> f64 {
        self.omega() / SPEED_OF_LIGHT
    }

    /// Carrier cycles inside the shortest pulse.
    pub fn cycles_per_pulse(&self) -> f64 {
        self.carrier_hz * self.tau0
    }

    fn check_point(&self, m: usize) -> Result<()> {
        if m >= self.points {
            return Err(Error::IndexOutOfRange {
                index: m,
                limit: self.points,
            });
        }
        Ok(())
    }

    /// Pulse length at sweep point `m`: `tau0 + m * delta_tau / (M - 1)`.
    pub fn coherence_time(&self, m: usize) -> Result<f64> {
        self.check_point(m)?;
        Ok(self.tau_unchecked(m))
    }

    pub(crate) fn tau_unchecked(&self, m: usize) -> f64 {
        if m == self.points - 1 {
            // Land exactly on the sweep end.
            self.tau0 + self.delta_tau
        } else {
            self.tau0 + m as f64 * self.delta_tau / (self.points - 1) as f64
        }
    }

    /// Coherence length `c * tau_m` in meters.
    pub fn coherence_length(&self, m: usize) -> Result<f64> {
        Ok(SPEED_OF_LIGHT * self.coherence_time(m)?)
    }

    /// Coherence lengths for every sweep point.
    pub fn coherence_lengths(&self) -> Vec<f64> {
        (0..self.points)
            .map(|m| SPEED_OF_LIGHT * self.tau_unchecked(m))
            .collect()
    }

    /// Time from the scan start until sweep point `m` begins: `N * Σ_{q<m} tau_q`.
    /// `m == M` gives the end of the scan.
    pub fn start_time(&self, m: usize) -> Result<f64> {
        if m > self.points {
            return Err(Error::IndexOutOfRange {
                index: m,
                limit: self.points + 1,
            });
        }
        let sum: f64 = (0..m).map(|q| self.tau_unchecked(q)).sum();
        Ok(self.pulses as f64 * sum)
    }

    /// Phase schedule of sweep point `m`, drawn from the plan's seed.
    pub fn phase_schedule(&self, m: usize) -> Result<PhaseSchedule> {
        make_phase_schedule(self, m)
    }
}

/// Where a schedule's phases come from. Phases outside `0..N` (the phantom
/// pulses before the window) are produced by the same source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhaseSource {
    Random { seed: u64, point: usize },
    Constant(f64),
}

/// The `N` constant-phase pulses of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSchedule {
    phases: Vec<f64>,
    pulse_duration: f64,
    start_time: f64,
    source: PhaseSource,
}

impl PhaseSchedule {
    /// Schedule whose phases are all equal to `phase` (no jumps), the fully
    /// coherent degenerate case.
    pub fn constant(plan: &SweepPlan, m: usize, phase: f64) -> Result<Self> {
        let phase = phase.rem_euclid(TAU);
        Ok(PhaseSchedule {
            phases: vec![phase; plan.pulses],
            pulse_duration: plan.coherence_time(m)?,
            start_time: plan.start_time(m)?,
            source: PhaseSource::Constant(phase),
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Pulse length `tau_m`.
    pub fn pulse_duration(&self) -> f64 {
        self.pulse_duration
    }

    /// Start of the sweep point, `T_m`.
    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    /// End of the transmission window, `T_m + N * tau_m`.
    pub fn end_time(&self) -> f64 {
        self.start_time + self.phases.len() as f64 * self.pulse_duration
    }

    pub fn source(&self) -> PhaseSource {
        self.source
    }

    /// Phase of pulse `n`; negative indices give phantom pulses.
    pub fn phase_at(&self, n: i64) -> f64 {
        if n >= 0 && (n as usize) < self.phases.len() {
            return self.phases[n as usize];
        }
        match self.source {
            PhaseSource::Random { seed, point } => rng::pulse_phase(seed, point, n),
            PhaseSource::Constant(p) => p,
        }
    }

    /// Pulse index active at absolute time `t`, without a window check.
    pub(crate) fn index_at(&self, t: f64) -> i64 {
        pulse_index(t - self.start_time, self.pulse_duration)
    }

    /// Transmitted amplitude at `t`, with `t == end_time` mapped onto the
    /// last pulse.
    pub(crate) fn sample_clamped(&self, omega: f64, t: f64) -> f64 {
        let n = self.index_at(t).clamp(0, self.phases.len() as i64 - 1);
        (omega * t + self.phases[n as usize]).cos()
    }

    /// `cos(ωt + φ_n)` for `t` inside the window.
    pub fn sample(&self, carrier_hz: f64, t: f64) -> Result<f64> {
        let (start, end) = (self.start_time, self.end_time());
        if !(t >= start && t < end) {
            return Err(Error::OutsideWindow { t, start, end });
        }
        Ok(self.sample_clamped(TAU * carrier_hz, t))
    }
}

/// Index of the pulse containing `offset` seconds into a train of pulses of
/// length `tau`. Intervals are left-closed; offsets within 1e-9 pulse of a
/// boundary snap onto it.
pub(crate) fn pulse_index(offset: f64, tau: f64) -> i64 {
    let x = offset / tau;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// `tau0 + m * delta_tau / (M - 1)`.
pub fn coherence_time(plan: &SweepPlan, m: usize) -> Result<f64> {
    plan.coherence_time(m)
}

/// `N * Σ_{q<m} tau_q`.
pub fn start_time(plan: &SweepPlan, m: usize) -> Result<f64> {
    plan.start_time(m)
}

/// Draws the `N` phases of sweep point `m` from the stream keyed by
/// `(plan.seed, m)`.
pub fn make_phase_schedule(plan: &SweepPlan, m: usize) -> Result<PhaseSchedule> {
    let pulse_duration = plan.coherence_time(m)?;
    let mut stream = rng::stream(plan.seed, m, rng::Domain::Phase);
    let phases = (0..plan.pulses).map(|_| rng::to_phase(stream.next_u64())).collect();
    Ok(PhaseSchedule {
        phases,
        pulse_duration,
        start_time: plan.start_time(m)?,
        source: PhaseSource::Random {
            seed: plan.seed,
            point: m,
        },
    })
}

/// Transmitted amplitude `cos(ωt + φ(t))`.
pub fn sample_signal(schedule: &PhaseSchedule, carrier_hz: f64, t: f64) -> Result<f64> {
    schedule.sample(carrier_hz, t)
}

/// Samples the transmission of one sweep point at rate `fs`, starting at
/// `T_m`. Returns `floor(N * tau_m * fs)` samples.
pub fn sample_window(schedule: &PhaseSchedule, carrier_hz: f64, fs: f64) -> Result<Vec<f64>> {
    if !(fs > 0.0) {
        return Err(Error::invalid("fs", "sampling rate must be positive"));
    }
    let omega = TAU * carrier_hz;
    let count = ((schedule.end_time() - schedule.start_time()) * fs).floor() as usize;
    Ok((0..count)
        .map(|i| schedule.sample_clamped(omega, schedule.start_time() + i as f64 / fs))
        .collect())
}
