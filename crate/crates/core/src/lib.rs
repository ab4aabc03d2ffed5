//! Simulation and estimation toolkit for a partially coherent radar.
//!
//! The transmitter emits a continuous carrier whose phase jumps to a fresh
//! uniform random value every `tau_m` seconds. Mixing the echo with the
//! still-transmitting signal and averaging over `N` jumps yields a cross
//! correlation that is non-zero only when a target lies inside the coherence
//! window `c * tau_m`. Sweeping `tau_m` and locating the kinks of the
//! normalized correlation curve recovers target ranges.
//!
//! Module map:
//!
//! - [`waveform`]: sweep plan, phase schedules and the transmitted signal.
//! - [`spectrum`]: periodogram / Welch estimates and null-to-null width.
//! - [`scene`]: point targets and the receive-channel noise model.
//! - [`correlator`]: the receiver, in semi-analytic and time-sampled form.
//! - [`analytic`]: closed-form expectations, deviations and plan tradeoffs.
//! - [`estimator`]: breakpoint regression, ranging and slow-time Doppler.
//! - [`montecarlo`]: repeated-trial harness with deterministic seeding.
//! - [`io`]: sweep CSV reading and writing.

pub mod analytic;
pub mod correlator;
pub mod error;
pub mod estimator;
pub mod io;
pub mod montecarlo;
mod rng;
pub mod scene;
pub mod spectrum;
pub mod waveform;

pub use correlator::{run_sweep, CorrelatorOptions, Mode, SweepPoint, SweepRecord};
pub use error::{Error, Result};
pub use estimator::{BreakpointFit, RangeReport};
pub use scene::{Scene, Snr, Target};
pub use waveform::{PhaseSchedule, SweepPlan};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default carrier frequency used when a plan does not specify one.
pub const DEFAULT_CARRIER_HZ: f64 = 2.4e9;
