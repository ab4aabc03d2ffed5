//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(seed, sweep point, domain, index)`.
//! A stream is a ChaCha8 keystream selected by `(seed, stream id)`, and the
//! `index`-th draw sits at a fixed word position, so any single pulse phase can
//! be regenerated without producing its predecessors.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Separates the phase stream from the phantom-phase and noise streams of the
/// same sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Domain {
    Phase = 0,
    Phantom = 1,
    Noise = 2,
    Trial = 3,
}

pub(crate) fn stream(seed: u64, point: usize, domain: Domain) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 2) | domain as u64);
    rng
}

/// Rng positioned at the `index`-th 64-bit draw of a stream.
pub(crate) fn stream_at(seed: u64, point: usize, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = stream(seed, point, domain);
    rng.set_word_pos(2 * index as u128);
    rng
}

/// Maps 53 random bits onto `[0, 2π)`.
pub(crate) fn to_phase(bits: u64) -> f64 {
    let unit = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let phase = unit * TAU;
    if phase >= TAU {
        0.0
    } else {
        phase
    }
}

/// Phase of pulse `n` at sweep point `m`. Negative `n` addresses the phantom
/// pulses that precede the transmission window.
pub(crate) fn pulse_phase(seed: u64, m: usize, n: i64) -> f64 {
    let (domain, index) = if n >= 0 {
        (Domain::Phase, n as u64)
    } else {
        (Domain::Phantom, (-(n + 1)) as u64)
    };
    to_phase(stream_at(seed, m, domain, index).next_u64())
}

/// Seed for the `trial`-th repetition derived from a base seed.
pub(crate) fn derive_seed(base: u64, trial: usize) -> u64 {
    stream(base, trial, Domain::Trial).next_u64()
}
