//! Target recovery from a sweep.
//!
//! The normalized correlation curve is piecewise linear in the coherence
//! length with a kink at every target. Breakpoints are found by exhaustive
//! two-segment least squares: every interior split is tried, one line is fit
//! on each side, and the split with the smallest total residual wins. Several
//! breaks are found one at a time and then re-estimated with their neighbours
//! held fixed.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::analytic::smt_mean;
use crate::error::{Error, Result};
use crate::waveform::SweepPlan;
use crate::SPEED_OF_LIGHT;

/// Fewest points a fitted segment may hold.
pub const MIN_SEGMENT_POINTS: usize = 3;

/// Detection threshold on the F-ratio between the single-line and the best
/// two-segment fit. Null sweeps of 100 to 500 points put the 99th percentile
/// of the statistic near 9.5 and the 99.9th near 15; 12 sits between.
pub const DEFAULT_F_THRESHOLD: f64 = 12.0;

/// Peak-to-noise level of the slow-time spectrum below which no coherent
/// echo is declared.
pub const VELOCITY_DETECTION_RATIO: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    const ZERO: Line = Line {
        slope: 0.0,
        intercept: 0.0,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakpointFit {
    /// Break abscissae, strictly increasing.
    pub breakpoints: Vec<f64>,
    /// One line per segment, `breakpoints.len() + 1` of them.
    pub segments: Vec<Line>,
    /// First sample index of every segment after the first.
    pub split_indices: Vec<usize>,
    /// Total residual sum of squares.
    pub sse: f64,
    /// Split indices evaluated by the global search.
    pub candidate_grid: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Fit a free line before the first break. When disabled the first
    /// segment is held at zero, as for a curve with no DC leakage.
    pub baseline_slope: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            baseline_slope: true,
        }
    }
}

/// Prefix moments for O(1) least-squares fits on any index range.
struct Moments {
    x_shift: f64,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: Vec<f64>,
    zero_prefix: bool,
}

impl Moments {
    fn new(xs: &[f64], ys: &[f64], opts: FitOptions) -> Self {
        let x_shift = xs.iter().sum::<f64>() / xs.len() as f64;
        let mut m = Moments {
            x_shift,
            sx: vec![0.0],
            sy: vec![0.0],
            sxx: vec![0.0],
            sxy: vec![0.0],
            syy: vec![0.0],
            zero_prefix: !opts.baseline_slope,
        };
        for (&x, &y) in xs.iter().zip(ys) {
            let x = x - x_shift;
            let last = m.sx.len() - 1;
            m.sx.push(m.sx[last] + x);
            m.sy.push(m.sy[last] + y);
            m.sxx.push(m.sxx[last] + x * x);
            m.sxy.push(m.sxy[last] + x * y);
            m.syy.push(m.syy[last] + y * y);
        }
        m
    }

    /// Least-squares line and residual on `[lo, hi)`.
    fn fit(&self, lo: usize, hi: usize) -> (Line, f64) {
        let syy = self.syy[hi] - self.syy[lo];
        if lo == 0 && self.zero_prefix {
            return (Line::ZERO, syy);
        }
        let n = (hi - lo) as f64;
        let sx = self.sx[hi] - self.sx[lo];
        let sy = self.sy[hi] - self.sy[lo];
        let cxx = self.sxx[hi] - self.sxx[lo] - sx * sx / n;
        let cxy = self.sxy[hi] - self.sxy[lo] - sx * sy / n;
        let cyy = syy - sy * sy / n;
        let slope = if cxx > 0.0 { cxy / cxx } else { 0.0 };
        let sse = (cyy - slope * cxy).max(0.0);
        let intercept = sy / n - slope * sx / n - slope * self.x_shift;
        (Line { slope, intercept }, sse)
    }

    fn sse(&self, lo: usize, hi: usize) -> f64 {
        self.fit(lo, hi).1
    }

    /// Best split of `[lo, hi)` and the resulting two-segment residual.
    fn best_split(&self, lo: usize, hi: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for c in (lo + MIN_SEGMENT_POINTS)..=(hi.saturating_sub(MIN_SEGMENT_POINTS)) {
            let total = self.sse(lo, c) + self.sse(c, hi);
            if best.map_or(true, |(_, b)| total < b) {
                best = Some((c, total));
            }
        }
        best
    }
}

fn validate(xs: &[f64], ys: &[f64], min_points: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("ys", "length differs from xs"));
    }
    if xs.len() < min_points {
        return Err(Error::invalid(
            "xs",
            format!("need at least {min_points} points, got {}", xs.len()),
        ));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("xs", "non-finite value"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("xs", "must be strictly increasing"));
    }
    Ok(())
}

/// Intersection of two lines, clamped to `[lo, hi]`; the midpoint when
/// they are parallel.
fn intersection(a: &Line, b: &Line, lo: f64, hi: f64) -> f64 {
    let ds = a.slope - b.slope;
    let x = if ds.abs() > f64::EPSILON * (a.slope.abs() + b.slope.abs()) {
        (b.intercept - a.intercept) / ds
    } else {
        0.5 * (lo + hi)
    };
    if x.is_finite() {
        x.clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    }
}

fn assemble(xs: &[f64], moments: &Moments, splits: Vec<usize>, grid: Vec<usize>) -> BreakpointFit {
    let mut bounds = Vec::with_capacity(splits.len() + 2);
    bounds.push(0);
    bounds.extend(&splits);
    bounds.push(xs.len());
    let mut segments = Vec::with_capacity(bounds.len() - 1);
    let mut sse = 0.0;
    for w in bounds.windows(2) {
        let (line, e) = moments.fit(w[0], w[1]);
        segments.push(line);
        sse += e;
    }
    let breakpoints = splits
        .iter()
        .enumerate()
        .map(|(i, &c)| intersection(&segments[i], &segments[i + 1], xs[c - 1], xs[c]))
        .collect();
    BreakpointFit {
        breakpoints,
        segments,
        split_indices: splits,
        sse,
        candidate_grid: grid,
    }
}

/// Ordinary least-squares line through all points.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(Line, f64)> {
    validate(xs, ys, 2)?;
    Ok(Moments::new(xs, ys, FitOptions::default()).fit(0, xs.len()))
}

/// Best single breakpoint by exhaustive two-segment least squares.
pub fn fit_single_breakpoint(xs: &[f64], ys: &[f64]) -> Result<BreakpointFit> {
    fit_single_breakpoint_with(xs, ys, FitOptions::default())
}

pub fn fit_single_breakpoint_with(xs: &[f64], ys: &[f64], opts: FitOptions) -> Result<BreakpointFit> {
    validate(xs, ys, 2 * MIN_SEGMENT_POINTS)?;
    let moments = Moments::new(xs, ys, opts);
    let n = xs.len();
    let (c, _) = moments.best_split(0, n).expect("enough points for one split");
    let grid = (MIN_SEGMENT_POINTS..=n - MIN_SEGMENT_POINTS).collect();
    Ok(assemble(xs, &moments, vec![c], grid))
}

/// `k` breakpoints found one at a time. After each new break every break is
/// re-estimated once with its neighbours fixed, so the residual never grows
/// with `k`. `k = 0` returns the single-line fit.
pub fn fit_k_breakpoints(xs: &[f64], ys: &[f64], k: usize) -> Result<BreakpointFit> {
    fit_k_breakpoints_with(xs, ys, k, FitOptions::default())
}

pub fn fit_k_breakpoints_with(
    xs: &[f64],
    ys: &[f64],
    k: usize,
    opts: FitOptions,
) -> Result<BreakpointFit> {
    let needed = MIN_SEGMENT_POINTS * (k + 1);
    validate(xs, ys, 2)?;
    if xs.len() < needed {
        return Err(Error::Precondition(format!(
            "{k} breakpoints need at least {needed} points, got {}",
            xs.len()
        )));
    }
    let n = xs.len();
    let moments = Moments::new(xs, ys, opts);
    let grid: Vec<usize> = if n >= 2 * MIN_SEGMENT_POINTS {
        (MIN_SEGMENT_POINTS..=n - MIN_SEGMENT_POINTS).collect()
    } else {
        Vec::new()
    };
    let mut splits: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        // Split the segment whose best division lowers the residual most.
        let mut best: Option<(usize, usize, f64)> = None;
        for seg in 0..=splits.len() {
            let lo = if seg == 0 { 0 } else { splits[seg - 1] };
            let hi = if seg == splits.len() { n } else { splits[seg] };
            if let Some((c, total)) = moments.best_split(lo, hi) {
                let gain = moments.sse(lo, hi) - total;
                if best.map_or(true, |(_, _, g)| gain > g) {
                    best = Some((seg, c, gain));
                }
            }
        }
        let (seg, c, _) = best.ok_or_else(|| {
            Error::Precondition(format!("no room for another breakpoint after {}", splits.len()))
        })?;
        splits.insert(seg, c);

        for i in 0..splits.len() {
            let lo = if i == 0 { 0 } else { splits[i - 1] };
            let hi = if i + 1 == splits.len() { n } else { splits[i + 1] };
            let current = moments.sse(lo, splits[i]) + moments.sse(splits[i], hi);
            if let Some((c, total)) = moments.best_split(lo, hi) {
                if total < current {
                    splits[i] = c;
                }
            }
        }
    }
    Ok(assemble(xs, &moments, splits, grid))
}

/// Outcome of the no-target test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Detection {
    pub f_statistic: f64,
    pub threshold: f64,
    pub detected: bool,
}

/// F-ratio of adding one segment (two parameters) to a `k`-break fit.
fn f_ratio(sse_small: f64, sse_big: f64, n: usize, k_big: usize) -> f64 {
    let dof = n as f64 - 2.0 * (k_big as f64 + 1.0);
    if sse_big <= 0.0 {
        return if sse_small > 0.0 { f64::INFINITY } else { 0.0 };
    }
    ((sse_small - sse_big) / 2.0) / (sse_big / dof)
}

/// Whether the best single break explains significantly more than one line.
pub fn detect_breakpoint(xs: &[f64], ys: &[f64], threshold: f64) -> Result<Detection> {
    let (_, sse_line) = fit_line(xs, ys)?;
    let split = fit_single_breakpoint(xs, ys)?;
    let f = f_ratio(sse_line, split.sse, xs.len(), 1);
    Ok(Detection {
        f_statistic: f,
        threshold,
        detected: f > threshold,
    })
}

/// Number of breakpoints in `0..=max_k`, adding breaks while the F-ratio of
/// the increment exceeds `threshold`.
pub fn select_breakpoint_count(xs: &[f64], ys: &[f64], max_k: usize, threshold: f64) -> Result<usize> {
    let mut k = 0;
    let mut sse = fit_line(xs, ys)?.1;
    while k < max_k && xs.len() >= MIN_SEGMENT_POINTS * (k + 2) {
        let next = fit_k_breakpoints(xs, ys, k + 1)?;
        if f_ratio(sse, next.sse, xs.len(), k + 1) <= threshold {
            break;
        }
        k += 1;
        sse = next.sse;
    }
    Ok(k)
}

/// Physical ranges recovered from breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RangeReport {
    /// Round-trip breakpoint lengths, meters (trial means when several).
    pub breakpoints: Vec<f64>,
    /// `(break - delay_offset) / 2`, meters.
    pub ranges: Vec<f64>,
    /// Differences of consecutive ranges, meters.
    pub separations: Vec<f64>,
    /// Per-target deviation of the range across trials; empty for one trial.
    pub accuracy: Vec<f64>,
    pub trials: usize,
    pub delay_offset: f64,
}

fn to_ranges(breaks: &[f64], delay_offset: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(delay_offset >= 0.0) {
        return Err(Error::invalid("delay_offset", "must be non-negative"));
    }
    let ranges = breaks
        .iter()
        .map(|&b| {
            if b < delay_offset {
                Err(Error::Domain(format!(
                    "breakpoint {b} m lies before the delay offset {delay_offset} m"
                )))
            } else {
                Ok(0.5 * (b - delay_offset))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let separations = ranges.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((ranges, separations))
}

/// Ranges from a single fit, with cable and component delay `delay_offset`
/// (round-trip meters) removed.
pub fn ranges_from_fit(fit: &BreakpointFit, delay_offset: f64) -> Result<RangeReport> {
    let (ranges, separations) = to_ranges(&fit.breakpoints, delay_offset)?;
    Ok(RangeReport {
        breakpoints: fit.breakpoints.clone(),
        ranges,
        separations,
        accuracy: Vec::new(),
        trials: 1,
        delay_offset,
    })
}

/// Ranges averaged over repeated sweeps, with per-target accuracy.
pub fn ranges_from_trials(fits: &[BreakpointFit], delay_offset: f64) -> Result<RangeReport> {
    let first = fits
        .first()
        .ok_or_else(|| Error::invalid("fits", "no trials"))?;
    if fits.len() == 1 {
        return ranges_from_fit(first, delay_offset);
    }
    let k = first.breakpoints.len();
    if fits.iter().any(|f| f.breakpoints.len() != k) {
        return Err(Error::invalid("fits", "trials disagree on the number of breakpoints"));
    }
    let mut breakpoints = Vec::with_capacity(k);
    let mut accuracy = Vec::with_capacity(k);
    for i in 0..k {
        let samples: Vec<f64> = fits.iter().map(|f| f.breakpoints[i]).collect();
        let stats = accuracy_from_trials(&samples)?;
        breakpoints.push(2.0 * stats.mean);
        accuracy.push(stats.std);
    }
    let (ranges, separations) = to_ranges(&breakpoints, delay_offset)?;
    Ok(RangeReport {
        breakpoints,
        ranges,
        separations,
        accuracy,
        trials: fits.len(),
        delay_offset,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and unbiased deviation of per-trial breakpoints, halved to
/// physical range units.
pub fn accuracy_from_trials(breakpoints: &[f64]) -> Result<TrialStats> {
    if breakpoints.len() < 2 {
        return Err(Error::invalid("breakpoints", "need at least 2 trials"));
    }
    let n = breakpoints.len() as f64;
    let mean = breakpoints.iter().sum::<f64>() / n;
    let var = breakpoints.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(TrialStats {
        mean: 0.5 * mean,
        std: 0.5 * var.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VelocityEstimate {
    /// Radial velocity, m/s, positive receding.
    pub velocity: f64,
    /// Phase advance between adjacent pulses, `2 k v tau_m`, rad.
    pub phase_step: f64,
    /// Largest speed whose phase step stays below π.
    pub max_unambiguous_speed: f64,
    pub peak_to_noise: f64,
    /// The peak sits within two coarse bins of ±π, so the true speed may
    /// have wrapped.
    pub possibly_aliased: bool,
}

fn dtft_power(z: &[Complex64], theta: f64) -> f64 {
    let step = Complex64::from_polar(1.0, -theta);
    let mut rot = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in z {
        acc += v * rot;
        rot *= step;
    }
    acc.norm_sqr()
}

/// Radial velocity from the per-pulse I/Q outputs of one sweep point.
///
/// The pulse-to-pulse phase advance is located at the peak of the
/// zero-padded slow-time spectrum and refined by golden-section search on
/// the continuous transform.
pub fn estimate_velocity(slow_time: &[Complex64], tau_m: f64, carrier_hz: f64) -> Result<VelocityEstimate> {
    let n = slow_time.len();
    if n < 8 {
        return Err(Error::invalid("slow_time", format!("need at least 8 pulses, got {n}")));
    }
    if !(tau_m > 0.0 && carrier_hz > 0.0) {
        return Err(Error::invalid("tau_m", "pulse length and carrier must be positive"));
    }
    let size = n.next_power_of_two() * 8;
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[..n].copy_from_slice(slow_time);
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
    let (peak, peak_power) = power
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &p)| if p > b.1 { (i, p) } else { b });
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    // Median of an exponential variate is ln 2 times its mean.
    let noise = sorted[size / 2] / std::f64::consts::LN_2;
    let peak_to_noise = if noise > 0.0 { peak_power / noise } else { f64::INFINITY };
    if peak_to_noise < VELOCITY_DETECTION_RATIO {
        return Err(Error::EstimationFailed(format!(
            "no coherent echo in slow time (peak/noise {peak_to_noise:.1})"
        )));
    }

    let bin = TAU / size as f64;
    let centre = peak as f64 * bin;
    let (mut a, mut b) = (centre - bin, centre + bin);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (dtft_power(slow_time, c), dtft_power(slow_time, d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = dtft_power(slow_time, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = dtft_power(slow_time, d);
        }
    }
    let theta = 0.5 * (a + b);
    let phase_step = (theta + PI).rem_euclid(TAU) - PI;
    let omega = TAU * carrier_hz;
    let per_speed = 2.0 * omega * tau_m / SPEED_OF_LIGHT;
    Ok(VelocityEstimate {
        velocity: phase_step / per_speed,
        phase_step,
        max_unambiguous_speed: PI / per_speed,
        peak_to_noise,
        possibly_aliased: phase_step.abs() > PI - 2.0 * TAU / n as f64,
    })
}

/// Result of fitting the moving-target expectation to a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MovingTargetFit {
    pub roundtrip_length: f64,
    pub velocity: f64,
    pub attenuation: f64,
    pub sse: f64,
}

/// Oscillatory refinement for one moving target: fits
/// `A * smt_mean(l_m; l, v)` to `ys` (one value per sweep point of `plan`)
/// by a coarse-to-fine grid search over `l ± l_span` and `v ± v_span`, with the
/// amplitude solved in closed form and held non-negative.
///
/// The objective is multimodal: over a short in-window stretch a lower
/// amplitude, a shorter length and a higher speed can reproduce the curve
/// almost exactly, so the spans should bracket a reasonable initial guess
/// rather than the whole parameter space.
pub fn refine_moving_target(
    plan: &SweepPlan,
    ys: &[f64],
    initial_length: f64,
    initial_velocity: f64,
    l_span: f64,
    v_span: f64,
) -> Result<MovingTargetFit> {
    if ys.len() != plan.points() {
        return Err(Error::invalid("ys", "one value per sweep point required"));
    }
    let xs = plan.coherence_lengths();
    let k = plan.wavenumber();
    let n = plan.pulses();
    let score = |l: f64, v: f64| -> (f64, f64) {
        let mut gg = 0.0;
        let mut gy = 0.0;
        let mut yy = 0.0;
        for (m, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let g = smt_mean(x, l, 1.0, k, v, n, m as f64);
            gg += g * g;
            gy += g * y;
            yy += y * y;
        }
        let a = if gg > 0.0 { (gy / gg).max(0.0) } else { 0.0 };
        (yy - 2.0 * a * gy + a * a * gg, a)
    };
    let (mut l0, mut v0) = (initial_length, initial_velocity);
    let (mut dl, mut dv) = (l_span, v_span);
    let mut best = (f64::INFINITY, 0.0, l0, v0);
    // A dense first level picks the basin; later levels shrink around it.
    for level in 0..8 {
        let (steps_l, steps_v) = if level == 0 { (400, 60) } else { (40, 20) };
        let steps_v = if dv > 0.0 { steps_v } else { 0 };
        for i in 0..=steps_l {
            let l = l0 - dl + 2.0 * dl * i as f64 / steps_l as f64;
            if l <= 0.0 {
                continue;
            }
            for j in 0..=steps_v {
                let v = if steps_v == 0 {
                    v0
                } else {
                    v0 - dv + 2.0 * dv * j as f64 / steps_v as f64
                };
                let (sse, a) = score(l, v);
                if sse < best.0 {
                    best = (sse, a, l, v);
                }
            }
        }
        l0 = best.2;
        v0 = best.3;
        let shrink = if level == 0 { 20.0 } else { 4.0 };
        dl /= shrink;
        dv /= shrink;
    }
    Ok(MovingTargetFit {
        roundtrip_length: best.2,
        velocity: best.3,
        attenuation: best.1,
        sse: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinked(xs: &[f64], kink: f64, s0: f64, s1: f64) -> Vec<f64> {
        xs.iter()
            .map(|&x| if x <= kink { 0.3 + s0 * (x - kink) } else { 0.3 + s1 * (x - kink) })
            .collect()
    }

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_single_kink() {
        let xs = grid(500, 22.0, 27.0);
        let ys = kinked(&xs, 25.0, 0.0, 0.5);
        let fit = fit_single_breakpoint(&xs, &ys).unwrap();
        let step = xs[1] - xs[0];
        assert_eq!(fit.breakpoints.len(), 1);
        assert_eq!(fit.segments.len(), 2);
        assert!((fit.breakpoints[0] - 25.0).abs() <= 0.5 * step, "{:?}", fit.breakpoints);
        assert!(fit.sse < 1e-12);
        assert!((fit.segments[1].slope - 0.5).abs() < 1e-9);
    }

    #[test]
    fn kink_between_grid_points_is_exact() {
        let xs = grid(101, 0.0, 10.0);
        let ys = kinked(&xs, 4.03, 1.0, -2.0);
        let fit = fit_single_breakpoint(&xs, &ys).unwrap();
        assert!((fit.breakpoints[0] - 4.03).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let xs = grid(5, 0.0, 1.0);
        assert!(fit_single_breakpoint(&xs, &[0.0; 5]).is_err());
        let xs = vec![0.0, 1.0, 2.0, 2.0, 3.0, 4.0];
        assert!(fit_single_breakpoint(&xs, &[0.0; 6]).is_err());
        let xs = grid(8, 0.0, 1.0);
        assert!(fit_k_breakpoints(&xs, &[0.0; 8], 2).is_err());
        assert!(fit_single_breakpoint(&xs, &[0.0; 7]).is_err());
    }

    #[test]
    fn k1_matches_single() {
        let xs = grid(200, 22.0, 27.0);
        let ys: Vec<f64> = kinked(&xs, 24.4, 0.1, 0.7)
            .iter()
            .enumerate()
            .map(|(i, y)| y + 0.05 * ((i * 7919 % 113) as f64 / 56.0 - 1.0))
            .collect();
        assert_eq!(fit_k_breakpoints(&xs, &ys, 1).unwrap(), fit_single_breakpoint(&xs, &ys).unwrap());
    }

    #[test]
    fn two_exact_kinks() {
        let xs = grid(500, 22.0, 27.0);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| 0.5 * (x - 23.6).max(0.0) - 0.4 * (x - 25.4).max(0.0))
            .collect();
        let fit = fit_k_breakpoints(&xs, &ys, 2).unwrap();
        let step = xs[1] - xs[0];
        assert!((fit.breakpoints[0] - 23.6).abs() <= 0.5 * step, "{:?}", fit.breakpoints);
        assert!((fit.breakpoints[1] - 25.4).abs() <= 0.5 * step, "{:?}", fit.breakpoints);
        assert_eq!(fit.segments.len(), 3);
    }

    #[test]
    fn zero_prefix_option() {
        let xs = grid(100, 22.0, 27.0);
        let ys: Vec<f64> = xs.iter().map(|&x| 0.5 * (x - 25.0).max(0.0)).collect();
        let opts = FitOptions {
            baseline_slope: false,
        };
        let fit = fit_single_breakpoint_with(&xs, &ys, opts).unwrap();
        assert_eq!(fit.segments[0], Line::ZERO);
        assert!((fit.breakpoints[0] - 25.0).abs() < 0.03);
    }

    #[test]
    fn halving_rule() {
        let fit = BreakpointFit {
            breakpoints: vec![23.6, 25.4],
            segments: vec![Line::ZERO; 3],
            split_indices: vec![1, 2],
            sse: 0.0,
            candidate_grid: vec![],
        };
        let r = ranges_from_fit(&fit, 0.0).unwrap();
        assert!((r.ranges[0] - 11.8).abs() < 1e-12 && (r.ranges[1] - 12.7).abs() < 1e-12);
        assert!((r.separations[0] - 0.9).abs() < 1e-12);
        assert!(ranges_from_fit(&fit, 24.0).is_err());
        assert!(ranges_from_fit(&fit, -1.0).is_err());
        let exp = BreakpointFit {
            breakpoints: vec![26.0, 26.64],
            ..fit.clone()
        };
        assert!((ranges_from_fit(&exp, 22.0).unwrap().separations[0] - 0.32).abs() < 1e-12);
        let measured = BreakpointFit {
            breakpoints: vec![26.0, 26.70],
            ..fit
        };
        assert!((ranges_from_fit(&measured, 22.0).unwrap().separations[0] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn trial_statistics() {
        let s = accuracy_from_trials(&[25.0, 25.0, 25.0]).unwrap();
        assert_eq!((s.mean, s.std), (12.5, 0.0));
        assert!(accuracy_from_trials(&[25.0]).is_err());
        let s = accuracy_from_trials(&[1.0, 3.0]).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-15 && (s.std - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn velocity_needs_pulses() {
        assert!(estimate_velocity(&[Complex64::new(1.0, 0.0); 7], 8e-8, 2.4e9).is_err());
    }

    #[test]
    fn velocity_from_clean_tone() {
        let f = 2.4e9;
        let tau = 80e-9;
        let v = -31.0;
        let step = 2.0 * TAU * f / SPEED_OF_LIGHT * v * tau;
        let z: Vec<Complex64> = (0..512).map(|n| Complex64::from_polar(0.3, 0.7 + step * n as f64)).collect();
        let est = estimate_velocity(&z, tau, f).unwrap();
        assert!((est.velocity - v).abs() < 1e-3 * v.abs(), "{est:?}");
        assert!(!est.possibly_aliased);
    }
}
