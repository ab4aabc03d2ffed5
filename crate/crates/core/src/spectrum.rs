//! One-sided power spectral density estimates.
//!
//! Both estimators are normalized so that `Σ psd * df` equals the mean square
//! of the input (exactly for [`periodogram`], in expectation for [`welch`]).

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// Bin frequencies in Hz, `k * fs / n` for `k = 0..=n/2`.
    pub freqs: Vec<f64>,
    /// Power spectral density, power per Hz.
    pub psd: Vec<f64>,
    /// Bin spacing in Hz.
    pub df: f64,
}

impl Spectrum {
    /// `Σ psd * df`.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.df
    }

    /// Index of the largest bin.
    pub fn peak_bin(&self) -> usize {
        self.psd
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }
}

fn check(samples: &[f64], fs: f64) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
    }
    Ok(())
}

/// Folds `|X_k|²` into one-sided density scaled by `1 / scale`.
fn one_sided(power: &[f64], n: usize, fs: f64, scale: f64) -> Spectrum {
    let half = n / 2;
    let df = fs / n as f64;
    let psd = (0..=half)
        .map(|k| {
            let fold = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            fold * power[k] / scale / df
        })
        .collect();
    Spectrum {
        freqs: (0..=half).map(|k| k as f64 * df).collect(),
        psd,
        df,
    }
}

/// Rectangular-window periodogram.
pub fn periodogram(samples: &[f64], fs: f64) -> Result<Spectrum> {
    check(samples, fs)?;
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
    Ok(one_sided(&power, n, fs, (n * n) as f64))
}

/// Welch average of Hann-windowed segments of `segment_len` samples with 50%
/// overlap.
pub fn welch(samples: &[f64], fs: f64, segment_len: usize) -> Result<Spectrum> {
    check(samples, fs)?;
    if segment_len < 2 || segment_len > samples.len() {
        return Err(Error::invalid(
            "segment_len",
            format!("must be in [2, {}], got {segment_len}", samples.len()),
        ));
    }
    let window: Vec<f64> = (0..segment_len)
        .map(|i| {
            let s = (std::f64::consts::PI * (i as f64 + 0.5) / segment_len as f64).sin();
            s * s
        })
        .collect();
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let hop = (segment_len / 2).max(1);
    let mut acc = vec![0.0; segment_len];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= samples.len() {
        for (b, (&x, &w)) in buf.iter_mut().zip(samples[start..].iter().zip(&window)) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += z.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    Ok(one_sided(&acc, segment_len, fs, segments as f64 * energy * segment_len as f64))
}

/// Null-to-null width of the main lobe around the spectral peak.
///
/// From the peak bin, walks outward until the density first drops below
/// `floor` times the peak, at distance `d`. The null is taken as the minimum
/// of a boxcar-smoothed density (width about `d / 10`) over the next `d / 2`
/// bins, then placed at the vertex of a least-squares parabola through the
/// raw bins within `d / 20` of that minimum. Smoothing and the multi-bin fit keep
/// estimator noise in averaged spectra from pinning the null to one bin.
pub fn null_to_null_width(spectrum: &Spectrum, floor: f64) -> Result<NullWidth> {
    let peak = spectrum.peak_bin();
    let level = spectrum.psd[peak] * floor;
    let right = find_null(spectrum, peak, level, 1)?;
    let left = find_null(spectrum, peak, level, -1)?;
    Ok(NullWidth {
        center_hz: spectrum.freqs[peak],
        lower_null_hz: left,
        upper_null_hz: right,
        width_hz: right - left,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NullWidth {
    pub center_hz: f64,
    pub lower_null_hz: f64,
    pub upper_null_hz: f64,
    pub width_hz: f64,
}

fn find_null(spectrum: &Spectrum, peak: usize, level: f64, dir: i64) -> Result<f64> {
    let psd = &spectrum.psd;
    let last = psd.len() as i64 - 1;
    let mut i = peak as i64;
    while psd[i as usize] >= level {
        i += dir;
        if i <= 0 || i >= last {
            return Err(Error::EstimationFailed("no spectral null found".into()));
        }
    }
    let d = (i - peak as i64).abs();
    let smooth = (d / 20).max(0);
    let smoothed = |j: i64| -> f64 {
        let (a, b) = ((j - smooth).max(0), (j + smooth).min(last));
        psd[a as usize..=b as usize].iter().sum::<f64>() / (b - a + 1) as f64
    };
    let reach = (d / 2).max(1);
    let mut best = (i, smoothed(i));
    for step in 1..=reach {
        let j = i + dir * step;
        if j <= 0 || j >= last {
            break;
        }
        let v = smoothed(j);
        if v < best.1 {
            best = (j, v);
        }
    }
    let i = best.0;
    let half = ((0.05 * (i - peak as i64).abs() as f64).round() as i64).max(1);
    let lo = (i - half).max(0);
    let hi = (i + half).min(last);
    let vertex = quadratic_vertex(&psd[lo as usize..=hi as usize])
        .unwrap_or((i - lo) as f64)
        .clamp(0.0, (hi - lo) as f64);
    Ok(spectrum.freqs[lo as usize] + vertex * spectrum.df)
}

/// Vertex, in index units of `ys`, of the least-squares parabola through
/// the points `(j, ys[j])`. `None` when the fit is not convex.
fn quadratic_vertex(ys: &[f64]) -> Option<f64> {
    let n = ys.len();
    if n < 3 {
        return None;
    }
    let c = (n - 1) as f64 / 2.0;
    let (mut s2, mut s4, mut sy, mut sxy, mut sx2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, &y) in ys.iter().enumerate() {
        let x = j as f64 - c;
        s2 += x * x;
        s4 += x.powi(4);
        sy += y;
        sxy += x * y;
        sx2y += x * x * y;
    }
    // Symmetric abscissae decouple the linear term from the others.
    let nf = n as f64;
    let b = sxy / s2;
    let a = (nf * sx2y - s2 * sy) / (nf * s4 - s2 * s2);
    if !(a > 0.0) {
        return None;
    }
    Some(c - b / (2.0 * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn tone_peak_and_parseval() {
        let fs = 1000.0;
        let f0 = 125.0;
        let x: Vec<f64> = (0..1000).map(|i| (TAU * f0 * i as f64 / fs).cos()).collect();
        let s = periodogram(&x, fs).unwrap();
        let peak = s.freqs[s.peak_bin()];
        assert!((peak - f0).abs() <= s.df);
        let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((s.total_power() - ms).abs() < 1e-12);
    }

    #[test]
    fn parseval_odd_length() {
        let x: Vec<f64> = (0..257).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let s = periodogram(&x, 3.0).unwrap();
        let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((s.total_power() - ms).abs() < 1e-12);
    }

    #[test]
    fn welch_preserves_power_of_tone() {
        let fs = 1000.0;
        let x: Vec<f64> = (0..8192).map(|i| (TAU * 100.3 * i as f64 / fs).sin()).collect();
        let s = welch(&x, fs, 512).unwrap();
        assert!((s.total_power() - 0.5).abs() < 0.01);
    }

    #[test]
    fn invalid_inputs() {
        assert!(periodogram(&[], 1.0).is_err());
        assert!(periodogram(&[1.0], 1.0).is_err());
        assert!(periodogram(&[1.0, 2.0], 0.0).is_err());
        assert!(welch(&[1.0, 2.0, 3.0], 1.0, 4).is_err());
    }

    #[test]
    fn sinc_squared_nulls() {
        // Analytic sinc² lobe sampled on a grid offset from the nulls.
        let df = 0.013;
        let freqs: Vec<f64> = (0..2000).map(|k| k as f64 * df).collect();
        let psd = freqs
            .iter()
            .map(|&f| {
                let x = f - 13.0;
                if x.abs() < 1e-12 {
                    1.0
                } else {
                    let s = (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x);
                    s * s + 1e-9
                }
            })
            .collect();
        let s = Spectrum { freqs, psd, df };
        let w = null_to_null_width(&s, 0.01).unwrap();
        assert!((w.width_hz - 2.0).abs() < 0.01, "{w:?}");
    }
}
