//! Welch-averaged power spectral density.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::HarnessError;
use crate::tasks::TimeSeries;

/// Welch segment length; series shorter than this fall back to a single
/// windowed periodogram over the whole series.
pub const SEGMENT_LEN: usize = 256;

/// One-sided power spectral density by Welch's method: 256-sample segments,
/// 50% overlap, Hann window. Returns `(frequency_hz, power)` rows up to the
/// Nyquist frequency.
pub fn psd(series: &TimeSeries) -> Result<Vec<(f64, f64)>, HarnessError> {
    if series.len() < 64 {
        return Err(HarnessError::InvalidArgument(format!(
            "psd needs at least 64 samples, got {}",
            series.len()
        )));
    }
    let seg = SEGMENT_LEN.min(series.len());
    let hop = seg / 2;
    let fs = 1.0 / series.dt();
    let x = series.samples();

    let window: Vec<f64> = (0..seg)
        .map(|i| {
            let phase = std::f64::consts::PI * i as f64 / seg as f64;
            phase.sin() * phase.sin()
        })
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (fs * window_power);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg);
    let n_bins = seg / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut n_segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); seg];

    let mut start = 0;
    while start + seg <= x.len() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(x[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, slot) in buf.iter().take(n_bins).enumerate() {
            let mut p = slot.norm_sqr() * scale;
            if k != 0 && k != seg / 2 {
                p *= 2.0; // fold the negative frequencies of the real signal
            }
            acc[k] += p;
        }
        n_segments += 1;
        start += hop;
    }
    debug_assert!(n_segments >= 1);
    Ok(acc
        .iter()
        .enumerate()
        .map(|(k, p)| (k as f64 * fs / seg as f64, p / n_segments as f64))
        .collect())
}

/// Least-squares slope of `log10(power)` against `log10(freq)` over the bins
/// inside `[f_lo, f_hi]`, the power-law diagnostic for node traces.
pub fn log_log_slope(rows: &[(f64, f64)], f_lo: f64, f_hi: f64) -> Result<f64, HarnessError> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(f, p)| *f >= f_lo && *f <= f_hi && *f > 0.0 && *p > 0.0)
        .map(|(f, p)| (f.log10(), p.log10()))
        .collect();
    if pts.len() < 4 {
        return Err(HarnessError::InvalidArgument(format!(
            "only {} usable bins in [{f_lo}, {f_hi}] Hz",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::InvalidArgument("degenerate frequency range".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{sine, uniform_series};

    #[test]
    fn pure_tone_peaks_in_the_right_bin() {
        let fs = 1000.0;
        let f0 = 125.0; // exactly on a bin: 125 = 32 * (1000/256)
        let series = sine(f0, 1.0, 1.0 / fs, 4096, 0.0).unwrap();
        let rows = psd(&series).unwrap();
        let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let bin_width = fs / SEGMENT_LEN as f64;
        assert!(
            (peak.0 - f0).abs() <= bin_width,
            "peak at {} Hz, expected {} +- {}",
            peak.0,
            f0,
            bin_width
        );
    }

    #[test]
    fn off_bin_tone_still_lands_within_one_bin() {
        let fs = 1000.0;
        let f0 = 123.3;
        let series = sine(f0, 2.0, 1.0 / fs, 8192, 0.4).unwrap();
        let rows = psd(&series).unwrap();
        let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!((peak.0 - f0).abs() <= fs / SEGMENT_LEN as f64);
    }

    #[test]
    fn white_noise_spectrum_is_flat_across_decades() {
        // average 100 independent averaged periodograms
        let n_bins = SEGMENT_LEN / 2 + 1;
        let mut acc = vec![0.0f64; n_bins];
        for seed in 0..100 {
            let series = uniform_series(-1.0, 1.0, 4096, 1e-3, seed).unwrap();
            for (k, (_, p)) in psd(&series).unwrap().iter().enumerate() {
                acc[k] += p;
            }
        }
        // bin the averaged spectrum into half-decade bands above DC
        let rows = psd(&uniform_series(-1.0, 1.0, 4096, 1e-3, 0).unwrap()).unwrap();
        let freqs: Vec<f64> = rows.iter().map(|(f, _)| *f).collect();
        let mut bands: Vec<Vec<f64>> = vec![Vec::new(); 8];
        for k in 1..n_bins - 1 {
            let band = ((freqs[k].log10() * 2.0).floor() as i64 + 2).clamp(0, 7) as usize;
            bands[band].push(acc[k] / 100.0);
        }
        let means: Vec<f64> = bands
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().sum::<f64>() / b.len() as f64)
            .collect();
        let hi = means.iter().cloned().fold(f64::MIN, f64::max);
        let lo = means.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi / lo < 10.0, "banded spectrum ratio {}", hi / lo);
    }

    #[test]
    fn short_series_fall_back_to_a_single_periodogram() {
        let series = sine(50.0, 1.0, 1e-3, 100, 0.0).unwrap();
        let rows = psd(&series).unwrap();
        assert_eq!(rows.len(), 100 / 2 + 1);
        let too_short = sine(50.0, 1.0, 1e-3, 32, 0.0).unwrap();
        assert!(psd(&too_short).is_err());
    }

    #[test]
    fn slope_of_a_synthetic_power_law_is_recovered() {
        let rows: Vec<(f64, f64)> =
            (1..200).map(|k| (k as f64, 3.0 * (k as f64).powf(-1.7))).collect();
        let slope = log_log_slope(&rows, 1.0, 100.0).unwrap();
        assert!((slope + 1.7).abs() < 1e-9, "slope {slope}");
    }
}
