//! Benchmark signal and target generation.
//!
//! Everything here is pure and seed-deterministic: sine drives and their
//! harmonic targets (double-frequency sine, Fourier triangle and square
//! partial sums), the superimposed-oscillator prediction task, the NARMA-10
//! recurrence, and uniform random input sequences.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("narma-10 sequence diverged at index {index}")]
    Divergent { index: usize },
    #[error("series csv, line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniformly sampled scalar signal with an explicit sample interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self, TaskError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TaskError::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
            return Err(TaskError::InvalidArgument(format!("non-finite sample {bad}")));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes the two-column `t,value` format at full round-trip precision.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), TaskError> {
        writeln!(w, "t,value")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", i as f64 * self.dt, s)?;
        }
        Ok(())
    }

    /// Reads the `t,value` format, inferring `dt` from the time column and
    /// rejecting non-uniform spacing. Lines starting with `#` are skipped.
    pub fn read_csv(r: impl BufRead) -> Result<Self, TaskError> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed == "t,value" {
                continue;
            }
            let (t, v) = trimmed.split_once(',').ok_or_else(|| TaskError::Csv {
                line: line_no,
                msg: format!("expected `t,value`, got `{trimmed}`"),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| TaskError::Csv {
                    line: line_no,
                    msg: format!("invalid number `{}`", s.trim()),
                })
            };
            times.push(parse(t)?);
            values.push(parse(v)?);
        }
        if times.len() < 2 {
            return Err(TaskError::InvalidArgument("series needs at least 2 samples".into()));
        }
        let dt = times[1] - times[0];
        for (i, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if (step - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(TaskError::Csv {
                    line: i + 3,
                    msg: format!("non-uniform sampling: step {step} vs {dt}"),
                });
            }
        }
        Self::new(values, dt)
    }
}

/// A paired teacher input and teacher output of equal length and rate.
#[derive(Debug, Clone)]
pub struct TaskInstance {
    pub input: TimeSeries,
    pub target: TimeSeries,
    pub name: String,
}

impl TaskInstance {
    fn new(name: &str, input: TimeSeries, target: TimeSeries) -> Self {
        debug_assert_eq!(input.len(), target.len());
        debug_assert_eq!(input.dt(), target.dt());
        Self { input, target, name: name.to_string() }
    }
}

/// `amplitude·sin(2π·f·t + phase)` sampled at `dt`.
pub fn sine(
    f_hz: f64,
    amplitude: f64,
    dt: f64,
    n_samples: usize,
    phase: f64,
) -> Result<TimeSeries, TaskError> {
    if !(f_hz > 0.0) {
        return Err(TaskError::InvalidArgument(format!("frequency must be positive, got {f_hz}")));
    }
    if !(dt < 0.5 / f_hz) {
        return Err(TaskError::InvalidArgument(format!(
            "dt = {dt} violates the Nyquist limit for f = {f_hz} Hz"
        )));
    }
    let samples = (0..n_samples)
        .map(|k| amplitude * (2.0 * PI * f_hz * k as f64 * dt + phase).sin())
        .collect();
    TimeSeries::new(samples, dt)
}

/// Harmonic-generation task: unit sine in, unit sine at twice the frequency out.
pub fn hhg_sine_task(f_hz: f64, dt: f64, n_samples: usize) -> Result<TaskInstance, TaskError> {
    let input = sine(f_hz, 1.0, dt, n_samples, 0.0)?;
    let target = sine(2.0 * f_hz, 1.0, dt, n_samples, 0.0)?;
    Ok(TaskInstance::new("hhg_sine", input, target))
}

/// Fourier partial sum of the unit triangle wave at frequency `f`:
/// `(8/pi^2) * sum_{k=0}^{k_max} (-1)^k sin(2pi(2k+1)f t) / (2k+1)^2`.
pub fn triangle_wave(
    f_hz: f64,
    dt: f64,
    n_samples: usize,
    k_max: usize,
) -> Result<TimeSeries, TaskError> {
    if k_max < 1 {
        return Err(TaskError::InvalidArgument("k_max must be at least 1".into()));
    }
    let coeff = 8.0 / (PI * PI);
    let samples = (0..n_samples)
        .map(|s| {
            let t = s as f64 * dt;
            let mut acc = 0.0;
            for k in 0..=k_max {
                let m = (2 * k + 1) as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * (2.0 * PI * m * f_hz * t).sin() / (m * m);
            }
            coeff * acc
        })
        .collect();
    TimeSeries::new(samples, dt)
}

/// Fourier partial sum of the unit square wave at frequency `f`:
/// `(4/pi) * sum_{k=1}^{k_max} sin(2pi(2k-1)f t) / (2k-1)`.
pub fn square_wave(
    f_hz: f64,
    dt: f64,
    n_samples: usize,
    k_max: usize,
) -> Result<TimeSeries, TaskError> {
    if k_max < 1 {
        return Err(TaskError::InvalidArgument("k_max must be at least 1".into()));
    }
    let coeff = 4.0 / PI;
    let samples = (0..n_samples)
        .map(|s| {
            let t = s as f64 * dt;
            let mut acc = 0.0;
            for k in 1..=k_max {
                let m = (2 * k - 1) as f64;
                acc += (2.0 * PI * m * f_hz * t).sin() / m;
            }
            coeff * acc
        })
        .collect();
    TimeSeries::new(samples, dt)
}

/// Harmonic-generation task with a triangle-wave target at the drive frequency.
pub fn hhg_triangle_task(
    f_hz: f64,
    dt: f64,
    n_samples: usize,
    k_max: usize,
) -> Result<TaskInstance, TaskError> {
    let input = sine(f_hz, 1.0, dt, n_samples, 0.0)?;
    let target = triangle_wave(f_hz, dt, n_samples, k_max)?;
    Ok(TaskInstance::new("hhg_triangle", input, target))
}

/// Harmonic-generation task with a square-wave target at the drive frequency.
pub fn hhg_square_task(
    f_hz: f64,
    dt: f64,
    n_samples: usize,
    k_max: usize,
) -> Result<TaskInstance, TaskError> {
    let input = sine(f_hz, 1.0, dt, n_samples, 0.0)?;
    let target = square_wave(f_hz, dt, n_samples, k_max)?;
    Ok(TaskInstance::new("hhg_square", input, target))
}

fn mso_wave(t: f64) -> f64 {
    (0.2 * t).sin() + (0.311 * t).sin() + (0.42 * t).sin()
}

/// Superimposed-oscillator prediction: the input is the three-sine wave, the
/// target is the same wave `horizon` seconds ahead. The horizon need not be a
/// whole number of samples; both series are evaluated analytically.
pub fn mso_task(dt: f64, n_samples: usize, horizon: f64) -> Result<TaskInstance, TaskError> {
    if !(horizon >= 0.0) {
        return Err(TaskError::InvalidArgument(format!("horizon must be >= 0, got {horizon}")));
    }
    let input = (0..n_samples).map(|k| mso_wave(k as f64 * dt)).collect();
    let target = (0..n_samples).map(|k| mso_wave(k as f64 * dt + horizon)).collect();
    Ok(TaskInstance::new("mso", TimeSeries::new(input, dt)?, TimeSeries::new(target, dt)?))
}

/// NARMA-10 divergence guard: the recurrence has no bounded solution for some
/// inputs, and anything past this magnitude never comes back.
pub const NARMA_DIVERGENCE_LIMIT: f64 = 10.0;

/// The 10th-order NARMA recurrence
/// `y_t = 0.3 y_{t-1} + 0.05 y_{t-1} (sum_{i=1}^{10} y_{t-i}) + 1.5 u_{t-10} u_{t-1} + 0.1`
/// with `y_0..y_9 = 0`. Inputs must lie in `[0, 0.5]`.
pub fn narma10(u: &TimeSeries) -> Result<TimeSeries, TaskError> {
    const LAG: usize = 10;
    if let Some(bad) = u.samples().iter().find(|&&x| !(0.0..=0.5).contains(&x)) {
        return Err(TaskError::InvalidArgument(format!(
            "narma-10 input must lie in [0, 0.5], got {bad}"
        )));
    }
    let input = u.samples();
    let mut y = vec![0.0f64; input.len()];
    for t in LAG..input.len() {
        let mut window_sum = 0.0;
        for i in 1..=LAG {
            window_sum += y[t - i];
        }
        let value = 0.3 * y[t - 1]
            + 0.05 * y[t - 1] * window_sum
            + 1.5 * input[t - LAG] * input[t - 1]
            + 0.1;
        if !value.is_finite() || value.abs() > NARMA_DIVERGENCE_LIMIT {
            return Err(TaskError::Divergent { index: t });
        }
        y[t] = value;
    }
    TimeSeries::new(y, u.dt())
}

/// I.i.d. uniform samples on `[low, high]`, reproducible for a fixed seed.
pub fn uniform_series(
    low: f64,
    high: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<TimeSeries, TaskError> {
    if !(low < high) {
        return Err(TaskError::InvalidArgument(format!("empty interval [{low}, {high}]")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let samples = (0..n_samples).map(|_| rng.random_range(low..high)).collect();
    TimeSeries::new(samples, dt)
}
