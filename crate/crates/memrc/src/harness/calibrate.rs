//! Device calibration sweeps: the amplitude-dependent switching data behind
//! the shipped default parameters.

use crate::device::{step_device, DeviceParams, DeviceState};
use crate::harness::HarnessError;

/// Peak-to-peak state excursion over the final drive period, per amplitude.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudePoint {
    pub amplitude: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl AmplitudePoint {
    pub fn excursion(&self) -> f64 {
        self.w_max - self.w_min
    }
}

/// Sweeps sine-drive amplitudes at `f_hz`, integrating each for `periods`
/// periods at step `dt` and recording the final-period state range.
pub fn amplitude_sweep(
    params: &DeviceParams,
    amplitudes: &[f64],
    f_hz: f64,
    periods: u32,
    dt: f64,
) -> Result<Vec<AmplitudePoint>, HarnessError> {
    amplitudes
        .iter()
        .map(|&amplitude| {
            let (w_min, w_max) =
                crate::device::switching_excursion(params, amplitude, f_hz, periods, dt)?;
            Ok(AmplitudePoint { amplitude, w_min, w_max })
        })
        .collect()
}

/// Full state trajectories for a set of amplitudes, for plotting the
/// switching-characteristics figure. Returns times and one state column per
/// amplitude.
pub fn switching_traces(
    params: &DeviceParams,
    amplitudes: &[f64],
    f_hz: f64,
    periods: u32,
    dt: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), HarnessError> {
    let steps = ((periods as f64) / (f_hz * dt)).round() as usize;
    let times: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
    let mut columns = Vec::with_capacity(amplitudes.len());
    for &amplitude in amplitudes {
        let mut state = DeviceState::default();
        let mut column = Vec::with_capacity(steps);
        for &t in &times {
            let v = amplitude * (2.0 * std::f64::consts::PI * f_hz * t).sin();
            state = step_device(params, state, v, dt)?;
            column.push(state.w());
        }
        columns.push(column);
    }
    Ok((times, columns))
}

/// Writes the amplitude sweep CSV (`amplitude,w_min,w_max,excursion`).
pub fn write_sweep_csv(
    points: &[AmplitudePoint],
    path: impl AsRef<std::path::Path>,
) -> Result<(), HarnessError> {
    use std::io::Write;
    let mut out = Vec::new();
    writeln!(out, "# memrc device-calibrate sweep")?;
    writeln!(out, "amplitude,w_min,w_max,excursion")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.amplitude, p.w_min, p.w_max, p.excursion())?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes switching traces (`t,w_<amp1>,w_<amp2>,...`).
pub fn write_traces_csv(
    amplitudes: &[f64],
    times: &[f64],
    columns: &[Vec<f64>],
    path: impl AsRef<std::path::Path>,
) -> Result<(), HarnessError> {
    use std::io::Write;
    let mut out = Vec::new();
    writeln!(out, "# memrc device-calibrate traces")?;
    write!(out, "t")?;
    for a in amplitudes {
        write!(out, ",w_{a}V")?;
    }
    writeln!(out)?;
    for (k, t) in times.iter().enumerate() {
        write!(out, "{t}")?;
        for column in columns {
            write!(out, ",{}", column[k])?;
        }
        writeln!(out)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}
