//! `memrc` command line: run and sweep experiments, estimate spectra, and
//! calibrate device parameters.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use memrc::harness::report::{
    write_compare_csv, write_compare_summary_csv, write_heatmap_csv, write_metrics_csv,
    write_psd_csv,
};
use memrc::harness::{calibrate, compare_architectures, config, psd, run_experiment};
use memrc::harness::{ConfigError, ExperimentConfig, HarnessError};
use memrc::tasks::TimeSeries;
use memrc::DeviceParams;

#[derive(Parser)]
#[command(name = "memrc", version, about = "Memristive reservoir computing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override the root seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count from the config file.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the output directory from the config file.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker thread budget (0 = all cores). Falls back to MEMRC_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment at the config's single (v, lambda) point.
    Run {
        config_file: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the experiment over the [sweep] grid of (v, lambda) values.
    Sweep {
        config_file: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Welch power spectral density of a t,value CSV series.
    Psd { csv_in: PathBuf, csv_out: PathBuf },
    /// Amplitude sweep of one device: the switching-characteristics data.
    DeviceCalibrate {
        params_file: PathBuf,
        /// Directory for device_calibration.csv and device_traces.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Parse and validate a config file without running anything.
    Validate { config_file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_config_error(&err) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// Config-file problems exit 1; everything else is a runtime failure (2).
fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause.is::<ConfigError>()
            || matches!(
                cause.downcast_ref::<HarnessError>(),
                Some(HarnessError::Config(_))
            )
    })
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { config_file, overrides } => execute(&config_file, overrides, false),
        Command::Sweep { config_file, overrides } => execute(&config_file, overrides, true),
        Command::Psd { csv_in, csv_out } => run_psd(&csv_in, &csv_out),
        Command::DeviceCalibrate { params_file, out_dir } => run_calibrate(&params_file, &out_dir),
        Command::Validate { config_file } => {
            let cfg = ExperimentConfig::from_file(&config_file)
                .with_context(|| format!("invalid config {}", config_file.display()))?;
            println!(
                "ok: {} ({} task, {} architecture, {} trials, seed {})",
                cfg.name,
                cfg.task.kind_name(),
                cfg.architecture.kind.name(),
                cfg.trials,
                cfg.seed
            );
            Ok(())
        }
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, overrides: &Overrides) {
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        cfg.trials = trials;
    }
    if let Some(dir) = &overrides.out_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(threads) = overrides.threads {
        cfg.threads = threads;
    } else if let Ok(env) = std::env::var("MEMRC_THREADS") {
        if let Ok(threads) = env.parse() {
            cfg.threads = threads;
        }
    }
}

fn execute(config_file: &PathBuf, overrides: Overrides, sweep: bool) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::from_file(config_file)
        .with_context(|| format!("invalid config {}", config_file.display()))?;
    apply_overrides(&mut cfg, &overrides);
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;

    if let Some(compare) = cfg.compare.clone() {
        let report = compare_architectures(&cfg, &compare.readout_counts)?;
        let raw = cfg.output_dir.join("metrics.csv");
        let summary = cfg.output_dir.join("compare.csv");
        write_compare_csv(&report, &raw)?;
        write_compare_summary_csv(&report, &summary)?;
        println!("architecture comparison on {} ({} trials each):", report.task_name, cfg.trials);
        for row in &report.rows {
            println!(
                "  {:>15}  k={:<4} {} = {:.6e} (stdev {:.2e}){}",
                row.arch,
                row.k,
                report.primary_metric,
                row.mean,
                row.stdev,
                if row.tainted { "  [tainted]" } else { "" }
            );
        }
        println!("wrote {} and {}", raw.display(), summary.display());
        return Ok(());
    }

    let (v_grid, lambda_grid) =
        if sweep { cfg.sweep_grid()? } else { cfg.single_cell_grid() };
    let report = run_experiment(&cfg, &v_grid, &lambda_grid)?;

    let metrics = cfg.output_dir.join("metrics.csv");
    let heatmap = cfg.output_dir.join("heatmap.csv");
    write_metrics_csv(&report, &metrics)?;
    write_heatmap_csv(&report, &heatmap)?;

    println!(
        "{}: {} on {} | {} cells x {} trials",
        report.name,
        report.task_name,
        report.arch_name,
        report.cells.len(),
        cfg.trials
    );
    for cell in &report.cells {
        println!(
            "  v={:<8} lambda={:<8} {} = {:.6e} (stdev {:.2e}){}",
            cell.v,
            cell.lambda,
            report.primary_metric,
            cell.mean,
            cell.stdev,
            if cell.tainted { "  [tainted]" } else { "" }
        );
    }
    let best = report.best_cell();
    println!(
        "best cell: v={} lambda={} {} = {:.6e}",
        best.v, best.lambda, report.primary_metric, best.mean
    );
    println!("wrote {} and {}", metrics.display(), heatmap.display());
    Ok(())
}

fn run_psd(csv_in: &PathBuf, csv_out: &PathBuf) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(csv_in)
        .with_context(|| format!("cannot read {}", csv_in.display()))?;
    let series = TimeSeries::read_csv(text.as_bytes())
        .with_context(|| format!("bad series in {}", csv_in.display()))?;
    let rows = psd(&series)?;
    write_psd_csv(&rows, config::config_hash(&text), csv_out)?;
    println!("wrote {} ({} frequency bins)", csv_out.display(), rows.len());
    Ok(())
}

fn run_calibrate(params_file: &PathBuf, out_dir: &PathBuf) -> anyhow::Result<()> {
    let params = DeviceParams::from_file(params_file)
        .with_context(|| format!("invalid device parameters {}", params_file.display()))?;
    std::fs::create_dir_all(out_dir)?;
    let f_hz = 10.0;
    let dt = 1e-4;
    let periods = 3;

    let amplitudes: Vec<f64> = (2..=40).map(|k| k as f64 * 0.05).collect();
    let sweep = calibrate::amplitude_sweep(&params, &amplitudes, f_hz, periods, dt)?;
    let sweep_path = out_dir.join("device_calibration.csv");
    calibrate::write_sweep_csv(&sweep, &sweep_path)?;

    let trace_amps = [1.0, 1.2, 1.5];
    let (times, columns) = calibrate::switching_traces(&params, &trace_amps, f_hz, periods, dt)?;
    let traces_path = out_dir.join("device_traces.csv");
    calibrate::write_traces_csv(&trace_amps, &times, &columns, &traces_path)?;

    for point in sweep.iter().filter(|p| [10, 24, 30].contains(&((p.amplitude * 20.0) as i64))) {
        println!(
            "amplitude {:.2} V -> excursion {:.4e} (w in [{:.3e}, {:.3e}])",
            point.amplitude,
            point.excursion(),
            point.w_min,
            point.w_max
        );
    }
    println!("wrote {} and {}", sweep_path.display(), traces_path.display());
    Ok(())
}
