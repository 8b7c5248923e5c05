//! Seeded multi-trial experiment execution over (v, lambda) grids.
//!
//! Every (cell, trial) job derives its own seeds from the root, so results are
//! identical whatever the thread count or scheduling order. Networks and task
//! inputs are seeded per trial (not per cell): a grid therefore compares
//! parameter settings on matched reservoirs and matched data.

use ndarray::Array2;
use rayon::prelude::*;

use super::config::{ArchConfig, ArchKind, ExperimentConfig, TaskConfig, TrainConfig};
use super::stats::mean_stdev;
use super::HarnessError;
use crate::learn::{
    memory_capacity, mse, nrmse, predict, split_bounds, train_readout, McSpec, TrainSpec,
};
use crate::reservoir::{
    build_scr, build_sigmoid_scr, build_single_network_reservoir, run_reservoir, Reservoir,
    ScrConfig, SingleNetworkConfig, SolverHealth,
};
use crate::seeds::{self, stream};
use crate::tasks::{self, TimeSeries};

/// A cell is tainted when any of its trials exceeds this unconverged-solve
/// fraction.
pub const UNCONVERGED_TAINT_THRESHOLD: f64 = 1e-3;

/// Cap on NARMA-10 input regenerations before giving up on a trial.
const MAX_TASK_REGENERATIONS: u64 = 100;

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub cell: usize,
    pub v: f64,
    pub lambda: f64,
    pub trial: usize,
    /// Named metrics in a fixed per-task order; the first is the primary.
    pub metrics: Vec<(String, f64)>,
    pub health: SolverHealth,
    pub regenerations: u64,
}

impl TrialRecord {
    pub fn primary(&self) -> f64 {
        self.metrics[0].1
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct CellSummary {
    pub cell: usize,
    pub v: f64,
    pub lambda: f64,
    pub mean: f64,
    pub stdev: f64,
    pub n_trials: usize,
    pub tainted: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: u64,
    pub root_seed: u64,
    pub task_name: String,
    pub arch_name: String,
    pub primary_metric: String,
    pub maximize_metric: bool,
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentReport {
    /// The cell with the best mean of the primary metric.
    pub fn best_cell(&self) -> &CellSummary {
        let pick = |a: &&CellSummary, b: &&CellSummary| a.mean.total_cmp(&b.mean);
        if self.maximize_metric {
            self.cells.iter().max_by(pick).expect("report has cells")
        } else {
            self.cells.iter().min_by(pick).expect("report has cells")
        }
    }

    /// Best (smallest or largest) single-trial primary metric.
    pub fn best_trial(&self) -> &TrialRecord {
        let pick = |a: &&TrialRecord, b: &&TrialRecord| a.primary().total_cmp(&b.primary());
        if self.maximize_metric {
            self.trials.iter().max_by(pick).expect("report has trials")
        } else {
            self.trials.iter().min_by(pick).expect("report has trials")
        }
    }
}

/// Runs the full grid: every (cell, trial) pair, optionally on a bounded
/// thread pool, aggregating per-cell mean and standard deviation.
pub fn run_experiment(
    config: &ExperimentConfig,
    v_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<ExperimentReport, HarnessError> {
    if v_grid.is_empty() || lambda_grid.is_empty() {
        return Err(HarnessError::InvalidArgument("empty sweep grid".into()));
    }
    let cells: Vec<(usize, f64, f64)> = v_grid
        .iter()
        .enumerate()
        .flat_map(|(iv, &v)| {
            lambda_grid
                .iter()
                .enumerate()
                .map(move |(il, &l)| (iv * lambda_grid.len() + il, v, l))
        })
        .collect();
    let jobs: Vec<(usize, f64, f64, usize)> = cells
        .iter()
        .flat_map(|&(cell, v, l)| (0..config.trials).map(move |t| (cell, v, l, t)))
        .collect();

    let execute = |&(cell, v, lambda, trial): &(usize, f64, f64, usize)| {
        run_trial(config, cell, v, lambda, trial)
    };
    let results: Vec<Result<TrialRecord, HarnessError>> = if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| HarnessError::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(execute).collect())
    } else {
        jobs.par_iter().map(execute).collect()
    };
    let trials: Vec<TrialRecord> = results.into_iter().collect::<Result<_, _>>()?;

    let cell_summaries = cells
        .iter()
        .map(|&(cell, v, lambda)| {
            let values: Vec<f64> =
                trials.iter().filter(|t| t.cell == cell).map(|t| t.primary()).collect();
            let tainted = trials.iter().filter(|t| t.cell == cell).any(|t| {
                t.health.unconverged_fraction() > UNCONVERGED_TAINT_THRESHOLD
            });
            let (mean, stdev) = mean_stdev(&values);
            CellSummary { cell, v, lambda, mean, stdev, n_trials: values.len(), tainted }
        })
        .collect();

    Ok(ExperimentReport {
        name: config.name.clone(),
        config_hash: config.config_hash,
        root_seed: config.seed,
        task_name: config.task.kind_name().to_string(),
        arch_name: config.architecture.kind.name().to_string(),
        primary_metric: config.task.primary_metric().to_string(),
        maximize_metric: config.task.maximize_metric(),
        cells: cell_summaries,
        trials,
    })
}

fn build_reservoir(
    arch: &ArchConfig,
    task: &TaskConfig,
    device: crate::device::DeviceParams,
    solve: crate::circuit::SolveSettings,
    v: f64,
    lambda: f64,
    seed: u64,
) -> Result<Box<dyn Reservoir + Send>, HarnessError> {
    match arch.kind {
        ArchKind::Scr => Ok(Box::new(build_scr(&ScrConfig {
            n_nodes: arch.n_nodes,
            input_coeff: v,
            spectral_radius: lambda,
            network_size_range: arch.network_size_range,
            k_degree: arch.k_degree,
            dt: task.dt(),
            substeps: arch.substeps,
            drive_clip: arch.drive_clip,
            device,
            solve,
            seed,
        })?)),
        ArchKind::SingleNetwork => Ok(Box::new(build_single_network_reservoir(
            &SingleNetworkConfig {
                n_circuit_nodes: arch.circuit_nodes,
                n_readout_pairs: arch.readout_pairs,
                k_degree: arch.k_degree,
                input_coeff: v,
                dt: task.dt(),
                substeps: arch.substeps,
                drive_clip: arch.drive_clip,
                device,
                solve,
                seed,
            },
        )?)),
        ArchKind::SigmoidScr => {
            Ok(Box::new(build_sigmoid_scr(arch.n_nodes, v, lambda, seed)?))
        }
    }
}

/// Task input plus (for trained tasks) the teacher target.
struct TaskData {
    input: TimeSeries,
    target: Option<Vec<f64>>,
    regenerations: u64,
}

fn generate_task_data(config: &ExperimentConfig, trial: usize) -> Result<TaskData, HarnessError> {
    let task_seed = seeds::derive(config.seed, stream::TASK_INPUT, trial as u64);
    match &config.task {
        TaskConfig::MemoryCapacity { samples, dt, input_low, input_high, .. } => Ok(TaskData {
            input: tasks::uniform_series(*input_low, *input_high, *samples, *dt, task_seed)?,
            target: None,
            regenerations: 0,
        }),
        TaskConfig::Hhg { samples, dt, f_hz, .. } => Ok(TaskData {
            input: tasks::sine(*f_hz, 1.0, *dt, *samples, 0.0)?,
            target: None, // three targets, built at evaluation time
            regenerations: 0,
        }),
        TaskConfig::Mso { samples, dt, horizon } => {
            let task = tasks::mso_task(*dt, *samples, *horizon)?;
            Ok(TaskData {
                input: task.input,
                target: Some(task.target.samples().to_vec()),
                regenerations: 0,
            })
        }
        TaskConfig::Narma10 { samples, dt } => {
            // the recurrence occasionally diverges; retry with derived seeds
            let mut regenerations = 0;
            loop {
                let seed = seeds::derive(task_seed, stream::RETRY, regenerations);
                let input = tasks::uniform_series(0.0, 0.5, *samples, *dt, seed)?;
                match tasks::narma10(&input) {
                    Ok(target) => {
                        return Ok(TaskData {
                            input,
                            target: Some(target.samples().to_vec()),
                            regenerations,
                        })
                    }
                    Err(tasks::TaskError::Divergent { .. }) => {
                        regenerations += 1;
                        if regenerations > MAX_TASK_REGENERATIONS {
                            return Err(HarnessError::InvalidArgument(
                                "narma-10 input diverged on every regeneration".into(),
                            ));
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
}

/// Trains a readout on the configured split and returns the metric evaluated
/// on the held-out rows (or on the training rows under `eval_on_train`).
fn train_and_score(
    states: &Array2<f64>,
    target: &[f64],
    train_cfg: &TrainConfig,
    metric: impl Fn(&[f64], &[f64]) -> Result<f64, crate::learn::LearnError>,
) -> Result<f64, HarnessError> {
    let len = states.nrows();
    let spec = TrainSpec { ridge_coefficient: train_cfg.ridge, washout: train_cfg.washout };
    let (train_end, eval_range) = if train_cfg.eval_on_train {
        (len, train_cfg.washout..len)
    } else {
        let (_, test) = split_bounds(len, train_cfg.washout, train_cfg.train_fraction)?;
        (test.start, test)
    };
    let train_states = states.slice(ndarray::s![..train_end, ..]).to_owned();
    let weights = train_readout(&train_states, &target[..train_end], &spec)?;
    let outputs = predict(&weights, states)?;
    Ok(metric(&outputs[eval_range.clone()], &target[eval_range])?)
}

fn run_trial(
    config: &ExperimentConfig,
    cell: usize,
    v: f64,
    lambda: f64,
    trial: usize,
) -> Result<TrialRecord, HarnessError> {
    let arch_seed = seeds::derive(config.seed, stream::TRIAL, trial as u64);
    let data = generate_task_data(config, trial)?;
    let mut reservoir = build_reservoir(
        &config.architecture,
        &config.task,
        config.device,
        config.solve,
        v,
        lambda,
        arch_seed,
    )?;

    let mut metrics: Vec<(String, f64)> = Vec::new();
    match &config.task {
        TaskConfig::MemoryCapacity { max_delay, .. } => {
            let spec = McSpec {
                train: TrainSpec {
                    ridge_coefficient: config.train.ridge,
                    washout: config.train.washout,
                },
                train_fraction: config.train.train_fraction,
                max_delay: *max_delay,
            };
            let mc = memory_capacity(&mut *reservoir, &data.input, &spec)?;
            metrics.push(("capacity".into(), mc.total));
            for (k, c) in mc.per_delay.iter().enumerate() {
                metrics.push((format!("phi_{:02}", k + 1), *c));
            }
        }
        TaskConfig::Hhg { samples, dt, f_hz, triangle_kmax, square_kmax } => {
            let states = run_reservoir(&mut *reservoir, &data.input)?;
            let targets = [
                ("mse_sine", tasks::sine(2.0 * f_hz, 1.0, *dt, *samples, 0.0)?),
                ("mse_triangle", tasks::triangle_wave(*f_hz, *dt, *samples, *triangle_kmax)?),
                ("mse_square", tasks::square_wave(*f_hz, *dt, *samples, *square_kmax)?),
            ];
            let mut combined = 0.0;
            let mut per_task = Vec::new();
            for (name, target) in &targets {
                let m = train_and_score(&states, target.samples(), &config.train, mse)?;
                combined += m;
                per_task.push((name.to_string(), m));
            }
            metrics.push(("mse_combined".into(), combined));
            metrics.extend(per_task);
        }
        TaskConfig::Mso { .. } | TaskConfig::Narma10 { .. } => {
            let target = data.target.as_ref().expect("trained task carries a target");
            let states = run_reservoir(&mut *reservoir, &data.input)?;
            let m = train_and_score(&states, target, &config.train, nrmse)?;
            metrics.push(("nrmse".into(), m));
        }
    }

    Ok(TrialRecord {
        cell,
        v,
        lambda,
        trial,
        metrics,
        health: reservoir.health(),
        regenerations: data.regenerations,
    })
}

/// One row of the architecture comparison: a readout budget `k` evaluated on
/// one architecture.
#[derive(Debug, Clone)]
pub struct CompareRecord {
    pub arch: String,
    pub k: usize,
    pub trial: usize,
    pub metric: f64,
    pub health: SolverHealth,
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub arch: String,
    pub k: usize,
    pub mean: f64,
    pub stdev: f64,
    pub tainted: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub name: String,
    pub config_hash: u64,
    pub root_seed: u64,
    pub task_name: String,
    pub primary_metric: String,
    pub rows: Vec<CompareSummary>,
    pub trials: Vec<CompareRecord>,
}

impl ComparisonReport {
    pub fn summary(&self, arch: &str, k: usize) -> Option<&CompareSummary> {
        self.rows.iter().find(|r| r.arch == arch && r.k == k)
    }
}

/// Evaluates matched readout budgets: for every count `k`, a k-node SCR against
/// one single network exposing its first `k` readout pairs. The single network
/// is built once per trial with the largest requested pair count and run once;
/// smaller budgets reuse column prefixes of its state matrix, so budgets are
/// nested models over identical data.
pub fn compare_architectures(
    config: &ExperimentConfig,
    readout_counts: &[usize],
) -> Result<ComparisonReport, HarnessError> {
    if readout_counts.is_empty() {
        return Err(HarnessError::InvalidArgument("empty readout count list".into()));
    }
    let mut counts = readout_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    let max_pairs = *counts.last().expect("non-empty counts");

    let score_states = |states: &Array2<f64>, config: &ExperimentConfig, trial: usize| -> Result<f64, HarnessError> {
        let TaskConfig::Hhg { samples, dt, f_hz, triangle_kmax, square_kmax } = &config.task
        else {
            let data = generate_task_data(config, trial)?;
            let target = data
                .target
                .ok_or_else(|| HarnessError::InvalidArgument(
                    "comparison task must provide a teacher target".into(),
                ))?;
            return train_and_score(states, &target, &config.train, nrmse);
        };
        let mut combined = 0.0;
        for target in [
            tasks::sine(2.0 * f_hz, 1.0, *dt, *samples, 0.0)?,
            tasks::triangle_wave(*f_hz, *dt, *samples, *triangle_kmax)?,
            tasks::square_wave(*f_hz, *dt, *samples, *square_kmax)?,
        ] {
            combined += train_and_score(states, target.samples(), &config.train, mse)?;
        }
        Ok(combined)
    };

    let run_one_trial = |trial: usize| -> Result<Vec<CompareRecord>, HarnessError> {
        let arch_seed = seeds::derive(config.seed, stream::TRIAL, trial as u64);
        let data = generate_task_data(config, trial)?;
        let mut records = Vec::new();

        // single network: one build, one run, nested column prefixes
        let mut single = build_single_network_reservoir(&SingleNetworkConfig {
            n_circuit_nodes: config.architecture.circuit_nodes,
            n_readout_pairs: max_pairs,
            k_degree: config.architecture.k_degree,
            input_coeff: config.architecture.v,
            dt: config.task.dt(),
            substeps: config.architecture.substeps,
            drive_clip: config.architecture.drive_clip,
            device: config.device,
            solve: config.solve,
            seed: arch_seed,
        })?;
        let single_states = run_reservoir(&mut single, &data.input)?;
        let single_health = single.health();
        for &k in &counts {
            let view = single_states.slice(ndarray::s![.., ..k]).to_owned();
            records.push(CompareRecord {
                arch: "single-network".into(),
                k,
                trial,
                metric: score_states(&view, config, trial)?,
                health: single_health,
            });
        }

        for &k in &counts {
            let mut scr = build_scr(&ScrConfig {
                n_nodes: k,
                input_coeff: config.architecture.v,
                spectral_radius: config.architecture.lambda,
                network_size_range: config.architecture.network_size_range,
                k_degree: config.architecture.k_degree,
                dt: config.task.dt(),
                substeps: config.architecture.substeps,
                drive_clip: config.architecture.drive_clip,
                device: config.device,
                solve: config.solve,
                seed: arch_seed,
            })?;
            let states = run_reservoir(&mut scr, &data.input)?;
            records.push(CompareRecord {
                arch: "scr".into(),
                k,
                trial,
                metric: score_states(&states, config, trial)?,
                health: scr.health(),
            });
        }
        Ok(records)
    };

    let trial_ids: Vec<usize> = (0..config.trials).collect();
    let nested: Vec<Result<Vec<CompareRecord>, HarnessError>> = if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| HarnessError::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| trial_ids.par_iter().map(|&t| run_one_trial(t)).collect())
    } else {
        trial_ids.par_iter().map(|&t| run_one_trial(t)).collect()
    };
    let mut trials: Vec<CompareRecord> = Vec::new();
    for group in nested {
        trials.extend(group?);
    }

    let mut rows = Vec::new();
    for arch in ["single-network", "scr"] {
        for &k in &counts {
            let subset: Vec<&CompareRecord> =
                trials.iter().filter(|r| r.arch == arch && r.k == k).collect();
            let values: Vec<f64> = subset.iter().map(|r| r.metric).collect();
            let (mean, stdev) = mean_stdev(&values);
            rows.push(CompareSummary {
                arch: arch.into(),
                k,
                mean,
                stdev,
                tainted: subset
                    .iter()
                    .any(|r| r.health.unconverged_fraction() > UNCONVERGED_TAINT_THRESHOLD),
            });
        }
    }

    Ok(ComparisonReport {
        name: config.name.clone(),
        config_hash: config.config_hash,
        root_seed: config.seed,
        task_name: config.task.kind_name().to_string(),
        primary_metric: config.task.primary_metric().to_string(),
        rows,
        trials,
    })
}
