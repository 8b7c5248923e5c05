//! Linear readout training and evaluation metrics.
//!
//! The readout is a ridge regression over the reservoir state extended by a
//! constant-one bias column, solved by normal equations. Metrics: mean squared
//! error, target-normalized NRMSE, the squared correlation used as delay
//! capacity, and the summed memory capacity over delays 1..=10.

use std::ops::Range;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::circuit::CircuitError;
use crate::linalg::{solve_spd, LinalgError};
use crate::reservoir::{run_reservoir, Reservoir};
use crate::tasks::TimeSeries;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("too few samples: need more than {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("singular normal equations; use a nonzero ridge coefficient")]
    SingularSystem,
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("weights text, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Trained output weights; the last entry multiplies the constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    pub weights: Vec<f64>,
}

impl ReadoutWeights {
    pub fn state_dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn bias(&self) -> f64 {
        *self.weights.last().expect("weights never empty")
    }

    /// One full-precision value per line.
    pub fn to_text(&self) -> String {
        self.weights.iter().map(|w| format!("{w:.17e}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let mut weights = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            weights.push(line.parse::<f64>().map_err(|_| LearnError::Parse {
                line: idx + 1,
                msg: format!("invalid number `{line}`"),
            })?);
        }
        if weights.is_empty() {
            return Err(LearnError::InvalidArgument("no weights in text".into()));
        }
        Ok(Self { weights })
    }
}

/// Ridge strength and washout used by training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSpec {
    pub ridge_coefficient: f64,
    pub washout: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self { ridge_coefficient: 1e-8, washout: 100 }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.ridge_coefficient >= 0.0) {
            return Err(LearnError::InvalidArgument("ridge coefficient must be >= 0".into()));
        }
        Ok(())
    }
}

/// Contiguous train/test ranges after washout. Boundaries depend only on the
/// series length, never on the data.
pub fn split_bounds(
    len: usize,
    washout: usize,
    train_fraction: f64,
) -> Result<(Range<usize>, Range<usize>), LearnError> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(LearnError::InvalidArgument(format!(
            "train fraction {train_fraction} outside [0, 1]"
        )));
    }
    if washout >= len {
        return Err(LearnError::TooFewSamples { needed: washout, got: len });
    }
    let usable = len - washout;
    let train_len = (usable as f64 * train_fraction).floor() as usize;
    let split = washout + train_len;
    Ok((washout..split, split..len))
}

/// Solves the ridge-regularized least squares problem over the washed-out
/// rows, bias column included in the regularization. Columns that are
/// identically zero are dropped and receive weight zero; any other rank
/// deficiency at zero ridge is an error.
pub fn train_readout(
    states: &Array2<f64>,
    target: &[f64],
    spec: &TrainSpec,
) -> Result<ReadoutWeights, LearnError> {
    spec.validate()?;
    let t_total = states.nrows();
    let n = states.ncols();
    if target.len() != t_total {
        return Err(LearnError::DimensionMismatch(format!(
            "{} state rows vs {} targets",
            t_total,
            target.len()
        )));
    }
    if t_total <= spec.washout || t_total - spec.washout <= n + 1 {
        return Err(LearnError::TooFewSamples { needed: spec.washout + n + 1, got: t_total });
    }
    let rows = spec.washout..t_total;
    let dim = n + 1;

    // gram matrix and moment vector over the extended design [states | 1]
    let mut gram = Array2::<f64>::zeros((dim, dim));
    let mut moment = Array1::<f64>::zeros(dim);
    for t in rows {
        let y = target[t];
        for i in 0..n {
            let xi = states[[t, i]];
            moment[i] += xi * y;
            for j in i..n {
                gram[[i, j]] += xi * states[[t, j]];
            }
            gram[[i, n]] += xi;
        }
        moment[n] += y;
    }
    gram[[n, n]] = (t_total - spec.washout) as f64;
    for i in 0..dim {
        for j in 0..i {
            gram[[i, j]] = gram[[j, i]];
        }
    }

    // identically zero columns contribute nothing; give them weight zero
    let live: Vec<usize> = (0..dim).filter(|&i| gram[[i, i]] > 0.0).collect();
    let k = live.len();
    let mut reduced = Array2::<f64>::zeros((k, k));
    let mut rhs = Array1::<f64>::zeros(k);
    for (ri, &i) in live.iter().enumerate() {
        rhs[ri] = moment[i];
        for (rj, &j) in live.iter().enumerate() {
            reduced[[ri, rj]] = gram[[i, j]];
        }
        reduced[[ri, ri]] += spec.ridge_coefficient;
    }
    let solution = solve_spd(&reduced, &rhs).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { .. } => LearnError::SingularSystem,
        other => LearnError::DimensionMismatch(other.to_string()),
    })?;
    let mut weights = vec![0.0; dim];
    for (ri, &i) in live.iter().enumerate() {
        weights[i] = solution[ri];
    }
    Ok(ReadoutWeights { weights })
}

/// Applies the readout rowwise: `y(t) = w . [x(t), 1]`.
pub fn predict(weights: &ReadoutWeights, states: &Array2<f64>) -> Result<Vec<f64>, LearnError> {
    let n = states.ncols();
    if weights.weights.len() != n + 1 {
        return Err(LearnError::DimensionMismatch(format!(
            "{} weights for {} state columns",
            weights.weights.len(),
            n
        )));
    }
    Ok(states
        .rows()
        .into_iter()
        .map(|row| {
            row.iter().zip(&weights.weights).map(|(x, w)| x * w).sum::<f64>() + weights.bias()
        })
        .collect())
}

fn check_pair(y: &[f64], y_hat: &[f64]) -> Result<(), LearnError> {
    if y.len() != y_hat.len() {
        return Err(LearnError::DimensionMismatch(format!(
            "{} outputs vs {} targets",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(LearnError::InvalidArgument("empty series".into()));
    }
    Ok(())
}

/// Time-averaged squared error.
pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64, LearnError> {
    check_pair(y, y_hat)?;
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

/// Root mean squared error normalized by the mean square of the target
/// `y_hat`. Undefined for a zero-power target.
pub fn nrmse(y: &[f64], y_hat: &[f64]) -> Result<f64, LearnError> {
    check_pair(y, y_hat)?;
    let err: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let power: f64 = y_hat.iter().map(|b| b * b).sum();
    if power <= 0.0 {
        return Err(LearnError::UndefinedMetric("target has zero power".into()));
    }
    Ok((err / power).sqrt())
}

/// Squared correlation `Cov^2(y, y_hat) / (Var(y) Var(y_hat))`, the per-delay
/// capacity. Undefined when either series has zero variance.
pub fn delay_capacity(y: &[f64], y_hat: &[f64]) -> Result<f64, LearnError> {
    check_pair(y, y_hat)?;
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mh = y_hat.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vy = 0.0;
    let mut vh = 0.0;
    for (a, b) in y.iter().zip(y_hat) {
        cov += (a - my) * (b - mh);
        vy += (a - my) * (a - my);
        vh += (b - mh) * (b - mh);
    }
    if vy <= 0.0 || vh <= 0.0 {
        return Err(LearnError::UndefinedMetric("series has zero variance".into()));
    }
    Ok((cov * cov) / (vy * vh))
}

/// Memory-capacity estimation controls.
#[derive(Debug, Clone, Copy)]
pub struct McSpec {
    pub train: TrainSpec,
    pub train_fraction: f64,
    pub max_delay: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        Self { train: TrainSpec { ridge_coefficient: 1e-8, washout: 200 }, train_fraction: 0.7, max_delay: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct McResult {
    /// Sum of the per-delay capacities.
    pub total: f64,
    /// `per_delay[k]` is the capacity at delay `k + 1`.
    pub per_delay: Vec<f64>,
}

/// Runs the reservoir once over `input`, then for each delay `1..=max_delay`
/// trains a separate readout on the delayed-input target and sums the
/// test-split capacities.
pub fn memory_capacity<R: Reservoir + ?Sized>(
    reservoir: &mut R,
    input: &TimeSeries,
    spec: &McSpec,
) -> Result<McResult, LearnError> {
    let states = run_reservoir(reservoir, input)?;
    memory_capacity_from_states(&states, input, spec)
}

/// Capacity of an already-computed state matrix (row `t` = state after
/// consuming input sample `t`).
pub fn memory_capacity_from_states(
    states: &Array2<f64>,
    input: &TimeSeries,
    spec: &McSpec,
) -> Result<McResult, LearnError> {
    if spec.max_delay == 0 {
        return Err(LearnError::InvalidArgument("max_delay must be at least 1".into()));
    }
    if spec.train.washout < spec.max_delay {
        return Err(LearnError::InvalidArgument(format!(
            "washout {} must cover the maximum delay {}",
            spec.train.washout, spec.max_delay
        )));
    }
    if states.nrows() != input.len() {
        return Err(LearnError::DimensionMismatch(format!(
            "{} state rows vs {} input samples",
            states.nrows(),
            input.len()
        )));
    }
    let len = input.len();
    let u = input.samples();
    let (_, test) = split_bounds(len, spec.train.washout, spec.train_fraction)?;
    let mut per_delay = Vec::with_capacity(spec.max_delay);
    for delay in 1..=spec.max_delay {
        // target is the delayed input; rows before `delay` never reach
        // training because washout >= max_delay
        let target: Vec<f64> =
            (0..len).map(|t| if t >= delay { u[t - delay] } else { 0.0 }).collect();
        // train only on the training split
        let train_states = states.slice(ndarray::s![..test.start, ..]).to_owned();
        let weights = train_readout(&train_states, &target[..test.start], &spec.train)?;
        let outputs = predict(&weights, states)?;
        per_delay.push(delay_capacity(&outputs[test.clone()], &target[test.clone()])?);
    }
    Ok(McResult { total: per_delay.iter().sum(), per_delay })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::uniform_series;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn target_in_span_recovers_unit_weight_and_zero_residual() {
        let t = 50;
        let mut states = Array2::<f64>::zeros((t, 4));
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let target: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (i, &y) in target.iter().enumerate() {
            states[[i, 0]] = y;
        }
        let spec = TrainSpec { ridge_coefficient: 0.0, washout: 0 };
        let w = train_readout(&states, &target, &spec).unwrap();
        assert_abs_diff_eq!(w.weights[0], 1.0, epsilon = 1e-10);
        for &extra in &w.weights[1..] {
            assert_abs_diff_eq!(extra, 0.0, epsilon = 1e-10);
        }
        let out = predict(&w, &states).unwrap();
        assert!(mse(&out, &target).unwrap() < 1e-20);
    }

    #[test]
    fn constant_target_lands_in_the_bias() {
        let states = Array2::<f64>::zeros((30, 3));
        let target = vec![2.5; 30];
        let spec = TrainSpec { ridge_coefficient: 0.0, washout: 0 };
        let w = train_readout(&states, &target, &spec).unwrap();
        assert_abs_diff_eq!(w.bias(), 2.5, epsilon = 1e-12);
        assert!(w.weights[..3].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn collinear_nonzero_features_error_at_zero_ridge() {
        let t = 40;
        let mut states = Array2::<f64>::zeros((t, 2));
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for i in 0..t {
            let x = rng.random_range(-1.0..1.0);
            states[[i, 0]] = x;
            states[[i, 1]] = 2.0 * x; // exactly dependent, nonzero
        }
        let target: Vec<f64> = (0..t).map(|i| states[[i, 0]]).collect();
        let zero = TrainSpec { ridge_coefficient: 0.0, washout: 0 };
        assert!(matches!(train_readout(&states, &target, &zero), Err(LearnError::SingularSystem)));
        // a nonzero ridge resolves it
        let ridge = TrainSpec { ridge_coefficient: 1e-8, washout: 0 };
        assert!(train_readout(&states, &target, &ridge).is_ok());
    }

    /// Dense pseudoinverse oracle for the ridge-free least squares solution.
    #[test]
    fn recovers_known_combination_against_pseudoinverse_oracle() {
        let (t, n) = (200, 8);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut states = Array2::<f64>::zeros((t, n));
        for v in states.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let true_w: Vec<f64> = (0..n).map(|i| (i as f64 - 3.5) * 0.25).collect();
        let bias = 0.7;
        let target: Vec<f64> = (0..t)
            .map(|r| (0..n).map(|c| states[[r, c]] * true_w[c]).sum::<f64>() + bias)
            .collect();

        let spec = TrainSpec { ridge_coefficient: 1e-12, washout: 0 };
        let w = train_readout(&states, &target, &spec).unwrap();

        let mut design = nalgebra::DMatrix::<f64>::zeros(t, n + 1);
        for r in 0..t {
            for c in 0..n {
                design[(r, c)] = states[[r, c]];
            }
            design[(r, n)] = 1.0;
        }
        let pinv = design.pseudo_inverse(1e-12).unwrap();
        let oracle = &pinv * nalgebra::DVector::from_row_slice(&target);
        for i in 0..=n {
            assert!((w.weights[i] - oracle[i]).abs() < 1e-6, "weight {i}");
        }
        // exact interpolation: target was in the span
        let out = predict(&w, &states).unwrap();
        for (a, b) in out.iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn washout_rows_are_excluded_from_training() {
        let t = 60;
        let mut states = Array2::<f64>::zeros((t, 1));
        let mut target = vec![0.0; t];
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for i in 0..t {
            states[[i, 0]] = rng.random_range(-1.0..1.0);
            // perfect relation only after the washout region
            target[i] = if i < 10 { 99.0 } else { 3.0 * states[[i, 0]] };
        }
        let w = train_readout(&states, &target, &TrainSpec { ridge_coefficient: 0.0, washout: 10 })
            .unwrap();
        assert_abs_diff_eq!(w.weights[0], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn predict_trivia_and_dimension_checks() {
        let states = Array2::<f64>::from_shape_fn((5, 2), |(r, c)| (r + c) as f64);
        let zero = ReadoutWeights { weights: vec![0.0, 0.0, 0.0] };
        assert!(predict(&zero, &states).unwrap().iter().all(|&y| y == 0.0));
        let bias_only = ReadoutWeights { weights: vec![0.0, 0.0, 4.2] };
        assert!(predict(&bias_only, &states).unwrap().iter().all(|&y| y == 4.2));
        let wrong = ReadoutWeights { weights: vec![1.0, 2.0] };
        assert!(matches!(predict(&wrong, &states), Err(LearnError::DimensionMismatch(_))));
    }

    #[test]
    fn mse_matches_independent_summation_oracle() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[2.0, 2.0]).unwrap(), 4.0);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let a: Vec<f64> = (0..500).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..500).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut acc = 0.0;
        for i in 0..500 {
            let d = a[i] - b[i];
            acc += d * d;
        }
        assert_abs_diff_eq!(mse(&a, &b).unwrap(), acc / 500.0, epsilon = 1e-12);
    }

    #[test]
    fn nrmse_identities() {
        let y = vec![0.5, -1.0, 2.0];
        assert_eq!(nrmse(&y, &y).unwrap(), 0.0);
        let zeros = vec![0.0; 3];
        assert_abs_diff_eq!(nrmse(&zeros, &y).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(nrmse(&y, &zeros), Err(LearnError::UndefinedMetric(_))));

        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = nrmse(&a, &b).unwrap();
        let scale = -3.7;
        let sa: Vec<f64> = a.iter().map(|x| x * scale).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * scale).collect();
        assert_abs_diff_eq!(nrmse(&sa, &sb).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn capacity_is_affine_invariant_and_vanishes_for_independent_noise() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let y: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_abs_diff_eq!(delay_capacity(&y, &y).unwrap(), 1.0, epsilon = 1e-12);
        let affine: Vec<f64> = y.iter().map(|x| -2.0 * x + 5.0).collect();
        assert_abs_diff_eq!(delay_capacity(&affine, &y).unwrap(), 1.0, epsilon = 1e-12);

        let independent: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(delay_capacity(&independent, &y).unwrap() < 0.01);

        let constant = vec![1.0; 10_000];
        assert!(matches!(delay_capacity(&constant, &y), Err(LearnError::UndefinedMetric(_))));
    }

    #[test]
    fn training_residual_is_monotone_in_ridge() {
        let (t, n) = (120, 6);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let mut states = Array2::<f64>::zeros((t, n));
        for v in states.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let target: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut prev = -1.0;
        for ridge in [0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0] {
            let w =
                train_readout(&states, &target, &TrainSpec { ridge_coefficient: ridge, washout: 0 })
                    .unwrap();
            let resid = mse(&predict(&w, &states).unwrap(), &target).unwrap();
            assert!(resid >= prev - 1e-15, "residual decreased at ridge {ridge}");
            prev = resid;
        }
    }

    /// A perfect 10-tap delay line must recover essentially all of the
    /// capacity: C within 0.05 of 10.
    #[test]
    fn delay_line_reservoir_saturates_memory_capacity() {
        let input = uniform_series(-0.8, 0.8, 2200, 1.0, 42).unwrap();
        let u = input.samples();
        let mut states = Array2::<f64>::zeros((2200, 10));
        for t in 0..2200 {
            for i in 0..10 {
                let delay = i + 1;
                states[[t, i]] = if t >= delay { u[t - delay] } else { 0.0 };
            }
        }
        let mc = memory_capacity_from_states(&states, &input, &McSpec::default()).unwrap();
        assert!((mc.total - 10.0).abs() < 0.05, "C = {}", mc.total);
        for (k, c) in mc.per_delay.iter().enumerate() {
            assert!(*c > 0.99, "C_{} = {}", k + 1, c);
        }
    }

    #[test]
    fn white_noise_states_carry_no_memory() {
        let input = uniform_series(-0.8, 0.8, 2200, 1.0, 5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let states = Array2::<f64>::from_shape_fn((2200, 10), |_| rng.random_range(-1.0..1.0));
        let mc = memory_capacity_from_states(&states, &input, &McSpec::default()).unwrap();
        assert!(mc.total < 0.5, "C = {}", mc.total);
    }

    #[test]
    fn split_boundaries_ignore_data_and_test_rows_drive_the_metric() {
        let len = 2200;
        let (train, test) = split_bounds(len, 200, 0.7).unwrap();
        assert_eq!(train, 200..1600);
        assert_eq!(test, 1600..2200);
        // boundaries are a pure function of lengths
        assert_eq!(split_bounds(len, 200, 0.7).unwrap(), (train.clone(), test.clone()));

        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let states = Array2::<f64>::from_shape_fn((400, 3), |_| rng.random_range(-1.0..1.0));
        let target: Vec<f64> = (0..400).map(|i| states[[i, 0]] * 1.5).collect();
        let (tr, te) = split_bounds(400, 50, 0.7).unwrap();
        let spec = TrainSpec { ridge_coefficient: 1e-8, washout: 50 };
        let eval = |tgt: &[f64]| {
            let train_states = states.slice(ndarray::s![..te.start, ..]).to_owned();
            let w = train_readout(&train_states, &tgt[..te.start], &spec).unwrap();
            let out = predict(&w, &states).unwrap();
            mse(&out[te.clone()], &tgt[te.clone()]).unwrap()
        };
        let base = eval(&target);
        let mut corrupted_test = target.clone();
        for x in &mut corrupted_test[te.clone()] {
            *x += 1.0;
        }
        assert_ne!(base, eval(&corrupted_test), "test corruption must change the metric");
        let _ = tr;
    }

    #[test]
    fn weights_text_round_trip() {
        let w = ReadoutWeights { weights: vec![1.0 / 3.0, -2.5e-7, 0.0, 9.87654321e12] };
        let back = ReadoutWeights::from_text(&w.to_text()).unwrap();
        assert_eq!(w, back);
        assert!(ReadoutWeights::from_text("not a number\n").is_err());
    }
}
