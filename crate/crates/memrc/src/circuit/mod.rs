//! Memristive network circuit simulation.
//!
//! Each reservoir timestep treats the network as a stationary resistive
//! circuit: every device is replaced by its secant conductance `I(v)/v` at the
//! previous branch voltage, the reduced nodal system (ground eliminated,
//! source row substituted) is solved directly, and the loop repeats until the
//! node voltages stop moving. Device states are then advanced with the
//! converged branch voltages.

mod topology;

pub use topology::{generate_topology, Edge, NetworkTopology};

use ndarray::Array2;
use thiserror::Error;

use crate::device::{
    self, current_raw, small_signal_conductance, step_device, DeviceError, DeviceParams,
    DeviceState,
};
use crate::linalg::{LinalgError, LuSolver};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("no connected topology found within {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("circuit solve failed: {0}")]
    Solver(#[from] LinalgError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("topology text, line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Fixed-point solver controls.
///
/// `min_conductance` floors every device conductance; `ground_leak` adds a far
/// smaller conductance from each non-source node to ground so that structure
/// the generator cannot produce (floating components in hand-built diagnostics)
/// still yields a well-posed system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub max_fixed_point_iters: usize,
    pub voltage_tolerance: f64,
    pub min_conductance: f64,
    pub ground_leak: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            max_fixed_point_iters: 50,
            voltage_tolerance: 1e-6,
            min_conductance: 1e-12,
            ground_leak: 1e-15,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.voltage_tolerance > 0.0) {
            return Err(CircuitError::InvalidArgument("voltage_tolerance must be > 0".into()));
        }
        if !(self.min_conductance > 0.0) {
            return Err(CircuitError::InvalidArgument("min_conductance must be > 0".into()));
        }
        if !(self.ground_leak > 0.0) {
            return Err(CircuitError::InvalidArgument("ground_leak must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of one DC solve: node voltages, the number of linear solves spent,
/// and whether the fixed point converged within tolerance.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub voltages: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of one quasi-static step: differential readouts and solve health.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub readouts: Vec<f64>,
    pub converged: bool,
}

/// A network topology with live device states and solver scratch space.
/// Single-threaded mutable state; distinct networks may run concurrently.
#[derive(Debug, Clone)]
pub struct MemristiveNetwork {
    topology: NetworkTopology,
    params: DeviceParams,
    device_states: Vec<DeviceState>,
    last_voltages: Vec<f64>,
    linearized: bool,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    matrix: Option<Array2<f64>>,
    rhs: Vec<f64>,
    conductances: Vec<f64>,
    prev_conductances: Vec<f64>,
}

impl MemristiveNetwork {
    /// Fresh network with all device states at zero.
    pub fn new(topology: NetworkTopology, params: DeviceParams) -> Self {
        let n_devices = topology.edges.len();
        let n_nodes = topology.node_count;
        Self {
            topology,
            params,
            device_states: vec![DeviceState::default(); n_devices],
            last_voltages: vec![0.0; n_nodes],
            linearized: false,
            scratch: Scratch::default(),
        }
    }

    /// Rebuilds a network from persisted pieces (snapshot restore).
    pub fn from_parts(
        topology: NetworkTopology,
        params: DeviceParams,
        device_states: Vec<DeviceState>,
    ) -> Result<Self, CircuitError> {
        if device_states.len() != topology.edges.len() {
            return Err(CircuitError::InvalidArgument(format!(
                "{} device states for {} edges",
                device_states.len(),
                topology.edges.len()
            )));
        }
        let n_nodes = topology.node_count;
        Ok(Self {
            topology,
            params,
            device_states,
            last_voltages: vec![0.0; n_nodes],
            linearized: false,
            scratch: Scratch::default(),
        })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn device_states(&self) -> &[DeviceState] {
        &self.device_states
    }

    pub fn last_voltages(&self) -> &[f64] {
        &self.last_voltages
    }

    /// Restores the cached node voltages (the solver warm start), so a
    /// resumed network replays bit-identically.
    pub fn restore_voltage_cache(&mut self, voltages: Vec<f64>) -> Result<(), CircuitError> {
        if voltages.len() != self.topology.node_count {
            return Err(CircuitError::InvalidArgument(format!(
                "{} cached voltages for {} nodes",
                voltages.len(),
                self.topology.node_count
            )));
        }
        self.last_voltages = voltages;
        self.last_voltages[self.topology.ground_node] = 0.0;
        Ok(())
    }

    /// When set, every device is replaced by its constant small-signal
    /// conductance, making the network exactly linear (used by solver
    /// equivalence checks).
    pub fn set_linearized(&mut self, linearized: bool) {
        self.linearized = linearized;
    }


    pub fn device_count(&self) -> usize {
        self.topology.edges.len()
    }

    fn branch_voltage(&self, edge: &Edge, voltages: &[f64]) -> f64 {
        voltages[edge.a] - voltages[edge.b]
    }

    /// Secant conductance `I(v_prev)/v_prev` of one device, falling back to the
    /// small-signal slope below 1 nV, floored at `min_conductance`.
    fn edge_conductance(&self, idx: usize, v_branch: f64, settings: &SolveSettings) -> f64 {
        let w = self.device_states[idx].w();
        let g = if self.linearized || v_branch.abs() < 1e-9 {
            small_signal_conductance(&self.params, w)
        } else {
            current_raw(&self.params, w, v_branch) / v_branch
        };
        g.max(settings.min_conductance)
    }

    /// Solves the stationary resistive network with `input_voltage` applied
    /// between the input and ground terminals.
    ///
    /// Non-convergence within `max_fixed_point_iters` is not an error: the last
    /// iterate is returned with `converged = false` and the caller decides.
    /// The converged voltages are cached as the warm start for the next solve.
    pub fn solve_dc(
        &mut self,
        input_voltage: f64,
        settings: &SolveSettings,
    ) -> Result<SolveOutcome, CircuitError> {
        settings.validate()?;
        if !input_voltage.is_finite() {
            return Err(CircuitError::InvalidArgument(format!(
                "non-finite input voltage {input_voltage}"
            )));
        }
        let n = self.topology.node_count;
        let ground = self.topology.ground_node;
        let input = self.topology.input_node;
        let n_edges = self.topology.edges.len();

        // row index per node in the reduced (ground-eliminated) system
        let mut row = vec![usize::MAX; n];
        let mut r = 0;
        for node in 0..n {
            if node != ground {
                row[node] = r;
                r += 1;
            }
        }
        let m = n - 1;

        let mut v = self.last_voltages.clone();
        v[ground] = 0.0;

        let mut matrix = match self.scratch.matrix.take() {
            Some(mat) if mat.nrows() == m => mat,
            _ => Array2::zeros((m, m)),
        };
        self.scratch.rhs.resize(m, 0.0);
        self.scratch.prev_conductances.clear();

        let mut iterations = 0;
        let mut converged = false;
        // The raw secant map can oscillate or crawl (contraction ratio near 1)
        // at strongly nonlinear operating points. Two standard remedies keep
        // the spec'd G = I/V scheme intact: adaptive under-relaxation when the
        // residual grows, and an Aitken extrapolation along the dominant error
        // direction when two successive undamped steps reveal a stable ratio.
        // Convergence is always judged on the undamped fixed-point residual.
        let mut relaxation = 1.0f64;
        let mut prev_residual = f64::INFINITY;
        let mut prev_step: Option<Vec<f64>> = None;
        loop {
            self.scratch.conductances.resize(n_edges, 0.0);
            for (idx, edge) in self.topology.edges.iter().enumerate() {
                let vb = self.branch_voltage(edge, &v);
                self.scratch.conductances[idx] = self.edge_conductance(idx, vb, settings);
            }
            // a repeated conductance pattern reproduces the previous solution
            // exactly: the fixed point is reached (linearized networks land
            // here after a single solve)
            if iterations > 0 && self.scratch.conductances == self.scratch.prev_conductances {
                converged = true;
                break;
            }
            if iterations >= settings.max_fixed_point_iters {
                break;
            }

            matrix.fill(0.0);
            for x in self.scratch.rhs.iter_mut() {
                *x = 0.0;
            }
            for (idx, edge) in self.topology.edges.iter().enumerate() {
                let g = self.scratch.conductances[idx];
                let (ra, rb) = (row[edge.a], row[edge.b]);
                if ra != usize::MAX {
                    matrix[[ra, ra]] += g;
                }
                if rb != usize::MAX {
                    matrix[[rb, rb]] += g;
                }
                if ra != usize::MAX && rb != usize::MAX {
                    matrix[[ra, rb]] -= g;
                    matrix[[rb, ra]] -= g;
                }
            }
            for node in 0..n {
                if node != ground {
                    matrix[[row[node], row[node]]] += settings.ground_leak;
                }
            }
            // source row: v_input = input_voltage
            let ri = row[input];
            for col in 0..m {
                matrix[[ri, col]] = 0.0;
            }
            matrix[[ri, ri]] = 1.0;
            self.scratch.rhs[ri] = input_voltage;

            let solver = LuSolver::factorize(matrix, 0.0)?;
            let solution = solver.solve(&self.scratch.rhs)?;
            matrix = solver.into_matrix();
            iterations += 1;

            let mut residual = 0.0f64;
            for node in 0..n {
                let solved = if node == ground { 0.0 } else { solution[row[node]] };
                residual = residual.max((solved - v[node]).abs());
            }
            if residual < settings.voltage_tolerance {
                for node in 0..n {
                    if node != ground {
                        v[node] = solution[row[node]];
                    }
                }
                converged = true;
                break;
            }

            if residual < prev_residual {
                relaxation = (relaxation * 1.3).min(1.0);
            } else {
                relaxation = (relaxation * 0.5).max(1.0 / 64.0);
            }
            prev_residual = residual;

            let mut step: Vec<f64> = vec![0.0; n];
            for node in 0..n {
                if node != ground {
                    step[node] = relaxation * (solution[row[node]] - v[node]);
                    v[node] += step[node];
                }
            }
            v[input] = input_voltage;

            if relaxation == 1.0 {
                if let Some(prev) = prev_step.take() {
                    let dot: f64 = step.iter().zip(&prev).map(|(a, b)| a * b).sum();
                    let norm2: f64 = prev.iter().map(|a| a * a).sum();
                    if norm2 > 0.0 {
                        // contraction ratio along the dominant error direction;
                        // negative means oscillation, near 1 means crawling
                        let rho = dot / norm2;
                        if (-0.98..=0.98).contains(&rho) && rho.abs() > 0.2 {
                            let boost = rho / (1.0 - rho);
                            for node in 0..n {
                                if node != ground && node != input {
                                    v[node] += boost * step[node];
                                }
                            }
                            // the sequence is broken; collect two fresh steps
                            prev_residual = f64::INFINITY;
                        } else {
                            prev_step = Some(step);
                        }
                    }
                } else {
                    prev_step = Some(step);
                }
            } else {
                prev_step = None;
            }
            std::mem::swap(&mut self.scratch.conductances, &mut self.scratch.prev_conductances);
        }

        self.scratch.matrix = Some(matrix);
        self.last_voltages.clone_from(&v);
        Ok(SolveOutcome { voltages: v, iterations, converged })
    }

    /// One quasi-static step: solve, advance every device state with its
    /// converged branch voltage, and return the readout differentials.
    pub fn step_network(
        &mut self,
        input_voltage: f64,
        dt: f64,
        settings: &SolveSettings,
    ) -> Result<StepOutcome, CircuitError> {
        if !(dt > 0.0) {
            return Err(CircuitError::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        let outcome = self.solve_dc(input_voltage, settings)?;
        for idx in 0..self.topology.edges.len() {
            let edge = self.topology.edges[idx];
            let vb = self.branch_voltage(&edge, &outcome.voltages);
            self.device_states[idx] = step_device(&self.params, self.device_states[idx], vb, dt)?;
        }
        let readouts = self
            .topology
            .readout_pairs
            .iter()
            .map(|&(p, q)| outcome.voltages[p] - outcome.voltages[q])
            .collect();
        Ok(StepOutcome { readouts, converged: outcome.converged })
    }

    /// Total current drawn from the source at the converged solution, from
    /// Eq.-level branch currents of the devices incident to the input node.
    pub fn impedance_signature(
        &mut self,
        probe_voltage: f64,
        settings: &SolveSettings,
    ) -> Result<f64, CircuitError> {
        if probe_voltage == 0.0 {
            return Err(CircuitError::InvalidArgument("probe voltage must be nonzero".into()));
        }
        let outcome = self.solve_dc(probe_voltage, settings)?;
        Ok(self.source_current(&outcome.voltages))
    }

    /// Current leaving the input node through its incident devices.
    pub fn source_current(&self, voltages: &[f64]) -> f64 {
        let input = self.topology.input_node;
        let mut total = 0.0;
        for (idx, edge) in self.topology.edges.iter().enumerate() {
            let i = current_raw(&self.params, self.device_states[idx].w(), self.branch_voltage(edge, voltages));
            if edge.a == input {
                total += i;
            } else if edge.b == input {
                total -= i;
            }
        }
        total
    }

    /// Largest Kirchhoff current-law residual over non-source, non-ground
    /// nodes, evaluated with the nonlinear device currents (not the
    /// linearization the solver used).
    pub fn kcl_residual(&self, voltages: &[f64]) -> f64 {
        let mut residual = vec![0.0f64; self.topology.node_count];
        for (idx, edge) in self.topology.edges.iter().enumerate() {
            let i = current_raw(&self.params, self.device_states[idx].w(), self.branch_voltage(edge, voltages));
            residual[edge.a] -= i;
            residual[edge.b] += i;
        }
        residual
            .iter()
            .enumerate()
            .filter(|&(node, _)| node != self.topology.input_node && node != self.topology.ground_node)
            .map(|(_, r)| r.abs())
            .fold(0.0, f64::max)
    }

    /// A readout is dead when a probe sweep never moves any differential:
    /// the telltale of a component with no path between drive and readout.
    pub fn readout_is_dead(&mut self, settings: &SolveSettings) -> Result<bool, CircuitError> {
        for probe in [0.5, 1.0, 2.0, 4.0] {
            let outcome = self.solve_dc(probe, settings)?;
            for &(p, q) in &self.topology.readout_pairs {
                if (outcome.voltages[p] - outcome.voltages[q]).abs() > 1e-9 * probe {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Relaxes all device states with zero drive (decay only), used by tests.
    pub fn decay_states(&mut self, dt: f64) -> Result<(), CircuitError> {
        for state in &mut self.device_states {
            *state = device::step_device(&self.params, *state, 0.0, dt)?;
        }
        Ok(())
    }
}
