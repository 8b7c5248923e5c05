//! Reservoir architectures built from memristive networks.
//!
//! The main architecture is the simple cycle reservoir: N networks on a ring
//! with a uniform weight, each node driven by the previous node's readout plus
//! the signed, scaled input. A single-network baseline (one network, many
//! readout pairs, no recurrence) and a tanh-node ring serve as comparison
//! points.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::circuit::{
    generate_topology, CircuitError, MemristiveNetwork, NetworkTopology, SolveSettings,
};
use crate::device::{DeviceParams, DeviceState};
use crate::seeds::{self, stream};
use crate::tasks::TimeSeries;

/// Cumulative solver health over a reservoir's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverHealth {
    pub total_solves: u64,
    pub unconverged_solves: u64,
    pub clip_events: u64,
}

impl SolverHealth {
    pub fn unconverged_fraction(&self) -> f64 {
        if self.total_solves == 0 {
            0.0
        } else {
            self.unconverged_solves as f64 / self.total_solves as f64
        }
    }

    pub fn merge(&mut self, other: &SolverHealth) {
        self.total_solves += other.total_solves;
        self.unconverged_solves += other.unconverged_solves;
        self.clip_events += other.clip_events;
    }
}

/// Anything that maps an input sample to a new state vector.
pub trait Reservoir {
    fn state_dim(&self) -> usize;
    fn state(&self) -> &[f64];
    fn step(&mut self, u: f64) -> Result<Vec<f64>, CircuitError>;
    fn health(&self) -> SolverHealth {
        SolverHealth::default()
    }
}

/// Drives a reservoir through a whole input series. Row `t` of the result is
/// the state after consuming sample `t`; the reservoir mutates along the way.
pub fn run_reservoir<R: Reservoir + ?Sized>(
    reservoir: &mut R,
    input: &TimeSeries,
) -> Result<Array2<f64>, CircuitError> {
    if input.is_empty() {
        return Err(CircuitError::InvalidArgument("input series is empty".into()));
    }
    let n = reservoir.state_dim();
    let mut states = Array2::zeros((input.len(), n));
    for (t, &u) in input.samples().iter().enumerate() {
        let x = reservoir.step(u)?;
        for (i, v) in x.iter().enumerate() {
            states[[t, i]] = *v;
        }
    }
    Ok(states)
}

/// Build-time parameters of the memristive simple cycle reservoir.
#[derive(Debug, Clone)]
pub struct ScrConfig {
    pub n_nodes: usize,
    /// Input weight magnitude v (volts per unit input).
    pub input_coeff: f64,
    /// Uniform ring weight, the spectral radius of the cycle.
    pub spectral_radius: f64,
    /// Inclusive range of circuit nodes per memristive network.
    pub network_size_range: (usize, usize),
    pub k_degree: usize,
    /// Seconds of device time per reservoir step.
    pub dt: f64,
    /// Quasi-static sub-steps per reservoir step.
    pub substeps: usize,
    /// Hard clip on the drive voltage of each node network.
    pub drive_clip: f64,
    pub device: DeviceParams,
    pub solve: SolveSettings,
    pub seed: u64,
}

impl Default for ScrConfig {
    fn default() -> Self {
        Self {
            n_nodes: 20,
            input_coeff: 0.5,
            spectral_radius: 1.7,
            network_size_range: (20, 32),
            k_degree: 4,
            dt: 1e-3,
            substeps: 10,
            drive_clip: 16.0,
            device: DeviceParams::default(),
            solve: SolveSettings::default(),
            seed: 0,
        }
    }
}

impl ScrConfig {
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.n_nodes < 2 {
            return Err(CircuitError::InvalidArgument("need at least 2 reservoir nodes".into()));
        }
        if !(self.input_coeff >= 0.0) || !(self.spectral_radius >= 0.0) {
            return Err(CircuitError::InvalidArgument(
                "input_coeff and spectral_radius must be non-negative".into(),
            ));
        }
        if self.substeps < 1 {
            return Err(CircuitError::InvalidArgument("substeps must be at least 1".into()));
        }
        if self.network_size_range.0 < 3 || self.network_size_range.0 > self.network_size_range.1 {
            return Err(CircuitError::InvalidArgument(format!(
                "bad network size range {:?}",
                self.network_size_range
            )));
        }
        if !(self.dt > 0.0) {
            return Err(CircuitError::InvalidArgument("dt must be positive".into()));
        }
        if !(self.drive_clip > 0.0) {
            return Err(CircuitError::InvalidArgument("drive_clip must be positive".into()));
        }
        Ok(())
    }
}

/// Ring of memristive networks. Node `i` is driven by
/// `clip(ring_weight * x_{i-1} + sign_i * input_coeff * u)` and its new state
/// is the differential readout of its network after `substeps` quasi-static
/// sub-steps.
#[derive(Debug, Clone)]
pub struct ScrReservoir {
    nodes: Vec<MemristiveNetwork>,
    input_signs: Vec<f64>,
    state: Vec<f64>,
    ring_weight: f64,
    input_coeff: f64,
    dt: f64,
    substeps: usize,
    drive_clip: f64,
    solve: SolveSettings,
    health: SolverHealth,
}

/// Builds the SCR: each node's network is generated from an independent
/// derived seed with its size sampled uniformly from the configured range and
/// exactly one readout pair; input signs are fair Bernoulli; state starts at
/// zero. Fully deterministic for a fixed seed.
pub fn build_scr(config: &ScrConfig) -> Result<ScrReservoir, CircuitError> {
    config.validate()?;
    let mut nodes = Vec::with_capacity(config.n_nodes);
    for i in 0..config.n_nodes {
        let mut size_rng =
            ChaCha12Rng::seed_from_u64(seeds::derive(config.seed, stream::NODE_SIZES, i as u64));
        let (lo, hi) = config.network_size_range;
        let n_circuit_nodes = size_rng.random_range(lo..=hi);
        let k = config.k_degree.min(n_circuit_nodes - 1);
        let topo = generate_topology(
            n_circuit_nodes,
            k,
            1,
            seeds::derive(config.seed, stream::TOPOLOGY, i as u64),
        )?;
        nodes.push(MemristiveNetwork::new(topo, config.device));
    }
    let mut sign_rng =
        ChaCha12Rng::seed_from_u64(seeds::derive(config.seed, stream::INPUT_SIGNS, 0));
    let input_signs: Vec<f64> =
        (0..config.n_nodes).map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Ok(ScrReservoir {
        state: vec![0.0; config.n_nodes],
        nodes,
        input_signs,
        ring_weight: config.spectral_radius,
        input_coeff: config.input_coeff,
        dt: config.dt,
        substeps: config.substeps,
        drive_clip: config.drive_clip,
        solve: config.solve,
        health: SolverHealth::default(),
    })
}

impl ScrReservoir {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_networks(&self) -> &[MemristiveNetwork] {
        &self.nodes
    }

    pub fn input_signs(&self) -> &[f64] {
        &self.input_signs
    }

    pub fn ring_weight(&self) -> f64 {
        self.ring_weight
    }

    pub fn mean_device_count(&self) -> f64 {
        let total: usize = self.nodes.iter().map(|n| n.device_count()).sum();
        total as f64 / self.nodes.len() as f64
    }

    /// Serializes ring parameters, signs, per-node topology and device states,
    /// and the state vector for reproducible resume.
    pub fn dump_snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scr nodes={} ring_weight={:.17e} input_coeff={:.17e} dt={:.17e} substeps={} drive_clip={:.17e}",
            self.nodes.len(),
            self.ring_weight,
            self.input_coeff,
            self.dt,
            self.substeps,
            self.drive_clip
        );
        for (i, s) in self.input_signs.iter().enumerate() {
            let _ = writeln!(out, "sign {} {}", i, if *s > 0.0 { 1 } else { -1 });
        }
        for (i, net) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "network {i}");
            out.push_str(&net.topology().dump());
            for (id, state) in net.device_states().iter().enumerate() {
                let _ = writeln!(out, "w {} {:.17e}", id, state.w());
            }
            for (node, v) in net.last_voltages().iter().enumerate() {
                let _ = writeln!(out, "v {} {:.17e}", node, v);
            }
        }
        for (i, x) in self.state.iter().enumerate() {
            let _ = writeln!(out, "state {} {:.17e}", i, x);
        }
        out
    }

    /// Restores a snapshot produced by [`dump_snapshot`]. Device parameters and
    /// solver settings are runtime configuration and must be supplied.
    pub fn load_snapshot(
        text: &str,
        device: DeviceParams,
        solve: SolveSettings,
    ) -> Result<Self, CircuitError> {
        let fail = |line: usize, msg: String| CircuitError::Format { line: line + 1, msg };
        let lines: Vec<&str> = text.lines().collect();
        let header = lines
            .first()
            .ok_or_else(|| fail(0, "empty snapshot".into()))?
            .strip_prefix("scr ")
            .ok_or_else(|| fail(0, "snapshot must start with `scr`".into()))?;
        let mut n_nodes = None;
        let mut ring_weight = None;
        let mut input_coeff = None;
        let mut dt = None;
        let mut substeps = None;
        let mut drive_clip = None;
        for field in header.split_whitespace() {
            let (k, v) =
                field.split_once('=').ok_or_else(|| fail(0, format!("bad field `{field}`")))?;
            match k {
                "nodes" => n_nodes = v.parse::<usize>().ok(),
                "ring_weight" => ring_weight = v.parse::<f64>().ok(),
                "input_coeff" => input_coeff = v.parse::<f64>().ok(),
                "dt" => dt = v.parse::<f64>().ok(),
                "substeps" => substeps = v.parse::<usize>().ok(),
                "drive_clip" => drive_clip = v.parse::<f64>().ok(),
                _ => return Err(fail(0, format!("unknown header key `{k}`"))),
            }
        }
        let (Some(n_nodes), Some(ring_weight), Some(input_coeff), Some(dt), Some(substeps), Some(drive_clip)) =
            (n_nodes, ring_weight, input_coeff, dt, substeps, drive_clip)
        else {
            return Err(fail(0, "incomplete snapshot header".into()));
        };

        let mut signs = vec![0.0f64; n_nodes];
        let mut state = vec![0.0f64; n_nodes];
        let mut networks: Vec<MemristiveNetwork> = Vec::with_capacity(n_nodes);
        let mut idx = 1;
        while idx < lines.len() {
            let line = lines[idx].trim();
            if line.is_empty() {
                idx += 1;
                continue;
            }
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("sign") => {
                    let i: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(idx, "bad sign index".into()))?;
                    let s: i32 = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(idx, "bad sign value".into()))?;
                    if i >= n_nodes || (s != 1 && s != -1) {
                        return Err(fail(idx, format!("bad sign record `{line}`")));
                    }
                    signs[i] = s as f64;
                    idx += 1;
                }
                Some("state") => {
                    let i: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(idx, "bad state index".into()))?;
                    let x: f64 = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(idx, "bad state value".into()))?;
                    if i >= n_nodes {
                        return Err(fail(idx, "state index out of range".into()));
                    }
                    state[i] = x;
                    idx += 1;
                }
                Some("network") => {
                    let i: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| fail(idx, "bad network index".into()))?;
                    if i != networks.len() {
                        return Err(fail(idx, format!("network {i} out of order")));
                    }
                    idx += 1;
                    let mut topo_text = String::new();
                    let mut w_values: Vec<(usize, f64)> = Vec::new();
                    let mut cached_voltages: Vec<(usize, f64)> = Vec::new();
                    while idx < lines.len() {
                        let inner = lines[idx].trim();
                        if inner.starts_with("network ")
                            || inner.starts_with("state ")
                            || inner.starts_with("sign ")
                        {
                            break;
                        }
                        if let Some(rest) = inner.strip_prefix("w ") {
                            let mut wt = rest.split_whitespace();
                            let id: usize = wt
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| fail(idx, "bad device state id".into()))?;
                            let val: f64 = wt
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| fail(idx, "bad device state value".into()))?;
                            w_values.push((id, val));
                        } else if let Some(rest) = inner.strip_prefix("v ") {
                            let mut vt = rest.split_whitespace();
                            let node: usize = vt
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| fail(idx, "bad cached voltage node".into()))?;
                            let val: f64 = vt
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| fail(idx, "bad cached voltage value".into()))?;
                            cached_voltages.push((node, val));
                        } else if !inner.is_empty() {
                            topo_text.push_str(inner);
                            topo_text.push('\n');
                        }
                        idx += 1;
                    }
                    let topo = NetworkTopology::load(&topo_text)?;
                    let mut states = vec![DeviceState::default(); topo.edges.len()];
                    for (id, val) in w_values {
                        if id >= states.len() {
                            return Err(fail(idx, format!("device state id {id} out of range")));
                        }
                        states[id] = DeviceState::new(val);
                    }
                    let mut voltages = vec![0.0f64; topo.node_count];
                    for (node, val) in cached_voltages {
                        if node >= voltages.len() {
                            return Err(fail(idx, format!("cached voltage node {node} out of range")));
                        }
                        voltages[node] = val;
                    }
                    let mut net = MemristiveNetwork::from_parts(topo, device, states)?;
                    net.restore_voltage_cache(voltages)?;
                    networks.push(net);
                }
                Some(other) => return Err(fail(idx, format!("unknown record `{other}`"))),
                None => idx += 1,
            }
        }
        if networks.len() != n_nodes {
            return Err(CircuitError::InvalidArgument(format!(
                "snapshot has {} networks for {} nodes",
                networks.len(),
                n_nodes
            )));
        }
        Ok(ScrReservoir {
            nodes: networks,
            input_signs: signs,
            state,
            ring_weight,
            input_coeff,
            dt,
            substeps,
            drive_clip,
            solve,
            health: SolverHealth::default(),
        })
    }

    #[cfg(test)]
    fn rotate_nodes(&mut self, by: usize) {
        self.nodes.rotate_left(by);
        self.input_signs.rotate_left(by);
        self.state.rotate_left(by);
    }
}

impl Reservoir for ScrReservoir {
    fn state_dim(&self) -> usize {
        self.nodes.len()
    }

    fn state(&self) -> &[f64] {
        &self.state
    }

    /// Synchronous ring update: all drives are computed from the old state
    /// vector before any network is stepped.
    fn step(&mut self, u: f64) -> Result<Vec<f64>, CircuitError> {
        let n = self.nodes.len();
        let sub_dt = self.dt / self.substeps as f64;
        let mut new_state = vec![0.0; n];
        for i in 0..n {
            let feed = self.state[(i + n - 1) % n];
            let raw_drive = self.ring_weight * feed + self.input_signs[i] * self.input_coeff * u;
            let drive = raw_drive.clamp(-self.drive_clip, self.drive_clip);
            if drive != raw_drive {
                self.health.clip_events += 1;
            }
            let mut readout = 0.0;
            for _ in 0..self.substeps {
                let step = self.nodes[i].step_network(drive, sub_dt, &self.solve)?;
                self.health.total_solves += 1;
                if !step.converged {
                    self.health.unconverged_solves += 1;
                }
                readout = step.readouts[0];
            }
            new_state[i] = readout;
        }
        self.state = new_state.clone();
        Ok(new_state)
    }

    fn health(&self) -> SolverHealth {
        self.health
    }
}

/// Build-time parameters of the single-network baseline.
#[derive(Debug, Clone)]
pub struct SingleNetworkConfig {
    pub n_circuit_nodes: usize,
    pub n_readout_pairs: usize,
    pub k_degree: usize,
    pub input_coeff: f64,
    pub dt: f64,
    pub substeps: usize,
    pub drive_clip: f64,
    pub device: DeviceParams,
    pub solve: SolveSettings,
    pub seed: u64,
}

/// One memristive network driven directly by the scaled input; its state
/// vector is the readout differentials. No recurrence.
#[derive(Debug, Clone)]
pub struct SingleNetworkReservoir {
    network: MemristiveNetwork,
    state: Vec<f64>,
    input_coeff: f64,
    dt: f64,
    substeps: usize,
    drive_clip: f64,
    solve: SolveSettings,
    health: SolverHealth,
}

pub fn build_single_network_reservoir(
    config: &SingleNetworkConfig,
) -> Result<SingleNetworkReservoir, CircuitError> {
    if config.n_readout_pairs < 1 {
        return Err(CircuitError::InvalidArgument("need at least one readout pair".into()));
    }
    if config.substeps < 1 || !(config.dt > 0.0) || !(config.drive_clip > 0.0) {
        return Err(CircuitError::InvalidArgument("bad step parameters".into()));
    }
    let topo = generate_topology(
        config.n_circuit_nodes,
        config.k_degree,
        config.n_readout_pairs,
        seeds::derive(config.seed, stream::TOPOLOGY, 0),
    )?;
    Ok(SingleNetworkReservoir {
        state: vec![0.0; config.n_readout_pairs],
        network: MemristiveNetwork::new(topo, config.device),
        input_coeff: config.input_coeff,
        dt: config.dt,
        substeps: config.substeps,
        drive_clip: config.drive_clip,
        solve: config.solve,
        health: SolverHealth::default(),
    })
}

impl SingleNetworkReservoir {
    pub fn network(&self) -> &MemristiveNetwork {
        &self.network
    }

    pub fn device_count(&self) -> usize {
        self.network.device_count()
    }
}

impl Reservoir for SingleNetworkReservoir {
    fn state_dim(&self) -> usize {
        self.state.len()
    }

    fn state(&self) -> &[f64] {
        &self.state
    }

    fn step(&mut self, u: f64) -> Result<Vec<f64>, CircuitError> {
        let raw_drive = self.input_coeff * u;
        let drive = raw_drive.clamp(-self.drive_clip, self.drive_clip);
        if drive != raw_drive {
            self.health.clip_events += 1;
        }
        let sub_dt = self.dt / self.substeps as f64;
        let mut readouts = self.state.clone();
        for _ in 0..self.substeps {
            let step = self.network.step_network(drive, sub_dt, &self.solve)?;
            self.health.total_solves += 1;
            if !step.converged {
                self.health.unconverged_solves += 1;
            }
            readouts = step.readouts;
        }
        self.state = readouts.clone();
        Ok(readouts)
    }

    fn health(&self) -> SolverHealth {
        self.health
    }
}

/// Ring of tanh nodes with the same wiring and sign conventions as the
/// memristive SCR, the conventional baseline.
#[derive(Debug, Clone)]
pub struct SigmoidScr {
    input_signs: Vec<f64>,
    state: Vec<f64>,
    ring_weight: f64,
    input_coeff: f64,
}

pub fn build_sigmoid_scr(
    n_nodes: usize,
    input_coeff: f64,
    spectral_radius: f64,
    seed: u64,
) -> Result<SigmoidScr, CircuitError> {
    if n_nodes < 2 {
        return Err(CircuitError::InvalidArgument("need at least 2 reservoir nodes".into()));
    }
    let mut sign_rng = ChaCha12Rng::seed_from_u64(seeds::derive(seed, stream::INPUT_SIGNS, 0));
    let input_signs =
        (0..n_nodes).map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Ok(SigmoidScr {
        input_signs,
        state: vec![0.0; n_nodes],
        ring_weight: spectral_radius,
        input_coeff,
    })
}

impl Reservoir for SigmoidScr {
    fn state_dim(&self) -> usize {
        self.state.len()
    }

    fn state(&self) -> &[f64] {
        &self.state
    }

    fn step(&mut self, u: f64) -> Result<Vec<f64>, CircuitError> {
        let n = self.state.len();
        let mut new_state = vec![0.0; n];
        for i in 0..n {
            let feed = self.state[(i + n - 1) % n];
            new_state[i] =
                (self.ring_weight * feed + self.input_signs[i] * self.input_coeff * u).tanh();
        }
        self.state = new_state.clone();
        Ok(new_state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::uniform_series;
    use approx::assert_abs_diff_eq;

    fn small_config(seed: u64) -> ScrConfig {
        ScrConfig {
            n_nodes: 6,
            network_size_range: (8, 12),
            substeps: 2,
            seed,
            ..ScrConfig::default()
        }
    }

    #[test]
    fn build_is_deterministic_and_counts_match() {
        let config = ScrConfig { n_nodes: 16, ..small_config(5) };
        let a = build_scr(&config).unwrap();
        let b = build_scr(&config).unwrap();
        assert_eq!(a.n_nodes(), 16);
        assert_eq!(a.input_signs().len(), 16);
        assert_eq!(a.ring_weight(), config.spectral_radius);
        assert_eq!(a.input_signs(), b.input_signs());
        assert_eq!(a.dump_snapshot(), b.dump_snapshot());
        assert!(a.input_signs().iter().all(|s| s.abs() == 1.0));

        let c = build_scr(&ScrConfig { seed: 6, ..config }).unwrap();
        assert_ne!(a.dump_snapshot(), c.dump_snapshot());
    }

    #[test]
    fn sampled_network_sizes_center_on_fifty_two_devices() {
        // (20..=32) nodes at degree 4 averages 26 nodes = 52 devices
        let mut total = 0.0;
        for seed in 0..50 {
            let config = ScrConfig {
                n_nodes: 20,
                network_size_range: (20, 32),
                k_degree: 4,
                seed,
                ..ScrConfig::default()
            };
            total += build_scr(&config).unwrap().mean_device_count();
        }
        let mean = total / 50.0;
        assert!((mean - 52.0).abs() < 0.15 * 52.0, "mean device count {mean}");
    }

    #[test]
    fn zero_coefficients_keep_state_at_zero() {
        let config =
            ScrConfig { input_coeff: 0.0, spectral_radius: 0.0, ..small_config(1) };
        let mut scr = build_scr(&config).unwrap();
        for u in [0.0, 1.0, -2.5, 0.7] {
            let x = scr.step(u).unwrap();
            assert!(x.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rotating_nodes_rotates_the_state_trajectory() {
        let config = small_config(9);
        let mut base = build_scr(&config).unwrap();
        let mut rotated = base.clone();
        rotated.rotate_nodes(2);
        let inputs = [0.4, -0.9, 1.3, 0.2, -0.5];
        let mut last_base = Vec::new();
        let mut last_rot = Vec::new();
        for &u in &inputs {
            last_base = base.step(u).unwrap();
            last_rot = rotated.step(u).unwrap();
        }
        let n = last_base.len();
        for i in 0..n {
            assert_abs_diff_eq!(last_rot[i], last_base[(i + 2) % n], epsilon = 1e-15);
        }
    }

    #[test]
    fn first_step_respects_the_input_passivity_bound() {
        let config = ScrConfig { input_coeff: 2.0, ..small_config(3) };
        let mut scr = build_scr(&config).unwrap();
        let u = 0.8;
        let x = scr.step(u).unwrap();
        for &xi in &x {
            assert!(xi.abs() <= config.input_coeff * u + 1e-12);
        }
    }

    #[test]
    fn passivity_chain_holds_along_a_run() {
        let config = ScrConfig { input_coeff: 3.0, spectral_radius: 1.7, ..small_config(4) };
        let mut scr = build_scr(&config).unwrap();
        let input = uniform_series(-1.0, 1.0, 40, config.dt, 11).unwrap();
        let mut prev_max = 0.0f64;
        for &u in input.samples() {
            let x = scr.step(u).unwrap();
            let bound = config.spectral_radius * prev_max + config.input_coeff * u.abs() + 1e-12;
            for &xi in &x {
                assert!(xi.abs() <= bound, "state {xi} exceeds bound {bound}");
            }
            prev_max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
    }

    #[test]
    fn run_reservoir_is_stateful_and_deterministic() {
        let config = ScrConfig { input_coeff: 6.0, ..small_config(8) };
        let input = uniform_series(-1.0, 1.0, 30, config.dt, 2).unwrap();

        let mut first = build_scr(&config).unwrap();
        let a = run_reservoir(&mut first, &input).unwrap();
        let b = run_reservoir(&mut build_scr(&config).unwrap(), &input).unwrap();
        assert_eq!(a, b);

        // a second pass without rebuilding sees charged device states
        let c = run_reservoir(&mut first, &input).unwrap();
        assert_ne!(a, c);

        // zero input from a fresh build stays identically zero
        let zeros = TimeSeries::new(vec![0.0; 10], config.dt).unwrap();
        let z = run_reservoir(&mut build_scr(&config).unwrap(), &zeros).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_ring_weight_decouples_the_nodes() {
        let config = ScrConfig { spectral_radius: 0.0, input_coeff: 4.0, ..small_config(12) };
        let mut scr = build_scr(&config).unwrap();
        let mut solo_nets: Vec<MemristiveNetwork> = scr.node_networks().to_vec();
        let signs = scr.input_signs().to_vec();

        let input = uniform_series(-1.0, 1.0, 25, config.dt, 4).unwrap();
        let states = run_reservoir(&mut scr, &input).unwrap();

        let sub_dt = config.dt / config.substeps as f64;
        for (i, net) in solo_nets.iter_mut().enumerate() {
            for (t, &u) in input.samples().iter().enumerate() {
                let drive = (signs[i] * config.input_coeff * u)
                    .clamp(-config.drive_clip, config.drive_clip);
                let mut readout = 0.0;
                for _ in 0..config.substeps {
                    readout = net.step_network(drive, sub_dt, &config.solve).unwrap().readouts[0];
                }
                assert_eq!(states[[t, i]], readout, "node {i} diverged at step {t}");
            }
        }
    }

    #[test]
    fn node_transfer_behaviors_are_heterogeneous() {
        let config = ScrConfig { n_nodes: 8, input_coeff: 4.0, ..small_config(21) };
        let mut scr = build_scr(&config).unwrap();
        let input = uniform_series(-1.0, 1.0, 60, config.dt, 9).unwrap();
        let states = run_reservoir(&mut scr, &input).unwrap();
        let corr = |a: usize, b: usize| -> f64 {
            let (ca, cb) = (states.column(a), states.column(b));
            let n = ca.len() as f64;
            let (ma, mb) = (ca.sum() / n, cb.sum() / n);
            let cov: f64 =
                ca.iter().zip(cb.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
            let (va, vb) = (
                ca.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n,
                cb.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n,
            );
            cov / (va * vb).sqrt()
        };
        let mut found_distinct = false;
        for a in 0..8 {
            for b in a + 1..8 {
                if corr(a, b).abs() < 0.999 {
                    found_distinct = true;
                }
            }
        }
        assert!(found_distinct, "all node outputs are near-duplicates");
    }

    #[test]
    fn snapshot_round_trip_preserves_behavior() {
        let config = ScrConfig { input_coeff: 5.0, ..small_config(33) };
        let mut scr = build_scr(&config).unwrap();
        // charge some state first
        for u in [0.9, -0.4, 0.7] {
            scr.step(u).unwrap();
        }
        let snapshot = scr.dump_snapshot();
        let mut restored =
            ScrReservoir::load_snapshot(&snapshot, config.device, config.solve).unwrap();
        assert_eq!(snapshot, restored.dump_snapshot());

        for u in [0.3, -0.8, 0.1, 0.6] {
            let a = scr.step(u).unwrap();
            let b = restored.step(u).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_network_baseline_shapes_and_distinct_pairs() {
        let config = SingleNetworkConfig {
            n_circuit_nodes: 60,
            n_readout_pairs: 16,
            k_degree: 4,
            input_coeff: 2.0,
            dt: 1e-3,
            substeps: 2,
            drive_clip: 16.0,
            device: DeviceParams::default(),
            solve: SolveSettings::default(),
            seed: 77,
        };
        let mut single = build_single_network_reservoir(&config).unwrap();
        assert_eq!(single.device_count(), 120);
        assert_eq!(single.state_dim(), 16);
        let pairs = &single.network().topology().readout_pairs;
        let mut seen = std::collections::HashSet::new();
        for &(p, q) in pairs {
            assert!(seen.insert((p.min(q), p.max(q))));
        }

        let input = uniform_series(-1.0, 1.0, 12, 1e-3, 5).unwrap();
        let states = run_reservoir(&mut single, &input).unwrap();
        assert_eq!(states.shape(), &[12, 16]);

        let scalar = build_single_network_reservoir(&SingleNetworkConfig {
            n_readout_pairs: 1,
            ..config
        })
        .unwrap();
        assert_eq!(scalar.state_dim(), 1);
    }

    #[test]
    fn sigmoid_ring_matches_tanh_semantics() {
        let mut ring = build_sigmoid_scr(10, 0.3, 0.75, 3).unwrap();
        let zero = ring.step(0.0).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));

        for u in [5.0, -40.0, 12.0] {
            let x = ring.step(u).unwrap();
            assert!(x.iter().all(|&v| v.abs() <= 1.0));
        }

        // tiny inputs: one step from zero state is the linear map within 1e-6
        let mut fresh = build_sigmoid_scr(10, 0.3, 0.75, 3).unwrap();
        let u = 1e-3;
        let x = fresh.step(u).unwrap();
        for (i, &xi) in x.iter().enumerate() {
            let linear = fresh.input_signs[i] * 0.3 * u;
            assert!((xi - linear).abs() < 1e-6);
        }
    }
}
