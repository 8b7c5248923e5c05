//! Simulation and benchmarking of hierarchical memristive reservoir computing.
//!
//! The crate models a nonlinear memristive device, solves randomly assembled
//! networks of such devices as quasi-static resistive circuits, composes the
//! networks into a simple cycle reservoir, trains a linear readout by ridge
//! regression, and orchestrates seeded benchmark experiments (memory capacity,
//! harmonic generation, oscillator prediction, NARMA-10).

pub mod circuit;
pub mod device;
pub mod harness;
pub mod learn;
pub mod linalg;
pub mod reservoir;
pub mod seeds;
pub mod tasks;

pub use circuit::{MemristiveNetwork, NetworkTopology, SolveSettings};
pub use device::{DeviceParams, DeviceState};
pub use reservoir::{Reservoir, ScrConfig, ScrReservoir};
pub use learn::{ReadoutWeights, TrainSpec};
pub use tasks::{TaskInstance, TimeSeries};
