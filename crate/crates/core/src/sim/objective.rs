use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::optim::Objective;
use crate::sim::circuit::{apply_circuit, CircuitSpec};
use crate::sim::observe::{observe, ObservationConfig};
use crate::sim::pauli::Hamiltonian;

/// Simulated quantum device: prepares the ansatz state and returns one
/// shot-noise energy estimate per call. Owns its noise stream.
#[derive(Debug, Clone)]
pub struct VqeObjective {
    pub circuit: CircuitSpec,
    pub hamiltonian: Hamiltonian,
    pub observation: ObservationConfig,
    rng: ChaCha8Rng,
    count: usize,
}

impl VqeObjective {
    pub fn new(circuit: CircuitSpec, hamiltonian: Hamiltonian, observation: ObservationConfig, rng: ChaCha8Rng) -> Self {
        Self { circuit, hamiltonian, observation, rng, count: 0 }
    }
}

impl Objective for VqeObjective {
    fn dim(&self) -> usize {
        self.circuit.param_count()
    }

    fn observe(&mut self, x: &[f64]) -> Result<f64> {
        let psi = apply_circuit(&self.circuit, x)?;
        let y = observe(&self.hamiltonian, &psi, &self.observation, &mut self.rng)?;
        self.count += 1;
        Ok(y)
    }

    fn observations(&self) -> usize {
        self.count
    }
}
