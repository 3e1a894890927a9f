use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::sim::pauli::{Hamiltonian, C64};
use crate::sim::state::{fidelity, Statevector};

pub const MAX_DIAGONALIZATION_QUBITS: usize = 12;

/// Eigenvalues within this distance of the minimum count as degenerate.
const DEGENERACY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// One ground-state vector; any vector of the ground space when degenerate.
    pub state: Statevector,
    /// Orthonormal basis of the ground space.
    pub ground_space: Vec<Statevector>,
}

impl GroundState {
    pub fn is_degenerate(&self) -> bool {
        self.ground_space.len() > 1
    }

    /// Weight of `psi` inside the ground space, `sum_i |<g_i|psi>|^2`.
    pub fn fidelity(&self, psi: &Statevector) -> Result<f64> {
        let mut total = 0.0;
        for g in &self.ground_space {
            total += fidelity(g, psi)?;
        }
        Ok(total.min(1.0))
    }
}

/// Dense diagonalization of `H`.
pub fn ground_state(h: &Hamiltonian) -> Result<GroundState> {
    if h.qubits() > MAX_DIAGONALIZATION_QUBITS {
        return Err(Error::TooLarge { qubits: h.qubits(), max: MAX_DIAGONALIZATION_QUBITS });
    }
    let eig = SymmetricEigen::new(h.to_dense());
    let energy = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let ground_space = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - energy <= DEGENERACY_TOLERANCE * energy.abs().max(1.0))
        .map(|(i, _)| {
            let amps: Vec<C64> = eig.eigenvectors.column(i).iter().copied().collect();
            Statevector::from_amplitudes(amps)
        })
        .collect::<Result<Vec<_>>>()?;
    let state = ground_space[0].clone();
    Ok(GroundState { energy, state, ground_space })
}
