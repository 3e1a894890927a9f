//! Dense statevector simulation of parametric circuits and spin-chain
//! Hamiltonians.

mod circuit;
mod objective;
mod observe;
mod pauli;
mod spectrum;
mod state;

pub use circuit::{
    apply_circuit, build_ansatz, build_ansatz_with, energy, parameter_shift_gradient, wrap_angle, wrap_point, Angle,
    CircuitConfig, CircuitSpec, Entanglement, Gate, RotationAxis,
};
pub use objective::VqeObjective;
pub use observe::{noise_variance, observe, ObservationConfig, ShotMode};
pub use pauli::{build_hamiltonian, Boundary, ChainCouplings, Hamiltonian, Pauli, PauliString, C64};
pub use spectrum::{ground_state, GroundState, MAX_DIAGONALIZATION_QUBITS};
pub use state::{expectation, fidelity, Statevector};
