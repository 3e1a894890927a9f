use std::f64::consts::TAU;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sim::pauli::{Boundary, Hamiltonian, PauliString};
use crate::sim::state::{expectation, Statevector};

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn wrap_point(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| wrap_angle(v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RotationAxis {
    Y(usize),
    Z(usize),
    /// `exp(-i theta P / 2)` for an arbitrary Pauli string.
    Pauli(PauliString),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Param(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rotation { axis: RotationAxis, angle: Angle },
    Cnot { control: usize, target: usize },
}

/// CNOT pattern of each entangling block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    /// `(q, q+1)` for every adjacent pair.
    #[default]
    Linear,
    /// Linear plus the wrap-around pair `(Q-1, 0)`.
    Circular,
    /// Every pair `(a, b)` with `a < b`.
    Full,
}

impl Entanglement {
    pub fn pairs(self, qubits: usize) -> Vec<(usize, usize)> {
        match self {
            Entanglement::Linear => Boundary::Open.pairs(qubits),
            Entanglement::Circular => Boundary::Periodic.pairs(qubits),
            Entanglement::Full => (0..qubits)
                .flat_map(|a| (a + 1..qubits).map(move |b| (a, b)))
                .collect(),
        }
    }
}

impl From<Boundary> for Entanglement {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Open => Entanglement::Linear,
            Boundary::Periodic => Entanglement::Circular,
        }
    }
}

impl FromStr for Entanglement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Entanglement::Linear),
            "circular" => Ok(Entanglement::Circular),
            "full" => Ok(Entanglement::Full),
            other => Err(Error::Parse(format!("unknown entanglement {other:?}"))),
        }
    }
}

/// An ordered gate list acting on `|0...0>` with `param_count` angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    qubits: usize,
    layers: usize,
    gates: Vec<Gate>,
    param_count: usize,
}

impl CircuitSpec {
    /// Validates a gate list. Every parameter index in `0..D` must drive at
    /// least one gate, where `D` is one past the largest index used.
    pub fn new(qubits: usize, layers: usize, gates: Vec<Gate>) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        let mut param_count = 0;
        for g in &gates {
            match g {
                Gate::Rotation { axis, angle } => {
                    match axis {
                        RotationAxis::Y(q) | RotationAxis::Z(q) if *q >= qubits => {
                            return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
                        }
                        RotationAxis::Pauli(p) => check_dim(qubits, p.qubits())?,
                        _ => {}
                    }
                    if let Angle::Param(d) = angle {
                        param_count = param_count.max(d + 1);
                    }
                }
                Gate::Cnot { control, target } => {
                    if *control >= qubits || *target >= qubits || control == target {
                        return Err(Error::InvalidArgument(format!("bad CNOT ({control}, {target})")));
                    }
                }
            }
        }
        let spec = Self { qubits, layers, gates, param_count };
        if let Some(d) = spec.multiplicities().iter().position(|&v| v == 0) {
            return Err(Error::InvalidArgument(format!("parameter {d} drives no gate")));
        }
        Ok(spec)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Number of gates driven by each parameter.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut v = vec![0; self.param_count];
        for g in &self.gates {
            if let Gate::Rotation { angle: Angle::Param(d), .. } = g {
                v[*d] += 1;
            }
        }
        v
    }

    pub fn is_exclusive(&self) -> bool {
        self.multiplicities().iter().all(|&v| v == 1)
    }
}

/// EfficientSU2 ansatz with CNOT pairs chosen by `boundary`.
pub fn build_ansatz(qubits: usize, layers: usize, boundary: Boundary) -> Result<CircuitSpec> {
    build_ansatz_with(qubits, layers, boundary.into())
}

/// EfficientSU2: an `R_Y, R_Z` pair per qubit, then `layers` blocks of CNOTs
/// followed by another `R_Y, R_Z` pair per qubit. Within rotation layer `l`
/// the `R_Y` on qubit `q` reads `x[2Ql + q]` and the `R_Z` reads `x[2Ql + Q + q]`.
pub fn build_ansatz_with(qubits: usize, layers: usize, entanglement: Entanglement) -> Result<CircuitSpec> {
    if qubits == 0 {
        return Err(Error::InvalidArgument("ansatz needs at least one qubit".into()));
    }
    let mut gates = Vec::new();
    let rotation_layer = |gates: &mut Vec<Gate>, l: usize| {
        for q in 0..qubits {
            let base = 2 * qubits * l;
            gates.push(Gate::Rotation { axis: RotationAxis::Y(q), angle: Angle::Param(base + q) });
            gates.push(Gate::Rotation { axis: RotationAxis::Z(q), angle: Angle::Param(base + qubits + q) });
        }
    };
    rotation_layer(&mut gates, 0);
    for l in 1..=layers {
        for (control, target) in entanglement.pairs(qubits) {
            gates.push(Gate::Cnot { control, target });
        }
        rotation_layer(&mut gates, l);
    }
    CircuitSpec::new(qubits, layers, gates)
}

/// Prepares `G(x)|0...0>`.
pub fn apply_circuit(spec: &CircuitSpec, x: &[f64]) -> Result<Statevector> {
    check_dim(spec.param_count, x.len())?;
    let mut state = Statevector::zero(spec.qubits);
    for g in &spec.gates {
        match g {
            Gate::Rotation { axis, angle } => {
                let theta = match angle {
                    Angle::Param(d) => wrap_angle(x[*d]),
                    Angle::Fixed(v) => *v,
                };
                match axis {
                    RotationAxis::Y(q) => state.apply_ry(*q, theta),
                    RotationAxis::Z(q) => state.apply_rz(*q, theta),
                    RotationAxis::Pauli(p) => state.apply_pauli_rotation(p, theta)?,
                }
            }
            Gate::Cnot { control, target } => state.apply_cnot(*control, *target),
        }
    }
    Ok(state)
}

/// Noiseless objective `f*(x) = <psi_x|H|psi_x>`.
pub fn energy(spec: &CircuitSpec, h: &Hamiltonian, x: &[f64]) -> Result<f64> {
    expectation(h, &apply_circuit(spec, x)?)
}

/// `[f*(x + pi/2 e_d) - f*(x - pi/2 e_d)] / 2` for every `d`.
pub fn parameter_shift_gradient(spec: &CircuitSpec, h: &Hamiltonian, x: &[f64]) -> Result<Vec<f64>> {
    if !spec.is_exclusive() {
        return Err(Error::InvalidArgument(
            "parameter-shift rule needs each parameter on exactly one gate".into(),
        ));
    }
    check_dim(spec.param_count, x.len())?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut shifted = x.to_vec();
    (0..x.len())
        .map(|d| {
            shifted[d] = x[d] + half_pi;
            let plus = energy(spec, h, &shifted)?;
            shifted[d] = x[d] - half_pi;
            let minus = energy(spec, h, &shifted)?;
            shifted[d] = x[d];
            Ok(0.5 * (plus - minus))
        })
        .collect()
}

/// Human-readable circuit description used in configs and cache keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub qubits: usize,
    pub layers: usize,
    #[serde(default)]
    pub entanglement: Entanglement,
}

impl CircuitConfig {
    pub fn build(&self) -> Result<CircuitSpec> {
        build_ansatz_with(self.qubits, self.layers, self.entanglement)
    }

    pub fn to_kv_text(&self) -> String {
        toml::to_string(self).expect("circuit config serializes")
    }

    pub fn from_kv_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
