use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Pauli operators with a real weight.
///
/// Character `q` of the textual form acts on qubit `q`, which is bit `q` of
/// the computational-basis index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    ops: Vec<Pauli>,
    pub weight: f64,
}

/// Bit masks describing how a Pauli string acts on basis states:
/// `P|b> = i^{n_y} (-1)^{popcount(b & phase)} |b ^ flip>`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PauliMasks {
    pub flip: usize,
    pub phase: usize,
    pub n_y: u32,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>, weight: f64) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidArgument("Pauli string needs at least one qubit".into()));
        }
        Ok(Self { ops, weight })
    }

    /// Parses e.g. `"XXI"` with the given weight.
    pub fn parse(label: &str, weight: f64) -> Result<Self> {
        let ops = label
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli tag {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops, weight)
    }

    /// A single operator `p` on qubit `q`, identity elsewhere.
    pub fn single(qubits: usize, q: usize, p: Pauli, weight: f64) -> Self {
        let mut ops = vec![Pauli::I; qubits];
        ops[q] = p;
        Self { ops, weight }
    }

    pub fn pair(qubits: usize, a: usize, b: usize, p: Pauli, weight: f64) -> Self {
        let mut ops = vec![Pauli::I; qubits];
        ops[a] = p;
        ops[b] = p;
        Self { ops, weight }
    }

    pub fn qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn label(&self) -> String {
        self.ops.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    pub(crate) fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks { flip: 0, phase: 0, n_y: 0 };
        for (q, p) in self.ops.iter().enumerate() {
            let bit = 1usize << q;
            match p {
                Pauli::I => {}
                Pauli::X => m.flip |= bit,
                Pauli::Y => {
                    m.flip |= bit;
                    m.phase |= bit;
                    m.n_y += 1;
                }
                Pauli::Z => m.phase |= bit,
            }
        }
        m
    }

    /// Dense 2^Q x 2^Q matrix of the weighted operator.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let dim = 1usize << self.qubits();
        let masks = self.masks();
        let global = i_pow(masks.n_y) * self.weight;
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let sign = if (b & masks.phase).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(b ^ masks.flip, b)] = global * sign;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}*{}", self.weight, self.label())
    }
}

pub(crate) fn i_pow(n: u32) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl Boundary {
    /// Nearest-neighbour pairs of a chain. The wrap-around pair is only added
    /// for three or more sites, where it is distinct from `(0, 1)`.
    pub fn pairs(self, qubits: usize) -> Vec<(usize, usize)> {
        let mut pairs: Vec<_> = (0..qubits.saturating_sub(1)).map(|q| (q, q + 1)).collect();
        if self == Boundary::Periodic && qubits >= 3 {
            pairs.push((qubits - 1, 0));
        }
        pairs
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" | "false" | "obc" => Ok(Boundary::Open),
            "periodic" | "true" | "pbc" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Weighted sum of Pauli strings on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    qubits: usize,
    terms: Vec<PauliString>,
}

impl Hamiltonian {
    pub fn new(terms: Vec<PauliString>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("Hamiltonian needs at least one term".into()))?;
        let qubits = first.qubits();
        for t in &terms {
            crate::error::check_dim(qubits, t.qubits())?;
        }
        Ok(Self { qubits, terms })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim(), self.dim());
        for t in &self.terms {
            m += t.to_dense();
        }
        m
    }
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Coupling constants of the nearest-neighbour spin chain
/// `H = -[sum_j (Jx XX + Jy YY + Jz ZZ) + sum_j (hx X + hy Y + hz Z)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCouplings {
    pub qubits: usize,
    pub j_couplings: [f64; 3],
    pub h_couplings: [f64; 3],
    #[serde(default)]
    pub boundary: Boundary,
}

impl ChainCouplings {
    /// Transverse-field Ising chain at criticality.
    pub fn ising(qubits: usize) -> Self {
        Self { qubits, j_couplings: [-1.0, 0.0, 0.0], h_couplings: [0.0, 0.0, -1.0], boundary: Boundary::Open }
    }

    pub fn heisenberg(qubits: usize) -> Self {
        Self { qubits, j_couplings: [1.0; 3], h_couplings: [1.0; 3], boundary: Boundary::Open }
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        build_hamiltonian(self.qubits, self.j_couplings, self.h_couplings, self.boundary)
    }

    pub fn to_kv_text(&self) -> String {
        toml::to_string(self).expect("couplings serialize")
    }

    pub fn from_kv_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

const AXES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// Builds the spin-chain Hamiltonian. Weights carry the overall minus sign;
/// zero-coefficient terms are dropped.
pub fn build_hamiltonian(qubits: usize, j: [f64; 3], h: [f64; 3], boundary: Boundary) -> Result<Hamiltonian> {
    if qubits == 0 {
        return Err(Error::InvalidArgument("Hamiltonian needs at least one qubit".into()));
    }
    let mut terms = Vec::new();
    for (a, b) in boundary.pairs(qubits) {
        for (axis, &coupling) in AXES.iter().zip(&j) {
            if coupling != 0.0 {
                terms.push(PauliString::pair(qubits, a, b, *axis, -coupling));
            }
        }
    }
    for q in 0..qubits {
        for (axis, &field) in AXES.iter().zip(&h) {
            if field != 0.0 {
                terms.push(PauliString::single(qubits, q, *axis, -field));
            }
        }
    }
    if terms.is_empty() {
        return Err(Error::InvalidArgument("all couplings are zero".into()));
    }
    Hamiltonian::new(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(h: &Hamiltonian) -> Vec<(String, f64)> {
        h.terms().iter().map(|t| (t.label(), t.weight)).collect()
    }

    #[test]
    fn ising_two_sites_signs() {
        let h = build_hamiltonian(2, [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], Boundary::Open).unwrap();
        assert_eq!(
            labels(&h),
            vec![("XX".into(), 1.0), ("ZI".into(), 1.0), ("IZ".into(), 1.0)]
        );
    }

    #[test]
    fn heisenberg_term_count() {
        let h = build_hamiltonian(5, [1.0; 3], [1.0; 3], Boundary::Open).unwrap();
        assert_eq!(h.terms().len(), 27);
        let p = build_hamiltonian(5, [1.0; 3], [1.0; 3], Boundary::Periodic).unwrap();
        assert_eq!(p.terms().len(), 30);
    }

    #[test]
    fn off_critical_ising() {
        let h = build_hamiltonian(3, [0.0, 0.0, -1.0], [1.5, 0.0, 0.0], Boundary::Open).unwrap();
        assert_eq!(
            labels(&h),
            vec![
                ("ZZI".into(), 1.0),
                ("IZZ".into(), 1.0),
                ("XII".into(), -1.5),
                ("IXI".into(), -1.5),
                ("IIX".into(), -1.5),
            ]
        );
    }

    #[test]
    fn rejects_zero_qubits_and_mixed_sizes() {
        assert!(build_hamiltonian(0, [1.0; 3], [1.0; 3], Boundary::Open).is_err());
        let terms = vec![PauliString::parse("XX", 1.0).unwrap(), PauliString::parse("Z", 1.0).unwrap()];
        assert!(Hamiltonian::new(terms).is_err());
    }

    #[test]
    fn dense_pauli_matrices() {
        let y = PauliString::parse("Y", 1.0).unwrap().to_dense();
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        let z = PauliString::parse("IZ", 2.0).unwrap().to_dense();
        // qubit 1 is bit 1: basis |b1 b0> = |10> is index 2
        assert_eq!(z[(2, 2)].re, -2.0);
        assert_eq!(z[(1, 1)].re, 2.0);
    }

    #[test]
    fn couplings_text_roundtrip() {
        let c = ChainCouplings::heisenberg(4);
        let text = c.to_kv_text();
        assert!(text.contains("j_couplings"));
        assert_eq!(ChainCouplings::from_kv_text(&text).unwrap(), c);
    }
}
