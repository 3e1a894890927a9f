use crate::error::{check_dim, Error, Result};
use crate::sim::pauli::{i_pow, Hamiltonian, PauliMasks, PauliString, C64};

/// Residues above this in `<psi|H|psi>` indicate a bug, not rounding.
const IMAGINARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amplitudes: Vec<C64>,
}

impl Statevector {
    /// `|0...0>` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { qubits, amplitudes }
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << qubits];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { qubits, amplitudes }
    }

    /// Wraps raw amplitudes, normalizing them. Fails on a zero vector or a
    /// length that is not a power of two.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{len} amplitudes is not a power of two")));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize zero state".into()));
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        check_dim(self.amplitudes.len(), other.amplitudes.len())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, phase: C64) -> Statevector {
        Statevector { qubits: self.qubits, amplitudes: self.amplitudes.iter().map(|a| a * phase).collect() }
    }

    /// Applies `exp(-i theta P / 2)` for the Pauli string `P` (its weight is ignored).
    pub fn apply_pauli_rotation(&mut self, pauli: &PauliString, theta: f64) -> Result<()> {
        check_dim(self.qubits, pauli.qubits())?;
        let masks = pauli.masks();
        let (s, c) = (0.5 * theta).sin_cos();
        let minus_i_s = C64::new(0.0, -s);
        if masks.flip == 0 {
            for (b, amp) in self.amplitudes.iter_mut().enumerate() {
                *amp *= C64::new(c, 0.0) + minus_i_s * phase_of(&masks, b);
            }
            return Ok(());
        }
        for b in 0..self.amplitudes.len() {
            let partner = b ^ masks.flip;
            if partner < b {
                continue;
            }
            let (x, y) = (self.amplitudes[b], self.amplitudes[partner]);
            self.amplitudes[b] = x * c + minus_i_s * phase_of(&masks, partner) * y;
            self.amplitudes[partner] = y * c + minus_i_s * phase_of(&masks, b) * x;
        }
        Ok(())
    }

    pub fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let bit = 1usize << qubit;
        let (s, c) = (0.5 * theta).sin_cos();
        for b in 0..self.amplitudes.len() {
            if b & bit == 0 {
                let (a0, a1) = (self.amplitudes[b], self.amplitudes[b | bit]);
                self.amplitudes[b] = a0 * c - a1 * s;
                self.amplitudes[b | bit] = a0 * s + a1 * c;
            }
        }
    }

    pub fn apply_rz(&mut self, qubit: usize, theta: f64) {
        let bit = 1usize << qubit;
        let (s, c) = (0.5 * theta).sin_cos();
        let (lo, hi) = (C64::new(c, -s), C64::new(c, s));
        for (b, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if b & bit == 0 { lo } else { hi };
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cbit, tbit) = (1usize << control, 1usize << target);
        for b in 0..self.amplitudes.len() {
            if b & cbit != 0 && b & tbit == 0 {
                self.amplitudes.swap(b, b | tbit);
            }
        }
    }

    /// `<self|P|self>` for one weighted term, imaginary part included.
    pub(crate) fn term_expectation(&self, term: &PauliString) -> C64 {
        let masks = term.masks();
        let sum: C64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(b, amp)| self.amplitudes[b ^ masks.flip].conj() * phase_of(&masks, b) * amp)
            .sum();
        sum * term.weight
    }

    /// Per-term expectation values `<P_k>` without weights.
    pub fn term_expectations(&self, h: &Hamiltonian) -> Result<Vec<f64>> {
        check_dim(h.qubits(), self.qubits)?;
        h.terms()
            .iter()
            .map(|t| {
                let unit = PauliString::new(t.ops().to_vec(), 1.0)?;
                real_part(self.term_expectation(&unit))
            })
            .collect()
    }
}

fn phase_of(masks: &PauliMasks, b: usize) -> C64 {
    let sign = if (b & masks.phase).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    i_pow(masks.n_y) * sign
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOLERANCE {
        Err(Error::ImaginaryResidue(z.im))
    } else {
        Ok(z.re)
    }
}

/// `<psi|H|psi>`.
pub fn expectation(h: &Hamiltonian, psi: &Statevector) -> Result<f64> {
    check_dim(h.qubits(), psi.qubits())?;
    let total: C64 = h.terms().iter().map(|t| psi.term_expectation(t)).sum();
    real_part(total)
}

/// `|<a|b>|^2`, symmetric in its arguments and blind to global phases.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    check_dim(a.amplitudes.len(), b.amplitudes.len())?;
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Ok((re * re + im * im).min(1.0))
}
