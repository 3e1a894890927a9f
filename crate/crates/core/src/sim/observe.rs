use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::pauli::Hamiltonian;
use crate::sim::state::{expectation, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotMode {
    /// Each Pauli term is read out independently with `n_shots` shots.
    #[default]
    BinomialPerTerm,
    /// Exact energy plus Gaussian noise with the shot-noise variance.
    GaussianApprox,
    /// Noiseless readout.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub n_shots: u64,
    pub mode: ShotMode,
}

impl ObservationConfig {
    pub fn new(n_shots: u64, mode: ShotMode) -> Result<Self> {
        if n_shots == 0 {
            return Err(Error::InvalidArgument("n_shots must be at least 1".into()));
        }
        Ok(Self { n_shots, mode })
    }

    pub fn exact() -> Self {
        Self { n_shots: 1, mode: ShotMode::Exact }
    }
}

/// One noisy energy estimate of `psi`.
pub fn observe<R: Rng + ?Sized>(h: &Hamiltonian, psi: &Statevector, cfg: &ObservationConfig, rng: &mut R) -> Result<f64> {
    match cfg.mode {
        ShotMode::Exact => expectation(h, psi),
        ShotMode::GaussianApprox => {
            let mean = expectation(h, psi)?;
            let sd = noise_variance(h, psi, cfg)?.sqrt();
            if sd == 0.0 {
                return Ok(mean);
            }
            let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(normal.sample(rng))
        }
        ShotMode::BinomialPerTerm => {
            let means = psi.term_expectations(h)?;
            let n = cfg.n_shots;
            let mut total = 0.0;
            for (term, m) in h.terms().iter().zip(means) {
                let p = (0.5 * (1.0 + m)).clamp(0.0, 1.0);
                let hits = Binomial::new(n, p)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?
                    .sample(rng);
                total += term.weight * (2.0 * hits as f64 / n as f64 - 1.0);
            }
            Ok(total)
        }
    }
}

/// Variance of [`observe`] under independent per-term readout:
/// `sum_k w_k^2 (1 - m_k^2) / n_shots`. Zero in exact mode.
pub fn noise_variance(h: &Hamiltonian, psi: &Statevector, cfg: &ObservationConfig) -> Result<f64> {
    if cfg.mode == ShotMode::Exact {
        return Ok(0.0);
    }
    let means = psi.term_expectations(h)?;
    let var: f64 = h
        .terms()
        .iter()
        .zip(means)
        .map(|(t, m)| t.weight * t.weight * (1.0 - m * m).max(0.0))
        .sum();
    Ok(var / cfg.n_shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::pauli::{build_hamiltonian, Boundary, PauliString};
    use rand::SeedableRng;

    #[test]
    fn eigenstate_of_all_terms_is_noiseless() {
        // |00> is an eigenstate of ZI and IZ
        let h = build_hamiltonian(2, [0.0, 0.0, -1.0], [0.0, 0.0, -0.5], Boundary::Open).unwrap();
        let psi = Statevector::zero(2);
        let cfg = ObservationConfig::new(16, ShotMode::BinomialPerTerm).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let exact = expectation(&h, &psi).unwrap();
        for _ in 0..20 {
            assert_eq!(observe(&h, &psi, &cfg, &mut rng).unwrap(), exact);
        }
        assert_eq!(noise_variance(&h, &psi, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn single_term_unit_variance() {
        let h = Hamiltonian::new(vec![PauliString::parse("X", 1.0).unwrap()]).unwrap();
        let cfg = ObservationConfig::new(1, ShotMode::BinomialPerTerm).unwrap();
        // <0|X|0> = 0
        assert_eq!(noise_variance(&h, &Statevector::zero(1), &cfg).unwrap(), 1.0);
    }

    #[test]
    fn many_shots_converge_to_expectation() {
        let h = build_hamiltonian(2, [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], Boundary::Open).unwrap();
        let mut psi = Statevector::zero(2);
        psi.apply_ry(0, 0.9);
        psi.apply_ry(1, 2.1);
        let exact = expectation(&h, &psi).unwrap();
        let cfg = ObservationConfig::new(1 << 40, ShotMode::BinomialPerTerm).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        assert!((observe(&h, &psi, &cfg, &mut rng).unwrap() - exact).abs() < 1e-4);
        let exact_cfg = ObservationConfig::exact();
        assert_eq!(observe(&h, &psi, &exact_cfg, &mut rng).unwrap(), exact);
    }

    #[test]
    fn zero_shots_rejected() {
        assert!(ObservationConfig::new(0, ShotMode::Exact).is_err());
    }
}
