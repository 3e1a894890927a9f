use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::{HyperoptConfig, KernelConfig, KernelFamily, Sampler};
use crate::optim::{AcqParams, EiSearch, RunConfig};
use crate::sim::{ChainCouplings, CircuitConfig, ObservationConfig, ShotMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NftSeq,
    NftRand,
    Emicore,
    BoEi,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::NftSeq, Method::NftRand, Method::Emicore, Method::BoEi];

    pub fn name(self) -> &'static str {
        match self {
            Method::NftSeq => "nft-seq",
            Method::NftRand => "nft-rand",
            Method::Emicore => "emicore",
            Method::BoEi => "bo-ei",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}; expected one of nft-seq, nft-rand, emicore, bo-ei")))
    }
}

/// How the GP's observation-noise variance is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Fixed(f64),
    /// Repeated observations at random points, outside the observation budget.
    Estimate { points: usize, repeats: usize },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Estimate { points: 10, repeats: 10 }
    }
}

/// Prior standard deviation roughly proportional to the qubit count:
/// 4, 6 and 9 at 3, 5 and 7 qubits, interpolated in between.
pub fn default_sigma0(qubits: usize) -> f64 {
    let q = qubits as f64;
    match qubits {
        0..=3 => 4.0 * q / 3.0,
        4..=5 => 4.0 + (q - 3.0),
        6..=7 => 6.0 + 1.5 * (q - 5.0),
        _ => 9.0 * q / 7.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub couplings: ChainCouplings,
    pub circuit: CircuitConfig,
    pub observation: ObservationConfig,
    pub methods: Vec<Method>,
    pub kernel: KernelConfig,
    pub hyperopt: HyperoptConfig,
    pub acq: AcqParams,
    pub run: RunConfig,
    pub bo_search: EiSearch,
    pub noise: NoiseModel,
    pub sampler: Sampler,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Write zero wall times so reruns produce byte-identical CSV files.
    pub deterministic: bool,
    pub svg: bool,
    /// Trial-level parallelism.
    pub exec: Execution,
}

impl ExperimentConfig {
    /// Ising chain, EfficientSU2 ansatz and the standard acquisition settings.
    pub fn ising(qubits: usize, layers: usize) -> Self {
        let sigma0 = default_sigma0(qubits);
        Self {
            couplings: ChainCouplings::ising(qubits),
            circuit: CircuitConfig { qubits, layers, entanglement: Default::default() },
            observation: ObservationConfig { n_shots: 1024, mode: ShotMode::BinomialPerTerm },
            methods: vec![Method::NftSeq, Method::NftRand, Method::Emicore],
            kernel: KernelConfig { family: KernelFamily::Vqe, sigma0_sq: sigma0 * sigma0, gamma: 2.0, orders: Vec::new() },
            hyperopt: HyperoptConfig::default(),
            acq: AcqParams::default(),
            run: RunConfig::default(),
            bo_search: EiSearch::default(),
            noise: NoiseModel::default(),
            sampler: Sampler::LowDiscrepancy,
            seeds: (0..10).collect(),
            out_dir: PathBuf::from("results"),
            deterministic: false,
            svg: true,
            exec: Execution::Parallel,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.circuit.qubits * (self.circuit.layers + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.couplings.qubits != self.circuit.qubits {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian has {} qubits but the circuit has {}",
                self.couplings.qubits, self.circuit.qubits
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::InvalidArgument(format!("seed {dup} listed twice")));
        }
        self.kernel.validate()?;
        self.run.validate()?;
        self.acq.emicore.validate()?;
        if let NoiseModel::Fixed(v) = self.noise {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument("fixed noise variance must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Key of everything that determines the initial points and their observations.
    pub fn problem_hash(&self) -> String {
        digest(&(&self.couplings, &self.circuit, &self.observation))
    }

    /// Key of the whole configuration, output location and seeds excluded.
    pub fn config_hash(&self) -> String {
        digest(&(&self.couplings, &self.circuit, &self.observation, &self.methods, &self.kernel, &self.hyperopt, &self.acq, &self.run, &self.bo_search, &self.noise, &self.sampler))
    }
}

pub(crate) fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma0_anchors() {
        assert_eq!(default_sigma0(3), 4.0);
        assert_eq!(default_sigma0(5), 6.0);
        assert_eq!(default_sigma0(7), 9.0);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sgd".parse::<Method>().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::ising(3, 1);
        assert!(cfg.validate().is_ok());
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::ising(3, 1);
        cfg.couplings.qubits = 4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hashes_track_the_problem() {
        let a = ExperimentConfig::ising(3, 1);
        let mut b = a.clone();
        b.seeds = vec![99];
        b.out_dir = "elsewhere".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.run.max_obs = 10;
        assert_eq!(a.problem_hash(), b.problem_hash());
        assert_ne!(a.config_hash(), b.config_hash());
        let c = ExperimentConfig::ising(4, 1);
        assert_ne!(a.problem_hash(), c.problem_hash());
        assert_eq!(a.problem_hash().len(), 64);
    }
}
