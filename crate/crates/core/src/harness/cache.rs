use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{InitialPoint, Objective};
use crate::sim::{CircuitSpec, Hamiltonian, ObservationConfig, VqeObjective};

/// Independent random streams derived from one trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    InitPoint = 0,
    InitNoise = 1,
    Noise = 2,
    Algorithm = 3,
    NoiseEstimate = 4,
    NoiseEstimatePoints = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedInit {
    pub seed: u64,
    pub init: InitialPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheFile {
    problem_hash: String,
    dim: usize,
    points: Vec<CachedInit>,
}

pub fn cache_path(dir: &Path, problem_hash: &str) -> PathBuf {
    dir.join(format!("init_{}.json", &problem_hash[..16.min(problem_hash.len())]))
}

fn draw(seed: u64, circuit: &CircuitSpec, h: &Hamiltonian, obs: &ObservationConfig) -> Result<CachedInit> {
    let mut rng = stream_rng(seed, Stream::InitPoint);
    let x: Vec<f64> = (0..circuit.param_count()).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut objective = VqeObjective::new(circuit.clone(), h.clone(), *obs, stream_rng(seed, Stream::InitNoise));
    let y = objective.observe(&x)?;
    Ok(CachedInit { seed, init: InitialPoint { x, y } })
}

/// One uniform initial point and one noisy observation per seed.
///
/// With `path` set, previously stored points are reused and new seeds are
/// appended. A file written for a different problem is refused.
pub fn initial_point_cache(
    seeds: &[u64],
    circuit: &CircuitSpec,
    h: &Hamiltonian,
    obs: &ObservationConfig,
    problem_hash: &str,
    path: Option<&Path>,
) -> Result<Vec<CachedInit>> {
    let dim = circuit.param_count();
    let mut file = match path {
        Some(p) if p.exists() => {
            let f: CacheFile = serde_json::from_slice(&fs::read(p)?)?;
            if f.problem_hash != problem_hash || f.dim != dim {
                return Err(Error::CacheMismatch(format!(
                    "{} was written for problem {} (D = {}), expected {} (D = {dim})",
                    p.display(),
                    f.problem_hash,
                    f.dim,
                    problem_hash
                )));
            }
            f
        }
        _ => CacheFile { problem_hash: problem_hash.to_string(), dim, points: Vec::new() },
    };
    let mut changed = false;
    let mut out = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let entry = match file.points.iter().find(|c| c.seed == seed) {
            Some(c) => c.clone(),
            None => {
                let c = draw(seed, circuit, h, obs)?;
                file.points.push(c.clone());
                changed = true;
                c
            }
        };
        out.push(entry);
    }
    if let (Some(p), true) = (path, changed) {
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(p, serde_json::to_vec_pretty(&file)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_ansatz, Boundary, ChainCouplings};

    fn problem(q: usize) -> (CircuitSpec, Hamiltonian) {
        (build_ansatz(q, 1, Boundary::Open).unwrap(), ChainCouplings::ising(q).build().unwrap())
    }

    #[test]
    fn cache_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("init.json");
        let (c, h) = problem(2);
        let obs = ObservationConfig::new(64, Default::default()).unwrap();
        let seeds: Vec<u64> = (0..50).collect();
        let a = initial_point_cache(&seeds, &c, &h, &obs, "abc", Some(&path)).unwrap();
        assert_eq!(a.len(), 50);
        let before = fs::read(&path).unwrap();
        let b = initial_point_cache(&seeds[..3], &c, &h, &obs, "abc", Some(&path)).unwrap();
        assert_eq!(a[..3], b[..]);
        assert_eq!(before, fs::read(&path).unwrap());
        let (c3, h3) = problem(3);
        assert!(matches!(
            initial_point_cache(&seeds, &c3, &h3, &obs, "abc", Some(&path)),
            Err(Error::CacheMismatch(_))
        ));
        assert!(matches!(initial_point_cache(&seeds, &c, &h, &obs, "other", Some(&path)), Err(Error::CacheMismatch(_))));
    }

    #[test]
    fn draws_are_seed_determined() {
        let (c, h) = problem(2);
        let obs = ObservationConfig::new(64, Default::default()).unwrap();
        let a = initial_point_cache(&[7], &c, &h, &obs, "k", None).unwrap();
        let b = initial_point_cache(&[7], &c, &h, &obs, "k", None).unwrap();
        assert_eq!(a, b);
        assert!(a[0].init.x.iter().all(|v| (0.0..TAU).contains(v)));
        assert_eq!(cache_path(Path::new("out"), "0123456789abcdef0123"), Path::new("out/init_0123456789abcdef.json"));
    }
}
