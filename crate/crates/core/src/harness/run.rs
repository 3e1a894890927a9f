use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::pooled_variance;
use crate::harness::cache::{cache_path, initial_point_cache, stream_rng, Stream};
use crate::harness::config::{ExperimentConfig, Method, NoiseModel};
use crate::harness::metrics::{aggregate, evaluate_metrics, Aggregate};
use crate::harness::output::{render_svg, write_csv, CellStatus, Manifest};
use crate::optim::{
    run_nft, run_nft_emicore, run_plain_bo, AxisMode, InitialPoint, Metrics, Objective, SurrogateConfig, TrialRecord,
};
use crate::sim::{ground_state, CircuitSpec, GroundState, Hamiltonian, VqeObjective, MAX_DIAGONALIZATION_QUBITS};

/// Built objects of an experiment: circuit, Hamiltonian and (when small enough) its ground state.
#[derive(Debug, Clone)]
pub struct Problem {
    pub circuit: CircuitSpec,
    pub hamiltonian: Hamiltonian,
    pub ground: Option<GroundState>,
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let circuit = cfg.circuit.build()?;
        let hamiltonian = cfg.couplings.build()?;
        let ground = if hamiltonian.qubits() <= MAX_DIAGONALIZATION_QUBITS {
            Some(ground_state(&hamiltonian)?)
        } else {
            log::warn!("{} qubits: fidelity unavailable", hamiltonian.qubits());
            None
        };
        Ok(Self { circuit, hamiltonian, ground })
    }

    pub fn metrics(&self, x: &[f64]) -> Result<Metrics> {
        evaluate_metrics(x, &self.circuit, &self.hamiltonian, self.ground.as_ref())
    }
}

/// Pooled variance of `repeats` observations at each of `points` uniform points.
pub fn estimate_noise_variance(objective: &mut dyn Objective, points: usize, repeats: usize, rng: &mut dyn RngCore) -> Result<f64> {
    let dim = objective.dim();
    let mut groups = Vec::with_capacity(points);
    for _ in 0..points {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..TAU)).collect();
        groups.push((0..repeats).map(|_| objective.observe(&x)).collect::<Result<Vec<f64>>>()?);
    }
    pooled_variance(&groups)
}

/// Runs one (method, seed) cell from its cached initial point.
pub fn run_trial(cfg: &ExperimentConfig, problem: &Problem, method: Method, seed: u64, init: &InitialPoint, inner: Execution) -> Result<TrialRecord> {
    let noise_sq = match cfg.noise {
        NoiseModel::Fixed(v) => v,
        NoiseModel::Estimate { points, repeats } => {
            let mut probe = VqeObjective::new(
                problem.circuit.clone(),
                problem.hamiltonian.clone(),
                cfg.observation,
                stream_rng(seed, Stream::NoiseEstimate),
            );
            let mut rng = stream_rng(seed, Stream::NoiseEstimatePoints);
            estimate_noise_variance(&mut probe, points, repeats, &mut rng)?
        }
    };
    let mut objective =
        VqeObjective::new(problem.circuit.clone(), problem.hamiltonian.clone(), cfg.observation, stream_rng(seed, Stream::Noise));
    let mut rng = stream_rng(seed, Stream::Algorithm);
    let metrics = |x: &[f64]| problem.metrics(x);
    let surrogate = SurrogateConfig {
        kernel: cfg.kernel.clone(),
        noise_sq,
        hyperopt: cfg.hyperopt.clone(),
        sampler: cfg.sampler,
        exec: inner,
    };
    let mut run = cfg.run.clone();
    let (mut record, _) = match method {
        Method::NftSeq | Method::NftRand => {
            run.axis = if method == Method::NftSeq { AxisMode::Sequential } else { AxisMode::Random };
            run_nft(&mut objective, &run, init, seed, &metrics, &mut rng)?
        }
        Method::Emicore => {
            cfg.acq.apply(&mut run);
            run_nft_emicore(&mut objective, &run, init, &surrogate, &cfg.acq.emicore, seed, &metrics, &mut rng)?
        }
        Method::BoEi => run_plain_bo(&mut objective, &run, init, &surrogate, &cfg.bo_search, seed, &metrics, &mut rng)?,
    };
    record.method = method.name().to_string();
    Ok(record)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<(String, Aggregate)>,
    pub manifest: Manifest,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl ExperimentOutcome {
    pub fn any_aborted(&self) -> bool {
        self.records.iter().any(|r| r.aborted.is_some())
    }

    pub fn records_for(&self, method: Method) -> Vec<&TrialRecord> {
        self.records.iter().filter(|r| r.method == method.name()).collect()
    }
}

/// Runs every (method, seed) cell and writes `results.csv`, `manifest.json`
/// and optionally `curves.svg` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let problem = Problem::build(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let problem_hash = cfg.problem_hash();
    let inits = initial_point_cache(
        &cfg.seeds,
        &problem.circuit,
        &problem.hamiltonian,
        &cfg.observation,
        &problem_hash,
        Some(&cache_path(&cfg.out_dir, &problem_hash)),
    )?;
    let cells: Vec<(Method, usize)> = cfg.methods.iter().flat_map(|&m| (0..inits.len()).map(move |i| (m, i))).collect();
    // parallelism goes to whole trials; inner loops stay sequential
    let (outer, inner) = if cells.len() > 1 { (cfg.exec, Execution::Sequential) } else { (Execution::Sequential, cfg.exec) };
    let results = outer.map(cells.len(), |c| {
        let (method, i) = cells[c];
        let seed = inits[i].seed;
        run_trial(cfg, &problem, method, seed, &inits[i].init, inner).unwrap_or_else(|e| {
            log::error!("{method} seed {seed} failed: {e}");
            TrialRecord { method: method.name().into(), seed, checkpoints: Vec::new(), final_x: Vec::new(), aborted: Some(e.to_string()) }
        })
    });

    let csv_path = cfg.out_dir.join("results.csv");
    write_csv(BufWriter::new(File::create(&csv_path)?), &results, cfg.deterministic)?;

    let mut summaries = Vec::new();
    let mut plot_groups = Vec::new();
    for &m in &cfg.methods {
        let rs: Vec<TrialRecord> = results.iter().filter(|r| r.method == m.name()).cloned().collect();
        if let Ok(agg) = aggregate(&rs) {
            let finals = rs.iter().filter_map(|r| r.last().map(|c| c.energy)).collect();
            plot_groups.push((m.name().to_string(), agg.clone(), finals));
            summaries.push((m.name().to_string(), agg));
        }
    }
    let ground_energy = problem.ground.as_ref().map(|g| g.energy);
    let svg = if cfg.svg && !plot_groups.is_empty() {
        let path = cfg.out_dir.join("curves.svg");
        fs::write(&path, render_svg(&plot_groups, ground_energy))?;
        Some("curves.svg".to_string())
    } else {
        None
    };
    let manifest = Manifest {
        tool: "vqebo".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.config_hash(),
        problem_hash,
        ground_energy,
        config: cfg.clone(),
        cells: results.iter().map(|r| CellStatus { method: r.method.clone(), seed: r.seed, aborted: r.aborted.clone() }).collect(),
        csv: "results.csv".into(),
        svg,
    };
    let manifest_path = cfg.out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(ExperimentOutcome { records: results, summaries, manifest, csv_path, manifest_path })
}

/// Re-runs the configuration stored in a manifest, writing into `out_dir`.
pub fn rerun_from_manifest(manifest: &Manifest, out_dir: Option<PathBuf>) -> Result<ExperimentOutcome> {
    let mut cfg = manifest.config.clone();
    if cfg.config_hash() != manifest.config_hash {
        return Err(Error::CacheMismatch("manifest config does not match its hash".into()));
    }
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
    run_experiment(&cfg)
}
