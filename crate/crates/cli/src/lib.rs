//! Flag grammar of the `vqebo` binary and its mapping onto [`ExperimentConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vqebo::gp::{HyperoptConfig, KernelConfig, KernelFamily, Sampler};
use vqebo::harness::{default_sigma0, ExperimentConfig, Method, NoiseModel};
use vqebo::optim::{AcqParams, Inducer, RunConfig};
use vqebo::sim::{Boundary, ChainCouplings, CircuitConfig, Entanglement, ObservationConfig, ShotMode};
use vqebo::{Error, Execution, Result};

#[derive(Debug, Parser)]
#[command(name = "vqebo", version, about = "Bayesian optimization of simulated VQE problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (method, seed) cell and write CSV, manifest and plots.
    Run(RunArgs),
    /// Repeat an experiment from its manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 5)]
    pub n_qbits: usize,
    #[arg(long, default_value_t = 3)]
    pub n_layers: usize,
    #[arg(long, default_value = "esu2")]
    pub circuit: String,
    /// Periodic boundary conditions.
    #[arg(long, default_value = "False", num_args = 0..=1, default_missing_value = "True")]
    pub pbc: String,
    /// CNOT layout inside the ansatz: linear, circular or full.
    #[arg(long)]
    pub entanglement: Option<String>,
    #[arg(long, default_value = "(-1.0, 0.0, 0.0)", allow_hyphen_values = true)]
    pub j_couplings: String,
    #[arg(long, default_value = "(0.0, 0.0, -1.0)", allow_hyphen_values = true)]
    pub h_couplings: String,
    /// Shots per Pauli term.
    #[arg(long, default_value_t = 1024)]
    pub n_readout: u64,
    #[arg(long, default_value = "binomial-per-term")]
    pub shot_mode: String,
    /// Iteration cap per trial.
    #[arg(long)]
    pub n_iter: Option<usize>,
    /// Observation budget per trial, initial point included.
    #[arg(long, default_value_t = 600)]
    pub max_obs: usize,
    #[arg(long, default_value = "vqe")]
    pub kernel: String,
    /// `sigma_0=...,gamma=...`; sigma_0 defaults to a value growing with the qubit count.
    #[arg(long, default_value = "")]
    pub kernel_params: String,
    #[arg(long, default_value = "optim=grid,steps=120,max_gamma=20,interval=100*1+20*9+10*100,loss=mll")]
    pub hyperopt: String,
    #[arg(long, default_value = "func=ei,optim=emicore,pairsize=20,gridsize=100,corethresh=1,corethresh_width=10,coremin_scale=0,corethresh_scale=1,samplesize=100,smo-steps=0,smo-axis=True")]
    pub acq_params: String,
    #[arg(long, default_value = "none")]
    pub inducer: String,
    /// NFT reset interval; 0 disables resets.
    #[arg(long, default_value_t = 32)]
    pub reset_interval: usize,
    /// Comma-separated methods: nft-seq, nft-rand, emicore, bo-ei.
    #[arg(long, default_value = "nft-seq,nft-rand,emicore")]
    pub methods: String,
    /// `a..b` (exclusive) or a comma-separated list.
    #[arg(long, default_value = "0..10")]
    pub seeds: String,
    /// Fixed GP noise variance instead of estimating it.
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long, default_value = "low-discrepancy")]
    pub sampler: String,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
    /// Write zero wall times so reruns give identical CSV files.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub no_svg: bool,
    /// Run trials one after another.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Parse(format!("bad boolean {other:?}"))),
    }
}

/// Parses `(a, b, c)`, `a,b,c` or `[a, b, c]`.
pub fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let inner = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    let v: Vec<f64> = inner
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coupling {p:?} in {s:?}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| Error::Parse(format!("expected three couplings, got {s:?}")))
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn parse_kernel_params(s: &str, qubits: usize) -> Result<(f64, f64)> {
    let (mut sigma0, mut gamma) = (default_sigma0(qubits), 2.0);
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
        let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad number {v:?}")))?;
        match k {
            "sigma_0" => sigma0 = v,
            "gamma" => gamma = v,
            other => return Err(Error::Parse(format!("unknown kernel parameter {other:?}"))),
        }
    }
    Ok((sigma0, gamma))
}

impl RunArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        if self.circuit != "esu2" {
            return Err(Error::InvalidArgument(format!("unsupported circuit {:?}; only esu2 is available", self.circuit)));
        }
        let boundary = if parse_bool(&self.pbc)? { Boundary::Periodic } else { Boundary::Open };
        let entanglement = match &self.entanglement {
            Some(e) => e.parse::<Entanglement>()?,
            None => Entanglement::from(boundary),
        };
        let family: KernelFamily = self.kernel.parse()?;
        let (sigma0, gamma) = parse_kernel_params(&self.kernel_params, self.n_qbits)?;
        let kernel = KernelConfig::new(family, sigma0 * sigma0, gamma)?;
        let acq: AcqParams = self.acq_params.parse()?;
        let hyperopt: HyperoptConfig = self.hyperopt.parse()?;
        let inducer: Inducer = self.inducer.parse()?;
        let mode: ShotMode = match self.shot_mode.as_str() {
            "binomial-per-term" => ShotMode::BinomialPerTerm,
            "gaussian" | "gaussian-approx" => ShotMode::GaussianApprox,
            "exact" => ShotMode::Exact,
            other => return Err(Error::Parse(format!("unknown shot mode {other:?}"))),
        };
        let methods = self.methods.split(',').filter(|m| !m.trim().is_empty()).map(str::parse).collect::<Result<Vec<Method>>>()?;
        let run = RunConfig {
            max_obs: self.max_obs,
            max_iter: self.n_iter,
            t_reset: (self.reset_interval > 0).then_some(self.reset_interval),
            inducer,
            ..RunConfig::default()
        };
        let cfg = ExperimentConfig {
            couplings: ChainCouplings {
                qubits: self.n_qbits,
                j_couplings: parse_triple(&self.j_couplings)?,
                h_couplings: parse_triple(&self.h_couplings)?,
                boundary,
            },
            circuit: CircuitConfig { qubits: self.n_qbits, layers: self.n_layers, entanglement },
            observation: ObservationConfig::new(self.n_readout, mode)?,
            methods,
            kernel,
            hyperopt,
            acq,
            run,
            bo_search: Default::default(),
            noise: self.noise_var.map_or_else(NoiseModel::default, NoiseModel::Fixed),
            sampler: self.sampler.parse::<Sampler>()?,
            seeds: parse_seeds(&self.seeds)?,
            out_dir: self.out_dir.clone(),
            deterministic: self.deterministic,
            svg: !self.no_svg,
            exec: if self.sequential { Execution::Sequential } else { Execution::Parallel },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Flags that reproduce `cfg` through [`RunArgs::to_config`].
pub fn to_args(cfg: &ExperimentConfig) -> Vec<String> {
    let triple = |t: [f64; 3]| format!("({}, {}, {})", t[0], t[1], t[2]);
    let mut args = vec![
        "run".to_string(),
        format!("--n-qbits={}", cfg.circuit.qubits),
        format!("--n-layers={}", cfg.circuit.layers),
        "--circuit=esu2".into(),
        format!("--pbc={}", if cfg.couplings.boundary == Boundary::Periodic { "True" } else { "False" }),
        format!("--entanglement={}", entanglement_name(cfg.circuit.entanglement)),
        format!("--j-couplings={}", triple(cfg.couplings.j_couplings)),
        format!("--h-couplings={}", triple(cfg.couplings.h_couplings)),
        format!("--n-readout={}", cfg.observation.n_shots),
        format!(
            "--shot-mode={}",
            match cfg.observation.mode {
                ShotMode::BinomialPerTerm => "binomial-per-term",
                ShotMode::GaussianApprox => "gaussian-approx",
                ShotMode::Exact => "exact",
            }
        ),
        format!("--max-obs={}", cfg.run.max_obs),
        format!("--kernel={}", cfg.kernel.family),
        format!("--kernel-params=sigma_0={},gamma={}", cfg.kernel.sigma0_sq.sqrt(), cfg.kernel.gamma),
        format!("--hyperopt={}", cfg.hyperopt),
        format!("--acq-params={}", cfg.acq),
        format!("--inducer={}", cfg.run.inducer),
        format!("--reset-interval={}", cfg.run.t_reset.unwrap_or(0)),
        format!("--methods={}", cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
        format!("--seeds={}", cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        format!("--sampler={}", cfg.sampler),
        format!("--out-dir={}", cfg.out_dir.display()),
    ];
    if let Some(n) = cfg.run.max_iter {
        args.push(format!("--n-iter={n}"));
    }
    if let NoiseModel::Fixed(v) = cfg.noise {
        args.push(format!("--noise-var={v}"));
    }
    if cfg.deterministic {
        args.push("--deterministic".into());
    }
    if !cfg.svg {
        args.push("--no-svg".into());
    }
    if cfg.exec == Execution::Sequential {
        args.push("--sequential".into());
    }
    args
}

fn entanglement_name(e: Entanglement) -> &'static str {
    match e {
        Entanglement::Linear => "linear",
        Entanglement::Circular => "circular",
        Entanglement::Full => "full",
    }
}
