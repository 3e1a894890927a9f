use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gp::Dataset;
use crate::optim::Objective;

/// Noiseless diagnostics at a point: energy and, when available, fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub energy: f64,
    pub fidelity: Option<f64>,
}

/// Evaluates [`Metrics`] without touching the observation budget.
pub type MetricsFn<'a> = &'a (dyn Fn(&[f64]) -> Result<Metrics> + Sync);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n_obs: usize,
    pub energy: f64,
    pub fidelity: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: String,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_x: Vec<f64>,
    /// Set when the trial stopped on an error.
    pub aborted: Option<String>,
}

impl TrialRecord {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// Initial point and its single observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Observation bookkeeping shared by the optimizers.
pub(crate) struct Tracker<'a, 'o> {
    pub objective: &'o mut dyn Objective,
    pub data: Dataset,
    pub record: TrialRecord,
    metrics: MetricsFn<'a>,
    start: Instant,
    max_obs: usize,
}

impl<'a, 'o> Tracker<'a, 'o> {
    pub fn new(
        objective: &'o mut dyn Objective,
        init: &InitialPoint,
        method: &str,
        seed: u64,
        max_obs: usize,
        metrics: MetricsFn<'a>,
    ) -> Result<Self> {
        crate::error::check_dim(objective.dim(), init.x.len())?;
        let mut data = Dataset::default();
        data.push(init.x.clone(), init.y)?;
        let record = TrialRecord { method: method.into(), seed, checkpoints: Vec::new(), final_x: data.inputs()[0].clone(), aborted: None };
        Ok(Self { objective, data, record, metrics, start: Instant::now(), max_obs })
    }

    pub fn n_obs(&self) -> usize {
        self.data.len()
    }

    pub fn can_afford(&self, k: usize) -> bool {
        self.n_obs() + k <= self.max_obs
    }

    pub fn observe(&mut self, x: &[f64]) -> Result<f64> {
        let y = self.objective.observe(x)?;
        self.data.push(x.to_vec(), y)?;
        Ok(y)
    }

    pub fn checkpoint(&mut self, x_hat: &[f64], kappa: Option<f64>, gamma: Option<f64>) -> Result<()> {
        let m = (self.metrics)(x_hat)?;
        self.record.final_x = x_hat.to_vec();
        self.record.checkpoints.push(Checkpoint {
            n_obs: self.n_obs(),
            energy: m.energy,
            fidelity: m.fidelity,
            kappa,
            gamma,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }

    pub fn finish(mut self, outcome: Result<()>) -> Result<(TrialRecord, Dataset)> {
        if let Err(e) = outcome {
            log::warn!("{} seed {} aborted: {e}", self.record.method, self.record.seed);
            self.record.aborted = Some(e.to_string());
        }
        Ok((self.record, self.data))
    }
}
