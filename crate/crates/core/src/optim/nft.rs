use std::f64::consts::TAU;

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::gp::Dataset;
use crate::optim::config::{AxisMode, RunConfig};
use crate::optim::record::{InitialPoint, MetricsFn, Tracker, TrialRecord};
use crate::optim::sinusoid::fit_canonical;
use crate::optim::Objective;
use crate::sim::wrap_angle;

pub(crate) const SHIFT: f64 = TAU / 3.0;

/// Cycles through axes in order, or draws them uniformly with replacement.
#[derive(Debug, Clone)]
pub struct AxisCursor {
    mode: AxisMode,
    dim: usize,
    next: usize,
}

impl AxisCursor {
    pub fn new(mode: AxisMode, dim: usize) -> Self {
        Self { mode, dim, next: 0 }
    }

    pub fn next_axis(&mut self, rng: &mut dyn RngCore) -> usize {
        match self.mode {
            AxisMode::Sequential => {
                let d = self.next;
                self.next = (self.next + 1) % self.dim;
                d
            }
            AxisMode::Random => rng.random_range(0..self.dim),
        }
    }
}

/// Incumbent state of a sequential minimal optimization.
pub(crate) struct NftState {
    pub x_hat: Vec<f64>,
    pub y_hat: f64,
    pub steps: usize,
}

impl NftState {
    /// Observes both shifted points on `axis`, then jumps to the fitted minimum.
    pub fn step(&mut self, tracker: &mut Tracker, axis: usize, t_reset: Option<usize>) -> Result<()> {
        let mut minus = self.x_hat.clone();
        minus[axis] -= SHIFT;
        let mut plus = self.x_hat.clone();
        plus[axis] += SHIFT;
        let y_minus = tracker.observe(&minus)?;
        let y_plus = tracker.observe(&plus)?;
        let fit = fit_canonical(y_minus, self.y_hat, y_plus);
        self.x_hat[axis] = wrap_angle(self.x_hat[axis] + fit.argmin_theta);
        self.y_hat = fit.min_value();
        self.steps += 1;
        if let Some(every) = t_reset {
            if self.steps % every == 0 && tracker.can_afford(1) {
                self.y_hat = tracker.observe(&self.x_hat.clone())?;
            }
        }
        Ok(())
    }
}

/// Nakanishi-Fujii-Todo sequential minimal optimization.
pub fn run_nft(
    objective: &mut dyn Objective,
    cfg: &RunConfig,
    init: &InitialPoint,
    seed: u64,
    metrics: MetricsFn,
    rng: &mut dyn RngCore,
) -> Result<(TrialRecord, Dataset)> {
    cfg.validate()?;
    let name = match cfg.axis {
        AxisMode::Sequential => "nft-seq",
        AxisMode::Random => "nft-rand",
    };
    let mut tracker = Tracker::new(objective, init, name, seed, cfg.max_obs, metrics)?;
    let mut state = NftState { x_hat: tracker.data.inputs()[0].clone(), y_hat: init.y, steps: 0 };
    let mut cursor = AxisCursor::new(cfg.axis, init.x.len());
    let outcome = (|| {
        tracker.checkpoint(&state.x_hat, None, None)?;
        while tracker.can_afford(2) && cfg.max_iter.is_none_or(|m| state.steps < m) {
            let axis = cursor.next_axis(rng);
            state.step(&mut tracker, axis, cfg.t_reset)?;
            tracker.checkpoint(&state.x_hat, None, None)?;
        }
        Ok(())
    })();
    tracker.finish(outcome)
}
