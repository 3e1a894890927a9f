use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::acquisition::{axis_point, emicore_select, EmicoreParams};
use crate::error::Result;
use crate::exec::Execution;
use crate::gp::{optimize_gamma, Dataset, GPModel, HyperoptConfig, KernelConfig, Sampler};
use crate::optim::config::RunConfig;
use crate::optim::nft::{AxisCursor, NftState, SHIFT};
use crate::optim::record::{InitialPoint, MetricsFn, Tracker, TrialRecord};
use crate::optim::sinusoid::fit_canonical;
use crate::optim::Objective;
use crate::sim::wrap_angle;

/// Surrogate settings shared by the GP-based optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub kernel: KernelConfig,
    /// Observation noise variance used by the GP.
    pub noise_sq: f64,
    pub hyperopt: HyperoptConfig,
    pub sampler: Sampler,
    pub exec: Execution,
}

/// Model on the points the inducer keeps, with gamma re-tuned when due.
fn refit(
    kept: &Dataset,
    kernel: &mut KernelConfig,
    surrogate: &SurrogateConfig,
    t: usize,
) -> Result<GPModel> {
    let model = GPModel::fit(kernel.clone(), surrogate.noise_sq, kept.clone())?;
    match &surrogate.hyperopt.grid {
        Some(grid) if surrogate.hyperopt.interval.is_due(t) => {
            *kernel = optimize_gamma(&model, grid, surrogate.exec)?;
            model.refit(kernel.clone())
        }
        _ => Ok(model),
    }
}

/// NFT with EMICoRe point selection and GP-smoothed incumbent updates.
#[allow(clippy::too_many_arguments)]
pub fn run_nft_emicore(
    objective: &mut dyn Objective,
    cfg: &RunConfig,
    init: &InitialPoint,
    surrogate: &SurrogateConfig,
    params: &EmicoreParams,
    seed: u64,
    metrics: MetricsFn,
    rng: &mut dyn RngCore,
) -> Result<(TrialRecord, Dataset)> {
    cfg.validate()?;
    params.validate()?;
    let mut tracker = Tracker::new(objective, init, "emicore", seed, cfg.max_obs, metrics)?;
    let dim = init.x.len();
    let mut kernel = surrogate.kernel.clone();
    let mut kappa = cfg.kappa.initial;
    let noise_sd = surrogate.noise_sq.sqrt();
    let mut cursor = AxisCursor::new(cfg.axis, dim);
    let mut kept = tracker.data.clone();
    let mut x_hat = kept.inputs()[0].clone();

    let outcome = (|| {
        tracker.checkpoint(&x_hat, Some(kappa), Some(kernel.gamma))?;
        // plain NFT warm-up
        let mut nft = NftState { x_hat: x_hat.clone(), y_hat: init.y, steps: 0 };
        while nft.steps < cfg.t_nft && tracker.can_afford(2) {
            let axis = cursor.next_axis(rng);
            nft.step(&mut tracker, axis, None)?;
            tracker.checkpoint(&nft.x_hat, Some(kappa), Some(kernel.gamma))?;
        }
        x_hat = nft.x_hat;
        kept = tracker.data.clone();
        kept.retain_last(kept.len() - cfg.inducer.excess(kept.len()));

        let mut model = GPModel::fit(kernel.clone(), surrogate.noise_sq, kept.clone())?;
        let mut mu_history = vec![model.posterior_mean(&[x_hat.clone()])?[0]];
        let mut t = 0;
        while tracker.can_afford(2) && cfg.max_iter.is_none_or(|m| t < m) {
            t += 1;
            let axis = cursor.next_axis(rng);
            let choice = emicore_select(&model, &x_hat, axis, kappa, params, surrogate.sampler, rng, surrogate.exec)?;
            for p in &choice.points {
                let y = tracker.observe(p)?;
                kept.push(p.clone(), y)?;
            }
            let excess = cfg.inducer.excess(kept.len());
            if excess > 0 {
                kept.retain_last(kept.len() - excess);
            }
            model = refit(&kept, &mut kernel, surrogate, t)?;

            let triple = [-SHIFT, 0.0, SHIFT].map(|a| axis_point(&x_hat, axis, a));
            let mu = model.posterior_mean(&triple)?;
            let fit = fit_canonical(mu[0], mu[1], mu[2]);
            x_hat[axis] = wrap_angle(x_hat[axis] + fit.argmin_theta);
            let mu_hat = model.posterior_mean(&[x_hat.clone()])?[0];
            log::debug!(
                "t={t} axis={axis} offsets={:?} score={:.3e} core={} kappa={kappa:.3e} gamma={} mu_hat={mu_hat:.5}",
                choice.offsets, choice.best.and_then(|b| choice.scores.get(b).copied()).unwrap_or(0.0), choice.core_size, kernel.gamma
            );
            mu_history.push(mu_hat);
            if t >= cfg.kappa.t_ave {
                kappa = cfg.kappa.update(mu_history[t - cfg.kappa.t_ave], mu_hat, noise_sd);
            }
            tracker.checkpoint(&x_hat, Some(kappa), Some(kernel.gamma))?;
        }
        Ok(())
    })();
    tracker.finish(outcome)
}
