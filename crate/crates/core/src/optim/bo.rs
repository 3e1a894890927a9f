use std::cell::RefCell;
use std::f64::consts::TAU;

use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::acquisition::expected_improvement_grad;
use crate::error::{Error, Result};
use crate::gp::{Dataset, GPModel};
use crate::optim::config::RunConfig;
use crate::optim::emicore::SurrogateConfig;
use crate::optim::record::{InitialPoint, MetricsFn, Tracker, TrialRecord};
use crate::optim::Objective;
use crate::sim::wrap_point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EiSearch {
    pub restarts: usize,
    pub max_iters: u64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for EiSearch {
    fn default() -> Self {
        Self { restarts: 16, max_iters: 100, memory: 7 }
    }
}

type Evaluation = (Vec<f64>, f64, Vec<f64>);

struct NegEi<'a> {
    model: &'a GPModel,
    f_best: f64,
    /// The line search asks for cost and gradient at the same point.
    last: RefCell<Option<Evaluation>>,
}

impl NegEi<'_> {
    fn eval(&self, x: &[f64]) -> std::result::Result<(f64, Vec<f64>), argmin::core::Error> {
        if let Some((px, c, g)) = self.last.borrow().as_ref() {
            if px.as_slice() == x {
                return Ok((*c, g.clone()));
            }
        }
        let (mu, var, dmu, dvar) = self.model.predict_with_grad(x).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        let (ei, g) = expected_improvement_grad(mu, var, &dmu, &dvar, self.f_best);
        let g: Vec<f64> = g.into_iter().map(|v| -v).collect();
        *self.last.borrow_mut() = Some((x.to_vec(), -ei, g.clone()));
        Ok((-ei, g))
    }
}

impl CostFunction for NegEi<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(x)?.0)
    }
}

impl Gradient for NegEi<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(x)?.1)
    }
}

fn local_search(model: &GPModel, f_best: f64, start: Vec<f64>, search: &EiSearch) -> Option<(Vec<f64>, f64)> {
    let problem = NegEi { model, f_best, last: RefCell::new(None) };
    let start_cost = problem.eval(&start).ok()?.0;
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), search.memory);
    let result = Executor::new(problem, solver).configure(|s| s.param(start.clone()).max_iters(search.max_iters)).run();
    let (x, cost) = match result {
        Ok(res) => {
            let state = res.state;
            match state.best_param {
                Some(p) => (p, state.best_cost),
                None => (start, start_cost),
            }
        }
        // a failed line search still leaves the start point as a valid candidate
        Err(_) => (start, start_cost),
    };
    (cost.is_finite() && x.iter().all(|v| v.is_finite())).then(|| (wrap_point(&x), -cost))
}

/// Maximizes EI from `restarts` uniform starting points; returns the best point and its EI.
pub fn maximize_ei(model: &GPModel, f_best: f64, search: &EiSearch, rng: &mut dyn RngCore, surrogate: &SurrogateConfig) -> Result<(Vec<f64>, f64)> {
    let dim = model.data().dim().ok_or_else(|| Error::InvalidArgument("EI search needs data".into()))?;
    let starts: Vec<Vec<f64>> = (0..search.restarts).map(|_| (0..dim).map(|_| rng.random_range(0.0..TAU)).collect()).collect();
    let results = surrogate.exec.map(starts.len(), |i| local_search(model, f_best, starts[i].clone(), search));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| r.1 > b.1) {
            best = Some(r);
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            log::warn!("every EI restart failed; observing a random point");
            Ok(((0..dim).map(|_| rng.random_range(0.0..TAU)).collect(), 0.0))
        }
    }
}

/// Training point with the lowest posterior mean, and that mean.
pub fn incumbent(model: &GPModel) -> Result<(Vec<f64>, f64)> {
    let means = model.posterior_mean(model.data().inputs())?;
    let (i, mu) = means
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, m)| if m < best.1 { (i, m) } else { best });
    Ok((model.data().inputs()[i].clone(), mu))
}

/// Standard one-point-at-a-time BO with analytic EI.
#[allow(clippy::too_many_arguments)]
pub fn run_plain_bo(
    objective: &mut dyn Objective,
    cfg: &RunConfig,
    init: &InitialPoint,
    surrogate: &SurrogateConfig,
    search: &EiSearch,
    seed: u64,
    metrics: MetricsFn,
    rng: &mut dyn RngCore,
) -> Result<(TrialRecord, Dataset)> {
    cfg.validate()?;
    let method = "bo-ei";
    let mut tracker = Tracker::new(objective, init, method, seed, cfg.max_obs, metrics)?;
    let mut kernel = surrogate.kernel.clone();
    let outcome = (|| {
        tracker.checkpoint(&tracker.data.inputs()[0].clone(), None, Some(kernel.gamma))?;
        let mut t = 0;
        while tracker.can_afford(1) && cfg.max_iter.is_none_or(|m| t < m) {
            t += 1;
            let mut model = GPModel::fit(kernel.clone(), surrogate.noise_sq, tracker.data.clone())?;
            if let Some(grid) = &surrogate.hyperopt.grid {
                if surrogate.hyperopt.interval.is_due(t) {
                    kernel = crate::gp::optimize_gamma(&model, grid, surrogate.exec)?;
                    model = model.refit(kernel.clone())?;
                }
            }
            let (_, f_best) = incumbent(&model)?;
            let (x_next, _) = maximize_ei(&model, f_best, search, rng, surrogate)?;
            tracker.observe(&x_next)?;
            let model = model.refit_with(tracker.data.clone())?;
            let (x_hat, _) = incumbent(&model)?;
            tracker.checkpoint(&x_hat, None, Some(kernel.gamma))?;
        }
        Ok(())
    })();
    tracker.finish(outcome)
}
