use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::exec::Execution;
use crate::gp::{posterior_sample, Dataset, GPModel, KernelConfig, PosteriorGaussian, Sampler};
use crate::sim::wrap_point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmicoreParams {
    /// Points suggested per step; only 2 is supported.
    pub m: usize,
    /// Search-grid size `J_SG`.
    pub j_sg: usize,
    /// Evaluation-grid size `J_OG`.
    pub j_og: usize,
    pub n_mc: usize,
    /// Largest joint draw, incumbent included.
    pub core_cap: usize,
}

impl Default for EmicoreParams {
    fn default() -> Self {
        Self { m: 2, j_sg: 20, j_og: 100, n_mc: 100, core_cap: 512 }
    }
}

impl EmicoreParams {
    pub fn validate(&self) -> Result<()> {
        if self.m != 2 {
            return Err(Error::InvalidArgument(format!("only pairs are supported (m = 2), got m = {}", self.m)));
        }
        if self.j_sg < 2 || self.j_og < 2 || self.n_mc < 1 || self.core_cap < 2 {
            return Err(Error::InvalidArgument("need j_sg >= 2, j_og >= 2, n_mc >= 1, core_cap >= 2".into()));
        }
        Ok(())
    }

    pub fn candidate_count(&self) -> usize {
        self.j_sg * (self.j_sg - 1)
    }
}

/// Offsets `2 pi j / (n + 1)` for `j = 1..=n`.
pub fn grid_offsets(n: usize) -> Vec<f64> {
    (1..=n).map(|j| TAU * j as f64 / (n + 1) as f64).collect()
}

pub(crate) fn axis_point(x: &[f64], axis: usize, offset: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    p[axis] += offset;
    wrap_point(&p)
}

/// Discretized confident region along one axis through the incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct CoReSet {
    pub axis: usize,
    pub offsets: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub members: Vec<bool>,
    pub kappa: f64,
}

impl CoReSet {
    pub fn member_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().zip(&self.members).filter(|(_, m)| **m).map(|(p, _)| p.clone()).collect()
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }
}

/// Grid points along `axis` whose posterior variance given `inputs` is at most
/// `kappa^2`. Variances do not depend on outputs, so none are needed.
pub fn core_set(
    inputs: &[Vec<f64>],
    axis: usize,
    incumbent: &[f64],
    kappa: f64,
    j_og: usize,
    kernel: &KernelConfig,
    noise_sq: f64,
) -> Result<CoReSet> {
    if axis >= incumbent.len() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for dimension {}", incumbent.len())));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
    }
    let data = Dataset::new(inputs.to_vec(), vec![0.0; inputs.len()])?;
    let model = GPModel::fit(kernel.clone(), noise_sq, data)?;
    let offsets = grid_offsets(j_og);
    let points: Vec<Vec<f64>> = offsets.iter().map(|&a| axis_point(incumbent, axis, a)).collect();
    let variances = model.posterior_variance(&points)?;
    let members = variances.iter().map(|v| *v <= kappa * kappa).collect();
    Ok(CoReSet { axis, offsets, points, variances, members, kappa })
}

/// `mean over draws of max(0, min f(prev) - min f(core)) / m`; empty `core` scores 0.
pub(crate) fn improvement_score(draws: &DMatrix<f64>, prev: &[usize], core: &[usize], m: usize) -> f64 {
    if core.is_empty() || draws.nrows() == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for row in draws.row_iter() {
        let a = prev.iter().map(|&i| row[i]).fold(f64::INFINITY, f64::min);
        let b = core.iter().map(|&i| row[i]).fold(f64::INFINITY, f64::min);
        total += (a - b).max(0.0);
    }
    total / draws.nrows() as f64 / m as f64
}

/// Expected maximum improvement of `updated_core` over `prev_core` under the
/// current posterior. Points of `updated_core` already in `prev_core` are not
/// duplicated in the joint draw.
pub fn emicore_value(
    model: &GPModel,
    prev_core: &[Vec<f64>],
    updated_core: &[Vec<f64>],
    m: usize,
    n_mc: usize,
    sampler: Sampler,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if prev_core.is_empty() || m == 0 || n_mc == 0 {
        return Err(Error::InvalidArgument("need a non-empty previous region, m >= 1 and n_mc >= 1".into()));
    }
    let mut points: Vec<Vec<f64>> = prev_core.to_vec();
    let mut core_idx = Vec::with_capacity(updated_core.len());
    for p in updated_core {
        match points.iter().position(|q| q == p) {
            Some(i) => core_idx.push(i),
            None => {
                core_idx.push(points.len());
                points.push(p.clone());
            }
        }
    }
    let post = model.posterior(&points)?;
    let draws = posterior_sample(&post, n_mc, sampler, rng)?;
    let prev_idx: Vec<usize> = (0..prev_core.len()).collect();
    Ok(improvement_score(&draws, &prev_idx, &core_idx, m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmicoreChoice {
    pub points: [Vec<f64>; 2],
    pub offsets: [f64; 2],
    /// Acquisition value of every ordered candidate pair, in enumeration order.
    pub scores: Vec<f64>,
    pub best: Option<usize>,
    /// Number of updated-CoRe members for the selected pair.
    pub core_size: usize,
    pub fallback: bool,
}

/// Picks the pair of on-axis points maximizing the expected improvement of
/// the updated confident region over the incumbent.
///
/// One joint draw over the incumbent and the evaluation grid is shared by all
/// candidates. The updated variance of each grid point for a candidate pair
/// is a rank-two downdate of the current posterior covariance.
#[allow(clippy::too_many_arguments)]
pub fn emicore_select(
    model: &GPModel,
    incumbent: &[f64],
    axis: usize,
    kappa: f64,
    params: &EmicoreParams,
    sampler: Sampler,
    rng: &mut dyn RngCore,
    exec: Execution,
) -> Result<EmicoreChoice> {
    params.validate()?;
    if let Some(d) = model.data().dim() {
        check_dim(d, incumbent.len())?;
    }
    if axis >= incumbent.len() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for dimension {}", incumbent.len())));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
    }
    let x_hat = wrap_point(incumbent);

    let mut eval_offsets = grid_offsets(params.j_og);
    if eval_offsets.len() + 1 > params.core_cap {
        let keep = params.core_cap - 1;
        eval_offsets = (0..keep).map(|i| eval_offsets[i * eval_offsets.len() / keep]).collect();
    }
    let search_offsets = grid_offsets(params.j_sg);
    let (n_eval, n_search) = (eval_offsets.len(), search_offsets.len());

    // layout: incumbent, evaluation grid, search grid
    let mut points = vec![x_hat.clone()];
    points.extend(eval_offsets.iter().map(|&a| axis_point(&x_hat, axis, a)));
    points.extend(search_offsets.iter().map(|&a| axis_point(&x_hat, axis, a)));
    let post = model.posterior(&points)?;
    let cov = post.cov();
    let noise = model.noise_sq();
    let tiny = 1e-12 * model.kernel().sigma0_sq;

    let draw_idx: Vec<usize> = (0..=n_eval).collect();
    let draws = posterior_sample(&post.select(&draw_idx), params.n_mc, sampler, rng)?;

    let pairs: Vec<(usize, usize)> =
        (0..n_search).flat_map(|a| (0..n_search).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let kappa_sq = kappa * kappa;
    let evaluated = exec.map(pairs.len(), |c| {
        let (a, b) = pairs[c];
        let (sa, sb) = (1 + n_eval + a, 1 + n_eval + b);
        let inv = pinv2(cov[(sa, sa)] + noise, cov[(sa, sb)], cov[(sb, sb)] + noise, tiny);
        let mut members = Vec::new();
        let mut total_var = 0.0;
        for g in 1..=n_eval {
            let (u, v) = (cov[(g, sa)], cov[(g, sb)]);
            let reduction = inv[0] * u * u + 2.0 * inv[1] * u * v + inv[2] * v * v;
            let var = cov[(g, g)] - reduction;
            total_var += var;
            if var <= kappa_sq {
                members.push(g);
            }
        }
        let score = improvement_score(&draws, &[0], &members, params.m);
        (score, members.len(), total_var)
    });

    let scores: Vec<f64> = evaluated.iter().map(|e| e.0).collect();
    // Pairs with the same region share their draws and score exactly alike;
    // among those the pair leaving the least variance on the axis wins.
    let mut best: Option<usize> = None;
    for (c, &(s, size, var)) in evaluated.iter().enumerate() {
        if size == 0 {
            continue;
        }
        let better = best.is_none_or(|b| {
            let tol = 1e-12 * scores[b].abs().max(1.0);
            s > scores[b] + tol || ((s - scores[b]).abs() <= tol && var < evaluated[b].2)
        });
        if better {
            best = Some(c);
        }
    }
    Ok(match best {
        Some(c) => {
            let (a, b) = pairs[c];
            let offsets = [search_offsets[a], search_offsets[b]];
            EmicoreChoice {
                points: [axis_point(&x_hat, axis, offsets[0]), axis_point(&x_hat, axis, offsets[1])],
                offsets,
                scores,
                best,
                core_size: evaluated[c].1,
                fallback: false,
            }
        }
        None => {
            log::warn!("every candidate confident region is empty (kappa = {kappa:e}); using the fixed +-2pi/3 pair");
            let offsets = [TAU / 3.0, -TAU / 3.0];
            EmicoreChoice {
                points: [axis_point(&x_hat, axis, offsets[0]), axis_point(&x_hat, axis, offsets[1])],
                offsets,
                scores,
                best: None,
                core_size: 0,
                fallback: true,
            }
        }
    })
}

/// Pseudo-inverse of the symmetric 2x2 matrix `[[a, b], [b, c]]` as `[i11, i12, i22]`.
fn pinv2(a: f64, b: f64, c: f64, tol: f64) -> [f64; 3] {
    let det = a * c - b * b;
    if det > tol * (a + c).abs().max(tol) {
        return [c / det, -b / det, a / det];
    }
    // eigen-decomposition, inverting only eigenvalues above tol
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let mut out = [0.0; 3];
    for lambda in [mean + r, mean - r] {
        if lambda <= tol {
            continue;
        }
        let (vx, vy) = if b.abs() > 0.0 {
            (b, lambda - a)
        } else if (lambda - a).abs() <= (lambda - c).abs() {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let norm = (vx * vx + vy * vy).sqrt();
        let (ux, uy) = (vx / norm, vy / norm);
        out[0] += ux * ux / lambda;
        out[1] += ux * uy / lambda;
        out[2] += uy * uy / lambda;
    }
    out
}

/// Posterior over `{incumbent} + axis grid` for diagnostics and tests.
pub fn axis_posterior(model: &GPModel, incumbent: &[f64], axis: usize, offsets: &[f64]) -> Result<PosteriorGaussian> {
    let mut points = vec![wrap_point(incumbent)];
    points.extend(offsets.iter().map(|&a| axis_point(incumbent, axis, a)));
    model.posterior(&points)
}
