use rand::RngCore;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gp::{posterior_sample, GPModel, Sampler};

/// Analytic expected improvement below `f_best` for a Gaussian `N(mu, sd^2)`.
pub fn expected_improvement(mu: f64, sd: f64, f_best: f64) -> f64 {
    let u = f_best - mu;
    if sd <= 0.0 {
        return u.max(0.0);
    }
    let n = Normal::standard();
    let z = u / sd;
    (u * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}

/// EI and its gradient, given the predictive mean/variance and their gradients.
pub fn expected_improvement_grad(mu: f64, var: f64, dmu: &[f64], dvar: &[f64], f_best: f64) -> (f64, Vec<f64>) {
    let sd = var.max(0.0).sqrt();
    let u = f_best - mu;
    if sd <= 1e-12 {
        let g = if u > 0.0 { dmu.iter().map(|d| -d).collect() } else { vec![0.0; dmu.len()] };
        return (u.max(0.0), g);
    }
    let n = Normal::standard();
    let z = u / sd;
    let (cdf, pdf) = (n.cdf(z), n.pdf(z));
    let value = (u * cdf + sd * pdf).max(0.0);
    // dEI/dmu = -Phi(z), dEI/dsd = phi(z), dsd = dvar / (2 sd)
    let grad = dmu.iter().zip(dvar).map(|(dm, dv)| -cdf * dm + pdf * dv / (2.0 * sd)).collect();
    (value, grad)
}

/// Monte Carlo estimate of `E[max(0, min f(X) - min f(X'))]` under the joint
/// posterior over the training inputs `X` and `new_points` `X'`.
pub fn noisy_ei(model: &GPModel, new_points: &[Vec<f64>], n_mc: usize, sampler: Sampler, rng: &mut dyn RngCore) -> Result<f64> {
    let n = model.data().len();
    if n == 0 || new_points.is_empty() || n_mc == 0 {
        return Err(Error::InvalidArgument("noisy EI needs training data, new points and n_mc >= 1".into()));
    }
    let mut points = model.data().inputs().to_vec();
    points.extend_from_slice(new_points);
    let post = model.posterior(&points)?;
    let draws = posterior_sample(&post, n_mc, sampler, rng)?;
    let total: f64 = draws
        .row_iter()
        .map(|row| {
            let old = row.columns(0, n).min();
            let new = row.columns(n, new_points.len()).min();
            (old - new).max(0.0)
        })
        .sum();
    Ok(total / n_mc as f64)
}
