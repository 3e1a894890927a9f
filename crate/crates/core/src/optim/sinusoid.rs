use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c0 + c1 cos(theta) + c2 sin(theta)` and its minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub argmin_theta: f64,
}

impl SinusoidFit {
    pub fn from_coefficients(c0: f64, c1: f64, c2: f64) -> Self {
        let argmin_theta = if c1 == 0.0 && c2 == 0.0 { 0.0 } else { (-c2).atan2(-c1).rem_euclid(TAU) };
        // rem_euclid can round up to exactly TAU
        let argmin_theta = if argmin_theta >= TAU { 0.0 } else { argmin_theta };
        Self { c0, c1, c2, argmin_theta }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.c0 + self.c1 * theta.cos() + self.c2 * theta.sin()
    }

    pub fn amplitude(&self) -> f64 {
        self.c1.hypot(self.c2)
    }

    pub fn min_value(&self) -> f64 {
        self.c0 - self.amplitude()
    }

    /// Derivative at `theta`.
    pub fn slope(&self, theta: f64) -> f64 {
        -self.c1 * theta.sin() + self.c2 * theta.cos()
    }
}

/// Fit through values at `-2pi/3`, `0` and `2pi/3`.
pub fn fit_canonical(y_minus: f64, y0: f64, y_plus: f64) -> SinusoidFit {
    SinusoidFit::from_coefficients(
        // centred on y0 so equal inputs reproduce it exactly
        y0 + ((y_minus - y0) + (y_plus - y0)) / 3.0,
        -((y_minus - y0) + (y_plus - y0)) / 3.0,
        (y_plus - y_minus) / 3f64.sqrt(),
    )
}

/// Exact interpolation through three `(theta, value)` samples.
pub fn fit_sinusoid(samples: &[(f64, f64); 3]) -> Result<SinusoidFit> {
    let third = TAU / 3.0;
    let canonical = [-third, 0.0, third];
    if samples.iter().zip(canonical).all(|(s, c)| s.0 == c) {
        return Ok(fit_canonical(samples[0].1, samples[1].1, samples[2].1));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let gap = (samples[i].0 - samples[j].0).rem_euclid(TAU);
            if gap.min(TAU - gap) < 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "sample angles {} and {} coincide modulo 2pi",
                    samples[i].0, samples[j].0
                )));
            }
        }
    }
    let a = Matrix3::from_fn(|r, c| match c {
        0 => 1.0,
        1 => samples[r].0.cos(),
        _ => samples[r].0.sin(),
    });
    let y = Vector3::new(samples[0].1, samples[1].1, samples[2].1);
    let c = a.lu().solve(&y).ok_or_else(|| Error::Factorization("singular sinusoid system".into()))?;
    Ok(SinusoidFit::from_coefficients(c[0], c[1], c[2]))
}

/// Least-squares first-order fit to equally spaced samples `theta_k = 2 pi k / n`.
/// Returns the fit and the largest absolute residual.
pub fn fit_sinusoid_lsq(values: &[f64]) -> (SinusoidFit, f64) {
    let n = values.len() as f64;
    let theta = |k: usize| TAU * k as f64 / n;
    let c0 = values.iter().sum::<f64>() / n;
    let c1 = 2.0 / n * values.iter().enumerate().map(|(k, v)| v * theta(k).cos()).sum::<f64>();
    let c2 = 2.0 / n * values.iter().enumerate().map(|(k, v)| v * theta(k).sin()).sum::<f64>();
    let fit = SinusoidFit::from_coefficients(c0, c1, c2);
    let residual = values.iter().enumerate().map(|(k, v)| (fit.value(theta(k)) - v).abs()).fold(0.0, f64::max);
    (fit, residual)
}
