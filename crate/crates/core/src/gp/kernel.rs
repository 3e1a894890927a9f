use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `s0^2 prod_d (g^2 + 2 cos(x_d - x'_d)) / (g^2 + 2)`.
    Vqe,
    /// Sums `cos(v (x_d - x'_d))` for `v = 1..=V_d` in each factor.
    VqeHigherOrder,
    Rbf,
    Periodic,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Vqe => "vqe",
            KernelFamily::VqeHigherOrder => "vqe-higher-order",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Periodic => "periodic",
        }
    }

    pub fn has_feature_map(self) -> bool {
        matches!(self, KernelFamily::Vqe | KernelFamily::VqeHigherOrder)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vqe" => Ok(KernelFamily::Vqe),
            "vqe-higher-order" | "vqe-ho" => Ok(KernelFamily::VqeHigherOrder),
            "rbf" => Ok(KernelFamily::Rbf),
            "periodic" | "period" => Ok(KernelFamily::Periodic),
            other => Err(Error::Parse(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub sigma0_sq: f64,
    pub gamma: f64,
    /// Per-dimension order `V_d`; only read by the higher-order family.
    #[serde(default)]
    pub orders: Vec<usize>,
}

impl KernelConfig {
    pub fn new(family: KernelFamily, sigma0_sq: f64, gamma: f64) -> Result<Self> {
        let cfg = Self { family, sigma0_sq, gamma, orders: Vec::new() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn vqe(sigma0_sq: f64, gamma: f64) -> Result<Self> {
        Self::new(KernelFamily::Vqe, sigma0_sq, gamma)
    }

    pub fn higher_order(sigma0_sq: f64, gamma: f64, orders: Vec<usize>) -> Result<Self> {
        let cfg = Self { family: KernelFamily::VqeHigherOrder, sigma0_sq, gamma, orders };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0_sq > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma0_sq must be positive, got {}", self.sigma0_sq)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.orders.contains(&0) {
            return Err(Error::InvalidArgument("kernel orders must be at least 1".into()));
        }
        Ok(())
    }

    fn order(&self, d: usize) -> usize {
        match self.family {
            KernelFamily::VqeHigherOrder => self.orders.get(d).copied().unwrap_or(1),
            _ => 1,
        }
    }

    fn check_orders(&self, dim: usize) -> Result<()> {
        if self.family == KernelFamily::VqeHigherOrder {
            check_dim(dim, self.orders.len())?;
        }
        Ok(())
    }
}

/// Per-dimension factor of the VQE kernels and its derivative in `delta`.
fn vqe_factor(gamma_sq: f64, order: usize, delta: f64) -> (f64, f64) {
    let norm = 1.0 / (gamma_sq + 2.0 * order as f64);
    let (mut value, mut slope) = (gamma_sq, 0.0);
    for v in 1..=order {
        let (s, c) = (v as f64 * delta).sin_cos();
        value += 2.0 * c;
        slope -= 2.0 * v as f64 * s;
    }
    (value * norm, slope * norm)
}

pub fn kernel_eval(cfg: &KernelConfig, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    cfg.check_orders(x.len())?;
    Ok(eval_unchecked(cfg, x, y))
}

fn eval_unchecked(cfg: &KernelConfig, x: &[f64], y: &[f64]) -> f64 {
    let g2 = cfg.gamma * cfg.gamma;
    let k = match cfg.family {
        KernelFamily::Vqe | KernelFamily::VqeHigherOrder => x
            .iter()
            .zip(y)
            .enumerate()
            .map(|(d, (a, b))| vqe_factor(g2, cfg.order(d), a - b).0)
            .product(),
        KernelFamily::Rbf => {
            let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq / (2.0 * g2)).exp()
        }
        KernelFamily::Periodic => {
            let s: f64 = x.iter().zip(y).map(|(a, b)| (0.5 * (a - b)).sin().powi(2)).sum();
            (-s / (2.0 * g2)).exp()
        }
    };
    cfg.sigma0_sq * k
}

/// `k(x, y)` and its gradient with respect to `x`.
pub fn kernel_grad(cfg: &KernelConfig, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(x.len(), y.len())?;
    cfg.check_orders(x.len())?;
    let g2 = cfg.gamma * cfg.gamma;
    let dim = x.len();
    match cfg.family {
        KernelFamily::Vqe | KernelFamily::VqeHigherOrder => {
            let factors: Vec<(f64, f64)> = (0..dim).map(|d| vqe_factor(g2, cfg.order(d), x[d] - y[d])).collect();
            // prefix/suffix products avoid dividing by a factor that may vanish
            let mut prefix = vec![1.0; dim + 1];
            for d in 0..dim {
                prefix[d + 1] = prefix[d] * factors[d].0;
            }
            let mut grad = vec![0.0; dim];
            let mut suffix = 1.0;
            for d in (0..dim).rev() {
                grad[d] = cfg.sigma0_sq * prefix[d] * suffix * factors[d].1;
                suffix *= factors[d].0;
            }
            Ok((cfg.sigma0_sq * prefix[dim], grad))
        }
        KernelFamily::Rbf => {
            let k = eval_unchecked(cfg, x, y);
            Ok((k, x.iter().zip(y).map(|(a, b)| -k * (a - b) / g2).collect()))
        }
        KernelFamily::Periodic => {
            let k = eval_unchecked(cfg, x, y);
            Ok((k, x.iter().zip(y).map(|(a, b)| -k * (a - b).sin() / (4.0 * g2)).collect()))
        }
    }
}

/// Explicit feature vector with `k(x, y) = phi(x) . phi(y)`.
///
/// Each dimension contributes `(g, sqrt2 cos x, .., sqrt2 cos Vx, sqrt2 sin x, .., sqrt2 sin Vx)
/// / sqrt(g^2 + 2V)`; the factors are combined by a Kronecker product with
/// dimension 0 as the slowest index, then scaled by `sigma0`.
pub fn feature_map(cfg: &KernelConfig, x: &[f64]) -> Result<Vec<f64>> {
    if !cfg.family.has_feature_map() {
        return Err(Error::InvalidArgument(format!("{} kernel has no finite feature map", cfg.family)));
    }
    cfg.check_orders(x.len())?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut phi = vec![cfg.sigma0_sq.sqrt()];
    for (d, &xd) in x.iter().enumerate() {
        let order = cfg.order(d);
        let norm = 1.0 / (cfg.gamma * cfg.gamma + 2.0 * order as f64).sqrt();
        let mut local = Vec::with_capacity(1 + 2 * order);
        local.push(cfg.gamma * norm);
        local.extend((1..=order).map(|v| sqrt2 * (v as f64 * xd).cos() * norm));
        local.extend((1..=order).map(|v| sqrt2 * (v as f64 * xd).sin() * norm));
        phi = phi.iter().flat_map(|p| local.iter().map(move |l| p * l)).collect();
    }
    Ok(phi)
}

/// Cross-covariance matrix `k(a_i, b_j)`.
pub fn gram(cfg: &KernelConfig, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let Some(dim) = a.first().or(b.first()).map(|p| p.len()) else {
        return Ok(DMatrix::zeros(a.len(), b.len()));
    };
    for p in a.iter().chain(b) {
        check_dim(dim, p.len())?;
    }
    cfg.check_orders(dim)?;
    if cfg.family == KernelFamily::Vqe || cfg.family == KernelFamily::Periodic {
        let (ta, tb) = (Trig::new(a), Trig::new(b));
        let g2 = cfg.gamma * cfg.gamma;
        return Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
            let cos_delta = (0..dim).map(|d| ta.cos[i * dim + d] * tb.cos[j * dim + d] + ta.sin[i * dim + d] * tb.sin[j * dim + d]);
            if cfg.family == KernelFamily::Vqe {
                let norm = 1.0 / (g2 + 2.0);
                cfg.sigma0_sq * cos_delta.map(|c| (g2 + 2.0 * c) * norm).product::<f64>()
            } else {
                // sin^2(delta / 2) = (1 - cos delta) / 2
                let s: f64 = cos_delta.map(|c| 0.5 * (1.0 - c)).sum();
                cfg.sigma0_sq * (-s / (2.0 * g2)).exp()
            }
        }));
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| eval_unchecked(cfg, &a[i], &b[j])))
}

/// Symmetric Gram matrix of one point set.
pub fn gram_sym(cfg: &KernelConfig, a: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let mut k = gram(cfg, a, a)?;
    k.fill_lower_triangle_with_upper_triangle();
    Ok(k)
}

/// Cached `cos x_d`, `sin x_d` so a Gram entry needs no trigonometric calls.
#[derive(Debug, Clone, Default)]
pub(crate) struct Trig {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Trig {
    pub fn new(points: &[Vec<f64>]) -> Self {
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for p in points {
            for &v in p {
                let (s, c) = v.sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Self { cos, sin }
    }

    /// First-order VQE kernel between cached point `i` and a point with
    /// `cos`/`sin` given, writing its gradient with respect to that point.
    pub fn vqe_grad(&self, cfg: &KernelConfig, i: usize, cos: &[f64], sin: &[f64], grad: &mut [f64]) -> f64 {
        let dim = cos.len();
        let g2 = cfg.gamma * cfg.gamma;
        let norm = 1.0 / (g2 + 2.0);
        let (yc, ys) = (&self.cos[i * dim..(i + 1) * dim], &self.sin[i * dim..(i + 1) * dim]);
        let mut prefix = 1.0;
        for d in 0..dim {
            grad[d] = prefix;
            prefix *= (g2 + 2.0 * (cos[d] * yc[d] + sin[d] * ys[d])) * norm;
        }
        let mut suffix = cfg.sigma0_sq;
        for d in (0..dim).rev() {
            // d/dx cos(x - y) = -sin(x - y)
            let sin_delta = sin[d] * yc[d] - cos[d] * ys[d];
            grad[d] *= suffix * -2.0 * sin_delta * norm;
            suffix *= (g2 + 2.0 * (cos[d] * yc[d] + sin[d] * ys[d])) * norm;
        }
        cfg.sigma0_sq * prefix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_distance_gives_prior_variance() {
        let x = [0.3, 1.2, 5.0];
        for cfg in [
            KernelConfig::vqe(2.5, 0.7).unwrap(),
            KernelConfig::higher_order(2.5, 0.7, vec![1, 2, 3]).unwrap(),
            KernelConfig::new(KernelFamily::Rbf, 2.5, 0.7).unwrap(),
            KernelConfig::new(KernelFamily::Periodic, 2.5, 0.7).unwrap(),
        ] {
            assert!((kernel_eval(&cfg, &x, &x).unwrap() - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn vqe_half_period() {
        let cfg = KernelConfig::vqe(3.0, 2.0).unwrap();
        assert!((kernel_eval(&cfg, &[PI], &[0.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn feature_map_examples() {
        let cfg = KernelConfig::vqe(3.0, 1.0).unwrap();
        let phi = feature_map(&cfg, &[0.0]).unwrap();
        let want = [1.0, 2f64.sqrt(), 0.0];
        for (a, b) in phi.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(feature_map(&cfg, &[0.1, 0.2]).unwrap().len(), 9);
        let ho = KernelConfig::higher_order(1.0, 1.0, vec![2]).unwrap();
        assert_eq!(feature_map(&ho, &[0.4]).unwrap().len(), 5);
        let rbf = KernelConfig::new(KernelFamily::Rbf, 1.0, 1.0).unwrap();
        assert!(feature_map(&rbf, &[0.1]).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelConfig::vqe(0.0, 1.0).is_err());
        assert!(KernelConfig::vqe(1.0, -1.0).is_err());
        assert!(KernelConfig::higher_order(1.0, 1.0, vec![1, 0]).is_err());
        let cfg = KernelConfig::vqe(1.0, 1.0).unwrap();
        assert!(kernel_eval(&cfg, &[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn gram_fast_path_matches_pointwise() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![0.7 * i as f64, 1.3 - 0.4 * i as f64, 2.0]).collect();
        for fam in [KernelFamily::Vqe, KernelFamily::Periodic] {
            let cfg = KernelConfig::new(fam, 1.7, 0.9).unwrap();
            let k = gram(&cfg, &pts, &pts[1..4].to_vec()).unwrap();
            for i in 0..6 {
                for j in 0..3 {
                    let direct = kernel_eval(&cfg, &pts[i], &pts[j + 1]).unwrap();
                    assert!((k[(i, j)] - direct).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = vec![0.4, 2.9, 5.1];
        let y = vec![1.0, 0.2, 4.4];
        for cfg in [
            KernelConfig::vqe(1.3, 0.8).unwrap(),
            KernelConfig::higher_order(1.3, 0.8, vec![2, 1, 3]).unwrap(),
            KernelConfig::new(KernelFamily::Rbf, 1.3, 0.8).unwrap(),
            KernelConfig::new(KernelFamily::Periodic, 1.3, 0.8).unwrap(),
        ] {
            let (k, g) = kernel_grad(&cfg, &x, &y).unwrap();
            assert!((k - kernel_eval(&cfg, &x, &y).unwrap()).abs() < 1e-14);
            for d in 0..3 {
                let h = 1e-6;
                let mut xp = x.clone();
                xp[d] += h;
                let mut xm = x.clone();
                xm[d] -= h;
                let fd = (kernel_eval(&cfg, &xp, &y).unwrap() - kernel_eval(&cfg, &xm, &y).unwrap()) / (2.0 * h);
                assert!((fd - g[d]).abs() < 1e-8, "{:?} d={d}: {fd} vs {}", cfg.family, g[d]);
            }
        }
    }
}
