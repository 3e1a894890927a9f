use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gp::kernel::{gram, gram_sym, KernelConfig, KernelFamily, Trig};
use crate::gp::sampling::PosteriorGaussian;
use crate::sim::wrap_point;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        check_dim(inputs.len(), outputs.len())?;
        let mut data = Self::default();
        for (x, y) in inputs.into_iter().zip(outputs) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if let Some(first) = self.inputs.first() {
            check_dim(first.len(), x.len())?;
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite observation".into()));
        }
        self.inputs.push(wrap_point(&x));
        self.outputs.push(y);
        Ok(())
    }

    /// Keeps only the `n` most recent points.
    pub fn retain_last(&mut self, n: usize) {
        let drop = self.len().saturating_sub(n);
        self.inputs.drain(..drop);
        self.outputs.drain(..drop);
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

/// Lower Cholesky factor of `a + jitter * I`, escalating jitter from
/// `1e-10` to `1e-6` times the mean diagonal when the plain factorization fails.
pub(crate) fn cholesky_with_jitter(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if a.nrows() == 0 {
        return Ok((DMatrix::zeros(0, 0), 0.0));
    }
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok((c.unpack(), 0.0));
    }
    let scale = (a.trace() / a.nrows() as f64).abs().max(f64::MIN_POSITIVE);
    let mut rel = 1e-10;
    while rel <= 1e-6 * (1.0 + 1e-9) {
        let jitter = rel * scale;
        let mut shifted = a.clone();
        for i in 0..a.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            log::debug!("cholesky needed jitter {jitter:e}");
            return Ok((c.unpack(), jitter));
        }
        rel *= 10.0;
    }
    Err(Error::Factorization(format!("matrix of size {} not positive definite after jitter", a.nrows())))
}

/// Zero-mean GP conditioned on a dataset. Immutable once fitted.
#[derive(Debug, Clone)]
pub struct GPModel {
    kernel: KernelConfig,
    noise_sq: f64,
    data: Dataset,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
    trig: Trig,
}

impl GPModel {
    pub fn fit(kernel: KernelConfig, noise_sq: f64, data: Dataset) -> Result<Self> {
        kernel.validate()?;
        if !(noise_sq >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {noise_sq}")));
        }
        let mut k = gram_sym(&kernel, data.inputs())?;
        for i in 0..data.len() {
            k[(i, i)] += noise_sq;
        }
        let (chol, jitter) = cholesky_with_jitter(&k)?;
        let y = DVector::from_column_slice(data.outputs());
        let alpha = if data.is_empty() { y } else { solve_chol(&chol, &y) };
        let trig = if kernel.family == KernelFamily::Vqe { Trig::new(data.inputs()) } else { Trig::default() };
        Ok(Self { kernel, noise_sq, data, chol, alpha, jitter, trig })
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn noise_sq(&self) -> f64 {
        self.noise_sq
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Same data and noise, different kernel.
    pub fn refit(&self, kernel: KernelConfig) -> Result<Self> {
        Self::fit(kernel, self.noise_sq, self.data.clone())
    }

    /// Same kernel and noise, different data.
    pub fn refit_with(&self, data: Dataset) -> Result<Self> {
        Self::fit(self.kernel.clone(), self.noise_sq, data)
    }

    fn cross(&self, test: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if let (Some(d), Some(t)) = (self.data.dim(), test.first()) {
            check_dim(d, t.len())?;
        }
        gram(&self.kernel, self.data.inputs(), test)
    }

    pub fn posterior(&self, test: &[Vec<f64>]) -> Result<PosteriorGaussian> {
        let prior = gram_sym(&self.kernel, test)?;
        if self.data.is_empty() {
            return PosteriorGaussian::new(DVector::zeros(test.len()), prior);
        }
        let kx = self.cross(test)?;
        let mean = kx.tr_mul(&self.alpha);
        let v = self.chol.solve_lower_triangular(&kx).expect("triangular factor has positive diagonal");
        let mut cov = prior - v.tr_mul(&v);
        cov.fill_lower_triangle_with_upper_triangle();
        PosteriorGaussian::new(mean, cov)
    }

    pub fn posterior_mean(&self, test: &[Vec<f64>]) -> Result<Vec<f64>> {
        if self.data.is_empty() {
            return Ok(vec![0.0; test.len()]);
        }
        Ok(self.cross(test)?.tr_mul(&self.alpha).iter().copied().collect())
    }

    /// Marginal posterior variances, clamped at zero.
    pub fn posterior_variance(&self, test: &[Vec<f64>]) -> Result<Vec<f64>> {
        let prior = self.kernel.sigma0_sq;
        if self.data.is_empty() {
            return Ok(vec![prior; test.len()]);
        }
        let kx = self.cross(test)?;
        let v = self.chol.solve_lower_triangular(&kx).expect("triangular factor has positive diagonal");
        Ok(v.column_iter().map(|c| (prior - c.norm_squared()).max(0.0)).collect())
    }

    /// `(mean, variance)` at one point plus their gradients in `x`.
    pub fn predict_with_grad(&self, x: &[f64]) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        let dim = x.len();
        if self.data.is_empty() {
            return Ok((0.0, self.kernel.sigma0_sq, vec![0.0; dim], vec![0.0; dim]));
        }
        let n = self.data.len();
        let mut k = DVector::zeros(n);
        let mut dk = DMatrix::zeros(n, dim);
        if self.kernel.family == KernelFamily::Vqe {
            if let Some(d) = self.data.dim() {
                check_dim(d, dim)?;
            }
            let (sin, cos): (Vec<f64>, Vec<f64>) = x.iter().map(|v| v.sin_cos()).unzip();
            let mut g = vec![0.0; dim];
            for i in 0..n {
                k[i] = self.trig.vqe_grad(&self.kernel, i, &cos, &sin, &mut g);
                for d in 0..dim {
                    dk[(i, d)] = g[d];
                }
            }
        } else {
            for (i, xi) in self.data.inputs().iter().enumerate() {
                let (v, g) = crate::gp::kernel::kernel_grad(&self.kernel, x, xi)?;
                k[i] = v;
                for d in 0..dim {
                    dk[(i, d)] = g[d];
                }
            }
        }
        let mean = k.dot(&self.alpha);
        let dmean = dk.tr_mul(&self.alpha);
        let w = solve_chol(&self.chol, &k);
        let var = self.kernel.sigma0_sq - k.dot(&w);
        // stationary kernels: d k(x,x)/dx = 0
        let dvar = dk.tr_mul(&w) * -2.0;
        Ok((mean, var, dmean.iter().copied().collect(), dvar.iter().copied().collect()))
    }

    /// `log N(y | 0, K + noise I)`.
    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        let n = self.data.len();
        if n == 0 {
            return Err(Error::InvalidArgument("marginal likelihood needs at least one point".into()));
        }
        let y = DVector::from_column_slice(self.data.outputs());
        let log_det: f64 = self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        Ok(-0.5 * y.dot(&self.alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
    }
}

pub(crate) fn solve_chol(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let z = l.solve_lower_triangular(b).expect("triangular factor has positive diagonal");
    l.tr_solve_lower_triangular(&z).expect("triangular factor has positive diagonal")
}

/// Pools sample variances of repeated observations at a few points.
pub fn pooled_variance(groups: &[Vec<f64>]) -> Result<f64> {
    let mut num = 0.0;
    let mut dof = 0usize;
    for g in groups {
        if g.len() < 2 {
            continue;
        }
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        num += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        dof += g.len() - 1;
    }
    if dof == 0 {
        return Err(Error::InvalidArgument("need a group with at least two repeats".into()));
    }
    Ok(num / dof as f64)
}
