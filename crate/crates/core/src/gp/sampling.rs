use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_dim, Error, Result};

/// Finite-dimensional Gaussian over function values.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl PosteriorGaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_dim(mean.len(), cov.nrows())?;
        check_dim(mean.len(), cov.ncols())?;
        Ok(Self { mean, cov })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn variances(&self) -> Vec<f64> {
        self.cov.diagonal().iter().map(|v| v.max(0.0)).collect()
    }

    /// Marginal over a subset of indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            mean: DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]),
        }
    }

    /// A matrix `L` with `L L^T = cov` (up to jitter).
    ///
    /// Cholesky first. A covariance that is singular but PSD within rounding,
    /// which the low-rank VQE kernel produces routinely, gets an exact
    /// eigen-decomposition root instead of a jittered one. Anything more
    /// indefinite than that goes through jitter escalation.
    pub fn root(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        if n == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let scale = self.cov.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return Ok(DMatrix::zeros(n, n));
        }
        if let Some(c) = Cholesky::new(self.cov.clone()) {
            return Ok(c.unpack());
        }
        let eig = SymmetricEigen::new(self.cov.clone());
        let min = eig.eigenvalues.min();
        if min >= -1e-8 * scale {
            let mut v = eig.eigenvectors;
            for (j, lambda) in eig.eigenvalues.iter().enumerate() {
                v.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
            }
            return Ok(v);
        }
        crate::gp::model::cholesky_with_jitter(&self.cov).map(|(l, _)| l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    PlainMc,
    #[default]
    LowDiscrepancy,
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::PlainMc => "plain-mc",
            Sampler::LowDiscrepancy => "low-discrepancy",
        })
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain-mc" | "mc" => Ok(Sampler::PlainMc),
            "low-discrepancy" | "qmc" | "sobol" => Ok(Sampler::LowDiscrepancy),
            other => Err(Error::Parse(format!("unknown sampler {other:?}"))),
        }
    }
}

const SOBOL_MAX_POINTS: usize = 1 << 16;
const SOBOL_MAX_DIMS: usize = 256;

/// `n x dim` standard-normal matrix, one draw per row.
///
/// The low-discrepancy variant uses an Owen-scrambled Sobol sequence keyed by
/// one `u32` taken from `rng`; dimensions beyond 256 get a fresh key per block.
pub fn standard_normals(n: usize, dim: usize, sampler: Sampler, rng: &mut dyn RngCore) -> Result<DMatrix<f64>> {
    match sampler {
        Sampler::PlainMc => Ok(DMatrix::from_fn(n, dim, |_, _| rng.sample::<f64, _>(StandardNormal))),
        Sampler::LowDiscrepancy => {
            if n > SOBOL_MAX_POINTS {
                return Err(Error::InvalidArgument(format!("low-discrepancy sampler supports at most {SOBOL_MAX_POINTS} draws")));
            }
            let key = rng.next_u32();
            let normal = Normal::standard();
            // f32 outputs are multiples of 2^-24; shifting by half a cell keeps them inside (0, 1)
            let half_cell = 0.5 / (1u64 << 24) as f64;
            let mut z = DMatrix::zeros(n, dim);
            for j in 0..dim {
                let block = (j / SOBOL_MAX_DIMS) as u32;
                let seed = key ^ block.wrapping_mul(0x9E37_79B9);
                let dj = (j % SOBOL_MAX_DIMS) as u32;
                for i in 0..n {
                    let u = sobol_burley::sample(i as u32, dj, seed) as f64 + half_cell;
                    z[(i, j)] = normal.inverse_cdf(u);
                }
            }
            Ok(z)
        }
    }
}

/// `n` joint draws, returned as the rows of an `n x M` matrix.
pub fn posterior_sample(post: &PosteriorGaussian, n: usize, sampler: Sampler, rng: &mut dyn RngCore) -> Result<DMatrix<f64>> {
    let root = post.root()?;
    let z = standard_normals(n, post.len(), sampler, rng)?;
    Ok(draws_from_root(post.mean(), &root, &z))
}

fn draws_from_root(mean: &DVector<f64>, root: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = z * root.transpose();
    for mut row in out.row_iter_mut() {
        for (v, m) in row.iter_mut().zip(mean.iter()) {
            *v += m;
        }
    }
    out
}
