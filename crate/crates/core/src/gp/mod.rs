//! Gaussian-process regression with the VQE kernel family and baselines.

mod hyperopt;
mod kernel;
mod model;
mod sampling;

pub use hyperopt::{optimize_gamma, GammaGrid, HyperoptConfig, Schedule};
pub use kernel::{feature_map, gram, gram_sym, kernel_eval, kernel_grad, KernelConfig, KernelFamily};
pub use model::{pooled_variance, Dataset, GPModel};
pub use sampling::{posterior_sample, standard_normals, PosteriorGaussian, Sampler};

