//! NFT, NFT with EMICoRe, and plain EI-based BO.

mod bo;
mod config;
mod emicore;
mod nft;
mod record;
mod sinusoid;

use crate::error::Result;

pub use bo::{incumbent, maximize_ei, run_plain_bo, EiSearch};
pub use config::{AcqParams, AxisMode, Inducer, KappaRule, RunConfig};
pub use emicore::{run_nft_emicore, SurrogateConfig};
pub use nft::{run_nft, AxisCursor};
pub use record::{Checkpoint, InitialPoint, Metrics, MetricsFn, TrialRecord};
pub use sinusoid::{fit_canonical, fit_sinusoid, fit_sinusoid_lsq, SinusoidFit};

/// A noisy black-box objective that counts its evaluations.
pub trait Objective {
    fn dim(&self) -> usize;
    fn observe(&mut self, x: &[f64]) -> Result<f64>;
    fn observations(&self) -> usize;
}
