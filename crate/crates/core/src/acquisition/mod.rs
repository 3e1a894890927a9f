//! Acquisition functions: analytic EI, Monte Carlo noisy EI and EMICoRe.

mod ei;
mod emicore;

pub use ei::{expected_improvement, expected_improvement_grad, noisy_ei};
pub use emicore::{
    axis_posterior, core_set, emicore_select, emicore_value, grid_offsets, CoReSet, EmicoreChoice, EmicoreParams,
};

pub(crate) use emicore::axis_point;
