use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Metrics, TrialRecord};
use crate::sim::{apply_circuit, expectation, CircuitSpec, GroundState, Hamiltonian};

/// Noiseless energy at `x`, and ground-space fidelity when a ground state is known.
pub fn evaluate_metrics(x: &[f64], spec: &CircuitSpec, h: &Hamiltonian, ground: Option<&GroundState>) -> Result<Metrics> {
    let psi = apply_circuit(spec, x)?;
    let energy = expectation(h, &psi)?;
    let fidelity = ground.map(|g| g.fidelity(&psi)).transpose()?;
    Ok(Metrics { energy, fidelity })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quantiles(values: &[f64]) -> Quantiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Quantiles { p25: quantile_sorted(&v, 0.25), median: quantile_sorted(&v, 0.5), p75: quantile_sorted(&v, 0.75) }
}

/// Piecewise-linear interpolation of `(n, value)` knots, flat beyond the ends.
fn interpolate(knots: &[(usize, f64)], n: usize) -> f64 {
    let i = knots.partition_point(|k| k.0 <= n);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[i - 1].1;
    }
    let (a, b) = (knots[i - 1], knots[i]);
    a.1 + (b.1 - a.1) * (n - a.0) as f64 / (b.0 - a.0) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_obs: Vec<usize>,
    pub energy: Vec<Quantiles>,
    /// Empty when any record lacks fidelities.
    pub fidelity: Vec<Quantiles>,
}

/// Per-observation-count median and quartiles across records, on the grid
/// from the smallest first count to the largest last count.
pub fn aggregate(records: &[TrialRecord]) -> Result<Aggregate> {
    let usable: Vec<&TrialRecord> = records.iter().filter(|r| !r.checkpoints.is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::InvalidArgument("nothing to aggregate".into()));
    }
    let lo = usable.iter().map(|r| r.checkpoints[0].n_obs).min().unwrap_or(0);
    let hi = usable.iter().map(|r| r.checkpoints.last().map_or(0, |c| c.n_obs)).max().unwrap_or(0);
    aggregate_on(records, &(lo..=hi).collect::<Vec<_>>())
}

pub fn aggregate_on(records: &[TrialRecord], grid: &[usize]) -> Result<Aggregate> {
    let usable: Vec<&TrialRecord> = records.iter().filter(|r| !r.checkpoints.is_empty()).collect();
    if usable.is_empty() || grid.is_empty() {
        return Err(Error::InvalidArgument("nothing to aggregate".into()));
    }
    let energy_knots: Vec<Vec<(usize, f64)>> =
        usable.iter().map(|r| r.checkpoints.iter().map(|c| (c.n_obs, c.energy)).collect()).collect();
    let fidelity_knots: Option<Vec<Vec<(usize, f64)>>> = usable
        .iter()
        .map(|r| r.checkpoints.iter().map(|c| c.fidelity.map(|f| (c.n_obs, f))).collect::<Option<Vec<_>>>())
        .collect();
    let across = |knots: &[Vec<(usize, f64)>], n: usize| quantiles(&knots.iter().map(|k| interpolate(k, n)).collect::<Vec<_>>());
    Ok(Aggregate {
        n_obs: grid.to_vec(),
        energy: grid.iter().map(|&n| across(&energy_knots, n)).collect(),
        fidelity: fidelity_knots.map_or_else(Vec::new, |k| grid.iter().map(|&n| across(&k, n)).collect()),
    })
}
