use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::kernel::KernelConfig;
use crate::gp::model::GPModel;

/// Refit cadence written as `count*interval` segments joined by `+`, e.g.
/// `100*1+20*9+10*100`: 100 updates one step apart, then 20 updates nine
/// steps apart, and so on. The final interval repeats indefinitely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    segments: Vec<(usize, usize)>,
}

impl Schedule {
    pub fn new(segments: Vec<(usize, usize)>) -> Result<Self> {
        if segments.is_empty() || segments.iter().any(|&(_, every)| every == 0) {
            return Err(Error::InvalidArgument("schedule needs segments with positive intervals".into()));
        }
        Ok(Self { segments })
    }

    pub fn every_step() -> Self {
        Self { segments: vec![(1, 1)] }
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    /// Whether a refit is due at 1-based iteration `t`.
    pub fn is_due(&self, t: usize) -> bool {
        if t == 0 {
            return false;
        }
        let mut start = 0;
        for &(count, every) in &self.segments {
            let end = start + count * every;
            if t <= end {
                return (t - start) % every == 0;
            }
            start = end;
        }
        let every = self.segments.last().map_or(1, |s| s.1);
        (t - start) % every == 0
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.segments.iter().map(|(c, e)| format!("{c}*{e}")).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad schedule {s:?}"));
        let segments = s
            .split('+')
            .map(|seg| {
                let (c, e) = seg.trim().split_once('*').ok_or_else(bad)?;
                Ok((c.trim().parse().map_err(|_| bad())?, e.trim().parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments)
    }
}

/// Linear grid `max_gamma * i / steps` for `i = 1..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaGrid {
    pub steps: usize,
    pub max_gamma: f64,
}

impl GammaGrid {
    pub fn new(steps: usize, max_gamma: f64) -> Result<Self> {
        if steps == 0 || !(max_gamma > 0.0) {
            return Err(Error::InvalidArgument("gamma grid needs steps >= 1 and max_gamma > 0".into()));
        }
        Ok(Self { steps, max_gamma })
    }

    pub fn values(&self) -> Vec<f64> {
        (1..=self.steps).map(|i| self.max_gamma * i as f64 / self.steps as f64).collect()
    }
}

impl Default for GammaGrid {
    fn default() -> Self {
        Self { steps: 120, max_gamma: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperoptConfig {
    /// `None` keeps gamma fixed.
    pub grid: Option<GammaGrid>,
    pub interval: Schedule,
}

impl Default for HyperoptConfig {
    fn default() -> Self {
        Self { grid: Some(GammaGrid::default()), interval: "100*1+20*9+10*100".parse().expect("valid literal") }
    }
}

impl HyperoptConfig {
    pub fn fixed() -> Self {
        Self { grid: None, interval: Schedule::every_step() }
    }

    pub fn is_due(&self, t: usize) -> bool {
        self.grid.is_some() && self.interval.is_due(t)
    }
}

impl fmt::Display for HyperoptConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.grid {
            None => write!(f, "optim=none"),
            Some(g) => write!(f, "optim=grid,steps={},max_gamma={},interval={},loss=mll", g.steps, g.max_gamma, self.interval),
        }
    }
}

impl FromStr for HyperoptConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut grid = GammaGrid::default();
        let mut enabled = true;
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?} for {k}")));
            match k.trim() {
                "optim" => match v {
                    "grid" => enabled = true,
                    "none" | "fixed" => enabled = false,
                    other => return Err(Error::Parse(format!("unsupported hyperparameter optimizer {other:?}"))),
                },
                "steps" => grid.steps = num(v)? as usize,
                "max_gamma" => grid.max_gamma = num(v)?,
                "interval" => cfg.interval = v.parse()?,
                "loss" if v == "mll" => {}
                "loss" => return Err(Error::Parse(format!("unsupported loss {v:?}"))),
                other => return Err(Error::Parse(format!("unknown hyperopt key {other:?}"))),
            }
        }
        cfg.grid = if enabled { Some(GammaGrid::new(grid.steps, grid.max_gamma)?) } else { None };
        Ok(cfg)
    }
}

/// Kernel with gamma set to the grid point of highest marginal likelihood.
/// Ties go to the smaller gamma; grid points whose factorization fails are skipped.
pub fn optimize_gamma(model: &GPModel, grid: &GammaGrid, exec: Execution) -> Result<KernelConfig> {
    if model.data().is_empty() {
        return Ok(model.kernel().clone());
    }
    let gammas = grid.values();
    let scores = exec.map(gammas.len(), |i| {
        model
            .refit(model.kernel().with_gamma(gammas[i]))
            .and_then(|m| m.log_marginal_likelihood())
            .unwrap_or(f64::NEG_INFINITY)
    });
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    Ok(match best {
        Some(i) => model.kernel().with_gamma(gammas[i]),
        None => {
            log::warn!("no gamma on the grid gave a finite likelihood; keeping {}", model.kernel().gamma);
            model.kernel().clone()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::model::Dataset;

    #[test]
    fn default_schedule_shape() {
        let s: Schedule = "100*1+20*9+10*100".parse().unwrap();
        assert_eq!(s.to_string(), "100*1+20*9+10*100");
        let due: Vec<usize> = (1..=1500).filter(|&t| s.is_due(t)).collect();
        assert!(due[..100].iter().copied().eq(1..=100));
        assert_eq!(due[100], 109);
        assert_eq!(due[119], 280);
        assert_eq!(due[120], 380);
        assert_eq!(due[129], 1280);
        assert_eq!(due[130], 1380);
        assert!(!s.is_due(0));
    }

    #[test]
    fn schedule_parse_errors() {
        assert!("10".parse::<Schedule>().is_err());
        assert!("10*0".parse::<Schedule>().is_err());
        assert!("a*1".parse::<Schedule>().is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = "optim=grid,steps=120,max_gamma=20,interval=100*1+20*9+10*100,loss=mll";
        let cfg: HyperoptConfig = text.parse().unwrap();
        assert_eq!(cfg, HyperoptConfig::default());
        assert_eq!(cfg.to_string(), text);
        let fixed: HyperoptConfig = "optim=none".parse().unwrap();
        assert!(fixed.grid.is_none() && !fixed.is_due(1));
        assert!("loss=map".parse::<HyperoptConfig>().is_err());
        assert!("steps=0".parse::<HyperoptConfig>().is_err());
    }

    #[test]
    fn single_point_grid() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0.5, -0.5]).unwrap();
        let m = GPModel::fit(KernelConfig::vqe(1.0, 1.0).unwrap(), 0.01, data).unwrap();
        let k = optimize_gamma(&m, &GammaGrid::new(1, 3.5).unwrap(), Execution::Sequential).unwrap();
        assert_eq!(k.gamma, 3.5);
    }

    #[test]
    fn grid_values() {
        let g = GammaGrid::new(4, 2.0).unwrap();
        assert_eq!(g.values(), vec![0.5, 1.0, 1.5, 2.0]);
    }
}
