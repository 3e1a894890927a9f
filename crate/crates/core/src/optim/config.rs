use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::EmicoreParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisMode {
    #[default]
    Sequential,
    Random,
}

/// Which observations the GP keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inducer {
    #[default]
    None,
    /// Once `retain + slack` points are held, drop the `slack` oldest.
    LastSlack { retain: usize, slack: usize },
}

impl Inducer {
    /// Number of leading (oldest) points to discard from a set of size `n`.
    pub fn excess(&self, n: usize) -> usize {
        match *self {
            Inducer::None => 0,
            Inducer::LastSlack { retain, slack } if n >= retain + slack => n - retain,
            Inducer::LastSlack { .. } => 0,
        }
    }
}

impl fmt::Display for Inducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inducer::None => f.write_str("none"),
            Inducer::LastSlack { retain, slack } => write!(f, "last_slack:retain={retain}:slack={slack}"),
        }
    }
}

impl FromStr for Inducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        match parts.next().unwrap_or_default() {
            "" | "none" => Ok(Inducer::None),
            "last_slack" => {
                let (mut retain, mut slack) = (100, 20);
                for p in parts {
                    let (k, v) = p.split_once('=').ok_or_else(|| Error::Parse(format!("bad inducer option {p:?}")))?;
                    let v: usize = v.parse().map_err(|_| Error::Parse(format!("bad inducer value {v:?}")))?;
                    match k {
                        "retain" => retain = v,
                        "slack" => slack = v,
                        other => return Err(Error::Parse(format!("unknown inducer option {other:?}"))),
                    }
                }
                if retain < 2 || slack == 0 {
                    return Err(Error::InvalidArgument("last_slack needs retain >= 2 and slack >= 1".into()));
                }
                Ok(Inducer::LastSlack { retain, slack })
            }
            other => Err(Error::Parse(format!("unknown inducer {other:?}"))),
        }
    }
}

/// Confident-region threshold schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRule {
    pub initial: f64,
    /// Averaging window `T_Ave`.
    pub t_ave: usize,
    /// Floor coefficient on the noise standard deviation.
    pub c0: f64,
    /// Scale on the average energy reduction.
    pub c1: f64,
}

impl Default for KappaRule {
    fn default() -> Self {
        Self { initial: 1.0, t_ave: 10, c0: 0.0, c1: 1.0 }
    }
}

impl KappaRule {
    /// Threshold after a window whose incumbent scores went from `mu_then` to `mu_now`.
    pub fn update(&self, mu_then: f64, mu_now: f64, noise_sd: f64) -> f64 {
        let floor = (self.c0 * noise_sd).max(0.0);
        floor.max(self.c1 * (mu_then - mu_now) / self.t_ave as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Observation budget, initial point included.
    pub max_obs: usize,
    /// Optional cap on iterations.
    pub max_iter: Option<usize>,
    /// Plain NFT steps before the acquisition takes over.
    pub t_nft: usize,
    /// NFT reset interval; `None` disables resets.
    pub t_reset: Option<usize>,
    pub kappa: KappaRule,
    pub axis: AxisMode,
    pub inducer: Inducer,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_obs: 600,
            max_iter: None,
            t_nft: 0,
            t_reset: Some(32),
            kappa: KappaRule::default(),
            axis: AxisMode::Sequential,
            inducer: Inducer::None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_obs == 0 || self.kappa.t_ave == 0 || self.t_reset == Some(0) {
            return Err(Error::InvalidArgument("max_obs, t_ave and t_reset must be positive".into()));
        }
        if !(self.kappa.initial >= 0.0) || self.kappa.c0 < 0.0 || self.kappa.c1 < 0.0 {
            return Err(Error::InvalidArgument("kappa settings must be non-negative".into()));
        }
        Ok(())
    }
}

/// Acquisition option string such as
/// `func=ei,optim=emicore,pairsize=20,gridsize=100,corethresh=1.0,...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcqParams {
    pub emicore: EmicoreParams,
    pub kappa: KappaRule,
    pub t_nft: usize,
    pub axis: AxisMode,
}

impl Default for AcqParams {
    fn default() -> Self {
        Self { emicore: EmicoreParams::default(), kappa: KappaRule::default(), t_nft: 0, axis: AxisMode::Sequential }
    }
}

impl AcqParams {
    /// Copies the run-level settings into `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        cfg.kappa = self.kappa;
        cfg.t_nft = self.t_nft;
        cfg.axis = self.axis;
    }
}

impl fmt::Display for AcqParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "func=ei,optim=emicore,pairsize={},gridsize={},corethresh={},corethresh_width={},coremin_scale={},corethresh_scale={},samplesize={},smo-steps={},smo-axis={}",
            self.emicore.j_sg,
            self.emicore.j_og,
            self.kappa.initial,
            self.kappa.t_ave,
            self.kappa.c0,
            self.kappa.c1,
            self.emicore.n_mc,
            self.t_nft,
            if self.axis == AxisMode::Sequential { "True" } else { "False" },
        )
    }
}

impl FromStr for AcqParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Self::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
            let float = || v.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?} for {k}")));
            let int = || v.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {v:?} for {k}")));
            match k {
                "func" if v == "ei" => {}
                "optim" if v == "emicore" => {}
                "func" | "optim" => return Err(Error::Parse(format!("unsupported {k}={v}"))),
                "pairsize" => p.emicore.j_sg = int()?,
                "gridsize" => p.emicore.j_og = int()?,
                "samplesize" => p.emicore.n_mc = int()?,
                "corecap" => p.emicore.core_cap = int()?,
                "corethresh" => p.kappa.initial = float()?,
                "corethresh_width" => p.kappa.t_ave = int()?,
                "coremin_scale" => p.kappa.c0 = float()?,
                "corethresh_scale" => p.kappa.c1 = float()?,
                "smo-steps" => p.t_nft = int()?,
                "smo-axis" => {
                    p.axis = match v.to_ascii_lowercase().as_str() {
                        "true" | "1" => AxisMode::Sequential,
                        "false" | "0" => AxisMode::Random,
                        _ => return Err(Error::Parse(format!("bad boolean {v:?} for smo-axis"))),
                    }
                }
                other => return Err(Error::Parse(format!("unknown acquisition key {other:?}"))),
            }
        }
        p.emicore.validate()?;
        Ok(p)
    }
}
