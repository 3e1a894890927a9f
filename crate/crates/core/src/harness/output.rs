use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::metrics::{Aggregate, Quantiles};
use crate::optim::{Checkpoint, TrialRecord};

pub const CSV_HEADER: [&str; 8] = ["method", "seed", "n_obs", "energy", "fidelity", "kappa", "gamma", "wall_ms"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Writes one row per checkpoint in record order.
pub fn write_csv<W: Write>(out: W, records: &[TrialRecord], zero_wall: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        for c in &r.checkpoints {
            let wall = if zero_wall { 0.0 } else { c.wall_ms };
            w.write_record([
                r.method.clone(),
                r.seed.to_string(),
                c.n_obs.to_string(),
                c.energy.to_string(),
                opt(c.fidelity),
                opt(c.kappa),
                opt(c.gamma),
                wall.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds records (without final points) from a results CSV.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}"))) };
    let maybe = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let mut records: Vec<TrialRecord> = Vec::new();
    for row in rd.records() {
        let row = row?;
        let method = &row[0];
        let seed: u64 = row[1].parse().map_err(|_| Error::Parse(format!("bad seed {:?}", &row[1])))?;
        let checkpoint = Checkpoint {
            n_obs: row[2].parse().map_err(|_| Error::Parse(format!("bad n_obs {:?}", &row[2])))?,
            energy: num(&row[3])?,
            fidelity: maybe(&row[4])?,
            kappa: maybe(&row[5])?,
            gamma: maybe(&row[6])?,
            wall_ms: num(&row[7])?,
        };
        match records.last_mut() {
            Some(r) if r.method == method && r.seed == seed => r.checkpoints.push(checkpoint),
            _ => records.push(TrialRecord {
                method: method.to_string(),
                seed,
                checkpoints: vec![checkpoint],
                final_x: Vec::new(),
                aborted: None,
            }),
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub method: String,
    pub seed: u64,
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub problem_hash: String,
    pub ground_energy: Option<f64>,
    pub config: ExperimentConfig,
    pub cells: Vec<CellStatus>,
    pub csv: String,
    pub svg: Option<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0).max(1e-300) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0).max(1e-300) * self.h
    }

    fn frame(&self, svg: &mut String, title: &str) {
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            self.x0, self.y0, self.w, self.h
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="13">{title}</text>"#, self.x0, self.y0 - 6.0);
        let labels = [
            (self.x0, self.y0 + self.h + 14.0, format!("{:.4}", self.xr.0)),
            (self.x0 + self.w - 30.0, self.y0 + self.h + 14.0, format!("{:.4}", self.xr.1)),
            (self.x0 - 48.0, self.y0 + self.h, format!("{:.3}", self.yr.0)),
            (self.x0 - 48.0, self.y0 + 10.0, format!("{:.3}", self.yr.1)),
        ];
        for (x, y, t) in labels {
            let _ = writeln!(svg, r#"<text x="{x:.1}" y="{y:.1}" font-size="10">{t}</text>"#);
        }
    }

    fn band(&self, svg: &mut String, xs: &[usize], q: &[Quantiles], color: &str) {
        let mut pts: Vec<String> = xs.iter().zip(q).map(|(&x, q)| format!("{:.1},{:.1}", self.px(x as f64), self.py(q.p75))).collect();
        pts.extend(xs.iter().zip(q).rev().map(|(&x, q)| format!("{:.1},{:.1}", self.px(x as f64), self.py(q.p25))));
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
        let line: Vec<String> = xs.iter().zip(q).map(|(&x, q)| format!("{:.1},{:.1}", self.px(x as f64), self.py(q.median))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
    }
}

/// Gaussian kernel density with Silverman's bandwidth.
pub fn kde(values: &[f64], at: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    if values.is_empty() {
        return vec![0.0; at.len()];
    }
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let q = crate::harness::metrics::quantiles(values);
    let spread = sd.min((q.p75 - q.p25) / 1.34);
    let spread = if spread > 0.0 { spread } else if sd > 0.0 { sd } else { 1e-3 };
    let bw = 0.9 * spread * n.powf(-0.2);
    let norm = 1.0 / (n * bw * (2.0 * std::f64::consts::PI).sqrt());
    at.iter().map(|&x| values.iter().map(|v| (-0.5 * ((x - v) / bw).powi(2)).exp()).sum::<f64>() * norm).collect()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// Median/quartile curves of energy and fidelity plus a density of final energies.
pub fn render_svg(groups: &[(String, Aggregate, Vec<f64>)], ground_energy: Option<f64>) -> String {
    let mut svg = String::new();
    let (width, height) = (1080.0, 360.0);
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let n_max = groups.iter().flat_map(|g| g.1.n_obs.last().copied()).max().unwrap_or(1) as f64;
    let n_min = groups.iter().flat_map(|g| g.1.n_obs.first().copied()).min().unwrap_or(0) as f64;
    let e_range = bounds(groups.iter().flat_map(|g| g.1.energy.iter().flat_map(|q| [q.p25, q.p75])).chain(ground_energy));
    let energy = Panel { x0: 60.0, y0: 30.0, w: 280.0, h: 260.0, xr: (n_min, n_max), yr: e_range };
    energy.frame(&mut svg, "energy vs observations");
    let fidelity = Panel { x0: 420.0, y0: 30.0, w: 280.0, h: 260.0, xr: (n_min, n_max), yr: (0.0, 1.0) };
    fidelity.frame(&mut svg, "fidelity vs observations");
    if let Some(e) = ground_energy {
        let y = energy.py(e);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
            energy.x0,
            energy.x0 + energy.w
        );
    }
    let finals: Vec<f64> = groups.iter().flat_map(|g| g.2.iter().copied()).collect();
    let f_range = bounds(finals.iter().copied().chain(ground_energy));
    let grid: Vec<f64> = (0..=200).map(|i| f_range.0 + (f_range.1 - f_range.0) * i as f64 / 200.0).collect();
    let densities: Vec<Vec<f64>> = groups.iter().map(|g| kde(&g.2, &grid)).collect();
    let d_max = densities.iter().flatten().copied().fold(1e-12, f64::max);
    let density = Panel { x0: 780.0, y0: 30.0, w: 260.0, h: 260.0, xr: f_range, yr: (0.0, d_max * 1.05) };
    density.frame(&mut svg, "final energy density");

    for (i, (name, agg, _)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        energy.band(&mut svg, &agg.n_obs, &agg.energy, color);
        if !agg.fidelity.is_empty() {
            fidelity.band(&mut svg, &agg.n_obs, &agg.fidelity, color);
        }
        let line: Vec<String> = grid.iter().zip(&densities[i]).map(|(&x, &d)| format!("{:.1},{:.1}", density.px(x), density.py(d))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{name}</text>"#, 70.0 + 130.0 * i as f64, height - 20.0);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::aggregate;

    fn records() -> Vec<TrialRecord> {
        vec![
            TrialRecord {
                method: "nft-seq".into(),
                seed: 3,
                checkpoints: vec![
                    Checkpoint { n_obs: 1, energy: -0.1, fidelity: Some(0.2), kappa: None, gamma: None, wall_ms: 0.5 },
                    Checkpoint { n_obs: 3, energy: -1.0 / 3.0, fidelity: Some(0.7), kappa: None, gamma: None, wall_ms: 1.5 },
                ],
                final_x: vec![0.0],
                aborted: None,
            },
            TrialRecord {
                method: "emicore".into(),
                seed: 3,
                checkpoints: vec![Checkpoint { n_obs: 1, energy: 2.0, fidelity: None, kappa: Some(1.0), gamma: Some(2.5), wall_ms: 0.1 }],
                final_x: vec![0.0],
                aborted: None,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rs = records();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rs, false).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,seed,n_obs,energy,fidelity,kappa,gamma,wall_ms\n"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rs.iter().zip(&back) {
            assert_eq!(a.checkpoints, b.checkpoints);
        }
        assert_eq!(aggregate(&rs[..1]).unwrap(), aggregate(&back[..1]).unwrap());
    }

    #[test]
    fn deterministic_mode_zeroes_wall_time() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &records(), true).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        assert!(back.iter().flat_map(|r| &r.checkpoints).all(|c| c.wall_ms == 0.0));
    }

    #[test]
    fn kde_integrates_to_one() {
        let values = [0.0, 0.3, 1.0, 1.2, 2.0];
        let grid: Vec<f64> = (0..4001).map(|i| -5.0 + 12.0 * i as f64 / 4000.0).collect();
        let d = kde(&values, &grid);
        let area: f64 = d.iter().sum::<f64>() * 12.0 / 4000.0;
        assert!((area - 1.0).abs() < 1e-3);
    }

    #[test]
    fn svg_renders() {
        let rs = records();
        let agg = aggregate(&rs[..1]).unwrap();
        let svg = render_svg(&[("nft-seq".into(), agg, vec![-1.0 / 3.0])], Some(-1.0));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("nft-seq"));
    }
}
