//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a gating criterion fails.
//!
//! `cargo test -p vqebo-core --test acceptance -- --include-ignored` also runs
//! the long non-gating convergence check. Any other argument is a substring
//! filter on criterion names.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqebo::acquisition::{emicore_value, noisy_ei};
use vqebo::gp::{kernel_eval, feature_map, posterior_sample, Dataset, GPModel, HyperoptConfig, KernelConfig, KernelFamily, Sampler};
use vqebo::harness::{run_experiment, ExperimentConfig, Method};
use vqebo::optim::{run_nft, AxisMode, InitialPoint, Inducer, RunConfig};
use vqebo::sim::{
    apply_circuit, build_ansatz, energy, ground_state, noise_variance, observe, parameter_shift_gradient, Boundary,
    ChainCouplings, ObservationConfig, ShotMode, VqeObjective,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn uniform(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Feature vector built dimension by dimension as an outer product, written
/// independently of the library's construction.
fn oracle_features(x: &[f64], sigma0_sq: f64, gamma: f64, orders: &[usize]) -> Vec<f64> {
    let mut phi = vec![sigma0_sq.sqrt()];
    for (d, &xd) in x.iter().enumerate() {
        let v = orders[d];
        let scale = (gamma * gamma + 2.0 * v as f64).sqrt();
        let mut local = vec![gamma / scale];
        for k in 1..=v {
            local.push(2f64.sqrt() * (k as f64 * xd).cos() / scale);
        }
        for k in 1..=v {
            local.push(2f64.sqrt() * (k as f64 * xd).sin() / scale);
        }
        let mut next = Vec::with_capacity(phi.len() * local.len());
        for p in &phi {
            for l in &local {
                next.push(p * l);
            }
        }
        phi = next;
    }
    phi
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn kernel_feature_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let d = rng.random_range(1..=4);
        let gamma = rng.random_range(0.1..5.0);
        let sigma0: f64 = rng.random_range(0.2..4.0);
        let (cfg, orders) = if i % 2 == 0 {
            (KernelConfig::vqe(sigma0 * sigma0, gamma).unwrap(), vec![1; d])
        } else {
            let orders: Vec<usize> = (0..d).map(|_| rng.random_range(1..=3)).collect();
            (KernelConfig::higher_order(sigma0 * sigma0, gamma, orders.clone()).unwrap(), orders)
        };
        let (x, y) = (uniform(&mut rng, d), uniform(&mut rng, d));
        let k = kernel_eval(&cfg, &x, &y).unwrap();
        let lib = dot(&feature_map(&cfg, &x).unwrap(), &feature_map(&cfg, &y).unwrap());
        let oracle = dot(&oracle_features(&x, cfg.sigma0_sq, gamma, &orders), &oracle_features(&y, cfg.sigma0_sq, gamma, &orders));
        worst = worst.max((k - lib).abs()).max((k - oracle).abs());
    }
    verdict(worst < 1e-10, format!("max |k - phi.phi'| = {worst:.2e} over 200 draws (tol 1e-10)"))
}

/// Residual of a three-coefficient least-squares fit, solved by normal equations.
fn sinusoid_residual(thetas: &[f64], values: &[f64]) -> (f64, DVector<f64>) {
    let a = DMatrix::from_fn(thetas.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => thetas[r].cos(),
        _ => thetas[r].sin(),
    });
    let y = DVector::from_column_slice(values);
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * &y)).unwrap();
    let res = (&a * &coef - y).abs().max();
    (res, coef)
}

fn function_form() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for q in [2, 3] {
        for l in [1, 2] {
            let spec = build_ansatz(q, l, Boundary::Open).unwrap();
            let h = ChainCouplings::heisenberg(q).build().unwrap();
            for _ in 0..20 {
                let x = uniform(&mut rng, spec.param_count());
                let axis = rng.random_range(0..spec.param_count());
                let thetas: Vec<f64> = (0..64).map(|k| TAU * k as f64 / 64.0).collect();
                let values: Vec<f64> = thetas
                    .iter()
                    .map(|t| {
                        let mut p = x.clone();
                        p[axis] += t;
                        energy(&spec, &h, &p).unwrap()
                    })
                    .collect();
                worst = worst.max(sinusoid_residual(&thetas, &values).0);
            }
        }
    }
    verdict(worst < 1e-9, format!("max 64-point fit residual {worst:.2e} (tol 1e-9)"))
}

fn parameter_shift() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = build_ansatz(2, 1, Boundary::Open).unwrap();
    let mut worst: f64 = 0.0;
    for h in [ChainCouplings::ising(2).build().unwrap(), ChainCouplings::heisenberg(2).build().unwrap()] {
        for _ in 0..20 {
            let x = uniform(&mut rng, spec.param_count());
            let g = parameter_shift_gradient(&spec, &h, &x).unwrap();
            for d in 0..x.len() {
                let step = 1e-5;
                let mut p = x.clone();
                p[d] += step;
                let mut m = x.clone();
                m[d] -= step;
                let fd = (energy(&spec, &h, &p).unwrap() - energy(&spec, &h, &m).unwrap()) / (2.0 * step);
                worst = worst.max((fd - g[d]).abs());
            }
        }
    }
    verdict(worst < 1e-6, format!("max |shift - central difference| {worst:.2e} (tol 1e-6)"))
}

fn shift_rule_on_samples() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<Vec<f64>> = (0..6).map(|_| uniform(&mut rng, 2)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x[0].sin() * x[1].cos() + 0.3 * x[1].sin()).collect();
    let model = GPModel::fit(KernelConfig::vqe(1.0, 1.5).unwrap(), 1e-4, Dataset::new(xs, ys).unwrap()).unwrap();
    let offsets: Vec<f64> = (0..8).map(|k| TAU * k as f64 / 8.0).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = uniform(&mut rng, 2);
        let axis = rng.random_range(0..2);
        let pts: Vec<Vec<f64>> = offsets
            .iter()
            .map(|a| {
                let mut p = x.clone();
                p[axis] += a;
                p
            })
            .collect();
        let post = model.posterior(&pts).unwrap();
        let draw = posterior_sample(&post, 1, Sampler::PlainMc, &mut rng).unwrap();
        let f: Vec<f64> = draw.row(0).iter().copied().collect();
        let (_, c) = sinusoid_residual(&offsets, &f);
        // d/dtheta (c0 + c1 cos + c2 sin) at 0 is c2; offsets 2 and 6 are +-pi/2
        assert!((offsets[2] - FRAC_PI_2).abs() < 1e-15);
        let shift = f[2] - f[6];
        worst = worst.max((2.0 * c[2] - shift).abs());
    }
    verdict(worst < 1e-6, format!("max |2 df/dx - shift difference| {worst:.2e} over 20 samples (tol 1e-6)"))
}

fn gp_blr_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for (d, n) in [(1, 5), (1, 20), (2, 8), (2, 20), (3, 12), (3, 20)] {
        let (s0, gamma, noise) = (rng.random_range(0.5..2.0), rng.random_range(0.5..3.0), 0.01);
        let cfg = KernelConfig::vqe(s0, gamma).unwrap();
        let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut rng, d)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let test: Vec<Vec<f64>> = (0..7).map(|_| uniform(&mut rng, d)).collect();
        let model = GPModel::fit(cfg, noise, Dataset::new(xs.clone(), ys.clone()).unwrap()).unwrap();
        let post = model.posterior(&test).unwrap();

        let orders = vec![1; d];
        let phi = |p: &Vec<f64>| oracle_features(p, s0, gamma, &orders);
        let m = 3usize.pow(d as u32);
        let big_phi = DMatrix::from_fn(n, m, |i, j| phi(&xs[i])[j]);
        let test_phi = DMatrix::from_fn(test.len(), m, |i, j| phi(&test[i])[j]);
        // weights ~ N(0, I); posterior precision I + Phi^T Phi / noise
        let precision = DMatrix::identity(m, m) + big_phi.transpose() * &big_phi / noise;
        let cov_w = precision.try_inverse().unwrap();
        let mean_w = &cov_w * big_phi.transpose() * DVector::from_vec(ys) / noise;
        let mean = &test_phi * mean_w;
        let cov = &test_phi * cov_w * test_phi.transpose();
        worst = worst.max((post.mean() - mean).abs().max()).max((post.cov() - cov).abs().max());
    }
    verdict(worst < 1e-8, format!("max |GP - feature-space regression| {worst:.2e} (tol 1e-8)"))
}

fn three_point_determination() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let x = uniform(&mut rng, 2);
        let axis = rng.random_range(0..2);
        let mut offsets = [0.0, rng.random_range(0.3..2.5), rng.random_range(3.0..6.0)];
        offsets.sort_by(f64::total_cmp);
        let on_axis = |a: f64| {
            let mut p = x.clone();
            p[axis] += a;
            p
        };
        let xs: Vec<Vec<f64>> = offsets.iter().map(|&a| on_axis(a)).collect();
        let ys = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = GPModel::fit(KernelConfig::vqe(1.0, 2.0).unwrap(), 1e-8, Dataset::new(xs, ys).unwrap()).unwrap();
        let line: Vec<Vec<f64>> = (0..100).map(|k| on_axis(TAU * k as f64 / 100.0)).collect();
        let sd = model.posterior_variance(&line).unwrap().into_iter().map(f64::sqrt).fold(0.0, f64::max);
        worst = worst.max(sd);
    }
    verdict(worst < 1e-3, format!("max posterior sd along the axis {worst:.2e} (tol 1e-3)"))
}

fn shot_noise() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = build_ansatz(2, 1, Boundary::Open).unwrap();
    let h = ChainCouplings::ising(2).build().unwrap();
    let obs = ObservationConfig::new(1024, ShotMode::BinomialPerTerm).unwrap();
    let psi = apply_circuit(&spec, &uniform(&mut rng, spec.param_count())).unwrap();
    let exact = vqebo::sim::expectation(&h, &psi).unwrap();
    let var = noise_variance(&h, &psi, &obs).unwrap();
    let n = 10_000;
    let draws: Vec<f64> = (0..n).map(|_| observe(&h, &psi, &obs, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let emp = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let z = (mean - exact).abs() / se;
    let rel = (emp / var - 1.0).abs();
    verdict(z <= 4.0 && rel <= 0.05, format!("mean off by {z:.2} SE (tol 4), variance off by {:.2}% (tol 5%)", 100.0 * rel))
}

fn noiseless_nft() -> Verdict {
    let spec = build_ansatz(2, 1, Boundary::Open).unwrap();
    let h = ChainCouplings::ising(2).build().unwrap();
    let e_gs = ground_state(&h).unwrap().energy;
    let metrics = |x: &[f64]| Ok(vqebo::optim::Metrics { energy: energy(&spec, &h, x)?, fidelity: None });
    let cfg = RunConfig { max_obs: usize::MAX, max_iter: Some(200), axis: AxisMode::Sequential, ..RunConfig::default() };
    let (mut converged, mut monotone) = (0, true);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = uniform(&mut rng, spec.param_count());
        let mut obj = VqeObjective::new(spec.clone(), h.clone(), ObservationConfig::exact(), ChaCha8Rng::seed_from_u64(seed));
        let y0 = energy(&spec, &h, &x0).unwrap();
        let (rec, _) = run_nft(&mut obj, &cfg, &InitialPoint { x: x0, y: y0 }, seed, &metrics, &mut rng).unwrap();
        monotone &= rec.checkpoints.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-12);
        converged += usize::from(rec.last().unwrap().energy - e_gs < 1e-6);
    }
    verdict(monotone && converged >= 45, format!("monotone: {monotone}; {converged}/50 seeds within 1e-6 of E_GS = {e_gs:.6} (need 45)"))
}

fn emicore_nei_reduction() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let d = 1 + trial % 3;
        let n = 3 + trial;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut rng, d)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = GPModel::fit(KernelConfig::vqe(1.0, 2.0).unwrap(), 0.01, Dataset::new(xs.clone(), ys).unwrap()).unwrap();
        let cands: Vec<Vec<f64>> = (0..2).map(|_| uniform(&mut rng, d)).collect();
        let mut updated = xs.clone();
        updated.extend(cands.iter().cloned());
        let sampler = if trial % 2 == 0 { Sampler::PlainMc } else { Sampler::LowDiscrepancy };
        let seed = 100 + trial as u64;
        let score = emicore_value(&model, &xs, &updated, 2, 256, sampler, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let nei = noisy_ei(&model, &cands, 256, sampler, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        worst = worst.max((2.0 * score - nei).abs());
    }
    verdict(worst < 1e-12, format!("max |M * EMICoRe - NEI| {worst:.2e} (tol 1e-12)"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn final_values(out: &vqebo::harness::ExperimentOutcome, m: Method) -> (Vec<f64>, Vec<f64>) {
    let rs = out.records_for(m);
    let last: Vec<_> = rs.iter().filter_map(|r| r.last()).collect();
    (last.iter().map(|c| c.energy).collect(), last.iter().filter_map(|c| c.fidelity).collect())
}

fn plain_bo() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::ising(3, 3);
    cfg.methods = vec![Method::BoEi];
    cfg.kernel = KernelConfig::new(KernelFamily::Vqe, 1.0, 2.0).unwrap();
    cfg.hyperopt = "optim=grid,steps=80,max_gamma=20,interval=75*1+100*25,loss=mll".parse::<HyperoptConfig>().unwrap();
    cfg.run.max_obs = 150;
    cfg.seeds = (0..20).collect();
    cfg.out_dir = dir.path().to_path_buf();
    cfg.deterministic = true;
    cfg.svg = false;
    let out = run_experiment(&cfg).unwrap();
    let (e, f) = final_values(&out, Method::BoEi);
    let med = median(f.clone());
    let aborted = out.any_aborted();
    verdict(!aborted && f.len() == 20 && med >= 0.85, format!("median fidelity {med:.3} over {} seeds (need >= 0.85); median energy {:.4}", f.len(), median(e)))
}

fn emicore_vs_nft() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::ising(5, 3);
    cfg.methods = vec![Method::NftSeq, Method::NftRand, Method::Emicore];
    cfg.run.max_obs = 600;
    cfg.seeds = (0..10).collect();
    cfg.out_dir = dir.path().to_path_buf();
    cfg.deterministic = true;
    cfg.svg = false;
    let out = run_experiment(&cfg).unwrap();
    let (e_emi, f_emi) = final_values(&out, Method::Emicore);
    let (e_seq, _) = final_values(&out, Method::NftSeq);
    let (e_rand, _) = final_values(&out, Method::NftRand);
    let (m_emi, m_seq, m_rand, m_fid) = (median(e_emi), median(e_seq), median(e_rand), median(f_emi));
    let pass = !out.any_aborted() && m_emi < m_seq && m_emi < m_rand && m_fid >= 0.80;
    verdict(pass, format!("median energy emicore {m_emi:.4} vs nft-seq {m_seq:.4}, nft-rand {m_rand:.4}; emicore median fidelity {m_fid:.3} (need >= 0.80)"))
}

fn long_run_convergence() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::ising(5, 3);
    cfg.methods = vec![Method::Emicore];
    cfg.run.max_obs = 6000;
    cfg.run.inducer = Inducer::LastSlack { retain: 100, slack: 20 };
    cfg.seeds = (0..5).collect();
    cfg.out_dir = dir.path().to_path_buf();
    cfg.deterministic = true;
    cfg.svg = false;
    let out = run_experiment(&cfg).unwrap();
    let (e, f) = final_values(&out, Method::Emicore);
    let m = median(f);
    verdict(!out.any_aborted() && m >= 0.95, format!("median fidelity {m:.3} after 6000 observations (target >= 0.95); median energy {:.4}", median(e)))
}

type Criterion = (u32, &'static str, bool, fn() -> Verdict);

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let long = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 12] = [
        (1, "kernel_feature_map_equivalence", true, kernel_feature_equivalence),
        (2, "axis_function_is_first_order_sinusoid", true, function_form),
        (3, "parameter_shift_matches_finite_differences", true, parameter_shift),
        (4, "posterior_samples_obey_parameter_shift", true, shift_rule_on_samples),
        (5, "gp_matches_feature_space_regression", true, gp_blr_equivalence),
        (6, "three_points_determine_an_axis", true, three_point_determination),
        (7, "shot_noise_moments", true, shot_noise),
        (8, "noiseless_nft_converges", true, noiseless_nft),
        (9, "emicore_reduces_to_noisy_ei", true, emicore_nei_reduction),
        (10, "plain_bo_reaches_fidelity", true, plain_bo),
        (11, "emicore_beats_nft_baselines", true, emicore_vs_nft),
        (12, "long_run_converges_non_gating", false, long_run_convergence),
    ];
    let mut failed = 0;
    for (id, name, gating, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        if !gating && !long {
            println!("criterion {id:02} {name}: SKIPPED (non-gating; pass --include-ignored to run)");
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let status = if v.pass { "PASS" } else if gating { "FAIL" } else { "FAIL (non-gating)" };
        println!("criterion {id:02} {name}: {status} - {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
        if !v.pass && gating {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
}
