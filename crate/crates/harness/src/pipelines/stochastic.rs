//! Scalars advected by a frozen stochastic Navier–Stokes path, and the
//! ensemble energy balance of the stochastic solver itself.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reconlab_core::advdiff::{AdvDiffParams, FlowSpec};
use reconlab_core::spectral::{Grid, SpectralField, VectorField};
use reconlab_core::stochastic::{
    energy_balance_check, run_sns_path, sample_noise_increment, uniform_decay_experiment,
    FrozenSnsSource, NoiseSpec, SnsPath, UniformDecayParams,
};

use super::{err_string, grid2, horizon, PositivityRun, Values};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::Outcome;
use crate::jobs::{column, run_jobs, Job};
use crate::scaling::fit_reconnection_scaling;

pub const DECAY: &str = "decay";
pub const POSITIVITY: &str = "positivity";
pub const PATH: &str = "path";

/// Noise configurations `(α, K)` of the increment isometry check.
pub const ISOMETRY_CONFIGS: [(f64, f64); 3] = [(5.5, 4.0), (6.0, 10.0), (7.0, 6.0)];
pub const ISOMETRY_SAMPLES: usize = 10_000;

/// Noise on `grid` with the configured coloring; `noise_k = 0` picks the
/// 2/3 radius of `grid`.
pub fn noise_spec(cfg: &ExperimentConfig, grid: &Grid, seed: u64) -> reconlab_core::Result<NoiseSpec> {
    if cfg.noise_k == 0.0 {
        NoiseSpec::for_grid(grid, cfg.noise_alpha, seed, cfg.noise_amplitude)
    } else {
        NoiseSpec::new(cfg.noise_alpha, cfg.noise_k, seed, cfg.noise_amplitude)
    }
}

pub fn run_theorem_c(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sns_grid = Grid::new(&[cfg.noise_grid, cfg.noise_grid])?;
    let noise = noise_spec(cfg, &sns_grid, cfg.seeds[0])?;
    let u0 = VectorField::zeros(&sns_grid, 2);
    let grid = grid2(cfg)?;
    let rho0 = SpectralField::from_fn(&grid, |x| x[0].sin());
    let d = super::reconnection::datum(cfg);
    let b3 = SpectralField::from_fn(&grid, |x| d.b3(x));
    let flow = FlowSpec::external(FrozenSnsSource::factory(
        u0.clone(),
        noise.clone(),
        cfg.sns_dt,
        cfg.spinup,
    ));

    let mut jobs: Vec<Job> = cfg.decay_etas.iter().map(|&e| Job::eta(DECAY, e)).collect();
    jobs.extend(cfg.etas.iter().map(|&e| Job::eta(POSITIVITY, e)));
    let rows = run_jobs(&jobs, |j| {
        let eta = j.eta.expect("eta job");
        let t_max = horizon(cfg, eta)?;
        let mut v = Values::new();
        if j.group == DECAY {
            let mut p = UniformDecayParams::new(cfg.dt, t_max);
            p.sns_dt = cfg.sns_dt;
            p.spinup = cfg.spinup;
            p.cfl_max = cfg.cfl;
            let r = uniform_decay_experiment(&noise, &u0, &[eta], &rho0, &p).map_err(err_string)?;
            let row = &r.rows[0];
            v.insert("rate".into(), row.rate);
            v.insert("rate_r2".into(), row.r2);
            v.insert("prefactor".into(), row.prefactor);
            v.insert("final_ratio".into(), row.final_ratio);
            v.insert("samples".into(), row.samples as f64);
            if let Some(t) = row.t_dis {
                v.insert("t_dis".into(), t);
            }
        } else {
            let mut params = AdvDiffParams::new(eta, cfg.dt, t_max);
            params.cfl_max = cfg.cfl;
            let t = PositivityRun {
                b3: &b3,
                flow: &flow,
                params,
                m: cfg.m,
                slack: cfg.slack,
                check_rel: cfg.check_rel,
                min_spacing: cfg.snapshot_interval,
                rel_tol: cfg.rel_tol,
            }
            .run()?;
            v.insert("t_star".into(), t.t_star);
            v.insert("margin".into(), t.margin);
            v.insert("t_star_fast_normalized".into(), t.t_star / eta.ln().abs());
        }
        Ok(v)
    });
    let mut out = Outcome {
        rows,
        ..Default::default()
    };
    let (_, rates) = column(&out.rows, DECAY, "rate");
    if !rates.is_empty() {
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        out.scalars.insert("rate_spread".into(), hi / lo);
    }
    let (etas, t) = column(&out.rows, POSITIVITY, "t_star");
    match fit_reconnection_scaling(&etas, &t) {
        Ok(f) => {
            out.scaling.insert("sns".into(), f);
        }
        Err(e) => out.notes.push(format!("sns scaling: {e}")),
    }
    Ok(out)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `|mean - dt·C₀| / SE` of `‖ΔW_Q‖²` over many increments.
pub fn isometry_z(grid: &Grid, alpha: f64, k: f64, amplitude: f64, dt: f64, seed: u64, samples: usize) -> reconlab_core::Result<f64> {
    let spec = NoiseSpec::new(alpha, k, seed, amplitude)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(samples);
    for _ in 0..samples {
        xs.push(sample_noise_increment(&spec, grid, dt, &mut rng)?.l2_norm().powi(2));
    }
    let (mean, se) = mean_se(&xs);
    Ok((mean - dt * spec.c_ell(0.0)).abs() / se)
}

fn ensemble_csv(seeds: &[u64], paths: &[SnsPath]) -> Vec<u8> {
    let mut w = Vec::new();
    let list = seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
    let _ = writeln!(w, "# seeds={list}");
    let _ = writeln!(w, "t,mean_l2_u_sq,se_l2_u_sq,mean_h1_u_sq,se_h1_u_sq");
    for i in 0..paths[0].times.len() {
        let l2: Vec<f64> = paths.iter().map(|p| p.l2_u[i].powi(2)).collect();
        let h1: Vec<f64> = paths.iter().map(|p| p.h1_u[i].powi(2)).collect();
        let (ml, sl) = mean_se(&l2);
        let (mh, sh) = mean_se(&h1);
        let _ = writeln!(w, "{},{ml},{sl},{mh},{sh}", paths[0].times[i]);
    }
    w
}

pub fn run_energy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = grid2(cfg)?;
    let base = noise_spec(cfg, &grid, cfg.seeds[0])?;
    let c0 = base.c_ell(0.0);
    let u0 = VectorField::zeros(&grid, 2);
    let seeds: Vec<u64> = (0..cfg.paths as u64).map(|i| cfg.seeds[0].wrapping_add(i)).collect();
    let jobs: Vec<Job> = seeds
        .iter()
        .map(|s| Job {
            group: PATH.into(),
            label: format!("seed={s}"),
            eta: None,
        })
        .collect();
    let paths = Mutex::new(BTreeMap::new());
    let rows = run_jobs(&jobs, |j| {
        let seed: u64 = j.label["seed=".len()..].parse().map_err(err_string)?;
        let noise = NoiseSpec { seed, ..base.clone() };
        let p = run_sns_path(&u0, &noise, cfg.sns_dt, cfg.horizon, 1).map_err(err_string)?;
        let mut v = Values::new();
        v.insert("seed".into(), seed as f64);
        v.insert("final_l2_u".into(), *p.l2_u.last().expect("samples"));
        v.insert("final_h1_u".into(), *p.h1_u.last().expect("samples"));
        paths.lock().expect("path map").insert(seed, p);
        Ok(v)
    });
    let paths = paths.into_inner().expect("path map");
    let mut out = Outcome {
        rows,
        ..Default::default()
    };
    out.scalars.insert("c0".into(), c0);
    let done: Vec<SnsPath> = paths.values().cloned().collect();
    match energy_balance_check(&done, c0) {
        Ok(b) => {
            out.scalars.insert("energy_t".into(), b.t);
            out.scalars.insert("energy_residual".into(), b.residual);
            out.scalars.insert("energy_std_error".into(), b.std_error);
            out.scalars.insert("energy_paths".into(), b.paths as f64);
        }
        Err(e) => out.notes.push(format!("energy balance: {e}")),
    }
    if !done.is_empty() {
        let ok_seeds: Vec<u64> = paths.keys().copied().collect();
        out.artifacts.push(("ensemble.csv".into(), ensemble_csv(&ok_seeds, &done)));
    }
    for (seed, p) in &paths {
        let mut csv = Vec::new();
        p.write_csv(&mut csv)?;
        out.artifacts.push((format!("paths/seed_{seed}.csv"), csv));
    }
    for (i, &(alpha, k)) in ISOMETRY_CONFIGS.iter().enumerate() {
        let seed = cfg.seeds[0].wrapping_add(1_000_000 + i as u64);
        match isometry_z(&grid, alpha, k, 1.3, cfg.sns_dt, seed, ISOMETRY_SAMPLES) {
            Ok(z) => {
                out.scalars.insert(format!("isometry_{i}_z"), z);
            }
            Err(e) => out.notes.push(format!("isometry ({alpha}, {k}): {e}")),
        }
    }
    Ok(out)
}
