//! Reconnection experiments for the perturbed datum: zero scan at `t = 0`,
//! short-time persistence of the tracked null, and reconnection times from
//! the positivity criterion (reduced mode) or the full zero set (full mode).

use reconlab_core::advdiff::{AdvDiffParams, FlowSpec};
use reconlab_core::mhd3d::{make_theorem_a_data, MhdParams, MhdState, MhdStepper, TheoremAData};
use reconlab_core::spectral::{Grid, SpectralField, VectorField};
use reconlab_core::topology::{
    evaluate_snapshot, find_zeros, persistence_check, reconnection_time, torus_distance, Criterion,
    ZeroClass, ZeroFinderConfig, ZeroRecord,
};

use super::{err_string, flow_spec, grid2, horizon, step_size, PositivityRun, Values};
use crate::config::{ExperimentConfig, FlowChoice, Mode};
use crate::error::Result;
use crate::experiment::Outcome;
use crate::jobs::{column, run_jobs, Job, Row};
use crate::scaling::fit_reconnection_scaling;

pub const PERSISTENCE: &str = "persistence";
pub const POSITIVITY: &str = "positivity";
pub const STRICT: &str = "strict";

pub fn datum(cfg: &ExperimentConfig) -> TheoremAData {
    TheoremAData::new(cfg.m, cfg.eps, cfg.x_star)
}

fn grid3(cfg: &ExperimentConfig) -> reconlab_core::Result<Grid> {
    Grid::new(&[cfg.grid3; 3])
}

/// One JSON object per line.
pub fn zeros_jsonl(zeros: &[ZeroRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for z in zeros {
        out.extend(serde_json::to_vec(z).expect("zero records serialize"));
        out.push(b'\n');
    }
    out
}

pub struct DatumScan {
    pub zeros: Vec<ZeroRecord>,
    /// Torus distance to `x*` and the closest zero.
    pub nearest: Option<(f64, ZeroRecord)>,
}

/// Zeros of the datum on the 3D grid and the one closest to `x*`.
pub fn scan_datum(cfg: &ExperimentConfig) -> reconlab_core::Result<DatumScan> {
    let g = grid3(cfg)?;
    let (_, b) = make_theorem_a_data(&datum(cfg), &g)?;
    let zeros = find_zeros(&b, &ZeroFinderConfig::for_datum(cfg.m, cfg.eps))?;
    let nearest = zeros
        .iter()
        .map(|z| (torus_distance(&z.location, &cfg.x_star, g.periods()), z.clone()))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DatumScan { zeros, nearest })
}

/// Tracks the null from `x*` under 3D MHD until it is lost or the
/// persistence horizon is reached.
fn persistence(cfg: &ExperimentConfig, eta: f64) -> Result<Values, String> {
    let g = grid3(cfg).map_err(err_string)?;
    let (u, b) = make_theorem_a_data(&datum(cfg), &g).map_err(err_string)?;
    let stepper = MhdStepper::new(&g, &MhdParams::new(eta, cfg.mhd_dt, cfg.persistence_horizon))
        .map_err(err_string)?;
    let zcfg = ZeroFinderConfig::for_datum(cfg.m, cfg.eps);
    let mut state = MhdState { u, b, time: 0.0 };
    let per_snapshot = ((cfg.snapshot_interval / cfg.mhd_dt).round() as usize).max(1);
    let total = (cfg.persistence_horizon / cfg.mhd_dt).round() as usize;
    let mut x = cfg.x_star;
    let mut window = 0.0;
    let mut held = true;
    let mut done = 0;
    loop {
        let snap = [(state.time, state.b.clone())];
        let p = persistence_check(&snap, x, cfg.persistence_radius, &zcfg).map_err(err_string)?;
        if !p.held {
            held = false;
            break;
        }
        x = p.track[0].1;
        window = p.last_good_time;
        if done >= total {
            break;
        }
        let n = per_snapshot.min(total - done);
        stepper.advance(&mut state, n).map_err(err_string)?;
        done += n;
    }
    let mut v = Values::new();
    v.insert("persistence_window".into(), window);
    v.insert("persistence_held".into(), held as u8 as f64);
    v.insert("persistence_drift".into(), torus_distance(&x, &cfg.x_star, g.periods()));
    Ok(v)
}

fn positivity(cfg: &ExperimentConfig, flow: &FlowSpec, grid: &Grid, eta: f64) -> Result<Values, String> {
    let d = datum(cfg);
    let b3 = SpectralField::from_fn(grid, |x| d.b3(x));
    let dt = step_size(cfg, flow, grid).map_err(err_string)?;
    let t_max = horizon(cfg, eta)?;
    let mut params = AdvDiffParams::new(eta, dt, t_max);
    params.cfl_max = cfg.cfl.max(params.cfl_max);
    let run = PositivityRun {
        b3: &b3,
        flow,
        params,
        m: cfg.m,
        slack: cfg.slack,
        check_rel: cfg.check_rel,
        min_spacing: cfg.snapshot_interval,
        rel_tol: cfg.rel_tol,
    };
    let t = run.run()?;
    let mut v = Values::new();
    v.insert("t_star".into(), t.t_star);
    v.insert("margin".into(), t.margin);
    v.insert("checks".into(), t.checks as f64);
    v.insert("t_star_normalized".into(), t.t_star * eta.sqrt() / eta.ln().abs());
    if cfg.compare_still && cfg.flow != FlowChoice::Still {
        // U = 0 is integrated exactly, so the step only sets the check spacing
        let still = FlowSpec::still();
        let mut params = AdvDiffParams::new(eta, dt.max(1e-3 / eta), t_max);
        params.cfl_max = run.params.cfl_max;
        let s = PositivityRun {
            flow: &still,
            params,
            ..run
        }
        .run()?;
        v.insert("t_star_still".into(), s.t_star);
        v.insert("still_ratio".into(), s.t_star / t.t_star);
    }
    Ok(v)
}

/// Full 3D run: the first time the field has no zeros at all.
fn strict(cfg: &ExperimentConfig, eta: f64) -> Result<Values, String> {
    let g = grid3(cfg).map_err(err_string)?;
    let (u, b) = make_theorem_a_data(&datum(cfg), &g).map_err(err_string)?;
    let t_max = horizon(cfg, eta)?;
    let params = MhdParams::new(eta, cfg.mhd_dt, t_max);
    let stepper = MhdStepper::new(&g, &params).map_err(err_string)?;
    let zcfg = ZeroFinderConfig::for_datum(cfg.m, cfg.eps);
    let criterion = Criterion::StrictZeroSet(zcfg.clone());
    let positivity = Criterion::PositivityB3 { slack: cfg.slack };
    let mut state = MhdState { u, b, time: 0.0 };
    let first = evaluate_snapshot(0.0, &state.b, &criterion, cfg.m).map_err(err_string)?;
    let mut v = Values::new();
    v.insert("initial_zeros".into(), first.n_zeros.unwrap_or(0) as f64);
    if first.holds {
        v.insert("t_star_strict".into(), 0.0);
        return Ok(v);
    }
    let total = (t_max / cfg.mhd_dt - 1e-9).ceil() as usize;
    let mut prev = state.clone();
    let mut next_check = cfg.snapshot_interval;
    let mut t_positivity = None;
    let mut done = 0;
    while done < total {
        let target = ((next_check / cfg.mhd_dt - 1e-9).ceil() as usize).clamp(done + 1, total);
        stepper.advance(&mut state, target - done).map_err(err_string)?;
        done = target;
        let t = state.time;
        if t_positivity.is_none()
            && evaluate_snapshot(t, &state.b, &positivity, cfg.m).map_err(err_string)?.holds
        {
            t_positivity = Some(t);
        }
        let row = evaluate_snapshot(t, &state.b, &criterion, cfg.m).map_err(err_string)?;
        if row.holds {
            let refine_stepper = MhdStepper::new(&g, &params).map_err(err_string)?;
            let base = prev.clone();
            // the MHD stepper has a fixed step, so refinements snap to it
            let mut refine = |t0: f64, _b: &VectorField, target: f64| {
                let mut s = base.clone();
                let n = ((target - t0) / cfg.mhd_dt).round() as usize;
                refine_stepper.advance(&mut s, n)?;
                Ok(s.b)
            };
            let snaps = vec![(prev.time, prev.b.clone()), (t, state.b.clone())];
            let report = reconnection_time(&snaps, &criterion, cfg.m, Some(&mut refine), cfg.rel_tol)
                .map_err(err_string)?;
            v.insert(
                "t_star_strict".into(),
                report.t_first_no_zero.ok_or("bisection lost the crossing")?,
            );
            if let Some(tp) = t_positivity {
                v.insert("t_positivity_3d".into(), tp);
            }
            return Ok(v);
        }
        prev = state.clone();
        next_check = (t * (1.0 + cfg.check_rel)).max(t + cfg.snapshot_interval);
    }
    Err(format!("zeros persist up to t = {t_max}"))
}

fn scaling_fit(out: &mut Outcome, name: &str, group: &str, key: &str) {
    let (etas, t) = column(&out.rows, group, key);
    match fit_reconnection_scaling(&etas, &t) {
        Ok(f) => {
            out.scaling.insert(name.to_string(), f);
        }
        Err(e) => out.notes.push(format!("{name} scaling: {e}")),
    }
}

fn spread(rows: &[Row], group: &str, key: &str) -> Option<f64> {
    let (_, v) = column(rows, group, key);
    if v.is_empty() {
        return None;
    }
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Some((hi - lo) / mean)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let DatumScan { zeros, nearest } = scan_datum(cfg)?;
    out.scalars.insert("datum_zeros".into(), zeros.len() as f64);
    if let Some((dist, z)) = &nearest {
        out.scalars.insert("datum_zero_distance".into(), *dist);
        out.scalars.insert("datum_zero_residual".into(), z.residual);
        out.scalars
            .insert("datum_zero_hyperbolic".into(), (z.class == ZeroClass::Hyperbolic) as u8 as f64);
    }
    out.artifacts.push(("zeros_t0.jsonl".into(), zeros_jsonl(&zeros)));

    if cfg.mode == Mode::Full {
        let jobs: Vec<Job> = cfg.full_etas.iter().map(|&e| Job::eta(STRICT, e)).collect();
        out.rows = run_jobs(&jobs, |j| strict(cfg, j.eta.expect("eta job")));
        scaling_fit(&mut out, "strict", STRICT, "t_star_strict");
        return Ok(out);
    }

    let flow = flow_spec(cfg)?;
    let grid = grid2(cfg)?;
    let mut jobs: Vec<Job> = cfg.etas.iter().map(|&e| Job::eta(PERSISTENCE, e)).collect();
    jobs.extend(cfg.etas.iter().map(|&e| Job::eta(POSITIVITY, e)));
    out.rows = run_jobs(&jobs, |j| {
        let eta = j.eta.expect("eta job");
        if j.group == PERSISTENCE {
            persistence(cfg, eta)
        } else {
            positivity(cfg, &flow, &grid, eta)
        }
    });
    if let Some(s) = spread(&out.rows, PERSISTENCE, "persistence_window") {
        out.scalars.insert("persistence_window_spread".into(), s);
    }
    let (_, w) = column(&out.rows, PERSISTENCE, "persistence_window");
    if !w.is_empty() {
        out.scalars
            .insert("persistence_window_min".into(), w.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    scaling_fit(&mut out, "flow", POSITIVITY, "t_star");
    if cfg.compare_still {
        scaling_fit(&mut out, "still", POSITIVITY, "t_star_still");
        let mut ratios: Vec<(f64, f64)> = out
            .rows
            .iter()
            .filter(|r| r.is_ok() && r.group == POSITIVITY)
            .filter_map(|r| Some((r.eta?, r.get("still_ratio")?)))
            .collect();
        ratios.sort_by(|a, b| b.0.total_cmp(&a.0));
        if !ratios.is_empty() {
            let growing = ratios.windows(2).all(|w| w[1].1 > w[0].1) && ratios[0].1 > 1.0;
            out.scalars.insert("still_ratio_growing".into(), growing as u8 as f64);
        }
    }
    Ok(out)
}
