//! Per-kind experiment pipelines and the helpers they share.

pub mod advdiff;
pub mod reconnection;
pub mod stochastic;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use reconlab_core::advdiff::{AdvDiffParams, AdvDiffStepper, FlowSpec};
use reconlab_core::spectral::{Grid, SpectralField, VectorField};
use reconlab_core::topology::{evaluate_snapshot, reconnection_time, Criterion};
use reconlab_core::{Complex64, Error};

use crate::config::{ConfigError, DtPolicy, ExperimentConfig, FlowChoice, HorizonPolicy};

pub(crate) type Values = BTreeMap<String, f64>;

pub(crate) fn grid2(cfg: &ExperimentConfig) -> Result<Grid, Error> {
    Grid::new(&cfg.grid)
}

/// Deterministic flows; the stochastic flow is built by its own pipeline.
pub(crate) fn flow_spec(cfg: &ExperimentConfig) -> Result<FlowSpec, ConfigError> {
    match cfg.flow {
        FlowChoice::Kolmogorov => Ok(FlowSpec::kolmogorov(cfg.flow_amplitude, cfg.flow_wavenumber)),
        FlowChoice::Still => Ok(FlowSpec::still()),
        FlowChoice::Sns => Err(ConfigError::Value {
            key: "flow".into(),
            msg: format!("`sns` is not available for {}", cfg.kind),
        }),
    }
}

/// Time step for an autonomous flow under the configured policy.
pub(crate) fn step_size(cfg: &ExperimentConfig, flow: &FlowSpec, grid: &Grid) -> Result<f64, Error> {
    match cfg.dt_policy {
        DtPolicy::Fixed => Ok(cfg.dt),
        DtPolicy::Cfl => {
            let umax = flow.velocity(grid)?.sup_magnitude();
            if umax == 0.0 {
                Ok(cfg.dt)
            } else {
                Ok(cfg.dt.min(cfg.cfl * grid.min_spacing() / umax))
            }
        }
    }
}

/// Horizon for policies that do not need a measured `t_dis`.
pub(crate) fn horizon(cfg: &ExperimentConfig, eta: f64) -> Result<f64, String> {
    match cfg.horizon_policy {
        HorizonPolicy::Fixed => Ok(cfg.horizon),
        HorizonPolicy::Diffusive => Ok(cfg.horizon / eta),
        HorizonPolicy::Tdis => Err("horizon_policy = tdis needs a measured dissipation time".into()),
    }
}

/// Every mean-free scalar halves by `ln 2/η` (Poincaré), whatever the flow.
pub(crate) fn halving_bound(eta: f64) -> f64 {
    LN_2 / eta
}

pub(crate) fn err_string(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// When the advected `b₃` first satisfies the positivity criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PositivityTime {
    pub t_star: f64,
    pub margin: f64,
    pub checks: usize,
}

pub(crate) struct PositivityRun<'a> {
    pub b3: &'a SpectralField,
    pub flow: &'a FlowSpec,
    pub params: AdvDiffParams,
    pub m: f64,
    pub slack: f64,
    pub check_rel: f64,
    pub min_spacing: f64,
    pub rel_tol: f64,
}

fn as_snapshot(grid: &Grid, c: &[Complex64]) -> Result<VectorField, Error> {
    VectorField::from_components(vec![SpectralField::from_coeffs(grid, c.to_vec())?])
}

impl PositivityRun<'_> {
    /// Checks at times growing geometrically by `check_rel` (at least
    /// `min_spacing` apart) and bisects the final interval to `rel_tol`.
    /// Time-dependent flows cannot be rewound, so they are checked after
    /// every step instead.
    pub fn run(&self) -> Result<PositivityTime, String> {
        let grid = self.b3.grid().clone();
        let p = &self.params;
        let criterion = Criterion::PositivityB3 { slack: self.slack };
        let mut stepper = AdvDiffStepper::new(&grid, self.flow, p).map_err(err_string)?;
        let mut c = self.b3.coeffs().to_vec();
        let first = evaluate_snapshot(0.0, &as_snapshot(&grid, &c).map_err(err_string)?, &criterion, self.m)
            .map_err(err_string)?;
        if first.holds {
            return Ok(PositivityTime {
                t_star: 0.0,
                margin: first.margin,
                checks: 1,
            });
        }
        let every_step = !self.flow.is_autonomous();
        let steps = (p.horizon / p.dt - 1e-9).ceil().max(0.0) as usize;
        let mut prev = (0.0, c.clone());
        let mut next_check = self.min_spacing;
        let mut checks = 1;
        let mut last_margin = first.margin;
        for j in 0..steps {
            let t0 = j as f64 * p.dt;
            stepper.step(&mut c, t0).map_err(err_string)?;
            let t = (j + 1) as f64 * p.dt;
            if !(every_step || t >= next_check - 1e-12 || j + 1 == steps) {
                continue;
            }
            checks += 1;
            let snap = as_snapshot(&grid, &c).map_err(err_string)?;
            let row = evaluate_snapshot(t, &snap, &criterion, self.m).map_err(err_string)?;
            last_margin = row.margin;
            if row.holds {
                if every_step {
                    return Ok(PositivityTime {
                        t_star: t,
                        margin: row.margin,
                        checks,
                    });
                }
                return self.bisect(&grid, &criterion, prev, (t, snap), checks);
            }
            prev = (t, c.clone());
            next_check = (t * (1.0 + self.check_rel)).max(t + self.min_spacing);
        }
        Err(format!(
            "positivity not reached by t = {} (margin {last_margin})",
            p.horizon
        ))
    }

    fn bisect(
        &self,
        grid: &Grid,
        criterion: &Criterion,
        prev: (f64, Vec<Complex64>),
        cur: (f64, VectorField),
        checks: usize,
    ) -> Result<PositivityTime, String> {
        let mut stepper = AdvDiffStepper::new(grid, self.flow, &self.params).map_err(err_string)?;
        let dt = self.params.dt;
        let mut refine = |t0: f64, b0: &VectorField, target: f64| -> Result<VectorField, Error> {
            let mut c = b0.comp(0).coeffs().to_vec();
            let span = target - t0;
            let n = (span / dt + 1e-9).floor() as usize;
            for i in 0..n {
                stepper.step(&mut c, t0 + i as f64 * dt)?;
            }
            let rem = span - n as f64 * dt;
            if rem > 1e-12 * dt {
                stepper.step_by(&mut c, t0 + n as f64 * dt, rem)?;
            }
            as_snapshot(grid, &c)
        };
        let snaps = vec![(prev.0, as_snapshot(grid, &prev.1).map_err(err_string)?), cur];
        let report = reconnection_time(&snaps, criterion, self.m, Some(&mut refine), self.rel_tol)
            .map_err(err_string)?;
        let t_star = report.t_first_no_zero.ok_or("bisection lost the crossing")?;
        let margin = report
            .refinements
            .iter()
            .chain(&report.rows)
            .filter(|r| r.holds && r.t == t_star)
            .map(|r| r.margin)
            .next()
            .unwrap_or(f64::NAN);
        Ok(PositivityTime {
            t_star,
            margin,
            checks: checks + report.refinements.len(),
        })
    }
}
