use std::io::Write;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::FlowSpec;
use super::stepper::{coeff_norm, AdvDiffParams, AdvDiffStepper};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_fit};
use crate::spectral::{Grid, SpectralField};

/// Sampled norms of an evolving scalar.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayTrace {
    pub eta: f64,
    pub dt: f64,
    pub flow: String,
    pub grid: String,
    /// Whether the datum was projected onto zero streamline average.
    pub projected: bool,
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub hs_orders: Vec<f64>,
    /// `hs[j][i]` is `‖ρ(times[i])‖_{H^{hs_orders[j]}}`.
    pub hs: Vec<Vec<f64>>,
}

impl DecayTrace {
    pub fn hs_series(&self, s: f64) -> Option<&[f64]> {
        self.hs_orders
            .iter()
            .position(|&o| o == s)
            .map(|j| self.hs[j].as_slice())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# eta={}", self.eta)?;
        writeln!(w, "# flow={}", self.flow)?;
        writeln!(w, "# grid={}", self.grid)?;
        writeln!(w, "# dt={}", self.dt)?;
        writeln!(w, "# projected={}", self.projected)?;
        write!(w, "t,l2")?;
        for s in &self.hs_orders {
            write!(w, ",h{s}")?;
        }
        writeln!(w)?;
        for i in 0..self.times.len() {
            write!(w, "{},{}", self.times[i], self.l2[i])?;
            for series in &self.hs {
                write!(w, ",{}", series[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// A finished evolution: the sampled trace and, when it occurred before the
/// horizon, the first time the `L²` norm halved.
#[derive(Clone, Debug)]
pub struct DecayRun {
    pub trace: DecayTrace,
    pub t_dis: Option<f64>,
    pub final_state: SpectralField,
}

fn check_datum(rho0: &SpectralField) -> Result<f64> {
    let n0 = rho0.l2_norm();
    if n0 == 0.0 {
        return Err(Error::NotReached {
            horizon: 0.0,
            final_ratio: f64::NAN,
        });
    }
    if rho0.mean().abs() > 1e-12 * n0 {
        return Err(Error::param("initial scalar must be mean-free"));
    }
    Ok(n0)
}

fn sobolev_weights(grid: &Grid, s: f64) -> Vec<f64> {
    grid.ksq().iter().map(|k2| (1.0 + k2).powf(s)).collect()
}

fn weighted_norm(c: &[Complex64], w: &[f64]) -> f64 {
    c.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt()
}

/// Bisects the halving crossing inside the step that starts from `prev`
/// at time `t`.
fn bisect_crossing(
    stepper: &mut AdvDiffStepper,
    prev: &[Complex64],
    t: f64,
    target: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, stepper.dt());
    while hi - lo > 1e-9 * (t + stepper.dt()) {
        let mid = 0.5 * (lo + hi);
        let mut c = prev.to_vec();
        stepper.step_by(&mut c, t, mid)?;
        if coeff_norm(&c) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(t + hi)
}

/// Evolves `rho0` to the horizon, sampling every `cadence` steps and
/// locating the halving time on the way.
pub fn run_decay(
    rho0: &SpectralField,
    flow: &FlowSpec,
    params: &AdvDiffParams,
    hs_orders: &[f64],
    projected: bool,
) -> Result<DecayRun> {
    let n0 = check_datum(rho0)?;
    let grid = rho0.grid().clone();
    let mut stepper = AdvDiffStepper::new(&grid, flow, params)?;
    let weights: Vec<Vec<f64>> = hs_orders.iter().map(|&s| sobolev_weights(&grid, s)).collect();
    let mut trace = DecayTrace {
        eta: params.eta,
        dt: params.dt,
        flow: flow.to_string(),
        grid: grid.describe(),
        projected,
        times: Vec::new(),
        l2: Vec::new(),
        hs_orders: hs_orders.to_vec(),
        hs: vec![Vec::new(); hs_orders.len()],
    };
    let sample = |trace: &mut DecayTrace, t: f64, c: &[Complex64]| {
        trace.times.push(t);
        trace.l2.push(coeff_norm(c));
        for (j, w) in weights.iter().enumerate() {
            trace.hs[j].push(weighted_norm(c, w));
        }
    };
    let steps = (params.horizon / params.dt - 1e-9).ceil().max(0.0) as usize;
    let mut c = rho0.coeffs().to_vec();
    sample(&mut trace, 0.0, &c);
    let mut t_dis = None;
    for j in 0..steps {
        let t = j as f64 * params.dt;
        let prev = if t_dis.is_none() { Some(c.clone()) } else { None };
        stepper.step(&mut c, t)?;
        if let Some(prev) = prev {
            if coeff_norm(&c) <= 0.5 * n0 {
                t_dis = Some(bisect_crossing(&mut stepper, &prev, t, 0.5 * n0)?);
            }
        }
        if (j + 1) % params.cadence == 0 || j + 1 == steps {
            sample(&mut trace, (j + 1) as f64 * params.dt, &c);
        }
    }
    Ok(DecayRun {
        trace,
        t_dis,
        final_state: SpectralField::from_coeffs(&grid, c)?,
    })
}

/// First time `‖ρ(t)‖ ≤ ½‖ρ⁰‖`, bisected inside the crossing step.
pub fn dissipation_time(rho0: &SpectralField, flow: &FlowSpec, params: &AdvDiffParams) -> Result<f64> {
    let n0 = check_datum(rho0)?;
    let grid = rho0.grid().clone();
    let mut stepper = AdvDiffStepper::new(&grid, flow, params)?;
    let steps = (params.horizon / params.dt - 1e-9).ceil().max(0.0) as usize;
    let mut c = rho0.coeffs().to_vec();
    for j in 0..steps {
        let t = j as f64 * params.dt;
        let prev = c.clone();
        stepper.step(&mut c, t)?;
        if coeff_norm(&c) <= 0.5 * n0 {
            return bisect_crossing(&mut stepper, &prev, t, 0.5 * n0);
        }
    }
    Err(Error::NotReached {
        horizon: params.horizon,
        final_ratio: coeff_norm(&c) / n0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayRateFit {
    pub rate: f64,
    pub r2: f64,
    pub samples: usize,
    /// Set when the log-norm is not monotone over the window.
    pub warning: Option<String>,
}

/// Least-squares decay rate `λ̂` of `ln‖ρ(t)‖` over `[t0, t1]`.
pub fn fit_decay_rate(trace: &DecayTrace, t0: f64, t1: f64) -> Result<DecayRateFit> {
    let (ts, ls): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.l2)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, l)| (*t, l.ln()))
        .unzip();
    if ts.len() < 10 {
        return Err(Error::param(format!(
            "decay-rate window [{t0}, {t1}] holds {} samples; at least 10 are needed",
            ts.len()
        )));
    }
    let fit = linear_fit(&ts, &ls)?;
    let rises = ls.windows(2).filter(|w| w[1] > w[0] + 1e-8).count();
    let warning = if rises > 0 {
        let msg = format!("log-norm increases at {rises} samples in the fit window");
        warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    Ok(DecayRateFit {
        rate: -fit.slope,
        r2: fit.r2,
        samples: ts.len(),
        warning,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HsConstant {
    pub value: f64,
    /// The weighted norm was still rising at the end of the trace, so the
    /// supplied rate outruns the actual decay.
    pub envelope_violation: bool,
}

/// `sup_t ‖ρ(t)‖_{H^s} e^{λt} / ‖ρ⁰‖_{H^s}` over the trace samples.
pub fn hs_decay_constant(trace: &DecayTrace, s: f64, lambda: f64) -> Result<HsConstant> {
    let series = trace
        .hs_series(s)
        .ok_or_else(|| Error::param(format!("trace does not record H^{s}")))?;
    let base = series[0];
    if base == 0.0 {
        return Err(Error::param("initial H^s norm is zero"));
    }
    let vals: Vec<f64> = series
        .iter()
        .zip(&trace.times)
        .map(|(v, t)| v * (lambda * t).exp() / base)
        .collect();
    let value = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tail = &vals[vals.len() * 3 / 4..];
    let envelope_violation =
        vals.len() >= 8 && tail.windows(2).all(|w| w[1] > w[0]) && *vals.last().unwrap() == value;
    Ok(HsConstant {
        value,
        envelope_violation,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `ln t_dis` against `ln(1/η)`.
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub etas: Vec<f64>,
    pub t_dis: Vec<f64>,
}

/// Fits `t_dis ∝ η^{-p}` from already measured dissipation times.
pub fn rate_exponent(etas: &[f64], t_dis: &[f64]) -> Result<RateFit> {
    if etas.len() < 4 {
        return Err(Error::param("a rate fit needs at least four values of eta"));
    }
    let lo = etas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = etas.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::param("eta values must span at least 1.5 decades"));
    }
    let inv: Vec<f64> = etas.iter().map(|e| 1.0 / e).collect();
    let fit = loglog_fit(&inv, t_dis)?;
    Ok(RateFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        etas: etas.to_vec(),
        t_dis: t_dis.to_vec(),
    })
}

/// Measures `t_dis` for every `η` in parallel and fits the exponent.
/// Failed jobs are reported together with the completed ones.
pub fn fit_rate_exponent(
    flow: &FlowSpec,
    rho0: &SpectralField,
    etas: &[f64],
    params_for: impl Fn(f64) -> AdvDiffParams + Sync,
) -> Result<RateFit> {
    if etas.len() < 2 {
        return Err(Error::param("a rate fit needs more than one value of eta"));
    }
    let results: Vec<Result<f64>> = etas
        .par_iter()
        .map(|&eta| dissipation_time(rho0, flow, &params_for(eta)))
        .collect();
    let mut completed = Vec::new();
    let mut first_error = None;
    for (eta, r) in etas.iter().zip(results) {
        match r {
            Ok(t) => completed.push((*eta, t)),
            Err(e) => {
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if let Some(first_error) = first_error {
        return Err(Error::PartialSweep {
            failed: etas.len() - completed.len(),
            total: etas.len(),
            first_error,
            completed,
        });
    }
    let t: Vec<f64> = completed.iter().map(|p| p.1).collect();
    rate_exponent(etas, &t)
}
