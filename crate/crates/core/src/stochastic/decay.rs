use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::NoiseSpec;
use super::sns::{SnsSolver, SnsState};
use crate::advdiff::{run_decay, AdvDiffParams, FlowSpec, PhysicalVelocity, SourceFactory, VelocitySource};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::spectral::{Grid, SpectralField, VectorField};

/// One realization of the SNS velocity, generated on demand and replayed to
/// an advected scalar. Snapshots live in a short ring buffer and are
/// interpolated linearly in time.
pub struct FrozenSnsSource {
    solver: SnsSolver,
    state: SnsState,
    // (step index, physical velocity)
    buffer: VecDeque<(usize, PhysicalVelocity)>,
    steps: usize,
    capacity: usize,
    spinup_steps: usize,
    // grid the velocity is delivered on, when it differs from the SNS grid
    out_grid: Option<Grid>,
}

impl FrozenSnsSource {
    /// The path starts from `u0` and is spun up for `spinup` time units
    /// before `t = 0`.
    pub fn new(u0: &VectorField, noise: &NoiseSpec, sns_dt: f64, spinup: f64) -> Result<Self> {
        if !(spinup >= 0.0) {
            return Err(Error::param("spin-up time must be non-negative"));
        }
        let solver = SnsSolver::new(u0.grid(), noise, sns_dt)?;
        let mut state = SnsState::new(u0.clone(), noise.clone())?;
        let spinup_steps = (spinup / sns_dt).round() as usize;
        for _ in 0..spinup_steps {
            solver.step(&mut state)?;
        }
        let mut src = FrozenSnsSource {
            solver,
            state,
            buffer: VecDeque::new(),
            steps: 0,
            capacity: 8,
            spinup_steps,
            out_grid: None,
        };
        src.push_current();
        Ok(src)
    }

    /// Delivers the velocity spectrally interpolated onto `grid`; the SNS
    /// itself keeps running on the grid of `u0`.
    pub fn on_grid(mut self, grid: &Grid) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::param("the scalar grid must be 2D"));
        }
        if grid.periods() != self.state.grid().periods() {
            return Err(Error::GridMismatch);
        }
        if grid != self.state.grid() {
            self.out_grid = Some(grid.clone());
            self.buffer.clear();
            self.push_current();
        }
        Ok(self)
    }

    /// A factory replaying the same realization (solved on the grid of `u0`)
    /// to every job, delivered on the job's grid.
    pub fn factory(u0: VectorField, noise: NoiseSpec, sns_dt: f64, spinup: f64) -> SourceFactory {
        Arc::new(move |grid: &Grid| {
            let src = FrozenSnsSource::new(&u0, &noise, sns_dt, spinup)?.on_grid(grid)?;
            Ok(Box::new(src) as Box<dyn VelocitySource>)
        })
    }

    fn push_current(&mut self) {
        let phys = match &self.out_grid {
            Some(g) => self.state.u.resample(g).expect("2D grids with equal periods").to_physical(),
            None => self.state.u.to_physical(),
        };
        let phys = Arc::new(phys);
        self.buffer.push_back((self.steps, phys));
        while self.buffer.len() > self.capacity {
            self.buffer.pop_front();
        }
    }

    pub fn state(&self) -> &SnsState {
        &self.state
    }
}

impl VelocitySource for FrozenSnsSource {
    fn velocity(&mut self, t: f64) -> Result<PhysicalVelocity> {
        let dt = self.solver.dt();
        let pos = t / dt;
        while (self.steps as f64) < pos - 1e-9 {
            self.solver.step(&mut self.state)?;
            self.steps += 1;
            self.push_current();
        }
        let first = self.buffer.front().expect("buffer is never empty").0;
        if pos < first as f64 - 1e-9 {
            return Err(Error::param(format!(
                "velocity at t = {t} has left the replay buffer"
            )));
        }
        let j = (pos + 1e-9).floor() as usize;
        let frac = pos - j as f64;
        let at = |idx: usize| {
            self.buffer
                .iter()
                .find(|(s, _)| *s == idx)
                .map(|(_, u)| u.clone())
        };
        let lo = at(j.min(self.steps)).expect("step is buffered");
        if frac.abs() < 1e-9 || j >= self.steps {
            return Ok(lo);
        }
        let hi = at(j + 1).expect("step is buffered");
        let mix = lo
            .iter()
            .zip(hi.iter())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + frac * (y - x)).collect())
            .collect();
        Ok(Arc::new(mix))
    }

    fn describe(&self) -> String {
        format!(
            "sns(seed={},alpha={},K={},amp={},dt={},spinup_steps={})",
            self.state.noise.seed,
            self.state.noise.alpha,
            self.state.noise.k_max,
            self.state.noise.amplitude,
            self.solver.dt(),
            self.spinup_steps
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformDecayParams {
    pub dt: f64,
    pub sns_dt: f64,
    pub spinup: f64,
    pub horizon: f64,
    pub cadence: usize,
    /// Courant bound for the scalar stepper. RK4 with 2/3 truncation is
    /// stable up to about 1.3, and the random velocity has rare peaks.
    pub cfl_max: f64,
    /// The rate is fitted where `‖ρ(t)‖/‖ρ⁰‖` lies in `[fit_to, fit_from]`.
    pub fit_from: f64,
    pub fit_to: f64,
}

impl UniformDecayParams {
    pub fn new(dt: f64, horizon: f64) -> Self {
        UniformDecayParams {
            dt,
            sns_dt: 0.5 * dt,
            spinup: 5.0,
            horizon,
            cadence: 10,
            cfl_max: 1.0,
            fit_from: 0.5,
            fit_to: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformDecayRow {
    pub eta: f64,
    pub rate: f64,
    pub r2: f64,
    /// `D` in `‖ρ(t)‖ ≈ D e^{-γt} ‖ρ⁰‖` over the fit window.
    pub prefactor: f64,
    pub t_dis: Option<f64>,
    pub final_ratio: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformDecayResult {
    pub rows: Vec<UniformDecayRow>,
    /// `max rate / min rate` across η.
    pub rate_spread: f64,
    pub source: String,
}

/// Advects `rho0` by one shared SNS realization for every `η` and fits the
/// exponential decay rate of `‖ρ‖`.
pub fn uniform_decay_experiment(
    noise: &NoiseSpec,
    u0: &VectorField,
    etas: &[f64],
    rho0: &SpectralField,
    params: &UniformDecayParams,
) -> Result<UniformDecayResult> {
    if etas.is_empty() {
        return Err(Error::param("empty eta list"));
    }
    if !(params.fit_to > 0.0 && params.fit_to < params.fit_from && params.fit_from <= 1.0) {
        return Err(Error::param("fit window needs 0 < fit_to < fit_from <= 1"));
    }
    let factory = FrozenSnsSource::factory(u0.clone(), noise.clone(), params.sns_dt, params.spinup);
    let source = factory(rho0.grid())?.describe();
    let flow = FlowSpec::external(factory);
    let rows: Vec<Result<UniformDecayRow>> = etas
        .par_iter()
        .map(|&eta| {
            let mut p = AdvDiffParams::new(eta, params.dt, params.horizon);
            p.cadence = params.cadence;
            p.cfl_max = params.cfl_max;
            let run = run_decay(rho0, &flow, &p, &[], false)?;
            let tr = &run.trace;
            let n0 = tr.l2[0];
            let (ts, ls): (Vec<f64>, Vec<f64>) = tr
                .times
                .iter()
                .zip(&tr.l2)
                .map(|(t, l)| (*t, l / n0))
                .filter(|(_, r)| *r <= params.fit_from && *r >= params.fit_to)
                .map(|(t, r)| (t, r.ln()))
                .unzip();
            if ts.len() < 10 {
                return Err(Error::param(format!(
                    "eta = {eta}: only {} samples in the fit window; extend the horizon",
                    ts.len()
                )));
            }
            let fit = linear_fit(&ts, &ls)?;
            Ok(UniformDecayRow {
                eta,
                rate: -fit.slope,
                r2: fit.r2,
                prefactor: fit.intercept.exp(),
                t_dis: run.t_dis,
                final_ratio: tr.l2.last().unwrap() / n0,
                samples: ts.len(),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let hi = rows.iter().map(|r| r.rate).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min);
    Ok(UniformDecayResult {
        rows,
        rate_spread: hi / lo,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advdiff::AdvDiffStepper;

    #[test]
    fn replay_matches_direct_solve() {
        let g = Grid::new(&[16, 16]).unwrap();
        let noise = NoiseSpec::for_grid(&g, 6.0, 5, 1.0).unwrap();
        let u0 = VectorField::zeros(&g, 2);
        let mut src = FrozenSnsSource::new(&u0, &noise, 0.01, 0.1).unwrap();
        let solver = SnsSolver::new(&g, &noise, 0.01).unwrap();
        let mut s = SnsState::new(u0, noise).unwrap();
        for _ in 0..13 {
            solver.step(&mut s).unwrap();
        }
        let direct = s.u.to_physical();
        let replay = src.velocity(0.03).unwrap();
        assert_eq!(direct[0], replay[0]);
        // midpoint is the average of neighbours
        let a = src.velocity(0.04).unwrap();
        let mid = src.velocity(0.035).unwrap();
        let b = src.velocity(0.03).unwrap();
        assert!((mid[1][7] - 0.5 * (a[1][7] + b[1][7])).abs() < 1e-14);
        for _ in 0..20 {
            src.velocity(0.5).unwrap();
        }
        assert!(src.velocity(0.0).is_err());
    }

    #[test]
    fn empty_eta_list_is_rejected() {
        let g = Grid::new(&[16, 16]).unwrap();
        let noise = NoiseSpec::for_grid(&g, 6.0, 5, 1.0).unwrap();
        let rho = SpectralField::from_fn(&g, |x| x[0].sin());
        let r = uniform_decay_experiment(&noise, &VectorField::zeros(&g, 2), &[], &rho, &UniformDecayParams::new(0.01, 1.0));
        assert!(r.is_err());
    }

    #[test]
    fn large_eta_decays_at_least_diffusively() {
        let g = Grid::new(&[32, 32]).unwrap();
        let noise = NoiseSpec::for_grid(&g, 6.0, 5, 1.0).unwrap();
        let rho = SpectralField::from_fn(&g, |x| x[0].sin());
        let mut p = UniformDecayParams::new(0.01, 12.0);
        p.spinup = 2.0;
        p.fit_to = 1e-5;
        let r = uniform_decay_experiment(&noise, &VectorField::zeros(&g, 2), &[1.0], &rho, &p).unwrap();
        // the noise-free rate of sin(x₁) under η = 1 is 1
        assert!(r.rows[0].rate >= 1.0 - 1e-3, "{:?}", r.rows[0]);
    }

    #[test]
    fn external_stepper_runs_with_replay() {
        let g = Grid::new(&[16, 16]).unwrap();
        let coarse = Grid::new(&[8, 8]).unwrap();
        let noise = NoiseSpec::new(6.0, 2.0, 5, 1.0).unwrap();
        let flow = FlowSpec::external(FrozenSnsSource::factory(VectorField::zeros(&coarse, 2), noise.clone(), 0.005, 1.0));
        let mut fine = FrozenSnsSource::new(&VectorField::zeros(&coarse, 2), &noise, 0.005, 1.0).unwrap().on_grid(&g).unwrap();
        assert_eq!(fine.velocity(0.0).unwrap()[0].len(), g.len());
        let mut st = AdvDiffStepper::new(&g, &flow, &AdvDiffParams::new(1e-3, 0.01, 1.0)).unwrap();
        let rho = SpectralField::from_fn(&g, |x| x[0].sin());
        let out = st.advance(&rho, 0.0, 50).unwrap();
        assert!(out.mean().abs() < 1e-14);
        assert!(out.l2_norm() <= rho.l2_norm() + 1e-12);
    }
}
