use std::sync::Arc;

use num_complex::Complex64;

use super::flow::{FlowKind, FlowSpec, PhysicalVelocity, VelocitySource};
use crate::error::{Error, Result};
use crate::spectral::{fft, Grid, SpectralField};

#[derive(Clone, Debug, PartialEq)]
pub struct AdvDiffParams {
    pub eta: f64,
    pub dt: f64,
    pub horizon: f64,
    pub dealias: bool,
    /// Observer sampling interval, in steps.
    pub cadence: usize,
    pub cfl_max: f64,
}

impl AdvDiffParams {
    pub fn new(eta: f64, dt: f64, horizon: f64) -> Self {
        AdvDiffParams {
            eta,
            dt,
            horizon,
            dealias: true,
            cadence: 1,
            cfl_max: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::param("horizon must be non-negative"));
        }
        if self.cadence == 0 {
            return Err(Error::param("observer cadence must be at least one step"));
        }
        Ok(())
    }
}

enum Velocity {
    Zero,
    /// `U = (f(x₂), 0)` with few Fourier modes: `(k₂, f̂(k₂))` pairs. The
    /// product `f ∂₁ρ` is then a short convolution along `k₂`, evaluated
    /// exactly in spectral space.
    Shear(Vec<(i64, Complex64)>),
    Frozen(PhysicalVelocity),
    External(Box<dyn VelocitySource>),
}

/// Integrating-factor RK4 for `∂ₜρ + U·∇ρ = ηΔρ` on a 2D grid.
///
/// With `E(τ) = e^{-η|k|²τ}` and `N(ρ) = -P(U·∇ρ)` (`P` the 2/3 truncation),
/// one step of size `h` is RK4 applied to `E(-t)ρ`:
///
/// ```text
/// k1 = N(ρ)
/// k2 = N(E(h/2)(ρ + h/2·k1))
/// k3 = N(E(h/2)ρ + h/2·k2)
/// k4 = N(E(h)ρ + h·E(h/2)·k3)
/// ρ⁺ = E(h)ρ + h/6·(E(h)k1 + 2E(h/2)(k2 + k3) + k4)
/// ```
pub struct AdvDiffStepper {
    grid: Grid,
    eta: f64,
    dt: f64,
    cfl_max: f64,
    keep: Vec<bool>,
    // i·k_axis with truncated modes zeroed.
    ik: [Vec<f64>; 2],
    e_full: Vec<f64>,
    e_half: Vec<f64>,
    velocity: Velocity,
}

impl AdvDiffStepper {
    pub fn new(grid: &Grid, flow: &FlowSpec, params: &AdvDiffParams) -> Result<Self> {
        params.validate()?;
        if grid.dim() != 2 {
            return Err(Error::Unsupported("the scalar solver is two-dimensional".into()));
        }
        let velocity = match &flow.kind {
            FlowKind::External(factory) => Velocity::External(factory(grid)?),
            _ => {
                let u = flow.velocity(grid)?;
                if u.l2_norm() == 0.0 {
                    Velocity::Zero
                } else if let Some(modes) = shear_modes(&u) {
                    let s = Self::with_velocity(grid, Velocity::Zero, params)?;
                    s.check_cfl(&u.to_physical())?;
                    Velocity::Shear(modes)
                } else {
                    Velocity::Frozen(Arc::new(u.to_physical()))
                }
            }
        };
        Self::with_velocity(grid, velocity, params)
    }

    /// Like [`AdvDiffStepper::new`] but always uses FFT-based products.
    pub fn new_pseudo_spectral(grid: &Grid, flow: &FlowSpec, params: &AdvDiffParams) -> Result<Self> {
        params.validate()?;
        let u = flow.velocity(grid)?;
        Self::with_velocity(grid, Velocity::Frozen(Arc::new(u.to_physical())), params)
    }

    /// Stepper for a fixed velocity given in physical space on `grid`.
    pub fn frozen(grid: &Grid, velocity: PhysicalVelocity, params: &AdvDiffParams) -> Result<Self> {
        params.validate()?;
        Self::with_velocity(grid, Velocity::Frozen(velocity), params)
    }

    fn with_velocity(grid: &Grid, velocity: Velocity, params: &AdvDiffParams) -> Result<Self> {
        let keep: Vec<bool> = if params.dealias {
            grid.dealias_mask().to_vec()
        } else {
            grid.nyquist_mask().iter().map(|n| !n).collect()
        };
        let kv = grid.wavevectors();
        let ik = [0, 1].map(|a| {
            kv.iter()
                .zip(&keep)
                .map(|(k, &m)| if m { k[a] } else { 0.0 })
                .collect()
        });
        let s = AdvDiffStepper {
            grid: grid.clone(),
            eta: params.eta,
            dt: params.dt,
            cfl_max: params.cfl_max,
            keep,
            ik,
            e_full: factors(grid, params.eta, params.dt),
            e_half: factors(grid, params.eta, 0.5 * params.dt),
            velocity,
        };
        if let Velocity::Frozen(u) = &s.velocity {
            s.check_cfl(u)?;
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn check_cfl(&self, u: &[Vec<f64>]) -> Result<()> {
        let h = self.grid.min_spacing();
        let umax = crate::spectral::magnitude_sup(u);
        if umax * self.dt / h > self.cfl_max {
            return Err(Error::Cfl {
                dt: self.dt,
                suggested: self.cfl_max * h / umax,
            });
        }
        Ok(())
    }

    fn velocity_at(&mut self, t: f64) -> Result<Option<PhysicalVelocity>> {
        match &mut self.velocity {
            Velocity::Zero => Ok(None),
            Velocity::Shear(_) => Ok(Some(Arc::new(Vec::new()))),
            Velocity::Frozen(u) => Ok(Some(u.clone())),
            Velocity::External(src) => {
                let u = src.velocity(t)?;
                let h = self.grid.min_spacing();
                let umax = crate::spectral::magnitude_sup(&u);
                if umax * self.dt / h > self.cfl_max {
                    return Err(Error::Cfl {
                        dt: self.dt,
                        suggested: self.cfl_max * h / umax,
                    });
                }
                Ok(Some(u))
            }
        }
    }

    /// `-P(U·∇ρ)`, with the mean mode pinned to zero.
    fn tendency(&self, rho: &[Complex64], u: &[Vec<f64>]) -> Vec<Complex64> {
        if let Velocity::Shear(modes) = &self.velocity {
            return self.shear_tendency(rho, modes);
        }
        let n = rho.len();
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| {
                // ∂₁ρ + i∂₂ρ, both real in physical space
                let c = rho[i];
                Complex64::new(0.0, self.ik[0][i]) * c - self.ik[1][i] * c
            })
            .collect();
        fft::inverse(self.grid.sizes(), &mut buf);
        for (i, v) in buf.iter_mut().enumerate() {
            *v = Complex64::new(u[0][i] * v.re + u[1][i] * v.im, 0.0);
        }
        fft::forward(self.grid.sizes(), &mut buf);
        let scale = -1.0 / n as f64;
        for (i, v) in buf.iter_mut().enumerate() {
            *v = if self.keep[i] { *v * scale } else { Complex64::default() };
        }
        buf[0] = Complex64::default();
        // The product is real, so restore exact Hermitian symmetry.
        let conj = self.grid.conjugate_indices();
        for i in 0..n {
            let j = conj[i];
            if j > i {
                let avg = 0.5 * (buf[i] + buf[j].conj());
                buf[i] = avg;
                buf[j] = avg.conj();
            } else if j == i {
                buf[i].im = 0.0;
            }
        }
        buf
    }

    fn shear_tendency(&self, rho: &[Complex64], modes: &[(i64, Complex64)]) -> Vec<Complex64> {
        let (n1, n2) = (self.grid.sizes()[0], self.grid.sizes()[1]);
        let half = (n2 / 2) as i64;
        let mut out = vec![Complex64::default(); rho.len()];
        for i1 in 0..n1 {
            let row = i1 * n2;
            // Shear advection never couples different k₁, so empty rows stay empty.
            if rho[row..row + n2].iter().all(|c| *c == Complex64::default()) {
                continue;
            }
            for i2 in 0..n2 {
                let dst = row + i2;
                if !self.keep[dst] {
                    continue;
                }
                let k2 = crate::spectral::int_wavenumber(i2, n2);
                let mut acc = Complex64::default();
                for &(m, c) in modes {
                    let ks = k2 - m;
                    if ks < -half || ks >= half {
                        continue;
                    }
                    let src = row + ks.rem_euclid(n2 as i64) as usize;
                    acc += c * Complex64::new(0.0, self.ik[0][src]) * rho[src];
                }
                out[dst] = -acc;
            }
        }
        out[0] = Complex64::default();
        out
    }

    /// Advances `rho` (coefficients at time `t`) by the configured `dt`.
    pub fn step(&mut self, rho: &mut [Complex64], t: f64) -> Result<()> {
        self.step_by(rho, t, self.dt)
    }

    /// Advances `rho` by an arbitrary `h ≤ dt`, used to bisect crossings.
    pub fn step_by(&mut self, rho: &mut [Complex64], t: f64, h: f64) -> Result<()> {
        let Some(u0) = self.velocity_at(t)? else {
            let owned;
            let e: &[f64] = if h == self.dt {
                &self.e_full
            } else {
                owned = factors(&self.grid, self.eta, h);
                &owned
            };
            for (c, e) in rho.iter_mut().zip(e) {
                *c *= *e;
            }
            return Ok(());
        };
        let uh = self.velocity_at(t + 0.5 * h)?.expect("velocity is present");
        let u1 = self.velocity_at(t + h)?.expect("velocity is present");
        let owned;
        let (e_full, e_half): (&[f64], &[f64]) = if h == self.dt {
            (&self.e_full, &self.e_half)
        } else {
            owned = (
                factors(&self.grid, self.eta, h),
                factors(&self.grid, self.eta, 0.5 * h),
            );
            (&owned.0, &owned.1)
        };
        let n = rho.len();
        let hh = 0.5 * h;

        let k1 = self.tendency(rho, &u0);
        let s: Vec<Complex64> = (0..n).map(|i| e_half[i] * (rho[i] + hh * k1[i])).collect();
        let k2 = self.tendency(&s, &uh);
        let s: Vec<Complex64> = (0..n).map(|i| e_half[i] * rho[i] + hh * k2[i]).collect();
        let k3 = self.tendency(&s, &uh);
        let s: Vec<Complex64> = (0..n)
            .map(|i| e_full[i] * rho[i] + h * e_half[i] * k3[i])
            .collect();
        let k4 = self.tendency(&s, &u1);
        let w = h / 6.0;
        for i in 0..n {
            let inc = e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i];
            rho[i] = e_full[i] * rho[i] + w * inc;
        }
        if rho.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::BlowUp { last_valid_time: t });
        }
        flush_tiny(rho);
        Ok(())
    }

    /// Advances a field from `t` to `t + steps·dt`.
    pub fn advance(&mut self, rho: &SpectralField, t: f64, steps: usize) -> Result<SpectralField> {
        if rho.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut c = rho.coeffs().to_vec();
        for j in 0..steps {
            self.step(&mut c, t + j as f64 * self.dt)?;
        }
        SpectralField::from_coeffs(&self.grid, c)
    }
}

// Fourier modes of a velocity of the form `(f(x₂), 0)` if it is one and
// `f` has at most a handful of modes.
fn shear_modes(u: &crate::spectral::VectorField) -> Option<Vec<(i64, Complex64)>> {
    if u.ncomp() != 2 || u.comp(1).l2_norm() != 0.0 {
        return None;
    }
    let grid = u.grid();
    let mut modes = Vec::new();
    for (i, c) in u.comp(0).coeffs().iter().enumerate() {
        if *c == Complex64::default() {
            continue;
        }
        let k = grid.int_wavevector(i);
        if k[0] != 0 || modes.len() == 16 {
            return None;
        }
        modes.push((k[1], *c));
    }
    Some(modes)
}

/// Zeroes coefficients more than 200 orders of magnitude below the largest
/// one. Such values carry no information, and once they decay into the
/// subnormal range every arithmetic operation on them is very slow.
pub(crate) fn flush_tiny(c: &mut [Complex64]) {
    let peak = c.iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
    let floor = peak * 1e-200;
    for z in c.iter_mut() {
        if z.re.abs() < floor {
            z.re = 0.0;
        }
        if z.im.abs() < floor {
            z.im = 0.0;
        }
    }
}

fn factors(grid: &Grid, eta: f64, tau: f64) -> Vec<f64> {
    grid.ksq().iter().map(|k2| (-eta * k2 * tau).exp()).collect()
}

/// Mean-normalized `L²` norm of raw coefficients.
pub(crate) fn coeff_norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
