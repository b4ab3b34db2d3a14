use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::noise::{add_basis_mode, NoiseSpec};
use crate::error::{Error, Result};
use crate::mhd3d::leray_in_place;
use crate::spectral::{from_physical_pair, to_physical_pair, Grid, SpectralField, VectorField};

/// State of the stochastically forced 2D Navier–Stokes equation
/// `∂ₜu + (u·∇)u + ∇p = Δu + QẆ`.
#[derive(Clone, Debug)]
pub struct SnsState {
    pub u: VectorField,
    pub time: f64,
    pub rng: ChaCha8Rng,
    pub noise: NoiseSpec,
}

impl SnsState {
    /// Starts from `u0` with the rng seeded from the noise spec.
    pub fn new(u0: VectorField, noise: NoiseSpec) -> Result<Self> {
        if u0.grid().dim() != 2 || u0.ncomp() != 2 {
            return Err(Error::param("the SNS velocity is a 2-component field on a 2D grid"));
        }
        noise.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(noise.seed);
        Ok(SnsState {
            u: u0,
            time: 0.0,
            rng,
            noise,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

/// Exponential-Euler stepper with cached factors.
///
/// The linear part `e^{-|k|²dt}` and the noise (per-mode Ornstein–Uhlenbeck
/// variance `q²(1-e^{-2|k|²dt})/(2|k|²)`) are integrated exactly; the
/// dealiased, Leray-projected advection term enters with weight
/// `(1-e^{-|k|²dt})/|k|²`.
pub struct SnsSolver {
    grid: Grid,
    dt: f64,
    cfl_max: f64,
    decay: Vec<f64>,
    phi: Vec<f64>,
    modes: Vec<([i64; 2], f64)>,
}

impl SnsSolver {
    pub fn new(grid: &Grid, noise: &NoiseSpec, dt: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::param("the SNS solver is two-dimensional"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt must be positive"));
        }
        let ksq = grid.ksq();
        let decay = ksq.iter().map(|k2| (-k2 * dt).exp()).collect();
        let phi = ksq
            .iter()
            .map(|&k2| if k2 == 0.0 { dt } else { -(-k2 * dt).exp_m1() / k2 })
            .collect();
        let modes = noise
            .active_modes(grid)?
            .into_iter()
            .map(|(k, q)| {
                let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                let var = q * q * -(-2.0 * k2 * dt).exp_m1() / (2.0 * k2);
                (k, var.sqrt())
            })
            .collect();
        Ok(SnsSolver {
            grid: grid.clone(),
            dt,
            cfl_max: 0.5,
            decay,
            phi,
            modes,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `-P_L P_{2/3} ∂ⱼ(uⱼ u)`, also returning the physical velocity.
    fn advection(&self, u: &VectorField) -> (Vec<Vec<Complex64>>, [Vec<f64>; 2]) {
        let g = &self.grid;
        let (u1, u2) = to_physical_pair(u.comp(0), u.comp(1));
        let p11: Vec<f64> = u1.iter().map(|a| a * a).collect();
        let p12: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a * b).collect();
        let p22: Vec<f64> = u2.iter().map(|b| b * b).collect();
        let (f11, f12) = from_physical_pair(g, &p11, &p12);
        let f22 = SpectralField::from_physical(g, &p22).expect("sizes match");
        let kv = g.wavevectors();
        let keep = g.dealias_mask();
        let i = Complex64::new(0.0, 1.0);
        let mut out = vec![vec![Complex64::default(); g.len()]; 2];
        for m in 0..g.len() {
            if !keep[m] {
                continue;
            }
            let (a, b, c) = (f11.coeffs()[m], f12.coeffs()[m], f22.coeffs()[m]);
            out[0][m] = -i * (kv[m][0] * a + kv[m][1] * b);
            out[1][m] = -i * (kv[m][0] * b + kv[m][1] * c);
        }
        leray_in_place(g, &mut out);
        (out, [u1, u2])
    }

    pub fn step(&self, s: &mut SnsState) -> Result<()> {
        if s.u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let (nl, phys) = self.advection(&s.u);
        let umax = crate::spectral::magnitude_sup(&phys);
        let h = self.grid.min_spacing();
        if umax * self.dt / h > self.cfl_max {
            return Err(Error::Cfl {
                dt: self.dt,
                suggested: self.cfl_max * h / umax,
            });
        }
        let mut comps: Vec<Vec<Complex64>> = (0..2)
            .map(|a| {
                s.u.comp(a)
                    .coeffs()
                    .iter()
                    .zip(&nl[a])
                    .enumerate()
                    .map(|(m, (c, n))| self.decay[m] * c + self.phi[m] * n)
                    .collect()
            })
            .collect();
        for &(k, sigma) in &self.modes {
            let xi: f64 = s.rng.sample(StandardNormal);
            add_basis_mode(&self.grid, &mut comps, k, sigma * xi);
        }
        for c in comps.iter_mut() {
            c[0] = Complex64::default();
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::BlowUp {
                    last_valid_time: s.time,
                });
            }
            crate::advdiff::flush_tiny(c);
        }
        let fields = comps
            .into_iter()
            .map(|c| SpectralField::from_coeffs(&self.grid, c))
            .collect::<Result<Vec<_>>>()?;
        s.u = VectorField::from_components(fields)?;
        s.time += self.dt;
        Ok(())
    }
}

/// One exponential-Euler step; builds the factors on every call.
pub fn step_sns(s: &SnsState, dt: f64) -> Result<SnsState> {
    let solver = SnsSolver::new(s.grid(), &s.noise, dt)?;
    let mut next = s.clone();
    solver.step(&mut next)?;
    Ok(next)
}

/// Sampled norms along one trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnsPath {
    pub seed: u64,
    pub times: Vec<f64>,
    pub l2_u: Vec<f64>,
    pub h1_u: Vec<f64>,
    /// Only filled when a passive scalar rides along.
    pub l2_rho: Vec<f64>,
}

impl SnsPath {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "t,l2_u,h1_u,l2_rho")?;
        for i in 0..self.times.len() {
            let rho = self.l2_rho.get(i).map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", self.times[i], self.l2_u[i], self.h1_u[i], rho)?;
        }
        Ok(())
    }
}

/// Runs one path to `horizon`, sampling `‖u‖` and `‖∇u‖` every `cadence` steps.
pub fn run_sns_path(
    u0: &VectorField,
    noise: &NoiseSpec,
    dt: f64,
    horizon: f64,
    cadence: usize,
) -> Result<SnsPath> {
    if cadence == 0 {
        return Err(Error::param("cadence must be positive"));
    }
    let solver = SnsSolver::new(u0.grid(), noise, dt)?;
    let mut s = SnsState::new(u0.clone(), noise.clone())?;
    let steps = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
    let mut path = SnsPath {
        seed: noise.seed,
        ..Default::default()
    };
    let mut record = |s: &SnsState, t: f64| {
        path.times.push(t);
        path.l2_u.push(s.u.l2_norm());
        path.h1_u.push(s.u.gradient_l2_norm());
    };
    record(&s, 0.0);
    for j in 0..steps {
        solver.step(&mut s)?;
        if (j + 1) % cadence == 0 || j + 1 == steps {
            record(&s, (j + 1) as f64 * dt);
        }
    }
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub t: f64,
    /// Ensemble mean of `‖u(t)‖² + 2∫₀ᵗ‖∇u‖² - ‖u⁰‖² - C₀t`.
    pub residual: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Checks the Itô energy identity `E‖u(t)‖² + 2∫E‖∇u‖² = ‖u⁰‖² + C₀t` at the
/// last common sample time, with trapezoidal quadrature.
pub fn energy_balance_check(paths: &[SnsPath], c0: f64) -> Result<EnergyBalance> {
    if paths.len() < 2 {
        return Err(Error::param("energy balance needs at least two paths"));
    }
    let times = &paths[0].times;
    if times.len() < 2 || paths.iter().any(|p| p.times != *times) {
        return Err(Error::param("paths must share a time mesh"));
    }
    let t = *times.last().unwrap();
    let per_path: Vec<f64> = paths
        .iter()
        .map(|p| {
            let integral: f64 = (1..times.len())
                .map(|i| 0.5 * (times[i] - times[i - 1]) * (p.h1_u[i].powi(2) + p.h1_u[i - 1].powi(2)))
                .sum();
            p.l2_u.last().unwrap().powi(2) + 2.0 * integral - p.l2_u[0].powi(2) - c0 * t
        })
        .collect();
    let n = per_path.len() as f64;
    let mean = per_path.iter().sum::<f64>() / n;
    let var = per_path.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(EnergyBalance {
        t,
        residual: mean,
        std_error: (var / n).sqrt(),
        paths: paths.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::basis_field;

    #[test]
    fn single_shear_mode_decays_exactly() {
        let g = Grid::new(&[16, 16]).unwrap();
        let u0 = basis_field(&g, [1, 0]).unwrap();
        let solver = SnsSolver::new(&g, &NoiseSpec::silent(), 0.01).unwrap();
        let mut s = SnsState::new(u0.clone(), NoiseSpec::silent()).unwrap();
        for _ in 0..100 {
            solver.step(&mut s).unwrap();
        }
        let want = u0.scaled((-1.0f64).exp());
        assert!(s.u.axpy(-1.0, &want).unwrap().l2_norm() < 1e-13);
    }

    #[test]
    fn seeds_fix_the_trajectory() {
        let g = Grid::new(&[16, 16]).unwrap();
        let noise = NoiseSpec::for_grid(&g, 6.0, 42, 1.0).unwrap();
        let u0 = VectorField::zeros(&g, 2);
        let a = run_sns_path(&u0, &noise, 0.01, 0.5, 1).unwrap();
        let b = run_sns_path(&u0, &noise, 0.01, 0.5, 1).unwrap();
        assert_eq!(a, b);
        let other = NoiseSpec { seed: 43, ..noise };
        assert_ne!(a, run_sns_path(&u0, &other, 0.01, 0.5, 1).unwrap());
    }

    #[test]
    fn states_stay_solenoidal_and_mean_free() {
        let g = Grid::new(&[32, 32]).unwrap();
        let noise = NoiseSpec::for_grid(&g, 5.5, 9, 2.0).unwrap();
        let solver = SnsSolver::new(&g, &noise, 0.005).unwrap();
        let mut s = SnsState::new(VectorField::zeros(&g, 2), noise).unwrap();
        for _ in 0..200 {
            solver.step(&mut s).unwrap();
            assert!(s.u.divergence().sup_norm() < 1e-12);
        }
        assert!(s.u.comp(0).mean() == 0.0 && s.u.comp(1).mean() == 0.0);
        assert!(s.u.l2_norm() > 0.0);
    }

    #[test]
    fn deterministic_energy_identity() {
        let g = Grid::new(&[16, 16]).unwrap();
        let u0 = basis_field(&g, [1, 0]).unwrap();
        let silent = NoiseSpec::silent();
        let p = run_sns_path(&u0, &silent, 1e-4, 1.0, 1).unwrap();
        let bal = energy_balance_check(&[p.clone(), p], 0.0).unwrap();
        assert!(bal.residual.abs() <= 1e-8, "{}", bal.residual);
        assert!(energy_balance_check(&[], 0.0).is_err());
    }

    #[test]
    fn ensemble_energy_saturates_below_half_c0() {
        let g = Grid::new(&[16, 16]).unwrap();
        let base = NoiseSpec::for_grid(&g, 6.0, 0, 0.3).unwrap();
        let c0 = base.c_ell(0.0);
        // stationary Ornstein–Uhlenbeck energy of the linear dynamics
        let stationary: f64 = base
            .lattice()
            .iter()
            .map(|&k| base.q(k).powi(2) / (2.0 * (k[0] * k[0] + k[1] * k[1]) as f64))
            .sum();
        assert!(stationary < 0.5 * c0);
        let u0 = VectorField::zeros(&g, 2);
        let paths: Vec<SnsPath> = (0..64)
            .map(|i| {
                let noise = NoiseSpec { seed: 1000 + i, ..base.clone() };
                run_sns_path(&u0, &noise, 0.01, 8.0, 10).unwrap()
            })
            .collect();
        let n = paths[0].times.len();
        let early = paths.iter().map(|p| p.l2_u[1].powi(2)).sum::<f64>() / 64.0;
        // time average over t ∈ [3, 8] per path, then across paths
        let late: Vec<f64> = paths
            .iter()
            .map(|p| {
                let tail: Vec<f64> = (0..n).filter(|&i| p.times[i] >= 3.0).map(|i| p.l2_u[i].powi(2)).collect();
                tail.iter().sum::<f64>() / tail.len() as f64
            })
            .collect();
        let mean = late.iter().sum::<f64>() / 64.0;
        let se = (late.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 63.0 / 64.0).sqrt();
        assert!(mean > early);
        assert!(mean - 3.0 * se < 0.5 * c0);
        assert!((mean - stationary).abs() < 3.0 * se, "{mean} {stationary} {se}");
    }
}
