use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::advdiff::{extrude, FlowSpec};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, VectorField};

/// Velocity and magnetic field at a given time.
#[derive(Clone, Debug)]
pub struct MhdState {
    pub u: VectorField,
    pub b: VectorField,
    pub time: f64,
}

impl MhdState {
    pub fn zeros(grid: &Grid) -> Self {
        MhdState {
            u: VectorField::zeros(grid, 3),
            b: VectorField::zeros(grid, 3),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `½(‖u‖² + ‖b‖²)`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.u.l2_norm().powi(2) + self.b.l2_norm().powi(2))
    }

    /// Largest of `‖div u‖` and `‖div b‖`.
    pub fn divergence_error(&self) -> f64 {
        self.u.divergence().l2_norm().max(self.b.divergence().l2_norm())
    }

    pub fn u_mean(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.u.comp(i).mean())
    }

    pub fn b_mean(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.b.comp(i).mean())
    }
}

/// Parameters of the perturbed datum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremAData {
    /// Mean vertical field `M > 0`.
    pub m: f64,
    /// Perturbation size.
    pub eps: f64,
    pub x_star: [f64; 3],
    /// Sobolev index, `> 5/2`.
    pub r: f64,
}

impl TheoremAData {
    pub fn new(m: f64, eps: f64, x_star: [f64; 3]) -> Self {
        TheoremAData {
            m,
            eps,
            x_star,
            r: 3.0,
        }
    }

    /// Checks the invariants; `max_eps_ratio` bounds `ε/M` (default 1/100).
    pub fn validate(&self, max_eps_ratio: f64) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::param("M must be positive"));
        }
        if !(self.eps >= 0.0 && self.eps <= max_eps_ratio * self.m) {
            return Err(Error::param(format!(
                "epsilon = {} must lie in [0, {}·M]",
                self.eps, max_eps_ratio
            )));
        }
        if !(self.r > 2.5) {
            return Err(Error::param("Sobolev index r must exceed 5/2"));
        }
        Ok(())
    }

    /// `b₃` of the datum, `M - 2M cos(x₁ - π/3 - x₁*)`.
    pub fn b3(&self, x: &[f64; 3]) -> f64 {
        self.m - 2.0 * self.m * (x[0] - PI / 3.0 - self.x_star[0]).cos()
    }

    /// Closed-form field value.
    pub fn field(&self, x: &[f64; 3]) -> [f64; 3] {
        [
            self.eps * (x[1] - self.x_star[1]).sin(),
            self.eps * (x[2] - self.x_star[2]).sin(),
            self.b3(x),
        ]
    }

    /// Closed-form Jacobian `∂ⱼbᵢ`.
    pub fn jacobian(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        [
            [0.0, self.eps * (x[1] - self.x_star[1]).cos(), 0.0],
            [0.0, 0.0, self.eps * (x[2] - self.x_star[2]).cos()],
            [2.0 * self.m * (x[0] - PI / 3.0 - self.x_star[0]).sin(), 0.0, 0.0],
        ]
    }
}

/// Velocity `(sin x₂, 0, 0)` and magnetic field
/// `(ε sin(x₂-x₂*), ε sin(x₃-x₃*), M - 2M cos(x₁-π/3-x₁*))` on a 3D grid.
pub fn make_theorem_a_data(d: &TheoremAData, grid: &Grid) -> Result<(VectorField, VectorField)> {
    d.validate(1.0)?;
    if grid.dim() != 3 {
        return Err(Error::param("the datum lives on a 3D grid"));
    }
    let u = VectorField::from_fn(grid, 3, |x| [x[1].sin(), 0.0, 0.0]);
    let b = VectorField::from_fn(grid, 3, |x| d.field(x));
    Ok((u, b))
}

/// `v̂ - k(k·v̂)/|k|²` mode by mode; the mean is left alone.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let d = v.ncomp().min(grid.dim());
    let mut comps: Vec<Vec<Complex64>> = v.comps().iter().map(|c| c.coeffs().to_vec()).collect();
    leray_in_place(&grid, &mut comps[..d]);
    let fields = comps
        .into_iter()
        .map(|c| SpectralField::from_coeffs(&grid, c).expect("sizes match"))
        .collect();
    VectorField::from_components(fields).expect("components share a grid")
}

pub(crate) fn leray_in_place(grid: &Grid, comps: &mut [Vec<Complex64>]) {
    let kv = grid.wavevectors();
    let ksq = grid.ksq();
    let d = comps.len();
    for i in 0..grid.len() {
        if ksq[i] == 0.0 {
            continue;
        }
        let mut dot = Complex64::default();
        for a in 0..d {
            dot += kv[i][a] * comps[a][i];
        }
        let s = dot / ksq[i];
        for a in 0..d {
            comps[a][i] -= kv[i][a] * s;
        }
    }
}

/// `‖P_L[(U·∇)U]‖`: zero exactly when `U` is a steady Euler flow (the
/// advective term is then a pressure gradient).
pub fn stationarity_residual(u: &VectorField) -> Result<f64> {
    let grid = u.grid().clone();
    let d = grid.dim();
    let phys = u.to_physical();
    let mut adv = Vec::with_capacity(d);
    for i in 0..d {
        let grads: Vec<SpectralField> = (0..d).map(|j| u.comp(i).derivative(j)).collect();
        let refs: Vec<&SpectralField> = grads.iter().collect();
        let gp = crate::spectral::to_physical_many(&refs);
        let prod: Vec<f64> = (0..grid.len())
            .map(|n| (0..d).map(|j| phys[j][n] * gp[j][n]).sum())
            .collect();
        let mut f = SpectralField::from_physical(&grid, &prod)?;
        for (c, keep) in f.coeffs_mut().iter_mut().zip(grid.dealias_mask()) {
            if !keep {
                *c = Complex64::default();
            }
        }
        adv.push(f);
    }
    Ok(leray_project(&VectorField::from_components(adv)?).l2_norm())
}

/// Builds the x₃-independent state `ũ = (U₁, U₂, 0)`, `b̃ = (0, 0, b₃)` from a
/// planar steady flow and a planar `b₃`, on `b₃`'s grid extruded by `n3`.
pub fn compose_reference(flow: &FlowSpec, b3: &SpectralField, n3: usize) -> Result<MhdState> {
    let g2 = b3.grid();
    if g2.dim() != 2 {
        return Err(Error::param("b3 must be a 2D field"));
    }
    let u2 = flow.velocity(g2)?;
    let residual = stationarity_residual(&u2)?;
    if residual > 1e-8 {
        return Err(Error::param(format!(
            "flow is not a steady Euler solution (residual {residual:e})"
        )));
    }
    let g3 = g2.extruded(n3, 2.0 * PI)?;
    let u = VectorField::from_components(vec![
        extrude(u2.comp(0), &g3)?,
        extrude(u2.comp(1), &g3)?,
        SpectralField::zeros(&g3),
    ])?;
    let b = VectorField::from_components(vec![
        SpectralField::zeros(&g3),
        SpectralField::zeros(&g3),
        extrude(b3, &g3)?,
    ])?;
    Ok(MhdState { u, b, time: 0.0 })
}

/// `ln` of the admissible perturbation size `M e^{-C M η^{-r/2}} e^{-M T}`.
pub fn epsilon_budget_ln(m: f64, eta: f64, r: f64, t: f64, c: f64) -> Result<f64> {
    if !(m > 0.0 && eta > 0.0 && r > 0.0 && t >= 0.0 && c >= 0.0) {
        return Err(Error::param("budget arguments must be positive"));
    }
    Ok(m.ln() - c * m * eta.powf(-0.5 * r) - m * t)
}

/// The budget itself; underflow is an error that carries the logarithm.
pub fn epsilon_budget(m: f64, eta: f64, r: f64, t: f64, c: f64) -> Result<f64> {
    let ln = epsilon_budget_ln(m, eta, r, t, c)?;
    let v = ln.exp();
    if v == 0.0 || !v.is_normal() {
        return Err(Error::Underflow { ln_value: ln });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs() -> [f64; 3] {
        [1.1, 2.3, 0.7]
    }

    #[test]
    fn datum_vanishes_at_x_star() {
        let d = TheoremAData::new(1.0, 0.01, xs());
        let v = d.field(&xs());
        assert!(v.iter().all(|c| c.abs() < 1e-13));
        let j = d.jacobian(&xs());
        let c = -(3.0f64).sqrt();
        assert!((j[2][0] - c).abs() < 1e-13);
        assert_eq!(j[0][1], 0.01);
        assert_eq!(j[1][2], 0.01);
        let det = j[0][1] * j[1][2] * j[2][0];
        assert!((det - c * 1e-4).abs() < 1e-12 * 1e-4 * 3f64.sqrt());
    }

    #[test]
    fn datum_is_divergence_free() {
        let g = Grid::new(&[16, 16, 16]).unwrap();
        let (u, b) = make_theorem_a_data(&TheoremAData::new(1.0, 0.01, xs()), &g).unwrap();
        assert!(u.divergence().l2_norm() < 1e-14);
        assert!(b.divergence().l2_norm() < 1e-14);
    }

    #[test]
    fn leray_examples() {
        let g = Grid::new(&[16, 16, 16]).unwrap();
        // ∇ of sin(x₁ + 2x₃) cos(x₂)
        let grad = VectorField::from_fn(&g, 3, |x| {
            let (a, b2) = (x[0] + 2.0 * x[2], x[1]);
            [a.cos() * b2.cos(), -a.sin() * b2.sin(), 2.0 * a.cos() * b2.cos()]
        });
        assert!(leray_project(&grad).l2_norm() < 1e-13);
        let (_, b) = make_theorem_a_data(&TheoremAData::new(1.0, 0.01, xs()), &g).unwrap();
        let pb = leray_project(&b);
        assert!(pb.axpy(-1.0, &b).unwrap().l2_norm() < 1e-13);
        let w = VectorField::from_fn(&g, 3, |x| [x[0].sin() * x[1].cos(), x[2].sin(), (x[0] + x[2]).cos()]);
        assert!(leray_project(&w).divergence().l2_norm() < 1e-12);
    }

    #[test]
    fn kolmogorov_is_a_steady_state() {
        let g = Grid::new(&[16, 16]).unwrap();
        let b3 = SpectralField::from_fn(&g, |x| 1.0 - 2.0 * (x[0] - 0.3).cos());
        let s = compose_reference(&FlowSpec::kolmogorov(1.0, 1), &b3, 8).unwrap();
        assert_eq!(s.grid().sizes(), &[16, 16, 8]);
        assert!(s.divergence_error() < 1e-14);
        // A cellular flow is steady too; a sum of two shears in different
        // directions is not.
        let psi = SpectralField::from_fn(&g, |x| x[0].sin() * x[1].sin());
        assert!(compose_reference(&FlowSpec::stream(psi), &b3, 8).is_ok());
        let psi = SpectralField::from_fn(&g, |x| x[0].cos() + (2.0 * x[1]).cos());
        assert!(compose_reference(&FlowSpec::stream(psi), &b3, 8).is_err());
    }

    #[test]
    fn budget_examples() {
        assert_eq!(epsilon_budget(2.0, 0.1, 3.0, 0.0, 0.0).unwrap(), 2.0);
        let v = epsilon_budget(1.0, 0.25, 3.0, 1.0, 1.0).unwrap();
        assert!((v - (-9.0f64).exp()).abs() < 1e-18);
        assert!((v - 1.234e-4).abs() < 1e-7);
        let a = epsilon_budget(1.0, 0.25, 3.0, 1.0, 1.0).unwrap();
        let b = epsilon_budget(1.0, 0.25, 3.0, 2.0, 1.0).unwrap();
        let c = epsilon_budget(1.0, 0.2, 3.0, 1.0, 1.0).unwrap();
        assert!(b < a && c < a);
        match epsilon_budget(1.0, 1e-4, 3.0, 1.0, 1.0) {
            Err(Error::Underflow { ln_value }) => assert!((ln_value + 1e6 + 1.0).abs() < 1e-6),
            other => panic!("expected underflow, got {other:?}"),
        }
    }
}
