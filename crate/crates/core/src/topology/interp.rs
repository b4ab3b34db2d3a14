use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Grid, VectorField};

/// The trigonometric interpolant of a 3-component field on a 3D grid,
/// evaluated by direct Fourier summation.
///
/// Coefficients too small to matter are pruned: the smallest modes are
/// dropped while their total magnitude stays below `1e-14` of the total, so
/// pointwise values change by less than that fraction of `Σ|ĉ|`.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    grid: Grid,
    // int wavevector, per-component coefficients
    modes: Vec<([i64; 3], [Complex64; 3])>,
    scale: f64,
}

impl TrigInterpolant {
    pub fn new(b: &VectorField) -> Result<Self> {
        let grid = b.grid().clone();
        if grid.dim() != 3 || b.ncomp() != 3 {
            return Err(Error::param("interpolation needs a 3-component field on a 3D grid"));
        }
        let mut modes: Vec<([i64; 3], [Complex64; 3], f64)> = (0..grid.len())
            .map(|i| {
                let c = [0, 1, 2].map(|a| b.comp(a).coeffs()[i]);
                let w = c.iter().map(|z| z.norm()).sum::<f64>();
                (grid.int_wavevector(i), c, w)
            })
            .filter(|m| m.2 > 0.0)
            .collect();
        let total: f64 = modes.iter().map(|m| m.2).sum();
        modes.sort_by(|a, b| a.2.total_cmp(&b.2));
        let mut dropped = 0.0;
        let mut cut = 0;
        while cut < modes.len() && dropped + modes[cut].2 <= 1e-14 * total {
            dropped += modes[cut].2;
            cut += 1;
        }
        let mut kept: Vec<([i64; 3], [Complex64; 3])> =
            modes[cut..].iter().map(|m| (m.0, m.1)).collect();
        kept.sort_by_key(|m| m.0);
        Ok(TrigInterpolant {
            grid,
            modes: kept,
            scale: total,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// `Σ|ĉ|`, an upper bound for the field magnitude.
    pub fn coefficient_mass(&self) -> f64 {
        self.scale
    }

    /// Field value and Jacobian `J[i][j] = ∂ⱼbᵢ` at `x`.
    pub fn eval(&self, x: &[f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let kscale: Vec<f64> = self
            .grid
            .periods()
            .iter()
            .map(|&p| 2.0 * std::f64::consts::PI / p)
            .collect();
        let mut v = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for (k, c) in &self.modes {
            let kk = [0, 1, 2].map(|a| k[a] as f64 * kscale[a]);
            let phase = Complex64::from_polar(1.0, kk[0] * x[0] + kk[1] * x[1] + kk[2] * x[2]);
            for i in 0..3 {
                let z = c[i] * phase;
                v[i] += z.re;
                // ∂ⱼ Re(z e^{ik·x}) = Re(i kⱼ z) = -kⱼ Im z
                for j in 0..3 {
                    jac[i][j] -= kk[j] * z.im;
                }
            }
        }
        (v, jac)
    }
}

/// One-off evaluation of `b` and `∇b` at `x`.
pub fn eval_field_at(b: &VectorField, x: &[f64; 3]) -> Result<([f64; 3], [[f64; 3]; 3])> {
    Ok(TrigInterpolant::new(b)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_mode_and_derivative() {
        let g = Grid::new(&[8, 8, 8]).unwrap();
        let b = VectorField::from_fn(&g, 3, |x| [0.0, 0.0, x[0].sin()]);
        let it = TrigInterpolant::new(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = [0, 1, 2].map(|_| rng.gen_range(0.0..6.3));
            let (v, j) = it.eval(&x);
            assert!((v[2] - x[0].sin()).abs() < 1e-13);
            assert!((j[2][0] - x[0].cos()).abs() < 1e-13);
            assert!(v[0].abs() < 1e-13 && j[0][0].abs() < 1e-13);
        }
    }

    #[test]
    fn grid_nodes_match_inverse_fft() {
        let g = Grid::new(&[8, 16, 8]).unwrap();
        let b = VectorField::from_fn(&g, 3, |x| {
            [(x[0] + x[2]).cos(), (2.0 * x[1]).sin() * x[0].cos(), 0.3]
        });
        let phys = b.to_physical();
        let it = TrigInterpolant::new(&b).unwrap();
        for i in (0..g.len()).step_by(37) {
            let (v, _) = it.eval(&g.node(i));
            for a in 0..3 {
                assert!((v[a] - phys[a][i]).abs() < 1e-12);
            }
        }
    }
}
