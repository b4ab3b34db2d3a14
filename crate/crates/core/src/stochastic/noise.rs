use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, VectorField};

/// Spectrally colored additive noise `QẆ = Σ q_k e_k Ẇ^k` with
/// `q_k = amplitude·|k|^{-α}` for `0 < |k| ≤ K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub alpha: f64,
    /// Truncation radius `K`.
    pub k_max: f64,
    pub seed: u64,
    pub amplitude: f64,
}

impl NoiseSpec {
    pub fn new(alpha: f64, k_max: f64, seed: u64, amplitude: f64) -> Result<Self> {
        let s = NoiseSpec {
            alpha,
            k_max,
            seed,
            amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    /// Truncation at the 2/3 dealiasing radius of `grid`.
    pub fn for_grid(grid: &Grid, alpha: f64, seed: u64, amplitude: f64) -> Result<Self> {
        let n = grid.sizes().iter().min().copied().unwrap_or(0);
        Self::new(alpha, ((n as f64 - 1.0) / 3.0).floor(), seed, amplitude)
    }

    /// A spec with the same coloring but no noise.
    pub fn silent() -> Self {
        NoiseSpec {
            alpha: 6.0,
            k_max: 1.0,
            seed: 0,
            amplitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 5.0) {
            return Err(Error::param(format!("alpha = {} must exceed 5", self.alpha)));
        }
        if !(self.k_max >= 1.0 && self.k_max.is_finite()) {
            return Err(Error::param("truncation K must be at least 1"));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("noise amplitude must be non-negative"));
        }
        Ok(())
    }

    pub fn q(&self, k: [i64; 2]) -> f64 {
        let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        if r == 0.0 || r > self.k_max {
            0.0
        } else {
            self.amplitude * r.powf(-self.alpha)
        }
    }

    /// Every lattice point with `0 < |k| ≤ K`, in a fixed order.
    pub fn lattice(&self) -> Vec<[i64; 2]> {
        let kk = self.k_max.floor() as i64;
        let mut out = Vec::new();
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                let r2 = (k1 * k1 + k2 * k2) as f64;
                if r2 > 0.0 && r2 <= self.k_max * self.k_max {
                    out.push([k1, k2]);
                }
            }
        }
        out
    }

    /// `C_ℓ = Σ |k|^{2ℓ} q_k²` by direct lattice summation.
    pub fn c_ell(&self, ell: f64) -> f64 {
        self.lattice()
            .iter()
            .map(|&k| ((k[0] * k[0] + k[1] * k[1]) as f64).powf(ell) * self.q(k).powi(2))
            .sum()
    }

    /// `C_ℓ` summed shell by shell: `amplitude² Σ_n r₂(n) n^{ℓ-α}` with
    /// `r₂(n)` the number of lattice points on `|k|² = n`.
    pub fn c_ell_shells(&self, ell: f64) -> f64 {
        let nmax = (self.k_max * self.k_max).floor() as i64;
        let mut counts = vec![0u64; nmax as usize + 1];
        let kk = self.k_max.floor() as i64;
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                let n = k1 * k1 + k2 * k2;
                if n > 0 && n <= nmax {
                    counts[n as usize] += 1;
                }
            }
        }
        let a2 = self.amplitude * self.amplitude;
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(n, &c)| a2 * c as f64 * (n as f64).powf(ell - self.alpha))
            .sum()
    }

    /// Upper bound on the truncated tail `Σ_{|k|>K} |k|^{2ℓ} (amplitude |k|^{-α})²`,
    /// finite for `ℓ < α - 1`.
    pub fn tail_bound(&self, ell: f64) -> Result<f64> {
        let p = 2.0 * (self.alpha - ell);
        if !(p > 2.0) {
            return Err(Error::param(format!("C_ℓ diverges for ℓ = {ell}")));
        }
        // unit cells around lattice points outside radius K lie outside
        // K - √2/2, and |x| ≤ |k|(1 + √2/(2K)) inside a cell
        let h = 0.5 * 2f64.sqrt();
        let r0 = self.k_max - h;
        if r0 <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let factor = (1.0 + h / self.k_max).powf(p);
        Ok(self.amplitude.powi(2) * factor * 2.0 * PI * r0.powf(2.0 - p) / (p - 2.0))
    }

    /// Lattice points with nonzero `q_k`, checked against the grid.
    pub(crate) fn active_modes(&self, grid: &Grid) -> Result<Vec<([i64; 2], f64)>> {
        if self.amplitude == 0.0 {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for k in self.lattice() {
            let idx = grid
                .index_of(&k)
                .ok_or_else(|| Error::param(format!("noise mode {k:?} is not on the grid")))?;
            if !grid.dealias_mask()[idx] {
                return Err(Error::param(format!(
                    "noise mode {k:?} lies beyond the 2/3 truncation"
                )));
            }
            out.push((k, self.q(k)));
        }
        Ok(out)
    }
}

/// True for the upper half-lattice `ℤ²₊ = {k₁ > 0} ∪ {k₁ = 0, k₂ > 0}`.
pub fn in_upper_half(k: [i64; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

/// Adds `s·√2 (k⊥/|k|) sin(k·x)` (for `k ∈ ℤ²₊`) or `s·√2 (k⊥/|k|) cos(k·x)`
/// (for `k ∈ ℤ²₋`) to the coefficient arrays; `k⊥ = (-k₂, k₁)`.
pub(crate) fn add_basis_mode(grid: &Grid, comps: &mut [Vec<Complex64>], k: [i64; 2], s: f64) {
    let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
    let dir = [-k[1] as f64 / r, k[0] as f64 / r];
    let plus = grid.index_of(&k).expect("mode is on the grid");
    let minus = grid.index_of(&[-k[0], -k[1]]).expect("mode is on the grid");
    let c = s * 2f64.sqrt();
    // sin θ = (e^{iθ} - e^{-iθ})/2i, cos θ = (e^{iθ} + e^{-iθ})/2
    let (cp, cm) = if in_upper_half(k) {
        (Complex64::new(0.0, -0.5 * c), Complex64::new(0.0, 0.5 * c))
    } else {
        (Complex64::new(0.5 * c, 0.0), Complex64::new(0.5 * c, 0.0))
    };
    for a in 0..2 {
        comps[a][plus] += dir[a] * cp;
        comps[a][minus] += dir[a] * cm;
    }
}

/// The unit-norm divergence-free basis field `e_k` on a 2D grid.
pub fn basis_field(grid: &Grid, k: [i64; 2]) -> Result<VectorField> {
    if grid.dim() != 2 {
        return Err(Error::param("basis fields live on 2D grids"));
    }
    if k == [0, 0] {
        return Err(Error::param("e_k is undefined for k = 0"));
    }
    let (n1, n2) = (grid.sizes()[0] as i64, grid.sizes()[1] as i64);
    if 2 * k[0].abs() >= n1 || 2 * k[1].abs() >= n2 {
        return Err(Error::param(format!("mode {k:?} is not resolved")));
    }
    let mut comps = vec![vec![Complex64::default(); grid.len()]; 2];
    add_basis_mode(grid, &mut comps, k, 1.0);
    let fields = comps
        .into_iter()
        .map(|c| SpectralField::from_coeffs(grid, c))
        .collect::<Result<Vec<_>>>()?;
    let v = VectorField::from_components(fields)?;
    let norm = v.l2_norm();
    Ok(v.scaled(1.0 / norm))
}

/// `Σ q_k e_k ξ_k √dt` with `ξ_k` i.i.d. standard normal drawn in lattice order.
pub fn sample_noise_increment<R: Rng>(
    spec: &NoiseSpec,
    grid: &Grid,
    dt: f64,
    rng: &mut R,
) -> Result<VectorField> {
    if !(dt >= 0.0) {
        return Err(Error::param("dt must be non-negative"));
    }
    spec.validate()?;
    if grid.dim() != 2 {
        return Err(Error::param("noise lives on 2D grids"));
    }
    let mut comps = vec![vec![Complex64::default(); grid.len()]; 2];
    let sdt = dt.sqrt();
    for (k, q) in spec.active_modes(grid)? {
        let xi: f64 = rng.sample(StandardNormal);
        add_basis_mode(grid, &mut comps, k, q * xi * sdt);
    }
    let fields = comps
        .into_iter()
        .map(|c| SpectralField::from_coeffs(grid, c))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(fields)
}
