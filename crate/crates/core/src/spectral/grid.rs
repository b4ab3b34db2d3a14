use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Rectangular periodic grid in two or three dimensions.
///
/// Axis `0` is `x₁`. Storage is row-major, so the last axis is contiguous.
/// Wavenumber index `i` on an axis of size `n` maps to the integer
/// wavenumber `i` for `i < n/2` and `i - n` otherwise; the Nyquist index
/// `n/2` is therefore the negative wavenumber `-n/2`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    sizes: Vec<usize>,
    periods: Vec<f64>,
    len: usize,
    // Per-flat-index physical wavevector (unused components are zero).
    wavevectors: Vec<[f64; 3]>,
    ksq: Vec<f64>,
    // Per-flat-index integer wavenumbers.
    int_wavevectors: Vec<[i64; 3]>,
    nyquist: Vec<bool>,
    dealias: Vec<bool>,
    conj: Vec<usize>,
}

impl Grid {
    /// Grid with period `2π` on every axis.
    pub fn new(sizes: &[usize]) -> Result<Self> {
        Self::with_periods(sizes, &vec![2.0 * PI; sizes.len()])
    }

    pub fn with_periods(sizes: &[usize], periods: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&sizes.len()) {
            return Err(Error::Grid(format!(
                "dimension must be 2 or 3, got {}",
                sizes.len()
            )));
        }
        if periods.len() != sizes.len() {
            return Err(Error::Grid("one period per axis is required".into()));
        }
        for &n in sizes {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::Grid(format!(
                    "axis size {n} is not a power of two >= 8"
                )));
            }
        }
        for &p in periods {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Grid(format!("period {p} must be positive")));
            }
        }

        let len: usize = sizes.iter().product();
        let mut wavevectors = Vec::with_capacity(len);
        let mut int_wavevectors = Vec::with_capacity(len);
        let mut ksq = Vec::with_capacity(len);
        let mut nyquist = Vec::with_capacity(len);
        let mut dealias = Vec::with_capacity(len);
        let mut idx = [0usize; 3];
        for _ in 0..len {
            let mut kv = [0.0; 3];
            let mut ki = [0i64; 3];
            let mut nyq = false;
            let mut keep = true;
            for axis in 0..sizes.len() {
                let n = sizes[axis];
                let k = int_wavenumber(idx[axis], n);
                ki[axis] = k;
                kv[axis] = 2.0 * PI / periods[axis] * k as f64;
                nyq |= idx[axis] == n / 2;
                keep &= 3 * k.unsigned_abs() < n as u64;
            }
            wavevectors.push(kv);
            int_wavevectors.push(ki);
            ksq.push(kv.iter().map(|k| k * k).sum());
            nyquist.push(nyq);
            dealias.push(keep);
            // advance the row-major multi-index
            for axis in (0..sizes.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < sizes[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }

        let conj = (0..len).map(|f| conjugate_of(sizes, f)).collect();
        Ok(Grid {
            inner: Arc::new(GridInner {
                conj,
                sizes: sizes.to_vec(),
                periods: periods.to_vec(),
                len,
                wavevectors,
                ksq,
                int_wavevectors,
                nyquist,
                dealias,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.inner.sizes
    }

    pub fn periods(&self) -> &[f64] {
        &self.inner.periods
    }

    /// Number of grid points (and of Fourier coefficients).
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        self.inner.wavevectors[flat]
    }

    pub fn wavevectors(&self) -> &[[f64; 3]] {
        &self.inner.wavevectors
    }

    pub fn int_wavevector(&self, flat: usize) -> [i64; 3] {
        self.inner.int_wavevectors[flat]
    }

    pub fn ksq(&self) -> &[f64] {
        &self.inner.ksq
    }

    /// True where any axis sits at its Nyquist index.
    pub fn nyquist_mask(&self) -> &[bool] {
        &self.inner.nyquist
    }

    /// True for modes kept by the 2/3 truncation rule (`3|kᵢ| < nᵢ` on every axis).
    pub fn dealias_mask(&self) -> &[bool] {
        &self.inner.dealias
    }

    /// Smallest grid spacing.
    pub fn min_spacing(&self) -> f64 {
        self.sizes()
            .iter()
            .zip(self.periods())
            .map(|(&n, &p)| p / n as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|k|` represented on the grid.
    pub fn max_wavenumber(&self) -> f64 {
        self.inner.ksq.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    /// Flat index of an integer wavevector, if it is represented.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim() {
            return None;
        }
        let mut flat = 0usize;
        for (axis, &n) in self.sizes().iter().enumerate() {
            let half = (n / 2) as i64;
            let kk = k[axis];
            if kk < -half || kk >= half {
                return None;
            }
            let idx = if kk >= 0 { kk as usize } else { (kk + n as i64) as usize };
            flat = flat * n + idx;
        }
        Some(flat)
    }

    /// Flat index of the mode `-k` (wrapping the Nyquist index onto itself).
    pub fn conjugate_index(&self, flat: usize) -> usize {
        self.inner.conj[flat]
    }

    pub fn conjugate_indices(&self) -> &[usize] {
        &self.inner.conj
    }

    /// Physical coordinates of a grid node.
    pub fn node(&self, flat: usize) -> [f64; 3] {
        let mut rem = flat;
        let mut x = [0.0; 3];
        for axis in (0..self.dim()).rev() {
            let n = self.sizes()[axis];
            x[axis] = (rem % n) as f64 * self.periods()[axis] / n as f64;
            rem /= n;
        }
        x
    }

    /// Same periods, every axis size multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        let sizes: Vec<usize> = self.sizes().iter().map(|n| n * factor).collect();
        Grid::with_periods(&sizes, self.periods())
    }

    /// The 3D grid obtained by appending an `x₃` axis to a 2D grid.
    pub fn extruded(&self, n3: usize, period3: f64) -> Result<Grid> {
        if self.dim() != 2 {
            return Err(Error::Grid("only 2D grids can be extruded".into()));
        }
        let mut sizes = self.sizes().to_vec();
        sizes.push(n3);
        let mut periods = self.periods().to_vec();
        periods.push(period3);
        Grid::with_periods(&sizes, &periods)
    }

    pub fn describe(&self) -> String {
        self.sizes()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

fn conjugate_of(sizes: &[usize], flat: usize) -> usize {
    let mut rem = flat;
    let mut out = 0usize;
    let mut stride = 1usize;
    for &n in sizes.iter().rev() {
        let i = rem % n;
        rem /= n;
        out += ((n - i) % n) * stride;
        stride *= n;
    }
    out
}

pub(crate) fn int_wavenumber(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.sizes == other.inner.sizes && self.inner.periods == other.inner.periods)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("sizes", &self.inner.sizes)
            .field("periods", &self.inner.periods)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(&[12, 16]).is_err());
        assert!(Grid::new(&[4, 4]).is_err());
        assert!(Grid::new(&[16]).is_err());
        assert!(Grid::with_periods(&[16, 16], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn wavenumber_lattice_is_symmetric() {
        let g = Grid::new(&[8, 16]).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| int_wavenumber(i, 8)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for flat in 0..g.len() {
            let k = g.int_wavevector(flat);
            let c = g.conjugate_index(flat);
            let kc = g.int_wavevector(c);
            if !g.nyquist_mask()[flat] {
                assert_eq!(kc[0], -k[0]);
                assert_eq!(kc[1], -k[1]);
            }
            assert_eq!(g.index_of(&k[..2]), Some(flat));
        }
    }

    #[test]
    fn dealias_mask_uses_two_thirds_rule() {
        let g = Grid::new(&[128, 128]).unwrap();
        assert!(g.dealias_mask()[g.index_of(&[42, -42]).unwrap()]);
        assert!(!g.dealias_mask()[g.index_of(&[43, 0]).unwrap()]);
    }
}
