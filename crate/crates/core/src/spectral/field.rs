use num_complex::Complex64;

use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Whether a field is a scalar or one Cartesian component of a vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Scalar,
    Component(u8),
}

/// A real periodic field stored as its Fourier coefficients.
///
/// Coefficients are normalized so that `coeff(0)` is the spatial mean and
/// `Σ|coeff(k)|²` is the mean-normalized `L²` norm squared. The field is real
/// in physical space, so `coeff(-k) = conj(coeff(k))`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    parity: Parity,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
            parity: Parity::Scalar,
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    /// Wraps raw coefficients. The caller is responsible for Hermitian symmetry.
    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::param(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
            parity: Parity::Scalar,
        })
    }

    pub fn from_physical(grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward(grid.sizes(), &mut buf);
        let scale = 1.0 / grid.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        let mut f = SpectralField {
            grid: grid.clone(),
            coeffs: buf,
            parity: Parity::Scalar,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Samples `f` on the grid nodes and transforms.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self::from_physical(grid, &values).expect("sample count matches grid")
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Spatial average.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn coeff_at(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    /// Mean-normalized `L²` norm, by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Physical-space values on the grid nodes.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft::inverse(self.grid.sizes(), &mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Largest physical-space magnitude on the grid nodes.
    pub fn sup_norm(&self) -> f64 {
        self.to_physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest deviation from `coeff(-k) = conj(coeff(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = self.grid.conjugate_index(i);
            worst = worst.max((c - self.coeffs[j].conj()).norm());
        }
        worst
    }

    /// Projects onto Hermitian-symmetric coefficients (removes round-off).
    pub fn symmetrize(&mut self) {
        for i in 0..self.coeffs.len() {
            let j = self.grid.conjugate_index(i);
            if j < i {
                continue;
            }
            if i == j {
                self.coeffs[i].im = 0.0;
            } else {
                let avg = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
                self.coeffs[i] = avg;
                self.coeffs[j] = avg.conj();
            }
        }
    }

    /// Spectral derivative along `axis`. The Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let mut out = self.clone();
        let kv = self.grid.wavevectors();
        let nyq = self.grid.nyquist_mask();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = if nyq[i] {
                Complex64::default()
            } else {
                Complex64::new(0.0, kv[i][axis]) * *c
            };
        }
        out.parity = Parity::Scalar;
        out
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
        Ok(out)
    }

    /// Zero-pads or truncates the spectrum onto `target` (same dimension and
    /// periods). When refining, a Nyquist coefficient is split evenly
    /// between `±n/2`; when coarsening, modes at or beyond the new Nyquist
    /// are dropped.
    pub fn resample(&self, target: &Grid) -> Result<SpectralField> {
        if target.dim() != self.grid.dim() || target.periods() != self.grid.periods() {
            return Err(Error::param("resampling needs matching dimension and periods"));
        }
        if *target == self.grid {
            return Ok(self.clone());
        }
        let src_sizes = self.grid.sizes();
        let dst_sizes = target.sizes();
        let mut out = vec![Complex64::default(); target.len()];
        for (flat, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::default() {
                continue;
            }
            let k = self.grid.int_wavevector(flat);
            // Enumerate images of k in the target lattice.
            let mut targets: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
            let mut dropped = false;
            for axis in 0..self.grid.dim() {
                let (n, m) = (src_sizes[axis] as i64, dst_sizes[axis] as i64);
                let kk = k[axis];
                let mut next = Vec::new();
                for (prefix, w) in &targets {
                    if kk == -n / 2 && m > n {
                        for s in [-1i64, 1] {
                            let mut p = prefix.clone();
                            p.push(s * n / 2);
                            next.push((p, w * 0.5));
                        }
                    } else if kk.abs() >= m / 2 && m < n {
                        dropped = true;
                    } else {
                        let mut p = prefix.clone();
                        p.push(kk);
                        next.push((p, *w));
                    }
                }
                targets = next;
                if dropped {
                    break;
                }
            }
            if dropped {
                continue;
            }
            for (kt, w) in targets {
                let idx = target
                    .index_of(&kt)
                    .expect("image wavevector lies on the target lattice");
                out[idx] += w * c;
            }
        }
        Ok(SpectralField {
            grid: target.clone(),
            coeffs: out,
            parity: self.parity,
        })
    }
}

/// Transforms two real fields with a single complex inverse FFT.
pub fn to_physical_pair(a: &SpectralField, b: &SpectralField) -> (Vec<f64>, Vec<f64>) {
    assert!(a.grid == b.grid, "pair transform needs a common grid");
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x + i * y)
        .collect();
    fft::inverse(a.grid.sizes(), &mut buf);
    buf.into_iter().map(|c| (c.re, c.im)).unzip()
}

/// Forward-transforms two real sample arrays with one complex FFT.
pub fn from_physical_pair(grid: &Grid, a: &[f64], b: &[f64]) -> (SpectralField, SpectralField) {
    let n = grid.len();
    assert!(a.len() == n && b.len() == n, "sample count mismatch");
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft::forward(grid.sizes(), &mut buf);
    let scale = 1.0 / n as f64;
    let mut ca = vec![Complex64::default(); n];
    let mut cb = vec![Complex64::default(); n];
    for k in 0..n {
        let h = buf[k] * scale;
        let hc = buf[grid.conjugate_index(k)].conj() * scale;
        ca[k] = 0.5 * (h + hc);
        cb[k] = Complex64::new(0.0, -0.5) * (h - hc);
    }
    (
        SpectralField {
            grid: grid.clone(),
            coeffs: ca,
            parity: Parity::Scalar,
        },
        SpectralField {
            grid: grid.clone(),
            coeffs: cb,
            parity: Parity::Scalar,
        },
    )
}

/// Inverse-transforms any number of real fields, pairing them up.
pub fn to_physical_many(fields: &[&SpectralField]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(fields.len());
    let mut chunks = fields.chunks_exact(2);
    for pair in &mut chunks {
        let (a, b) = to_physical_pair(pair[0], pair[1]);
        out.push(a);
        out.push(b);
    }
    if let [last] = chunks.remainder() {
        out.push(last.to_physical());
    }
    out
}

/// Forward-transforms any number of real sample arrays, pairing them up.
pub fn from_physical_many(grid: &Grid, values: &[&[f64]]) -> Vec<SpectralField> {
    let mut out = Vec::with_capacity(values.len());
    let mut chunks = values.chunks_exact(2);
    for pair in &mut chunks {
        let (a, b) = from_physical_pair(grid, pair[0], pair[1]);
        out.push(a);
        out.push(b);
    }
    if let [last] = chunks.remainder() {
        out.push(SpectralField::from_physical(grid, last).expect("sample count matches grid"));
    }
    out
}

/// A vector field with one component per spatial dimension (or an explicit
/// component count, for 2D fields embedded in 3D problems).
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<SpectralField>,
}

impl VectorField {
    pub fn zeros(grid: &Grid, ncomp: usize) -> Self {
        VectorField {
            comps: (0..ncomp)
                .map(|c| SpectralField::zeros(grid).with_parity(Parity::Component(c as u8)))
                .collect(),
        }
    }

    pub fn from_components(comps: Vec<SpectralField>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::param("vector field needs at least one component"));
        }
        let grid = comps[0].grid().clone();
        if comps.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(VectorField {
            comps: comps
                .into_iter()
                .enumerate()
                .map(|(i, c)| c.with_parity(Parity::Component(i as u8)))
                .collect(),
        })
    }

    pub fn from_fn(grid: &Grid, ncomp: usize, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let samples: Vec<[f64; 3]> = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        let comps = (0..ncomp)
            .map(|c| {
                let v: Vec<f64> = samples.iter().map(|s| s[c]).collect();
                SpectralField::from_physical(grid, &v).expect("sample count matches grid")
            })
            .collect();
        Self::from_components(comps).expect("components share a grid")
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, i: usize) -> &SpectralField {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut SpectralField {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[SpectralField] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<SpectralField> {
        self.comps
    }

    /// `(Σ_i ‖v_i‖²)^{1/2}` under the mean-normalized measure.
    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖∇v‖_{L²}`, summed over components.
    pub fn gradient_l2_norm(&self) -> f64 {
        let ksq = self.grid().ksq();
        self.comps
            .iter()
            .map(|c| {
                c.coeffs()
                    .iter()
                    .zip(ksq)
                    .map(|(z, k2)| z.norm_sqr() * k2)
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral divergence (first `dim` components).
    pub fn divergence(&self) -> SpectralField {
        let grid = self.grid().clone();
        let mut out = SpectralField::zeros(&grid);
        for axis in 0..grid.dim().min(self.ncomp()) {
            let d = self.comps[axis].derivative(axis);
            for (o, v) in out.coeffs_mut().iter_mut().zip(d.coeffs()) {
                *o += v;
            }
        }
        out
    }

    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        let refs: Vec<&SpectralField> = self.comps.iter().collect();
        to_physical_many(&refs)
    }

    pub fn resample(&self, target: &Grid) -> Result<VectorField> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.resample(target))
            .collect::<Result<Vec<_>>>()?;
        VectorField::from_components(comps)
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        VectorField {
            comps: self.comps.iter().map(|c| c.scaled(a)).collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &VectorField) -> Result<VectorField> {
        if self.ncomp() != other.ncomp() {
            return Err(Error::param("component count mismatch"));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| x.axpy(a, y))
            .collect::<Result<Vec<_>>>()?;
        VectorField::from_components(comps)
    }

    /// Largest pointwise Euclidean magnitude on the grid nodes.
    pub fn sup_magnitude(&self) -> f64 {
        magnitude_sup(&self.to_physical())
    }
}

pub(crate) fn magnitude_sup(phys: &[Vec<f64>]) -> f64 {
    let n = phys.first().map_or(0, |v| v.len());
    (0..n)
        .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}
