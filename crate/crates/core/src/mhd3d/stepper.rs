use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::data::{leray_in_place, MhdState};
use crate::error::{Error, Result};
use crate::spectral::{fft, Grid, SpectralField, VectorField};

/// High-order spectral filter `exp(-coeff·(|k|/k_N)^order·t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub order: u32,
    pub coeff: f64,
}

impl Hyper {
    /// Filter whose one-step factor at two thirds of the Nyquist wavenumber
    /// is exactly 0.999.
    pub fn tuned(order: u32, dt: f64) -> Self {
        Hyper {
            order,
            coeff: -(0.999f64).ln() / ((2.0f64 / 3.0).powi(order as i32) * dt),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MhdParams {
    pub eta: f64,
    pub nu: f64,
    pub hyper: Option<Hyper>,
    pub dt: f64,
    pub horizon: f64,
    pub dealias: bool,
    pub cfl_max: f64,
}

impl MhdParams {
    pub fn new(eta: f64, dt: f64, horizon: f64) -> Self {
        MhdParams {
            eta,
            nu: 0.0,
            hyper: None,
            dt,
            horizon,
            dealias: true,
            cfl_max: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("resistivity must be positive"));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::param("viscosity must be non-negative"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt must be positive"));
        }
        if let Some(h) = self.hyper {
            if !(h.coeff >= 0.0 && h.coeff.is_finite()) {
                return Err(Error::param("hyper-dissipation coefficient must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Integrating-factor RK4 for incompressible resistive MHD in conservative
/// form,
///
/// ```text
/// ∂ₜu = -P_L ∂ⱼ(uⱼu - bⱼb) + νΔu
/// ∂ₜb = -∂ⱼ(uⱼb - bⱼu) + ηΔb
/// ```
///
/// where `P_L` is the Leray projector (it absorbs the pressure gradient).
/// The stage structure is the same as the scalar stepper's.
pub struct MhdStepper {
    grid: Grid,
    params: MhdParams,
    keep: Vec<bool>,
    eu: (Vec<f64>, Vec<f64>),
    eb: (Vec<f64>, Vec<f64>),
}

type Fields = [Vec<Complex64>; 6];

impl MhdStepper {
    pub fn new(grid: &Grid, params: &MhdParams) -> Result<Self> {
        params.validate()?;
        if grid.dim() != 3 {
            return Err(Error::Unsupported("the MHD stepper is three-dimensional".into()));
        }
        let keep: Vec<bool> = if params.dealias {
            grid.dealias_mask().to_vec()
        } else {
            grid.nyquist_mask().iter().map(|n| !n).collect()
        };
        let knyq = grid
            .sizes()
            .iter()
            .zip(grid.periods())
            .map(|(&n, &p)| (n / 2) as f64 * 2.0 * std::f64::consts::PI / p)
            .fold(f64::INFINITY, f64::min);
        let rate = |diff: f64| -> Vec<f64> {
            grid.ksq()
                .iter()
                .map(|&k2| {
                    let hyper = params
                        .hyper
                        .map_or(0.0, |h| h.coeff * (k2.sqrt() / knyq).powi(h.order as i32));
                    diff * k2 + hyper
                })
                .collect()
        };
        let (ru, rb) = (rate(params.nu), rate(params.eta));
        let fac = |r: &[f64], tau: f64| r.iter().map(|x| (-x * tau).exp()).collect::<Vec<_>>();
        Ok(MhdStepper {
            grid: grid.clone(),
            keep,
            eu: (fac(&ru, params.dt), fac(&ru, 0.5 * params.dt)),
            eb: (fac(&rb, params.dt), fac(&rb, 0.5 * params.dt)),
            params: params.clone(),
        })
    }

    pub fn params(&self) -> &MhdParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        fft::inverse(self.grid.sizes(), &mut buf);
        buf.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = a.len();
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        fft::forward(self.grid.sizes(), &mut buf);
        let scale = 1.0 / n as f64;
        let conj = self.grid.conjugate_indices();
        let mut ca = vec![Complex64::default(); n];
        let mut cb = vec![Complex64::default(); n];
        for k in 0..n {
            if !self.keep[k] {
                continue;
            }
            let h = buf[k] * scale;
            let hc = buf[conj[k]].conj() * scale;
            ca[k] = 0.5 * (h + hc);
            cb[k] = Complex64::new(0.0, -0.5) * (h - hc);
        }
        (ca, cb)
    }

    /// Physical-space fields; also returns `max|u| + max|b|`.
    fn physical(&self, f: &Fields) -> ([Vec<f64>; 3], [Vec<f64>; 3], f64) {
        let (u0, u1) = self.inverse_pair(&f[0], &f[1]);
        let (u2, b0) = self.inverse_pair(&f[2], &f[3]);
        let (b1, b2) = self.inverse_pair(&f[4], &f[5]);
        let u = [u0, u1, u2];
        let b = [b0, b1, b2];
        let speed = crate::spectral::magnitude_sup(&u) + crate::spectral::magnitude_sup(&b);
        (u, b, speed)
    }

    fn tendency(&self, f: &Fields) -> (Fields, f64) {
        let n = self.grid.len();
        let (u, b, speed) = self.physical(f);
        // Symmetric stress uᵢuⱼ - bᵢbⱼ and antisymmetric Eᵢⱼ = uⱼbᵢ - bⱼuᵢ.
        let sym_idx = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let anti_idx = [(0, 1), (0, 2), (1, 2)];
        let mut prods: Vec<Vec<f64>> = Vec::with_capacity(9);
        for &(i, j) in &sym_idx {
            prods.push((0..n).map(|p| u[i][p] * u[j][p] - b[i][p] * b[j][p]).collect());
        }
        for &(i, j) in &anti_idx {
            prods.push((0..n).map(|p| u[j][p] * b[i][p] - b[j][p] * u[i][p]).collect());
        }
        prods.push(vec![0.0; n]);
        let mut hat: Vec<Vec<Complex64>> = Vec::with_capacity(10);
        for pair in prods.chunks_exact(2) {
            let (a, c) = self.forward_pair(&pair[0], &pair[1]);
            hat.push(a);
            hat.push(c);
        }
        // hat index of the stress (i, j), and of Eᵢⱼ with its sign.
        const SYM: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
        const ANTI: [[(usize, f64); 3]; 3] = [
            [(0, 0.0), (6, 1.0), (7, 1.0)],
            [(6, -1.0), (0, 0.0), (8, 1.0)],
            [(7, -1.0), (8, -1.0), (0, 0.0)],
        ];
        let kv = self.grid.wavevectors();
        let mut out: Fields = Default::default();
        for comp in out.iter_mut() {
            *comp = vec![Complex64::default(); n];
        }
        let mi = Complex64::new(0.0, -1.0);
        for p in 0..n {
            if !self.keep[p] {
                continue;
            }
            let k = kv[p];
            for i in 0..3 {
                let mut su = Complex64::default();
                let mut sb = Complex64::default();
                for j in 0..3 {
                    su += k[j] * hat[SYM[i][j]][p];
                    let (idx, sign) = ANTI[i][j];
                    if sign != 0.0 {
                        sb += sign * k[j] * hat[idx][p];
                    }
                }
                // -∂ⱼ(·) ↦ -i kⱼ(·)
                out[i][p] = mi * su;
                out[3 + i][p] = mi * sb;
            }
        }
        for comp in out.iter_mut() {
            comp[0] = Complex64::default();
        }
        leray_in_place(&self.grid, &mut out[..3]);
        (out, speed)
    }

    fn check_cfl(&self, speed: f64) -> Result<()> {
        let h = self.grid.min_spacing();
        if speed * self.params.dt / h > self.params.cfl_max {
            return Err(Error::Cfl {
                dt: self.params.dt,
                suggested: self.params.cfl_max * h / speed,
            });
        }
        Ok(())
    }

    /// One step of size `dt`.
    pub fn step(&self, s: &mut MhdState) -> Result<()> {
        if s.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut f: Fields = Default::default();
        for i in 0..3 {
            f[i] = s.u.comp(i).coeffs().to_vec();
            f[3 + i] = s.b.comp(i).coeffs().to_vec();
        }
        let h = self.params.dt;
        let hh = 0.5 * h;
        let fac = |c: usize| if c < 3 { &self.eu } else { &self.eb };

        let (k1, speed) = self.tendency(&f);
        self.check_cfl(speed)?;
        let stage = |g: &dyn Fn(usize, usize) -> Complex64| -> Fields {
            let mut out: Fields = Default::default();
            for c in 0..6 {
                out[c] = (0..f[c].len()).map(|p| g(c, p)).collect();
            }
            out
        };
        let s2 = stage(&|c, p| fac(c).1[p] * (f[c][p] + hh * k1[c][p]));
        let (k2, _) = self.tendency(&s2);
        let s3 = stage(&|c, p| fac(c).1[p] * f[c][p] + hh * k2[c][p]);
        let (k3, _) = self.tendency(&s3);
        let s4 = stage(&|c, p| fac(c).0[p] * f[c][p] + h * fac(c).1[p] * k3[c][p]);
        let (k4, _) = self.tendency(&s4);
        let w = h / 6.0;
        let next = stage(&|c, p| {
            let (ef, eh) = (fac(c).0[p], fac(c).1[p]);
            ef * f[c][p] + w * (ef * k1[c][p] + 2.0 * eh * (k2[c][p] + k3[c][p]) + k4[c][p])
        });
        if next.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp {
                last_valid_time: s.time,
            });
        }
        let mut comps = next.into_iter().map(|mut c| {
            crate::advdiff::flush_tiny(&mut c);
            SpectralField::from_coeffs(&self.grid, c).expect("sizes match")
        });
        let u: Vec<SpectralField> = comps.by_ref().take(3).collect();
        let b: Vec<SpectralField> = comps.collect();
        s.u = VectorField::from_components(u)?;
        s.b = VectorField::from_components(b)?;
        s.time += h;
        Ok(())
    }

    pub fn advance(&self, s: &mut MhdState, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step(s)?;
        }
        Ok(())
    }

    /// Total pressure recovered from `-Δp = ∂ᵢ∂ⱼ(uᵢuⱼ - bᵢbⱼ)`, mean zero.
    pub fn pressure(&self, s: &MhdState) -> SpectralField {
        let n = self.grid.len();
        let up = s.u.to_physical();
        let bp = s.b.to_physical();
        let kv = self.grid.wavevectors();
        let ksq = self.grid.ksq();
        let mut p = vec![Complex64::default(); n];
        for i in 0..3 {
            for j in 0..3 {
                let t: Vec<f64> = (0..n).map(|q| up[i][q] * up[j][q] - bp[i][q] * bp[j][q]).collect();
                let th = SpectralField::from_physical(&self.grid, &t).expect("sizes match");
                for q in 0..n {
                    if ksq[q] > 0.0 && self.keep[q] {
                        p[q] -= kv[q][i] * kv[q][j] * th.coeffs()[q] / ksq[q];
                    }
                }
            }
        }
        SpectralField::from_coeffs(&self.grid, p).expect("sizes match")
    }
}
