use super::field::SpectralField;
use super::littlewood_paley::cutoff;
use crate::error::{Error, Result};

/// A Fourier multiplier, identified by its symbol `m(k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier {
    /// `⟨D⟩^s`, symbol `(1+|k|²)^{s/2}`.
    Bessel(f64),
    /// `D^s`, symbol `|k|^s`, zero on the mean mode.
    Riesz(f64),
    /// Heat semigroup, symbol `e^{-ηt|k|²}`; the payload is `ηt`.
    Heat(f64),
    /// `P_{≤N}`, symbol `φ̂(|k|/N)`.
    LpAtMost(f64),
    /// `P_N = P_{≤N} - P_{≤N/2}`.
    LpBlock(f64),
    /// `Id - P_{≤N}`.
    LpAbove(f64),
    /// 2/3-rule truncation.
    Dealias,
}

impl Multiplier {
    fn validate(&self) -> Result<()> {
        match *self {
            Multiplier::Bessel(s) | Multiplier::Riesz(s) | Multiplier::Heat(s) if !s.is_finite() => {
                Err(Error::param(format!("multiplier order {s} is not finite")))
            }
            Multiplier::LpAtMost(n) | Multiplier::LpBlock(n) | Multiplier::LpAbove(n)
                if !(n.is_finite() && n > 0.0) =>
            {
                Err(Error::param(format!("LP scale {n} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Symbol at a mode with squared wavenumber `ksq`. `Dealias` needs the
    /// grid mask and is handled by the caller.
    pub fn symbol(&self, ksq: f64) -> f64 {
        match *self {
            Multiplier::Bessel(s) => (1.0 + ksq).powf(0.5 * s),
            Multiplier::Riesz(s) => {
                if ksq == 0.0 {
                    0.0
                } else {
                    ksq.powf(0.5 * s)
                }
            }
            Multiplier::Heat(eta_t) => (-eta_t * ksq).exp(),
            Multiplier::LpAtMost(n) => cutoff(ksq.sqrt() / n),
            Multiplier::LpBlock(n) => {
                let r = ksq.sqrt() / n;
                cutoff(r) - cutoff(2.0 * r)
            }
            Multiplier::LpAbove(n) => 1.0 - cutoff(ksq.sqrt() / n),
            Multiplier::Dealias => 1.0,
        }
    }
}

/// Multiplies every coefficient by the (real, even) symbol, which keeps the
/// field Hermitian.
pub fn apply_multiplier(f: &SpectralField, m: Multiplier) -> Result<SpectralField> {
    m.validate()?;
    let mut out = f.clone();
    let grid = f.grid().clone();
    if m == Multiplier::Dealias {
        for (c, keep) in out.coeffs_mut().iter_mut().zip(grid.dealias_mask()) {
            if !keep {
                *c = Default::default();
            }
        }
        return Ok(out);
    }
    for (c, &ksq) in out.coeffs_mut().iter_mut().zip(grid.ksq()) {
        *c *= m.symbol(ksq);
    }
    Ok(out)
}

/// `‖f‖_{H^s}` (weight `(1+|k|²)^s`) or `‖f‖_{Ḣ^s}` (weight `|k|^{2s}`, mean
/// mode excluded), under the mean-normalized measure.
pub fn sobolev_norm(f: &SpectralField, s: f64, homogeneous: bool) -> f64 {
    let sum: f64 = f
        .coeffs()
        .iter()
        .zip(f.grid().ksq())
        .map(|(c, &ksq)| {
            let w = if homogeneous {
                if ksq == 0.0 {
                    0.0
                } else {
                    ksq.powf(s)
                }
            } else {
                (1.0 + ksq).powf(s)
            };
            w * c.norm_sqr()
        })
        .sum();
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::LN_2;

    fn sin1(g: &Grid) -> SpectralField {
        SpectralField::from_fn(g, |x| x[0].sin())
    }

    #[test]
    fn symbol_examples() {
        let g = Grid::new(&[16, 16]).unwrap();
        let one = SpectralField::constant(&g, 1.0);
        for s in [-2.0, 0.5, 3.0] {
            let b = apply_multiplier(&one, Multiplier::Bessel(s)).unwrap();
            assert!((b.mean() - 1.0).abs() < 1e-15);
            assert_eq!(apply_multiplier(&one, Multiplier::Riesz(s)).unwrap().l2_norm(), 0.0);
        }
        let f = sin1(&g);
        let d2 = apply_multiplier(&f, Multiplier::Riesz(2.0)).unwrap();
        assert!(d2.axpy(-1.0, &f).unwrap().l2_norm() < 1e-13);
        let h = apply_multiplier(&f, Multiplier::Heat(LN_2)).unwrap();
        assert!(h.axpy(-0.5, &f).unwrap().l2_norm() < 1e-15);
        assert!(apply_multiplier(&f, Multiplier::Bessel(f64::NAN)).is_err());
    }

    #[test]
    fn norm_examples() {
        let g = Grid::new(&[16, 16]).unwrap();
        let one = SpectralField::constant(&g, 1.0);
        assert!((sobolev_norm(&one, 3.0, false) - 1.0).abs() < 1e-15);
        let f = sin1(&g);
        assert!((sobolev_norm(&f, 0.0, false) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((sobolev_norm(&f, 1.0, false) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dealias_zeroes_high_modes() {
        let g = Grid::new(&[16, 16]).unwrap();
        let f = SpectralField::from_fn(&g, |x| (6.0 * x[0]).cos() + x[1].sin());
        let d = apply_multiplier(&f, Multiplier::Dealias).unwrap();
        let want = SpectralField::from_fn(&g, |x| x[1].sin());
        assert!(d.axpy(-1.0, &want).unwrap().l2_norm() < 1e-14);
    }
}
