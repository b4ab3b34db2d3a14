use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{eigenvalues, classify_eigenvalues, det3, frobenius, ClassifyTol, Mat3, ZeroClass};
use super::interp::TrigInterpolant;
use crate::error::{Error, Result};
use crate::spectral::VectorField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFinderConfig {
    /// Accept a point once `|b| ≤ zero_tol`.
    pub zero_tol: f64,
    /// Refinement of the coarse scan grid over the FFT grid.
    pub scan_factor: usize,
    /// Converged points closer than this (periodic distance) are merged.
    pub dedup_radius: f64,
    pub max_iters: usize,
    /// Seeds are local minima of `|b|` below
    /// `max(capture_factor · min|b|, capture_rel · max|b|)` on the scan grid.
    pub capture_factor: f64,
    pub capture_rel: f64,
    /// At most this many seeds, smallest `|b|` first.
    pub max_seeds: usize,
    pub classify: ClassifyTol,
}

impl ZeroFinderConfig {
    /// Defaults for a datum with mean vertical field `m` and perturbation `eps`.
    pub fn for_datum(m: f64, eps: f64) -> Self {
        ZeroFinderConfig {
            zero_tol: 1e-9 * (m + eps),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_tol > 0.0) {
            return Err(Error::param("zero_tol must be positive"));
        }
        if self.scan_factor == 0 || !self.scan_factor.is_power_of_two() {
            return Err(Error::param("scan_factor must be a power of two"));
        }
        if !(self.dedup_radius > 0.0) || self.max_iters == 0 || self.max_seeds == 0 {
            return Err(Error::param("dedup_radius, max_iters and max_seeds must be positive"));
        }
        if !(self.capture_factor >= 1.0) || !(0.0..=1.0).contains(&self.capture_rel) {
            return Err(Error::param("capture thresholds out of range"));
        }
        Ok(())
    }
}

impl Default for ZeroFinderConfig {
    fn default() -> Self {
        ZeroFinderConfig {
            zero_tol: 1e-9,
            scan_factor: 2,
            dedup_radius: 1e-6,
            max_iters: 60,
            capture_factor: 10.0,
            capture_rel: 0.1,
            max_seeds: 4096,
            classify: ClassifyTol::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub location: [f64; 3],
    pub residual: f64,
    pub jacobian: Mat3,
    /// `[re, im]` pairs.
    pub eigenvalues: [[f64; 2]; 3],
    pub class: ZeroClass,
    pub newton_iters: usize,
}

impl ZeroRecord {
    pub fn eigenvalues_complex(&self) -> [Complex64; 3] {
        self.eigenvalues.map(|[re, im]| Complex64::new(re, im))
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn wrap(x: f64, period: f64) -> f64 {
    x.rem_euclid(period)
}

/// Periodic distance between two points.
pub fn torus_distance(a: &[f64; 3], b: &[f64; 3], periods: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let p = periods[i];
        let d = (a[i] - b[i]).rem_euclid(p);
        let d = d.min(p - d);
        s += d * d;
    }
    s.sqrt()
}

fn solve3(j: &Mat3, r: &[f64; 3]) -> Option<[f64; 3]> {
    let det = det3(j);
    let scale = frobenius(j);
    if !(det.abs() > 1e-13 * scale * scale * scale) {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut m = *j;
        for row in 0..3 {
            m[row][c] = r[row];
        }
        *o = det3(&m) / det;
    }
    Some(out)
}

pub(crate) struct Converged {
    pub x: [f64; 3],
    pub residual: f64,
    pub iters: usize,
}

/// Damped Newton on `b(x) = 0`; Cauchy steps on `|b|²/2` when the
/// Jacobian is singular.
pub(crate) fn newton(
    it: &TrigInterpolant,
    x0: [f64; 3],
    zero_tol: f64,
    max_iters: usize,
) -> Option<Converged> {
    let periods = it.grid().periods().to_vec();
    let mut x = x0;
    let (mut v, mut j) = it.eval(&x);
    let mut res = norm3(&v);
    for iter in 0..=max_iters {
        if res <= zero_tol {
            return Some(Converged {
                x,
                residual: res,
                iters: iter,
            });
        }
        if iter == max_iters {
            break;
        }
        let dir = match solve3(&j, &v) {
            Some(d) => d,
            None => {
                log::debug!("singular Jacobian at {x:?}; gradient step");
                let g = [0, 1, 2].map(|c| (0..3).map(|r| j[r][c] * v[r]).sum::<f64>());
                let jg = [0, 1, 2].map(|r| (0..3).map(|c| j[r][c] * g[c]).sum::<f64>());
                let den = jg.iter().map(|a| a * a).sum::<f64>();
                if den == 0.0 {
                    return None;
                }
                let alpha = g.iter().map(|a| a * a).sum::<f64>() / den;
                g.map(|a| a * alpha)
            }
        };
        // backtracking on |b|
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [0, 1, 2].map(|a| wrap(x[a] - step * dir[a], periods[a]));
            let (tv, tj) = it.eval(&trial);
            let tres = norm3(&tv);
            if tres < res {
                x = trial;
                v = tv;
                j = tj;
                res = tres;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    log::debug!("Newton from {x0:?} did not converge (|b| = {res:e})");
    None
}

pub(crate) fn make_record(it: &TrigInterpolant, c: &Converged, tol: &ClassifyTol) -> ZeroRecord {
    let (_, j) = it.eval(&c.x);
    let eig = eigenvalues(&j);
    ZeroRecord {
        location: c.x,
        residual: c.residual,
        jacobian: j,
        eigenvalues: eig.map(|z| [z.re, z.im]),
        class: classify_eigenvalues(&eig, frobenius(&j), tol),
        newton_iters: c.iters,
    }
}

/// Local minima of `|b|` on the periodic scan grid (`≤` every neighbour,
/// `<` at least one), returned as (|b|, flat index).
fn scan_minima(mag: &[f64], sizes: &[usize], threshold: f64) -> Vec<(f64, usize)> {
    let (n0, n1, n2) = (sizes[0], sizes[1], sizes[2]);
    let idx = |i: usize, j: usize, k: usize| (i * n1 + j) * n2 + k;
    (0..mag.len())
        .into_par_iter()
        .filter_map(|f| {
            let m = mag[f];
            if m > threshold {
                return None;
            }
            let (i, j, k) = (f / (n1 * n2), (f / n2) % n1, f % n2);
            let mut strict = false;
            for di in [n0 - 1, 0, 1] {
                for dj in [n1 - 1, 0, 1] {
                    for dk in [n2 - 1, 0, 1] {
                        if di == 0 && dj == 0 && dk == 0 {
                            continue;
                        }
                        let o = mag[idx((i + di) % n0, (j + dj) % n1, (k + dk) % n2)];
                        if o < m {
                            return None;
                        }
                        strict |= o > m;
                    }
                }
            }
            strict.then_some((m, f))
        })
        .collect()
}

/// All zeros of a 3-component field on a 3D grid.
pub fn find_zeros(b: &VectorField, cfg: &ZeroFinderConfig) -> Result<Vec<ZeroRecord>> {
    cfg.validate()?;
    let it = TrigInterpolant::new(b)?;
    let fine = b.grid().refined(cfg.scan_factor)?;
    let phys = b.resample(&fine)?.to_physical();
    let mag: Vec<f64> = (0..fine.len())
        .map(|i| (phys[0][i].powi(2) + phys[1][i].powi(2) + phys[2][i].powi(2)).sqrt())
        .collect();
    let lo = mag.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mag.iter().cloned().fold(0.0, f64::max);
    let threshold = (cfg.capture_factor * lo).max(cfg.capture_rel * hi);
    let mut seeds = scan_minima(&mag, fine.sizes(), threshold);
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if seeds.len() > cfg.max_seeds {
        log::warn!("{} seeds capped at {}", seeds.len(), cfg.max_seeds);
        seeds.truncate(cfg.max_seeds);
    }
    log::debug!("zero scan on {}: {} seeds below {threshold:e}", fine.describe(), seeds.len());

    let found: Vec<Converged> = seeds
        .par_iter()
        .filter_map(|&(_, f)| newton(&it, fine.node(f), cfg.zero_tol, cfg.max_iters))
        .collect();

    let periods = b.grid().periods().to_vec();
    let mut kept: Vec<Converged> = Vec::new();
    for c in found {
        match kept
            .iter_mut()
            .find(|k| torus_distance(&k.x, &c.x, &periods) < cfg.dedup_radius)
        {
            Some(k) => {
                if c.residual < k.residual {
                    *k = c;
                }
            }
            None => kept.push(c),
        }
    }
    kept.sort_by(|a, b| {
        a.x.iter()
            .zip(&b.x)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(kept.iter().map(|c| make_record(&it, c, &cfg.classify)).collect())
}

/// Half-period shift helper used by tests and the harness to list the
/// expected zero set of the perturbed datum.
pub fn datum_zero_set(x_star: &[f64; 3]) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for a in [0.0, 2.0 * PI / 3.0] {
        for bb in [0.0, PI] {
            for c in [0.0, PI] {
                out.push([
                    wrap(x_star[0] + a, 2.0 * PI),
                    wrap(x_star[1] + bb, 2.0 * PI),
                    wrap(x_star[2] + c, 2.0 * PI),
                ]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhd3d::{make_theorem_a_data, TheoremAData};
    use crate::spectral::Grid;

    const XS: [f64; 3] = [1.0, 2.0, 0.5];

    fn datum(eps: f64, n: usize) -> (TheoremAData, VectorField) {
        let d = TheoremAData::new(1.0, eps, XS);
        let g = Grid::new(&[n, n, n]).unwrap();
        let (_, b) = make_theorem_a_data(&d, &g).unwrap();
        (d, b)
    }

    #[test]
    fn perturbed_datum_has_eight_hyperbolic_zeros() {
        let (d, b) = datum(0.01, 16);
        let cfg = ZeroFinderConfig::for_datum(1.0, 0.01);
        let zs = find_zeros(&b, &cfg).unwrap();
        assert_eq!(zs.len(), 8);
        let expected = datum_zero_set(&XS);
        for z in &zs {
            assert_eq!(z.class, ZeroClass::Hyperbolic);
            assert!(z.residual <= cfg.zero_tol);
            let dist = expected
                .iter()
                .map(|e| torus_distance(e, &z.location, &[2.0 * PI; 3]))
                .fold(f64::INFINITY, f64::min);
            assert!(dist < 1e-8, "{dist}");
        }
        let at_star = zs
            .iter()
            .find(|z| torus_distance(&z.location, &XS, &[2.0 * PI; 3]) < 1e-8)
            .unwrap();
        let want = d.jacobian(&XS);
        for (got, want) in at_star.jacobian.iter().zip(&want) {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
        let real = at_star
            .eigenvalues_complex()
            .into_iter()
            .find(|z| z.im.abs() < 1e-12)
            .unwrap();
        assert!((real.re + (3f64.sqrt() * 1e-4).cbrt()).abs() < 1e-10);
    }

    #[test]
    fn constant_field_has_no_zeros() {
        let g = Grid::new(&[8, 8, 8]).unwrap();
        let b = VectorField::from_fn(&g, 3, |_| [0.0, 0.0, 1.0]);
        assert!(find_zeros(&b, &ZeroFinderConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn reference_datum_zeros_are_degenerate_planes() {
        let (d, b) = datum(0.0, 16);
        let cfg = ZeroFinderConfig {
            scan_factor: 1,
            ..ZeroFinderConfig::for_datum(1.0, 0.0)
        };
        let zs = find_zeros(&b, &cfg).unwrap();
        assert!(!zs.is_empty());
        let planes = [XS[0], XS[0] + 2.0 * PI / 3.0];
        let mut x3 = Vec::new();
        for z in &zs {
            assert_eq!(z.class, ZeroClass::Degenerate);
            let off = planes
                .iter()
                .map(|p| {
                    let dd = (z.location[0] - p).rem_euclid(2.0 * PI);
                    dd.min(2.0 * PI - dd)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(off < 1e-6);
            if (z.location[0] - XS[0]).abs() < 1e-6 {
                x3.push(z.location[2]);
            }
        }
        x3.sort_by(f64::total_cmp);
        x3.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        assert!(x3.len() >= 8, "{}", x3.len());
        // the vertical line through x*
        let it = TrigInterpolant::new(&b).unwrap();
        for s in 0..10 {
            let p = [XS[0], XS[1], s as f64 * 0.6];
            let (v, j) = it.eval(&p);
            assert!(norm3(&v) < 1e-12);
            assert_eq!(super::super::classify::classify_zero(&j, &cfg.classify), ZeroClass::Degenerate);
            assert!((d.b3(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_start_uses_gradient_steps() {
        let (_, b) = datum(0.0, 8);
        let it = TrigInterpolant::new(&b).unwrap();
        let c = newton(&it, [XS[0] + 0.2, 0.3, 0.3], 1e-12, 50).unwrap();
        assert!((c.x[0] - XS[0]).abs() < 1e-10);
    }
}
