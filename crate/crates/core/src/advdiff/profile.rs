use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::fft;

/// A `2π`-periodic shear profile `f(y)`, held as a trigonometric polynomial.
#[derive(Clone, Debug)]
pub struct ShearProfile {
    // (wavenumber, coefficient) pairs with nonzero coefficient; Nyquist dropped.
    modes: Vec<(i64, Complex64)>,
    n: usize,
}

impl ShearProfile {
    /// Samples `f` at `n` equispaced points (`n` a power of two ≥ 8).
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::param(format!("profile size {n} is not a power of two >= 8")));
        }
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(f(2.0 * PI * j as f64 / n as f64), 0.0))
            .collect();
        fft::forward(&[n], &mut buf);
        let scale = 1.0 / n as f64;
        let peak = buf.iter().fold(0.0f64, |m, c| m.max(c.norm())) * scale;
        let modes = buf
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != n / 2)
            .map(|(i, c)| {
                let k = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                (k, c * scale)
            })
            .filter(|(_, c)| c.norm() > 1e-14 * peak.max(f64::MIN_POSITIVE))
            .collect();
        Ok(ShearProfile { modes, n })
    }

    /// `amplitude · sin(m y)`.
    pub fn sine(amplitude: f64, m: u32) -> Self {
        let m = m as i64;
        let c = Complex64::new(0.0, -0.5 * amplitude);
        let modes = if amplitude == 0.0 || m == 0 {
            Vec::new()
        } else {
            vec![(m, c), (-m, c.conj())]
        };
        ShearProfile {
            modes,
            n: (4 * m.max(2) as usize).next_power_of_two(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> &[(i64, Complex64)] {
        &self.modes
    }

    pub fn mean(&self) -> f64 {
        self.modes
            .iter()
            .find(|(k, _)| *k == 0)
            .map_or(0.0, |(_, c)| c.re)
    }

    pub fn max_wavenumber(&self) -> i64 {
        self.modes.iter().map(|(k, _)| k.abs()).max().unwrap_or(0)
    }

    /// `f^{(order)}(y)` from the interpolant.
    pub fn derivative(&self, order: u32, y: f64) -> f64 {
        let mut acc = 0.0;
        for &(k, c) in &self.modes {
            let ik = Complex64::new(0.0, k as f64).powu(order);
            acc += (c * ik * Complex64::from_polar(1.0, k as f64 * y)).re;
        }
        acc
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.derivative(0, y)
    }
}

/// Critical points of `f` on `[0, 2π)`: sign changes of `f'` plus touching
/// zeros of `f'`, both refined by safeguarded Newton iteration.
pub fn critical_points(f: &ShearProfile, theta_der: f64) -> Vec<f64> {
    let m = (8 * f.sample_count()).max(4096);
    let h = 2.0 * PI / m as f64;
    let d1: Vec<f64> = (0..m).map(|j| f.derivative(1, j as f64 * h)).collect();
    let scale = d1.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut pts = Vec::new();
    for j in 0..m {
        let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
        let (fa, fb) = (d1[j], d1[(j + 1) % m]);
        if fa == 0.0 {
            pts.push(a);
        } else if fa * fb < 0.0 {
            pts.push(refine_root(|y| f.derivative(1, y), |y| f.derivative(2, y), a, b));
        }
    }
    // f' touching zero without changing sign: a local minimum of |f'| where
    // f'' vanishes.
    for j in 0..m {
        let (prev, cur, next) = (d1[(j + m - 1) % m].abs(), d1[j].abs(), d1[(j + 1) % m].abs());
        if cur < prev && cur <= next && cur < 1e-3 * scale && d1[(j + m - 1) % m] * d1[(j + 1) % m] > 0.0 {
            let a = (j as f64 - 1.0) * h;
            let b = (j as f64 + 1.0) * h;
            let (ga, gb) = (f.derivative(2, a), f.derivative(2, b));
            if ga * gb <= 0.0 {
                let y = refine_root(|y| f.derivative(2, y), |y| f.derivative(3, y), a, b);
                if f.derivative(1, y).abs() <= theta_der * scale {
                    pts.push(y.rem_euclid(2.0 * PI));
                }
            }
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    if pts.len() > 1 && (pts[0] + 2.0 * PI - pts[pts.len() - 1]).abs() < 1e-8 {
        pts.pop();
    }
    pts
}

// Newton on g with bisection fallback inside the bracket [a, b].
fn refine_root(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let gx = g(x);
        if gx == 0.0 {
            break;
        }
        if gx * ga < 0.0 {
            b = x;
        } else {
            a = x;
            ga = gx;
        }
        let d = dg(x);
        let newton = x - gx / d;
        x = if d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if b - a < 1e-15 {
            break;
        }
    }
    x
}

// At a degenerate critical point f' has a multiple root and the bracketing
// refinement stalls; the highest derivative that is still small there has a
// simple root, so Newton on it recovers full precision.
fn polish_critical_point(f: &ShearProfile, y: f64, max_order: usize) -> f64 {
    let m = 4096;
    let sup = |order: u32| {
        (0..m)
            .map(|j| f.derivative(order, 2.0 * PI * j as f64 / m as f64).abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    };
    let mut top = 1u32;
    while (top as usize) < max_order && f.derivative(top + 1, y).abs() < 1e-3 * sup(top + 1) {
        top += 1;
    }
    if top == 1 {
        return y;
    }
    let mut x = y;
    for _ in 0..50 {
        let d = f.derivative(top + 1, x);
        if d == 0.0 {
            break;
        }
        let step = f.derivative(top, x) / d;
        x -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    if (x - y).abs() < 1e-3 && f.derivative(1, x).abs() <= f.derivative(1, y).abs() {
        x
    } else {
        y
    }
}

/// Maximal order of vanishing at the critical points: the smallest `n0 ≥ 2`
/// such that every critical point has a nonzero derivative of order at most
/// `n0`. A derivative counts as nonzero when it exceeds `theta_der` times
/// the sup of that derivative over the period.
pub fn shear_vanishing_order(f: &ShearProfile, theta_der: f64, max_order: usize) -> Result<usize> {
    if f.max_wavenumber() == 0 {
        return Err(Error::param("constant profile has no isolated critical points"));
    }
    let pts = critical_points(f, theta_der);
    let m = (8 * f.sample_count()).max(4096);
    let mut n0 = 2;
    for &y0 in &pts {
        let y = polish_critical_point(f, y0, max_order);
        let mut found = None;
        for order in 2..=max_order {
            let sup = (0..m)
                .map(|j| f.derivative(order as u32, 2.0 * PI * j as f64 / m as f64).abs())
                .fold(0.0, f64::max);
            if f.derivative(order as u32, y).abs() > theta_der * sup {
                found = Some(order);
                break;
            }
        }
        match found {
            Some(o) => n0 = n0.max(o),
            None => return Err(Error::OrderUndetermined { max_order }),
        }
    }
    Ok(n0)
}

/// Enhanced-dissipation rate exponent `n0/(n0+2)`.
pub fn predicted_rate_exponent(n0: usize) -> Result<f64> {
    if n0 < 2 {
        return Err(Error::param(format!("vanishing order {n0} < 2 is impossible at a critical point")));
    }
    Ok(n0 as f64 / (n0 as f64 + 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_and_cosine_have_order_two() {
        let s = ShearProfile::sine(1.0, 1);
        assert_eq!(shear_vanishing_order(&s, 1e-8, 8).unwrap(), 2);
        let c = ShearProfile::from_fn(64, f64::cos).unwrap();
        let pts = critical_points(&c, 1e-8);
        assert_eq!(pts.len(), 2);
        assert!(pts[0].abs() < 1e-12 && (pts[1] - PI).abs() < 1e-12);
        assert_eq!(shear_vanishing_order(&c, 1e-8, 8).unwrap(), 2);
    }

    #[test]
    fn mixed_profile_is_nondegenerate() {
        let f = ShearProfile::from_fn(64, |y| y.sin() - 0.125 * (2.0 * y).sin()).unwrap();
        assert_eq!(shear_vanishing_order(&f, 1e-8, 8).unwrap(), 2);
    }

    #[test]
    fn degenerate_profile_has_higher_order() {
        // f' = sin³ y vanishes to third order at 0 and π.
        let f = ShearProfile::from_fn(64, |y| -y.cos() + y.cos().powi(3) / 3.0).unwrap();
        assert_eq!(shear_vanishing_order(&f, 1e-8, 8).unwrap(), 4);
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(predicted_rate_exponent(2).unwrap(), 0.5);
        assert_eq!(predicted_rate_exponent(3).unwrap(), 0.6);
        assert!((predicted_rate_exponent(4).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(predicted_rate_exponent(1).is_err());
    }
}
