use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of the lifespan formula.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lifespan {
    /// `sup{t : f(t) ≥ 0}`, or the last mesh time if `f` stays positive.
    pub t_guaranteed: f64,
    pub exceeds_mesh: bool,
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    /// A-priori bound `exp(C∫₀ᵗF)/f(t)²` (infinite once `f ≤ 0`).
    pub bound: Vec<f64>,
}

/// Evaluates
///
/// ```text
/// f(t) = e_r0^{-1/2} - (C/2) ∫₀ᵗ exp((C/2) ∫₀ˢ F) ds
/// ```
///
/// with trapezoidal quadrature on the supplied mesh (`F` linear between
/// samples) and bisects the first sign change inside its mesh interval.
pub fn lifespan_bound(e_r0: f64, times: &[f64], f_samples: &[f64], c: f64) -> Result<Lifespan> {
    if !(e_r0 > 0.0 && e_r0.is_finite()) {
        return Err(Error::param("e_r0 must be positive"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("the stability constant C must be positive"));
    }
    if times.len() != f_samples.len() || times.len() < 2 {
        return Err(Error::param("need at least two paired (t, F) samples"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("time mesh must be strictly increasing"));
    }
    let n = times.len();
    let f0 = e_r0.powf(-0.5);
    let half = 0.5 * c;
    let mut int_f = vec![0.0; n];
    let mut g = vec![1.0; n];
    let mut int_g = vec![0.0; n];
    let mut f = vec![f0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        int_f[i] = int_f[i - 1] + 0.5 * h * (f_samples[i - 1] + f_samples[i]);
        g[i] = (half * int_f[i]).exp();
        int_g[i] = int_g[i - 1] + 0.5 * h * (g[i - 1] + g[i]);
        f[i] = f0 - half * int_g[i];
    }
    let bound = (0..n)
        .map(|i| {
            if f[i] > 0.0 {
                (c * int_f[i]).exp() / (f[i] * f[i])
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let crossing = (0..n - 1).find(|&i| f[i + 1] < 0.0);
    let (t_guaranteed, exceeds_mesh) = match crossing {
        None => (times[n - 1], true),
        Some(i) => {
            let h = times[i + 1] - times[i];
            let slope = (f_samples[i + 1] - f_samples[i]) / h;
            let f_at = |tau: f64| {
                let ft = f_samples[i] + slope * tau;
                let it = int_f[i] + 0.5 * tau * (f_samples[i] + ft);
                f[i] - half * 0.5 * tau * (g[i] + (half * it).exp())
            };
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f_at(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * times[i + 1].abs().max(1.0) {
                    break;
                }
            }
            (times[i] + lo, false)
        }
    };
    Ok(Lifespan {
        t_guaranteed,
        exceeds_mesh,
        times: times.to_vec(),
        f,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mesh(t: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t * i as f64 / n as f64).collect()
    }

    #[test]
    fn zero_forcing_closed_form() {
        let (c, e) = (0.7, 2.0);
        let t = mesh(5.0, 1000);
        let l = lifespan_bound(e, &t, &vec![0.0; t.len()], c).unwrap();
        assert!((l.t_guaranteed - 2.0 / (c * e.sqrt())).abs() < 1e-12);
        assert!(!l.exceeds_mesh);
    }

    #[test]
    fn unit_forcing_closed_form() {
        let t = mesh(1.0, 200_000);
        let l = lifespan_bound(1.0, &t, &vec![1.0; t.len()], 2.0).unwrap();
        assert!((l.t_guaranteed - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn short_mesh_is_flagged() {
        let t = mesh(0.1, 10);
        let l = lifespan_bound(1.0, &t, &vec![0.0; t.len()], 1.0).unwrap();
        assert!(l.exceeds_mesh);
        assert_eq!(l.t_guaranteed, 0.1);
        assert!(l.bound.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn small_data_live_longer() {
        let t = mesh(1e4, 10_000);
        let mut last = 0.0;
        for e in [1.0, 1e-2, 1e-4, 1e-6] {
            let l = lifespan_bound(e, &t, &vec![0.0; t.len()], 1.0).unwrap();
            assert!(l.t_guaranteed > last);
            last = l.t_guaranteed;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn monotone_in_c_and_forcing(
            c in 0.1f64..5.0,
            e in 1e-3f64..10.0,
            base in proptest::collection::vec(0.0f64..3.0, 50),
            bump in proptest::collection::vec(0.0f64..1.0, 50),
            dc in 0.0f64..2.0,
        ) {
            let t = mesh(20.0, 49);
            let f2: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let a = lifespan_bound(e, &t, &base, c).unwrap().t_guaranteed;
            let b = lifespan_bound(e, &t, &f2, c).unwrap().t_guaranteed;
            let d = lifespan_bound(e, &t, &base, c + dc).unwrap().t_guaranteed;
            prop_assert!(b <= a + 1e-12);
            prop_assert!(d <= a + 1e-12);
        }
    }
}
