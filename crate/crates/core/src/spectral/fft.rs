//! Multi-dimensional complex FFTs built from `rustfft` line transforms.
//!
//! Plans are cached per thread; nothing here is shared between threads.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plan {
    sizes: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<Vec<usize>, Rc<Plan>>> = RefCell::new(HashMap::new());
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_for(sizes: &[usize]) -> Rc<Plan> {
    PLANS.with(|plans| {
        let mut plans = plans.borrow_mut();
        if let Some(p) = plans.get(sizes) {
            return p.clone();
        }
        let plan = PLANNER.with(|planner| {
            let mut planner = planner.borrow_mut();
            Plan {
                sizes: sizes.to_vec(),
                forward: sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
                inverse: sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
            }
        });
        let plan = Rc::new(plan);
        plans.insert(sizes.to_vec(), plan.clone());
        plan
    })
}

/// Unnormalized forward transform, `X_k = Σ x_j e^{-ik·x_j}`.
pub(crate) fn forward(sizes: &[usize], data: &mut [Complex64]) {
    let plan = plan_for(sizes);
    transform(&plan, &plan.forward, data);
}

/// Unnormalized inverse transform, `x_j = Σ X_k e^{ik·x_j}`.
pub(crate) fn inverse(sizes: &[usize], data: &mut [Complex64]) {
    let plan = plan_for(sizes);
    transform(&plan, &plan.inverse, data);
}

fn transform(plan: &Plan, ffts: &[Arc<dyn Fft<f64>>], data: &mut [Complex64]) {
    let sizes = &plan.sizes;
    let total: usize = sizes.iter().product();
    assert_eq!(data.len(), total, "buffer does not match the FFT plan");

    let mut scratch = Vec::new();
    let mut tmp = Vec::new();
    for (axis, fft) in ffts.iter().enumerate() {
        let n = sizes[axis];
        let inner: usize = sizes[axis + 1..].iter().product();
        let need = fft.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::default());
        }
        if inner == 1 {
            fft.process_with_scratch(data, &mut scratch[..need]);
            continue;
        }
        // Lines along `axis` have stride `inner`: transpose each block so the
        // lines become contiguous, transform, and transpose back.
        let block = n * inner;
        tmp.resize(block, Complex64::default());
        for chunk in data.chunks_exact_mut(block) {
            for i in 0..n {
                let row = &chunk[i * inner..(i + 1) * inner];
                for (j, v) in row.iter().enumerate() {
                    tmp[j * n + i] = *v;
                }
            }
            fft.process_with_scratch(&mut tmp, &mut scratch[..need]);
            for i in 0..n {
                let row = &mut chunk[i * inner..(i + 1) * inner];
                for (j, v) in row.iter_mut().enumerate() {
                    *v = tmp[j * n + i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct DFT, O(N²).
    fn naive(sizes: &[usize], data: &[Complex64], sign: f64) -> Vec<Complex64> {
        let total: usize = sizes.iter().product();
        let unravel = |mut f: usize| {
            let mut idx = vec![0usize; sizes.len()];
            for a in (0..sizes.len()).rev() {
                idx[a] = f % sizes[a];
                f /= sizes[a];
            }
            idx
        };
        (0..total)
            .map(|k| {
                let ki = unravel(k);
                let mut acc = Complex64::default();
                for (j, v) in data.iter().enumerate() {
                    let ji = unravel(j);
                    let phase: f64 = (0..sizes.len())
                        .map(|a| (ki[a] * ji[a]) as f64 / sizes[a] as f64)
                        .sum();
                    acc += v * Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * phase);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft_in_3d() {
        let sizes = [4, 8, 2];
        let data: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut out = data.clone();
        forward(&sizes, &mut out);
        let want = naive(&sizes, &data, -1.0);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
        inverse(&sizes, &mut out);
        for (a, b) in out.iter().zip(&data) {
            assert!((a / 64.0 - b).norm() < 1e-12);
        }
    }
}
