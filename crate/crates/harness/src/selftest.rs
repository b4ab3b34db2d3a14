//! Property checks of the spectral substrate on random fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use reconlab_core::spectral::{
    apply_multiplier, dyadic_scales, lp_project, sobolev_norm, Grid, Multiplier, SpectralField,
};
use reconlab_core::Complex64;

/// Relative tolerance of the Parseval identity.
pub const PARSEVAL_TOL: f64 = 1e-12;
/// Relative tolerance of `⟨D⟩^{-s}⟨D⟩^s = Id`.
pub const COMPOSITION_TOL: f64 = 1e-12;
/// Coefficientwise tolerance of the telescoping identity.
pub const LP_TOL: f64 = 1e-12;
/// `P_N` is supported on `N/2 < |k| < 2N`, where `φ̂(r) - φ̂(2r)` is nonzero,
/// so the Bernstein bounds hold with unit slack up to rounding.
pub const BERNSTEIN_SLACK: f64 = 1.0 + 1e-12;

pub const RANDOM_MODES: usize = 64;
pub const TRIALS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed violation measure, to compare with `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// A real field with `modes` random Fourier modes strictly inside the
/// Nyquist band.
pub fn random_field(grid: &Grid, modes: usize, rng: &mut impl Rng) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for _ in 0..modes {
        let k: Vec<i64> = grid
            .sizes()
            .iter()
            .map(|&n| {
                let h = (n / 2) as i64;
                rng.gen_range(1 - h..h)
            })
            .collect();
        let idx = grid.index_of(&k).expect("mode inside the band");
        f.coeffs_mut()[idx] += Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f.symmetrize();
    f
}

fn check(name: &str, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

fn grids() -> Vec<Grid> {
    vec![
        Grid::new(&[32, 32]).expect("valid grid"),
        Grid::new(&[16, 32]).expect("valid grid"),
        Grid::new(&[16, 16, 16]).expect("valid grid"),
    ]
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.axpy(-1.0, b).expect("same grid").l2_norm();
    d / b.l2_norm().max(f64::MIN_POSITIVE)
}

fn parseval(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for g in grids() {
        for _ in 0..TRIALS {
            let f = random_field(&g, RANDOM_MODES, rng);
            let phys = f.to_physical();
            let l2 = (phys.iter().map(|v| v * v).sum::<f64>() / phys.len() as f64).sqrt();
            let spec = sobolev_norm(&f, 0.0, false);
            worst = worst.max((spec - l2).abs() / l2);
        }
    }
    check("parseval", worst, PARSEVAL_TOL)
}

fn composition(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for g in grids() {
        for s in [0.5, 1.0, 2.5, -1.5] {
            let f = random_field(&g, RANDOM_MODES, rng);
            let there = apply_multiplier(&f, Multiplier::Bessel(s)).expect("finite order");
            let back = apply_multiplier(&there, Multiplier::Bessel(-s)).expect("finite order");
            worst = worst.max(rel_diff(&back, &f));
        }
    }
    check("multiplier_composition", worst, COMPOSITION_TOL)
}

fn lp_reconstruction(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for g in grids() {
        for _ in 0..TRIALS {
            let f = random_field(&g, RANDOM_MODES, rng);
            let mut sum = SpectralField::zeros(&g);
            for n in dyadic_scales(&f) {
                sum = sum.axpy(1.0, &lp_project(&f, n).expect("dyadic")).expect("same grid");
            }
            let scale = f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let err = sum
                .coeffs()
                .iter()
                .zip(f.coeffs())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(err / scale);
        }
    }
    check("lp_reconstruction", worst, LP_TOL)
}

/// Largest ratio of the observed `‖D^s P_N f‖ / (N^s ‖P_N f‖)` to the upper
/// constant `2^s`, and of the lower constant `2^{-s}` to it.
fn bernstein(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for g in grids() {
        let scales = dyadic_scales(&SpectralField::zeros(&g));
        for &n in scales.iter().filter(|&&n| n >= 2.0) {
            for s in [0.5, 1.0, 2.0, 3.0] {
                let f = random_field(&g, RANDOM_MODES, rng);
                let block = lp_project(&f, n).expect("dyadic");
                let base = block.l2_norm();
                if base == 0.0 {
                    continue;
                }
                let lifted = apply_multiplier(&block, Multiplier::Riesz(s)).expect("finite order");
                let ratio = lifted.l2_norm() / (n.powf(s) * base);
                worst = worst.max(ratio / 2f64.powf(s)).max(0.5f64.powf(s) / ratio);
            }
        }
    }
    check("bernstein", worst, BERNSTEIN_SLACK)
}

pub fn run_spectral_selftest(seed: u64) -> SelfTestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        parseval(&mut rng),
        composition(&mut rng),
        lp_reconstruction(&mut rng),
        bernstein(&mut rng),
    ];
    SelfTestReport { seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let r = run_spectral_selftest(11);
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(r.checks.len(), 4);
    }

    #[test]
    fn random_fields_are_real() {
        let g = Grid::new(&[16, 16]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_field(&g, RANDOM_MODES, &mut rng);
        assert_eq!(f.hermitian_defect(), 0.0);
        assert!(f.l2_norm() > 0.0);
    }
}
