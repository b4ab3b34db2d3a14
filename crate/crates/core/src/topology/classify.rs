use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroClass {
    Hyperbolic,
    NondegenerateNonhyperbolic,
    Degenerate,
}

impl ZeroClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZeroClass::Hyperbolic => "hyperbolic",
            ZeroClass::NondegenerateNonhyperbolic => "nondegenerate_nonhyperbolic",
            ZeroClass::Degenerate => "degenerate",
        }
    }
}

/// Thresholds relative to the Frobenius norm of the Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTol {
    pub degen_tol: f64,
    pub hyp_tol: f64,
}

impl Default for ClassifyTol {
    fn default() -> Self {
        ClassifyTol {
            degen_tol: 1e-6,
            hyp_tol: 1e-6,
        }
    }
}

pub fn frobenius(j: &Mat3) -> f64 {
    j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn det3(j: &Mat3) -> f64 {
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

/// Roots of `λ³ + a λ² + b λ + c`, closed form then two Newton polishes.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    // depressed cubic t³ + p t + q with λ = t - a/3
    let shift = -a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if p == 0.0 && q == 0.0 {
        [Complex64::new(0.0, 0.0); 3]
    } else if disc <= 0.0 {
        // three real roots (trigonometric form); p < 0 here
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        [0, 1, 2].map(|m| {
            Complex64::new(r * (phi - 2.0 * std::f64::consts::PI * m as f64 / 3.0).cos(), 0.0)
        })
    } else {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        let re = -(u + v) / 2.0;
        let im = (u - v) * 3f64.sqrt() / 2.0;
        [
            Complex64::new(u + v, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    };
    for r in roots.iter_mut() {
        *r += shift;
        for _ in 0..2 {
            let f = ((*r + a) * *r + b) * *r + c;
            let df = (3.0 * *r + 2.0 * a) * *r + b;
            if df.norm() > 0.0 {
                let next = *r - f / df;
                if next.is_finite() && (((next + a) * next + b) * next + c).norm() < f.norm() {
                    *r = next;
                }
            }
        }
    }
    roots
}

/// Eigenvalues from the characteristic polynomial
/// `λ³ - tr λ² + (sum of principal 2×2 minors) λ - det`.
pub fn eigenvalues(j: &Mat3) -> [Complex64; 3] {
    let tr = j[0][0] + j[1][1] + j[2][2];
    let minors = j[0][0] * j[1][1] - j[0][1] * j[1][0] + j[0][0] * j[2][2] - j[0][2] * j[2][0]
        + j[1][1] * j[2][2]
        - j[1][2] * j[2][1];
    cubic_roots(-tr, minors, -det3(j))
}

pub fn classify_eigenvalues(eig: &[Complex64; 3], norm: f64, tol: &ClassifyTol) -> ZeroClass {
    let min_abs = eig.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
    let min_re = eig.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
    if norm == 0.0 || min_abs <= tol.degen_tol * norm {
        ZeroClass::Degenerate
    } else if min_re > tol.hyp_tol * norm {
        ZeroClass::Hyperbolic
    } else {
        ZeroClass::NondegenerateNonhyperbolic
    }
}

pub fn classify_zero(j: &Mat3, tol: &ClassifyTol) -> ZeroClass {
    classify_eigenvalues(&eigenvalues(j), frobenius(j), tol)
}
