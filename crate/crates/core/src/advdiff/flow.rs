use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::profile::ShearProfile;
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, VectorField};

/// Physical-space velocity components on the scalar grid.
pub type PhysicalVelocity = Arc<Vec<Vec<f64>>>;

/// A time-dependent velocity, queried at nondecreasing stage times (and
/// re-queried inside the most recent step when a crossing is bisected).
pub trait VelocitySource: Send {
    fn velocity(&mut self, t: f64) -> Result<PhysicalVelocity>;
    fn describe(&self) -> String;
}

/// Builds a fresh source; each job owns its own instance.
pub type SourceFactory = Arc<dyn Fn(&Grid) -> Result<Box<dyn VelocitySource>> + Send + Sync>;

#[derive(Clone)]
pub enum FlowKind {
    Shear(ShearProfile),
    Kolmogorov { amplitude: f64, wavenumber: u32 },
    /// `U = ∇^⊥ψ = (-∂₂ψ, ∂₁ψ)`.
    CustomStream(SpectralField),
    External(SourceFactory),
}

/// An advecting velocity plus the regularity budget `S` used when probing
/// derivatives of its profile.
#[derive(Clone)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub regularity: usize,
}

impl FlowSpec {
    pub fn kolmogorov(amplitude: f64, wavenumber: u32) -> Self {
        FlowSpec {
            kind: FlowKind::Kolmogorov {
                amplitude,
                wavenumber,
            },
            regularity: 8,
        }
    }

    pub fn shear(profile: ShearProfile) -> Self {
        FlowSpec {
            kind: FlowKind::Shear(profile),
            regularity: 8,
        }
    }

    pub fn stream(psi: SpectralField) -> Self {
        FlowSpec {
            kind: FlowKind::CustomStream(psi),
            regularity: 8,
        }
    }

    pub fn external(factory: SourceFactory) -> Self {
        FlowSpec {
            kind: FlowKind::External(factory),
            regularity: 8,
        }
    }

    /// The quiescent flow `U = 0`.
    pub fn still() -> Self {
        Self::kolmogorov(0.0, 1)
    }

    pub fn is_shear(&self) -> bool {
        matches!(self.kind, FlowKind::Shear(_) | FlowKind::Kolmogorov { .. })
    }

    pub fn is_autonomous(&self) -> bool {
        !matches!(self.kind, FlowKind::External(_))
    }

    /// The shear profile, for shear-type flows.
    pub fn profile(&self) -> Option<ShearProfile> {
        match &self.kind {
            FlowKind::Shear(p) => Some(p.clone()),
            FlowKind::Kolmogorov {
                amplitude,
                wavenumber,
            } => Some(ShearProfile::sine(*amplitude, *wavenumber)),
            _ => None,
        }
    }

    /// Velocity on `grid`; the components beyond the plane are zero in 3D.
    pub fn velocity(&self, grid: &Grid) -> Result<VectorField> {
        match &self.kind {
            FlowKind::Shear(_) | FlowKind::Kolmogorov { .. } => make_shear_velocity(self, grid),
            FlowKind::CustomStream(psi) => {
                let psi = if psi.grid() == grid {
                    psi.clone()
                } else if psi.grid().dim() == 2 && grid.dim() == 3 {
                    extrude(psi, grid)?
                } else {
                    psi.resample(grid)?
                };
                let mut comps = vec![psi.derivative(1).scaled(-1.0), psi.derivative(0)];
                if grid.dim() == 3 {
                    comps.push(SpectralField::zeros(grid));
                }
                VectorField::from_components(comps)
            }
            FlowKind::External(_) => Err(Error::Unsupported(
                "external flows have no single velocity field".into(),
            )),
        }
    }
}

impl fmt::Display for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FlowKind::Shear(p) => write!(f, "shear(kmax={})", p.max_wavenumber()),
            FlowKind::Kolmogorov {
                amplitude,
                wavenumber,
            } => write!(f, "kolmogorov(A={amplitude},m={wavenumber})"),
            FlowKind::CustomStream(psi) => write!(f, "stream({})", psi.grid().describe()),
            FlowKind::External(_) => write!(f, "external"),
        }
    }
}

impl fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Copies a 2D field onto the `k₃ = 0` plane of a 3D grid.
pub fn extrude(f: &SpectralField, grid3: &Grid) -> Result<SpectralField> {
    let g2 = f.grid();
    if g2.dim() != 2 || grid3.dim() != 3 {
        return Err(Error::param("extrusion maps 2D fields onto 3D grids"));
    }
    if grid3.sizes()[..2] != *g2.sizes() || grid3.periods()[..2] != *g2.periods() {
        return Err(Error::GridMismatch);
    }
    let mut out = SpectralField::zeros(grid3);
    for (i, c) in f.coeffs().iter().enumerate() {
        let k = g2.int_wavevector(i);
        let j = grid3.index_of(&[k[0], k[1], 0]).expect("plane mode is represented");
        out.coeffs_mut()[j] = *c;
    }
    Ok(out)
}

/// `U = (f(x₂), 0[, 0])` for shear and Kolmogorov flows.
pub fn make_shear_velocity(spec: &FlowSpec, grid: &Grid) -> Result<VectorField> {
    let profile = spec
        .profile()
        .ok_or_else(|| Error::Unsupported("not a shear flow".into()))?;
    let peak = profile
        .modes()
        .iter()
        .fold(0.0f64, |m, (_, c)| m.max(c.norm()));
    if profile.mean().abs() > 1e-12 * peak.max(1.0) {
        return Err(Error::param(format!(
            "shear profile has nonzero mean {}",
            profile.mean()
        )));
    }
    let mut u1 = SpectralField::zeros(grid);
    let half = (grid.sizes()[1] / 2) as i64;
    for &(k, c) in profile.modes() {
        if k.abs() >= half {
            continue;
        }
        let mut kv = vec![0i64; grid.dim()];
        kv[1] = k;
        let idx = grid.index_of(&kv).expect("mode is represented");
        u1.coeffs_mut()[idx] = c;
    }
    u1.coeffs_mut()[0] = Complex64::default();
    let mut comps = vec![u1];
    for _ in 1..grid.dim() {
        comps.push(SpectralField::zeros(grid));
    }
    VectorField::from_components(comps)
}

/// Removes the `x₁`-average of every streamline of a shear flow, i.e. zeroes
/// the `k₁ = 0` modes.
pub fn project_streamline_average(rho: &SpectralField, flow: &FlowSpec) -> Result<SpectralField> {
    if !flow.is_shear() {
        return Err(Error::Unsupported(
            "the streamline average is only invariant for shear flows".into(),
        ));
    }
    let mut out = rho.clone();
    let grid = rho.grid().clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        if grid.int_wavevector(i)[0] == 0 {
            *c = Complex64::default();
        }
    }
    Ok(out)
}
