//! Periodic fields on rectangular tori and the Fourier-side operators that
//! act on them.

pub(crate) mod fft;
mod field;
mod grid;
mod littlewood_paley;
mod multiplier;
pub mod snapshot;

pub use field::{
    from_physical_many, from_physical_pair, to_physical_many, to_physical_pair, Parity,
    SpectralField, VectorField,
};
pub(crate) use field::magnitude_sup;
pub(crate) use grid::int_wavenumber;
pub use grid::Grid;
pub use littlewood_paley::{
    besov_norm, cutoff, dyadic_scales, lp_project, lp_project_gt, lp_project_leq,
};
pub use multiplier::{apply_multiplier, sobolev_norm, Multiplier};
