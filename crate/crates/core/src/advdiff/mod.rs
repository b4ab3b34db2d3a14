//! Passive scalars advected by incompressible 2D flows: the time stepper,
//! dissipation-time measurement and the enhanced-dissipation fits.

mod diagnostics;
mod flow;
mod profile;
mod stepper;

pub use diagnostics::{
    dissipation_time, fit_decay_rate, fit_rate_exponent, hs_decay_constant, rate_exponent,
    run_decay, DecayRateFit, DecayRun, DecayTrace, HsConstant, RateFit,
};
pub use flow::{
    extrude, make_shear_velocity, project_streamline_average, FlowKind, FlowSpec,
    PhysicalVelocity, SourceFactory, VelocitySource,
};
pub use profile::{critical_points, predicted_rate_exponent, shear_vanishing_order, ShearProfile};
pub use stepper::{AdvDiffParams, AdvDiffStepper};
pub(crate) use stepper::flush_tiny;
