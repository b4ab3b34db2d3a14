//! Resistive MHD on the 3-torus: explicit 2.5D reference states, the
//! perturbed datum with an isolated null, the 3D stepper and the lifespan
//! formula.

mod data;
mod lifespan;
mod stepper;

pub use data::{
    compose_reference, epsilon_budget, epsilon_budget_ln, leray_project, make_theorem_a_data,
    stationarity_residual, MhdState, TheoremAData,
};
pub use lifespan::{lifespan_bound, Lifespan};
pub use stepper::{Hyper, MhdParams, MhdStepper};
pub(crate) use data::leray_in_place;
