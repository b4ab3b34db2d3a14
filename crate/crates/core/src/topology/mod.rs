//! Equilibrium points of periodic vector fields and reconnection detection.

mod classify;
mod interp;
mod reconnect;
mod zeros;

pub use classify::{
    classify_eigenvalues, classify_zero, cubic_roots, det3, eigenvalues, frobenius, ClassifyTol, Mat3,
    ZeroClass,
};
pub use interp::{eval_field_at, TrigInterpolant};
pub use reconnect::{
    evaluate_snapshot, persistence_check, positivity_criterion, reconnection_time, Criterion, Persistence, Positivity,
    ReconnectionReport, SnapshotRow,
};
pub use zeros::{datum_zero_set, find_zeros, torus_distance, ZeroFinderConfig, ZeroRecord};
