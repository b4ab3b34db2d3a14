//! Colored additive noise, the stochastically forced 2D Navier–Stokes
//! solver and passive-scalar decay in its velocity field.

mod decay;
mod noise;
mod sns;

pub use decay::{uniform_decay_experiment, FrozenSnsSource, UniformDecayParams, UniformDecayResult, UniformDecayRow};
pub use noise::{basis_field, in_upper_half, sample_noise_increment, NoiseSpec};
pub use sns::{energy_balance_check, run_sns_path, step_sns, EnergyBalance, SnsPath, SnsSolver, SnsState};
