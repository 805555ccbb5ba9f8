//! Charge-balanced flow-matching generation of periodic amorphous structures.
//!
//! A velocity field moves atom positions and per-atom element logits from
//! noise to a structure. Every Euler step nudges the logits back toward zero
//! total formal charge, and a final dynamic-programming repair makes the
//! discrete assignment exactly balanced.

pub mod analysis;
pub mod charge;
pub mod error;
pub mod io;
pub mod noise;
pub mod projection;
pub mod sampler;
pub mod types;
pub mod velocity;

pub use charge::{charge_metrics, charge_report, hard_charge, soft_charge, soft_charge_gradient, ChargeReport};
pub use error::{Error, Result};
pub use projection::{discrete_project, gauss_newton_step, DiscreteRepair, ProjectionOutcome};
pub use sampler::{generate, generate_with_count, GenerationTrace, Generated};
pub use types::{
    ghost_padded_count, min_image_displacement, ElementState, ElementTable, GenerationConfig, Lattice,
    MaterialSample, Vec3,
};
pub use velocity::{Egnn, EgnnConfig, TeacherField, VelocityField, VelocityOutput, WeightContainer};
