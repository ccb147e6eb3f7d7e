//! Flux through the origin for the biased one-dimensional particle-hole
//! model, and its Brownian scaling limit.

mod particles;
mod profile;
mod reference;
mod scaling;

pub use particles::{default_window, light_cone, measure_flow, FlowOptions, FlowTrace};
pub use profile::{absorbed_flux, flux_oracle_discrete, profile_walk, ProfileWalk};
pub use reference::{bm_max_reference, reference_self_test, ReferenceSelfTest};
pub use scaling::{
    verify_scaling, ScaledSample, ScalingParams, ScalingReport, ScalingRow, TimeVerdict, MIN_RUNS,
};
