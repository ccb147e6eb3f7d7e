//! Activated random walks, particle-hole and annihilating systems: site-wise
//! stabilization, event-driven dynamics, the totally asymmetric recursion and
//! flow measurement.

pub mod abelian;
pub mod asym1d;
pub mod configuration;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod law;
pub mod model;
pub mod rng;
pub mod stats;

pub use configuration::{density_stats, is_stable_at, Configuration, DensityStats, SiteState};
pub use error::{ArwError, Result};
pub use lattice::{Direction, JumpKernel, LatticeBox, Window};
pub use law::{sample_initial, InitialLaw};
pub use model::{ModelKind, ModelParams, Rules, SleepRate};
pub use rng::{Purpose, SeedSpec};
