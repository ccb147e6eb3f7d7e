//! Continuous-time event-driven dynamics.

mod annihilating;
mod engine;
mod fenwick;
mod observe;

pub use annihilating::{annihilating_equivalence, EquivalenceReport, TwoTypeSystem};
pub use engine::{ConfigSystem, Event, EventEngine, SiteSystem};
pub use fenwick::Fenwick;
pub use observe::{
    fixation_probe, mass_transport_check, simulate, FixationRecord, MassTransportReport,
    ObservableSeries, ObservationPoint, ProbeSpec, SimulationOutput,
};
