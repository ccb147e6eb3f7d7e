use serde::{Deserialize, Serialize};

use crate::abelian::InstructionTape;
use crate::configuration::{Configuration, DensityStats};
use crate::dynamics::engine::{ConfigSystem, EventEngine};
use crate::error::{ArwError, Result};
use crate::lattice::{LatticeBox, Window};
use crate::law::{sample_initial, InitialLaw};
use crate::model::ModelParams;
use crate::rng::SeedSpec;

/// When and where observables are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    /// Box whose activity is tracked; defaults to the whole window.
    pub probe_box: Option<LatticeBox>,
    /// First positive sample time; later ones are spaced geometrically.
    pub first_time: f64,
    pub ratio: f64,
    pub event_budget: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            probe_box: None,
            first_time: 0.1,
            ratio: 1.3,
            event_budget: 2_000_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPoint {
    pub time: f64,
    pub stats: DensityStats,
    /// Hole fillings counted event by event (independently of the scan).
    pub settled_events: u64,
    pub probe_active: bool,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub window_sites: usize,
    pub points: Vec<ObservationPoint>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub series: ObservableSeries,
    pub final_config: Configuration,
    pub truncated: bool,
    pub events: u64,
    /// Last event time touching the probe box (0 if none).
    pub last_probe_activity: f64,
    pub probe_active_at_end: bool,
    pub exited_fraction: f64,
    pub warnings: Vec<String>,
}

fn probe_mask(window: &Window, probe: Option<&LatticeBox>) -> Result<Vec<bool>> {
    match probe {
        None => Ok(vec![true; window.len()]),
        Some(b) => window.mask_of(b),
    }
}

/// Exact event-driven simulation up to `horizon` (may be infinite: run
/// until no site can fire). The first point is the time-0 state before any
/// hole is filled.
pub fn simulate(
    params: &ModelParams,
    law: &InitialLaw,
    window: &Window,
    horizon: f64,
    probes: &ProbeSpec,
    seed: &SeedSpec,
) -> Result<SimulationOutput> {
    params.validate()?;
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(ArwError::InvalidParameter(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    if probes.first_time <= 0.0 || probes.ratio <= 1.0 {
        return Err(ArwError::InvalidParameter(
            "sample times must increase geometrically".into(),
        ));
    }
    if params.dim() != window.dim() {
        return Err(ArwError::InvalidParameter(
            "kernel and window dimensions differ".into(),
        ));
    }
    let rules = params.rules();
    let config = sample_initial(law, window, seed)?;
    let initial_total = config.total_particles();
    let mask = probe_mask(window, probes.probe_box.as_ref())?;
    let n = window.len();

    let mut points = vec![ObservationPoint {
        time: 0.0,
        stats: config.density_stats(),
        settled_events: 0,
        probe_active: config
            .states()
            .iter()
            .zip(&mask)
            .any(|(s, &m)| m && !s.is_stable()),
        events: 0,
    }];
    let tapes = InstructionTape::new(window, &params.kernel, rules, seed);
    let mut eng = EventEngine::new(ConfigSystem::new(config, rules), tapes, seed);

    let record = |eng: &EventEngine<ConfigSystem>, t: f64| ObservationPoint {
        time: t,
        stats: eng.system.config.density_stats(),
        settled_events: eng.system.settled_events,
        probe_active: (0..n).any(|i| mask[i] && eng.weight(i) > 0),
        events: eng.events(),
    };

    let mut truncated = false;
    let mut last_probe = 0.0f64;
    let mut next_sample = probes.first_time;
    loop {
        let target = next_sample.min(horizon);
        while let Some(t) = eng.peek_time() {
            if t > target {
                break;
            }
            if eng.events() >= probes.event_budget {
                truncated = true;
                break;
            }
            let ev = eng.step().expect("event due");
            if mask[ev.site] || ev.effect.target.is_some_and(|y| mask[y]) {
                last_probe = ev.time;
            }
        }
        if truncated {
            let t = eng.time().max(points.last().unwrap().time);
            if t > points.last().unwrap().time {
                points.push(record(&eng, t));
            }
            break;
        }
        let exhausted = eng.peek_time().is_none();
        if exhausted && !horizon.is_finite() {
            let t = eng
                .time()
                .max(points.last().unwrap().time * probes.ratio)
                .max(probes.first_time);
            points.push(record(&eng, t));
            break;
        }
        points.push(record(&eng, target));
        if target >= horizon {
            break;
        }
        next_sample *= probes.ratio;
    }

    let config = eng.system.config.clone();
    debug_assert_eq!(config.total_particles(), initial_total);
    let exited_fraction = if initial_total == 0 {
        0.0
    } else {
        config.exited_total() as f64 / initial_total as f64
    };
    let mut warnings = Vec::new();
    if exited_fraction >= 0.01 {
        warnings.push(format!(
            "{:.2}% of particles left the window; enlarge it for density observables",
            100.0 * exited_fraction
        ));
    }
    if truncated {
        warnings.push(format!("event budget {} exhausted", probes.event_budget));
    }
    let probe_active_at_end = points.last().unwrap().probe_active;
    Ok(SimulationOutput {
        series: ObservableSeries {
            window_sites: n,
            points,
        },
        final_config: config,
        truncated,
        events: eng.events(),
        last_probe_activity: last_probe,
        probe_active_at_end,
        exited_fraction,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassTransportReport {
    pub holds: bool,
    /// Settled particles equal filled holes at every sample, exactly.
    pub settled_equals_filled: bool,
    pub min_unfilled_density: f64,
    pub final_unfilled_density: f64,
    pub bound: f64,
}

/// Checks that settled particles and filled holes agree at every sample and
/// that the unfilled-hole density stays at least `1 - mu - tolerance`.
pub fn mass_transport_check(
    series: &ObservableSeries,
    mu: f64,
    tolerance: f64,
) -> Result<MassTransportReport> {
    if !(0.0..1.0).contains(&mu) {
        return Err(ArwError::Precondition(format!("needs mu < 1, got {mu}")));
    }
    if series.points.is_empty() {
        return Err(ArwError::EmptySample);
    }
    let n = series.window_sites as f64;
    let bound = 1.0 - mu - tolerance;
    let mut equal = true;
    let mut min_unfilled = f64::INFINITY;
    for p in &series.points {
        let from_events = p.settled_events as f64 / n;
        equal &= from_events == p.stats.filled_hole_density
            && p.stats.settled_density == p.stats.filled_hole_density;
        min_unfilled = min_unfilled.min(p.stats.unfilled_hole_density);
    }
    let final_unfilled = series.points.last().unwrap().stats.unfilled_hole_density;
    Ok(MassTransportReport {
        holds: equal && min_unfilled >= bound,
        settled_equals_filled: equal,
        min_unfilled_density: min_unfilled,
        final_unfilled_density: final_unfilled,
        bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationRecord {
    pub last_activity_time: f64,
    /// Horizon-censored: some probe site can still fire at the horizon.
    pub still_active: bool,
    pub events: u64,
    pub truncated: bool,
}

/// Last activity in `probe_box` up to `horizon`, and whether it persists.
pub fn fixation_probe(
    params: &ModelParams,
    law: &InitialLaw,
    window: &Window,
    probe_box: &LatticeBox,
    horizon: f64,
    seed: &SeedSpec,
) -> Result<FixationRecord> {
    let probes = ProbeSpec {
        probe_box: Some(probe_box.clone()),
        first_time: horizon,
        ratio: 2.0,
        ..ProbeSpec::default()
    };
    let out = simulate(params, law, window, horizon, &probes, seed)?;
    Ok(FixationRecord {
        last_activity_time: out.last_probe_activity,
        still_active: out.probe_active_at_end,
        events: out.events,
        truncated: out.truncated,
    })
}
