//! One raw run with an observable dump.

use arw_core::dynamics::{simulate, ProbeSpec};
use arw_core::SiteState;
use serde::Serialize;

use super::Ctx;
use crate::config::SimulateConfig;
use crate::error::{CliError, Verdict};
use crate::output::Cell;
use crate::row;

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    pass: bool,
    model: String,
    sites: usize,
    events: u64,
    truncated: bool,
    probe_active_at_end: bool,
    last_probe_activity: f64,
    exited_fraction: f64,
    final_particles: u64,
    warnings: Vec<String>,
}

fn state_label(s: SiteState) -> &'static str {
    match s {
        SiteState::Empty => "empty",
        SiteState::Sleeping => "sleeping",
        SiteState::Settled => "settled",
        SiteState::Active { .. } => "active",
    }
}

pub fn run(cfg: &SimulateConfig, ctx: &mut Ctx) -> Result<Verdict, CliError> {
    let s = &cfg.simulate;
    let window = s.window()?;
    let params = s.model.params(window.dim())?;
    let spec = ProbeSpec {
        probe_box: s.probe_box()?,
        first_time: s.first_time,
        ratio: s.ratio,
        event_budget: s.event_budget,
    };
    ctx.out.seeds("simulate", 0, 1);
    let out = simulate(
        &params,
        &s.law,
        &window,
        s.horizon,
        &spec,
        &ctx.seed.child(0, 0),
    )?;

    let rows: Vec<_> = out
        .series
        .points
        .iter()
        .map(|p| {
            row![
                p.time,
                p.stats.active_density,
                p.stats.sleeping_density,
                p.stats.settled_density,
                p.stats.filled_hole_density,
                p.stats.unfilled_hole_density,
                p.settled_events,
                p.probe_active,
                p.events
            ]
        })
        .collect();
    ctx.out.table(
        "series",
        &[
            "time",
            "active_density",
            "sleeping_density",
            "settled_density",
            "filled_hole_density",
            "unfilled_hole_density",
            "settled_events",
            "probe_active",
            "events",
        ],
        &rows,
    )?;

    let dim = window.dim();
    let mut header: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
    header.extend([
        "particles".to_string(),
        "state".to_string(),
        "hole_filled".to_string(),
    ]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let cfg_final = &out.final_config;
    let rows: Vec<Vec<Cell>> = (0..window.len())
        .map(|i| {
            let st = cfg_final.state(i);
            let mut r: Vec<Cell> = window.site(i).into_iter().map(Cell::from).collect();
            r.extend(row![st.particles(), state_label(st), st.hole_filled()]);
            r
        })
        .collect();
    ctx.out.table("final", &header, &rows)?;

    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    ctx.out.report(&Report {
        command: "simulate",
        pass: !out.truncated,
        model: s.model.label(),
        sites: window.len(),
        events: out.events,
        truncated: out.truncated,
        probe_active_at_end: out.probe_active_at_end,
        last_probe_activity: out.last_probe_activity,
        exited_fraction: out.exited_fraction,
        final_particles: cfg_final.particles_in_window(),
        warnings: out.warnings.clone(),
    })?;
    Ok(if out.truncated {
        Verdict::BudgetExceeded
    } else {
        Verdict::Pass
    })
}
