//! Censored fixation indicators, the mass-transport bound below density
//! one, and odometer growth at the origin.

use arw_core::abelian::{odometer_growth, Outcome};
use arw_core::dynamics::{mass_transport_check, simulate, ProbeSpec};
use arw_core::stats::median_u64;
use arw_core::{InitialLaw, LatticeBox};
use rayon::prelude::*;
use serde::Serialize;

use super::Ctx;
use crate::config::FixationConfig;
use crate::error::{CliError, Verdict};
use crate::row;

#[derive(Debug, Serialize)]
struct ProbeSummary {
    mu: f64,
    lambda: String,
    window_radius: u64,
    horizon: String,
    seeds: usize,
    fraction_still_active: f64,
    mean_last_activity: f64,
    expectation_met: Option<bool>,
}

#[derive(Debug, Serialize)]
struct MassTransportSummary {
    mu: f64,
    window_sites: u64,
    seeds: usize,
    settled_equals_filled_everywhere: bool,
    bound: f64,
    pass_fraction: f64,
    min_final_unfilled: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct GrowthSummary {
    radii: Vec<u64>,
    median_origin_odometer: Vec<u64>,
    strictly_increasing: bool,
    budget_exceeded: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    pass: bool,
    probes: Vec<ProbeSummary>,
    mass_transport: Option<MassTransportSummary>,
    growth: Option<GrowthSummary>,
}

fn time_label(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        t.to_string()
    }
}

pub fn run(cfg: &FixationConfig, ctx: &mut Ctx) -> Result<Verdict, CliError> {
    let mut verdict = Verdict::Pass;
    let mut probes = Vec::new();

    if let Some(p) = &cfg.probe {
        let params = p.model.params(p.dim)?;
        let window = LatticeBox::centered(p.dim, p.window_radius)?;
        let probe_box = LatticeBox::centered(p.dim, p.probe_radius)?;
        if !window.contains_box(&probe_box) {
            return Err(CliError::Config("probe box must lie in the window".into()));
        }
        let spec = ProbeSpec {
            probe_box: Some(probe_box),
            first_time: p.first_time,
            ratio: p.ratio,
            event_budget: p.event_budget,
        };
        let mut summary_rows = Vec::new();
        let mut series_rows = Vec::new();
        for (mi, &mu) in p.mus.iter().enumerate() {
            let group = mi as u64;
            ctx.out
                .seeds(&format!("probe mu={mu}"), group, p.seeds as u64);
            let law = InitialLaw::poisson(mu);
            let outs = (0..p.seeds)
                .into_par_iter()
                .map(|r| {
                    simulate(
                        &params,
                        &law,
                        &window,
                        p.horizon,
                        &spec,
                        &ctx.seed.child(group, r as u64),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            let active = outs.iter().filter(|o| o.probe_active_at_end).count();
            if outs.iter().any(|o| o.truncated) {
                verdict = verdict.and(Verdict::BudgetExceeded);
            }
            let fraction = active as f64 / p.seeds.max(1) as f64;
            let mean_last =
                outs.iter().map(|o| o.last_probe_activity).sum::<f64>() / p.seeds.max(1) as f64;
            for (r, o) in outs.iter().enumerate() {
                for pt in &o.series.points {
                    series_rows.push(row![
                        mu,
                        r,
                        pt.time,
                        pt.stats.active_density,
                        pt.stats.sleeping_density,
                        pt.stats.unfilled_hole_density,
                        pt.probe_active,
                        pt.events
                    ]);
                }
            }
            let expectation_met = p.expect.iter().find(|e| e.mu == mu).map(|e| {
                e.max_still_active.map_or(true, |m| fraction <= m)
                    && e.min_still_active.map_or(true, |m| fraction >= m)
            });
            if expectation_met == Some(false) {
                verdict = verdict.and(Verdict::Violation);
            }
            eprintln!("mu={mu}: still active in {active}/{} runs", p.seeds);
            summary_rows.push(row![
                mu,
                params.sleep_rate.to_string(),
                p.window_radius,
                time_label(p.horizon),
                p.seeds,
                fraction,
                mean_last
            ]);
            probes.push(ProbeSummary {
                mu,
                lambda: params.sleep_rate.to_string(),
                window_radius: p.window_radius,
                horizon: time_label(p.horizon),
                seeds: p.seeds,
                fraction_still_active: fraction,
                mean_last_activity: mean_last,
                expectation_met,
            });
        }
        ctx.out.table(
            "probe",
            &[
                "mu",
                "lambda",
                "window_radius",
                "horizon",
                "seeds",
                "fraction_still_active",
                "mean_last_activity",
            ],
            &summary_rows,
        )?;
        ctx.out.table(
            "activity",
            &[
                "mu",
                "run",
                "time",
                "active_density",
                "sleeping_density",
                "unfilled_hole_density",
                "probe_active",
                "events",
            ],
            &series_rows,
        )?;
    }

    let mut mass_transport = None;
    if let Some(m) = &cfg.mass_transport {
        let params = m.model.params(1)?;
        if m.window_sites == 0 {
            return Err(CliError::Config("window_sites must be >= 1".into()));
        }
        let half = (m.window_sites / 2) as i64;
        let window = LatticeBox::interval(-half, m.window_sites as i64 - half - 1)?;
        let spec = ProbeSpec {
            event_budget: m.event_budget,
            ..ProbeSpec::default()
        };
        let group = 100;
        ctx.out.seeds("mass_transport", group, m.seeds as u64);
        let law = InitialLaw::poisson(m.mu);
        let results = (0..m.seeds)
            .into_par_iter()
            .map(|r| {
                let out = simulate(
                    &params,
                    &law,
                    &window,
                    f64::INFINITY,
                    &spec,
                    &ctx.seed.child(group, r as u64),
                )?;
                let check = mass_transport_check(&out.series, m.mu, m.tolerance)?;
                Ok((out.truncated, out.events, check))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut rows = Vec::new();
        for (r, (truncated, events, c)) in results.iter().enumerate() {
            rows.push(row![
                r,
                c.settled_equals_filled,
                c.min_unfilled_density,
                c.final_unfilled_density,
                c.holds,
                *events,
                *truncated
            ]);
        }
        ctx.out.table(
            "mass_transport",
            &[
                "run",
                "settled_equals_filled",
                "min_unfilled_density",
                "final_unfilled_density",
                "holds",
                "events",
                "truncated",
            ],
            &rows,
        )?;
        if results.iter().any(|r| r.0) {
            verdict = verdict.and(Verdict::BudgetExceeded);
        }
        let exact = results.iter().all(|r| r.2.settled_equals_filled);
        let passed = results.iter().filter(|r| r.2.holds).count();
        let pass_fraction = passed as f64 / m.seeds.max(1) as f64;
        let pass = exact && pass_fraction >= m.min_pass_fraction;
        verdict = verdict.and(Verdict::from_pass(pass));
        eprintln!(
            "mass transport: {passed}/{} runs above the bound, exact accounting {exact}",
            m.seeds
        );
        mass_transport = Some(MassTransportSummary {
            mu: m.mu,
            window_sites: m.window_sites,
            seeds: m.seeds,
            settled_equals_filled_everywhere: exact,
            bound: 1.0 - m.mu - m.tolerance,
            pass_fraction,
            min_final_unfilled: results
                .iter()
                .map(|r| r.2.final_unfilled_density)
                .fold(f64::INFINITY, f64::min),
            pass,
        });
    }

    let mut growth = None;
    if let Some(g) = &cfg.growth {
        let params = g.model.params(g.dim)?;
        let group = 200;
        ctx.out.seeds("growth", group, g.seeds as u64);
        let runs = (0..g.seeds)
            .into_par_iter()
            .map(|r| {
                odometer_growth(
                    &g.law,
                    &params,
                    &g.radii,
                    &ctx.seed.child(group, r as u64),
                    g.budget_per_radius,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::new();
        let mut budget_exceeded = false;
        for (r, pts) in runs.iter().enumerate() {
            for p in pts {
                budget_exceeded |= p.outcome == Outcome::BudgetExceeded;
                let outcome = match p.outcome {
                    Outcome::Stable => "stable",
                    Outcome::BudgetExceeded => "budget_exceeded",
                };
                rows.push(row![r, p.radius, p.origin_odometer, outcome, p.topplings]);
            }
        }
        ctx.out.table(
            "growth",
            &["run", "radius", "origin_odometer", "outcome", "topplings"],
            &rows,
        )?;
        let medians: Vec<u64> = (0..g.radii.len())
            .map(|j| {
                median_u64(
                    &runs
                        .iter()
                        .map(|pts| pts[j].origin_odometer)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let increasing = medians.windows(2).all(|w| w[0] < w[1]);
        if budget_exceeded {
            verdict = verdict.and(Verdict::BudgetExceeded);
        }
        verdict = verdict.and(Verdict::from_pass(increasing));
        eprintln!("odometer medians by radius: {medians:?}");
        growth = Some(GrowthSummary {
            radii: g.radii.clone(),
            median_origin_odometer: medians,
            strictly_increasing: increasing,
            budget_exceeded,
        });
    }

    ctx.out.report(&Report {
        command: "fixation-probe",
        pass: verdict == Verdict::Pass,
        probes,
        mass_transport,
        growth,
    })?;
    Ok(verdict)
}
