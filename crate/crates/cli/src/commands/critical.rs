//! Scan of the totally asymmetric recursion over a grid of densities.

use arw_core::asym1d::{
    critical_scan, mu_c_exact, plain_reflected_walk, transition_point, RegimeReport,
};
use arw_core::stats::{least_squares_slope, median_u64};
use rayon::prelude::*;
use serde::Serialize;

use super::Ctx;
use crate::config::CriticalConfig;
use crate::error::{CliError, Verdict};
use crate::output::Cell;
use crate::row;

#[derive(Debug, Serialize)]
struct TransitionSummary {
    lambda: f64,
    mu_c: f64,
    transition_point: Option<f64>,
    distance: Option<f64>,
    within_tolerance: bool,
}

#[derive(Debug, Serialize)]
struct EvidenceSummary {
    lambda: f64,
    mu_above: f64,
    transient_fraction: f64,
    transient_ok: bool,
    mu_below: f64,
    medians_below: Vec<u64>,
    bounded: bool,
}

#[derive(Debug, Serialize)]
struct CriticalitySummary {
    lambda: f64,
    mu: f64,
    ladder: Vec<usize>,
    medians: Vec<u64>,
    increasing: bool,
    fit_slope: f64,
    slope_ok: bool,
    plain_medians: Vec<u64>,
    plain_fit_slope: f64,
    plain_slope_ok: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    pass: bool,
    transitions: Vec<TransitionSummary>,
    evidence: Vec<EvidenceSummary>,
    criticality: Option<CriticalitySummary>,
}

fn log_slope(ladder: &[usize], medians: &[u64]) -> f64 {
    let xs: Vec<f64> = ladder.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&m| (m as f64 + 1.0).ln()).collect();
    least_squares_slope(&xs, &ys)
}

fn scan_rows(reports: &[RegimeReport], rows: &mut Vec<Vec<Cell>>) {
    for r in reports {
        let mut row = row![
            r.lambda,
            r.mu,
            r.drift,
            r.classification.to_string(),
            r.local_slope,
            r.fit_slope,
            r.transient_fraction,
            r.runs
        ];
        row.extend(r.medians.iter().map(|&m| Cell::from(m)));
        row.extend(r.q90.iter().map(|&m| Cell::from(m)));
        rows.push(row);
    }
}

fn header(ladder: &[usize]) -> Vec<String> {
    let mut h: Vec<String> = [
        "lambda",
        "mu",
        "drift",
        "classification",
        "local_slope",
        "fit_slope",
        "transient_fraction",
        "runs",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(ladder.iter().map(|l| format!("median_L{l}")));
    h.extend(ladder.iter().map(|l| format!("q90_L{l}")));
    h
}

pub fn run(cfg: &CriticalConfig, ctx: &mut Ctx) -> Result<Verdict, CliError> {
    let th = cfg.classifier.unwrap_or_default();
    let mut transitions = Vec::new();
    if let Some(scan) = &cfg.scan {
        let grid = scan.grid()?;
        if scan.ladder.len() < 2 {
            return Err(CliError::Config(
                "scan.ladder needs at least two rungs".into(),
            ));
        }
        let mut rows = Vec::new();
        for (li, &lambda) in scan.lambdas.iter().enumerate() {
            let group = li as u64;
            ctx.out.seeds(
                &format!("scan lambda={lambda}"),
                group,
                scan.seeds_per_point as u64,
            );
            let reports = critical_scan(
                lambda,
                &grid,
                &scan.ladder,
                scan.seeds_per_point,
                &ctx.seed.child(group, 0),
                &th,
            )?;
            let mu_c = mu_c_exact(lambda)?;
            let tp = transition_point(&reports);
            let distance = tp.map(|t| (t - mu_c).abs());
            eprintln!("lambda={lambda}: mu_c={mu_c:.4} transition={tp:?}");
            transitions.push(TransitionSummary {
                lambda,
                mu_c,
                transition_point: tp,
                distance,
                within_tolerance: distance.is_some_and(|d| d <= scan.transition_tolerance),
            });
            scan_rows(&reports, &mut rows);
        }
        let h = header(&scan.ladder);
        let h: Vec<&str> = h.iter().map(String::as_str).collect();
        ctx.out.table("scan", &h, &rows)?;
    }

    let mut evidence = Vec::new();
    if let Some(e) = &cfg.evidence {
        let mut rows = Vec::new();
        if e.ladder.len() < 2 {
            return Err(CliError::Config(
                "evidence.ladder needs at least two rungs".into(),
            ));
        }
        for (li, &lambda) in e.lambdas.iter().enumerate() {
            let mu_c = mu_c_exact(lambda)?;
            let (above, below) = (mu_c + e.offset, mu_c - e.offset);
            let group = 100 + li as u64;
            ctx.out
                .seeds(&format!("evidence lambda={lambda}"), group, e.seeds as u64);
            let seed = ctx.seed.child(group, 0);
            let r_above =
                critical_scan(lambda, &[above], &e.ladder, e.seeds, &seed.child(0, 0), &th)?
                    .remove(0);
            let r_below =
                critical_scan(lambda, &[below], &e.ladder, e.seeds, &seed.child(1, 0), &th)?
                    .remove(0);
            let lo = *r_below.medians.iter().min().expect("ladder") as f64;
            let hi = *r_below.medians.iter().max().expect("ladder") as f64;
            evidence.push(EvidenceSummary {
                lambda,
                mu_above: above,
                transient_fraction: r_above.transient_fraction,
                transient_ok: r_above.transient_fraction >= e.transient_min_fraction,
                mu_below: below,
                medians_below: r_below.medians.clone(),
                bounded: hi <= e.bounded_factor * lo + e.bounded_slack,
            });
            scan_rows(&[r_above, r_below], &mut rows);
        }
        let h = header(&e.ladder);
        let h: Vec<&str> = h.iter().map(String::as_str).collect();
        ctx.out.table("evidence", &h, &rows)?;
    }

    let mut criticality = None;
    if let Some(c) = &cfg.criticality {
        if c.ladder.len() < 2 {
            return Err(CliError::Config(
                "criticality.ladder needs at least two rungs".into(),
            ));
        }
        let mu_c = mu_c_exact(c.lambda)?;
        let group = 200;
        ctx.out.seeds("criticality", group, c.seeds as u64);
        let seed = ctx.seed.child(group, 0);
        let r = critical_scan(
            c.lambda,
            &[mu_c],
            &c.ladder,
            c.seeds,
            &seed.child(0, 0),
            &th,
        )?
        .remove(0);
        let plain: Vec<Vec<u64>> = (0..c.seeds)
            .into_par_iter()
            .map(|i| {
                let s = seed.child(1, i as u64);
                c.ladder
                    .iter()
                    .map(|&l| plain_reflected_walk(l, &s))
                    .collect()
            })
            .collect();
        let plain_medians: Vec<u64> = (0..c.ladder.len())
            .map(|j| median_u64(&plain.iter().map(|p| p[j]).collect::<Vec<_>>()))
            .collect();
        let fit = log_slope(&c.ladder, &r.medians);
        let plain_fit = log_slope(&c.ladder, &plain_medians);
        let mut rows = Vec::new();
        for (j, &l) in c.ladder.iter().enumerate() {
            rows.push(row![l, r.medians[j], r.q90[j], plain_medians[j]]);
        }
        ctx.out.table(
            "criticality",
            &["l", "median", "q90", "plain_walk_median"],
            &rows,
        )?;
        criticality = Some(CriticalitySummary {
            lambda: c.lambda,
            mu: mu_c,
            ladder: c.ladder.clone(),
            increasing: r.medians.windows(2).all(|w| w[0] < w[1]),
            medians: r.medians,
            fit_slope: fit,
            slope_ok: (c.slope_min..=c.slope_max).contains(&fit),
            plain_medians,
            plain_fit_slope: plain_fit,
            plain_slope_ok: (c.slope_min..=c.slope_max).contains(&plain_fit),
        });
    }

    let pass = transitions.iter().all(|t| t.within_tolerance)
        && evidence.iter().all(|e| e.transient_ok && e.bounded)
        && criticality
            .as_ref()
            .map_or(true, |c| c.increasing && c.slope_ok && c.plain_slope_ok);
    ctx.out.report(&Report {
        command: "critical-scan",
        pass,
        transitions,
        evidence,
        criticality,
    })?;
    Ok(Verdict::from_pass(pass))
}
