//! Rescaled flux through the origin against the Brownian running maximum.

use arw_core::flow::{
    reference_self_test, verify_scaling, ReferenceSelfTest, ScalingParams, ScalingRow, TimeVerdict,
};
use arw_core::stats::{HalfNormal, ReferenceCdf};
use serde::Serialize;

use super::Ctx;
use crate::config::{FlowConfig, FlowSection};
use crate::error::{CliError, Verdict};
use crate::row;

#[derive(Debug, Serialize)]
struct ReferenceSummary {
    #[serde(flatten)]
    test: ReferenceSelfTest,
    moments_ok: bool,
    scale_ok: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    pass: bool,
    scaling: Option<ScalingSummary>,
    reference: Option<ReferenceSummary>,
}

#[derive(Debug, Serialize)]
struct ScalingSummary {
    pass: bool,
    p: f64,
    v: f64,
    sigma: f64,
    ladder: Vec<u32>,
    t_list: Vec<f64>,
    runs: usize,
    ks_threshold: f64,
    mean_tolerance: f64,
    rows: Vec<ScalingRow>,
    verdicts: Vec<TimeVerdict>,
    monotone_violations: usize,
    events: u64,
    warnings: Vec<String>,
}

pub fn run(cfg: &FlowConfig, ctx: &mut Ctx) -> Result<Verdict, CliError> {
    let scaling = match &cfg.flow {
        Some(f) => Some(run_scaling(f, ctx)?),
        None => None,
    };
    let reference = match &cfg.reference {
        None => None,
        Some(r) => {
            let group = 1000;
            ctx.out.seeds("reference", group, 1);
            let test = reference_self_test(
                r.moment_samples,
                r.scale_samples,
                r.scale_factor,
                &ctx.seed.child(group, 0),
            )?;
            let s = ReferenceSummary {
                moments_ok: test.mean_z.abs() <= r.moment_sigmas
                    && test.variance_z.abs() <= r.moment_sigmas,
                scale_ok: test.scale_ks < r.scale_ks_threshold,
                test,
            };
            eprintln!(
                "reference: mean z {:.3}, variance z {:.3}, scale KS {:.5}",
                s.test.mean_z, s.test.variance_z, s.test.scale_ks
            );
            Some(s)
        }
    };
    let pass = scaling.as_ref().map_or(true, |s| s.pass)
        && reference
            .as_ref()
            .map_or(true, |r| r.moments_ok && r.scale_ok);
    ctx.out.report(&Report {
        command: "flow-scaling",
        pass,
        scaling,
        reference,
    })?;
    Ok(Verdict::from_pass(pass))
}

fn run_scaling(f: &FlowSection, ctx: &mut Ctx) -> Result<ScalingSummary, CliError> {
    let params = ScalingParams {
        p: f.p,
        law: f.law.clone(),
        t_list: f.t_list.clone(),
        ladder: f.ladder.clone(),
        runs: f.runs,
        ks_threshold: f.ks_threshold,
        mean_tolerance: f.mean_tolerance,
    };
    params.validate()?;
    for (li, l) in f.ladder.iter().enumerate() {
        ctx.out
            .seeds(&format!("flow L={l}"), li as u64, f.runs as u64);
    }
    let report = verify_scaling(&params, &ctx.seed)?;

    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| row![r.l, r.t, r.ks, r.mean, r.expected_mean, r.runs])
        .collect();
    ctx.out.table(
        "ks",
        &["l", "t", "ks", "mean", "expected_mean", "runs"],
        &rows,
    )?;

    let mut cdf = Vec::new();
    for s in &report.samples {
        let reference = HalfNormal { scale: s.t.sqrt() };
        let n = s.values.len() as f64;
        let mut i = 0;
        while i < s.values.len() {
            let x = s.values[i];
            let mut j = i;
            while j < s.values.len() && s.values[j] == x {
                j += 1;
            }
            cdf.push(row![s.l, s.t, x, j as f64 / n, reference.cdf(x)]);
            i = j;
        }
    }
    ctx.out
        .table("cdf", &["l", "t", "x", "ecdf", "half_normal_cdf"], &cdf)?;

    for v in &report.verdicts {
        eprintln!(
            "t={}: final KS {:.4}, decreasing {}, mean rel. error {:.4} -> {}",
            v.t,
            v.final_ks,
            v.ks_decreasing,
            v.final_mean_rel_err,
            if v.pass { "PASS" } else { "FAIL" }
        );
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ScalingSummary {
        pass: report.pass,
        p: report.p,
        v: report.v,
        sigma: report.sigma,
        ladder: f.ladder.clone(),
        t_list: f.t_list.clone(),
        runs: f.runs,
        ks_threshold: f.ks_threshold,
        mean_tolerance: f.mean_tolerance,
        rows: report.rows,
        verdicts: report.verdicts,
        monotone_violations: report.monotone_violations,
        events: report.events,
        warnings: report.warnings,
    })
}
