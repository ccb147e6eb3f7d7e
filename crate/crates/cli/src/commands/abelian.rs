//! Exact identities of the site-wise construction, each checked on a
//! campaign of random instances.

use arw_core::abelian::{
    check_abelian, check_monotone_chain, equivalence_arw_ph, InstructionTape, TapeMode,
};
use arw_core::asym1d::oracle_match;
use arw_core::flow::{absorbed_flux, flux_oracle_discrete, profile_walk};
use arw_core::lattice::JumpKernel;
use arw_core::{
    sample_initial, Configuration, InitialLaw, LatticeBox, ModelParams, Purpose, SeedSpec,
    SleepRate,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::Ctx;
use crate::config::{AbelianConfig, BoxFamily};
use crate::error::{CliError, Verdict};
use crate::row;

#[derive(Debug, Serialize)]
struct CampaignSummary {
    campaign: &'static str,
    instances: usize,
    failures: usize,
    /// Not counted by the equivalence, oracle and carpet campaigns.
    topplings: Option<u64>,
    first_failure: Option<Value>,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    pass: bool,
    campaigns: Vec<CampaignSummary>,
}

struct Instance {
    window: LatticeBox,
    config: Configuration,
    rng: ChaCha8Rng,
}

fn random_instance(family: &BoxFamily, i: usize, seed: &SeedSpec) -> Result<Instance, CliError> {
    if family.dims.is_empty() || family.max_side == 0 {
        return Err(CliError::Config("boxes need dims and max_side >= 1".into()));
    }
    let mut rng = seed.rng(Purpose::Campaign);
    let dim = family.dims[i % family.dims.len()];
    let hi: Vec<i64> = (0..dim)
        .map(|_| rng.random_range(0..family.max_side as i64))
        .collect();
    let window = LatticeBox::new(vec![0; dim], hi)?;
    let mut config = sample_initial(&family.law, &window, seed)?;
    if let Some(cap) = family.truncate {
        let counts: Vec<u32> = config
            .counts()
            .iter()
            .map(|&c| (c as u32).min(cap))
            .collect();
        config = Configuration::from_counts(window.clone(), &counts)?;
    }
    Ok(Instance {
        window,
        config,
        rng,
    })
}

fn sub_box(outer: &LatticeBox, rng: &mut ChaCha8Rng) -> Result<LatticeBox, CliError> {
    let ohi = outer.hi();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (a, &b) in outer.lo().iter().zip(&ohi) {
        let l = rng.random_range(*a..=b);
        lo.push(l);
        hi.push(rng.random_range(l..=b));
    }
    Ok(LatticeBox::new(lo, hi)?)
}

fn summary(
    campaign: &'static str,
    instances: usize,
    failures: usize,
    topplings: Option<u64>,
    first_failure: Option<Value>,
) -> CampaignSummary {
    CampaignSummary {
        campaign,
        instances,
        failures,
        topplings,
        first_failure,
    }
}

pub fn run(cfg: &AbelianConfig, ctx: &mut Ctx) -> Result<Verdict, CliError> {
    let mut campaigns = Vec::new();

    if let Some(c) = &cfg.abelian {
        if c.models.is_empty() {
            return Err(CliError::Config("abelian.models is empty".into()));
        }
        let group = 0;
        ctx.out.seeds("abelian", group, c.configs as u64);
        let results: Vec<_> = (0..c.configs)
            .into_par_iter()
            .map(|i| {
                let seed = ctx.seed.child(group, i as u64);
                let inst = random_instance(&c.boxes, i, &seed)?;
                let spec = &c.models[(i / c.boxes.dims.len()) % c.models.len()];
                let params = spec.params(inst.window.dim())?;
                let rules = params.rules();
                let mut tapes = InstructionTape::new(&inst.window, &params.kernel, rules, &seed);
                if c.corrupt_tapes {
                    tapes = tapes.with_mode(TapeMode::SharedCursor);
                }
                let check = check_abelian(
                    &inst.config,
                    &tapes,
                    &inst.window,
                    rules,
                    c.orders,
                    seed.key(Purpose::Order),
                )?;
                Ok((
                    inst.window,
                    inst.config.total_particles(),
                    spec.label(),
                    check,
                ))
            })
            .collect::<Result<_, CliError>>()?;
        let mut rows = Vec::new();
        let mut failures = 0;
        let mut first = None;
        let mut topplings = 0;
        for (i, (w, particles, label, check)) in results.iter().enumerate() {
            topplings += check.topplings;
            if !check.consistent {
                failures += 1;
                if first.is_none() {
                    first = Some(serde_json::json!({
                        "instance": i,
                        "window_lo": w.lo(),
                        "window_hi": w.hi(),
                        "witness": check.witness,
                    }));
                }
            }
            rows.push(row![
                i,
                w.dim(),
                w.len(),
                label.clone(),
                *particles,
                check.topplings,
                check.consistent
            ]);
        }
        ctx.out.table(
            "abelian",
            &[
                "instance",
                "dim",
                "sites",
                "model",
                "particles",
                "topplings",
                "consistent",
            ],
            &rows,
        )?;
        campaigns.push(summary(
            "abelian",
            c.configs,
            failures,
            Some(topplings),
            first,
        ));
    }

    if let Some(c) = &cfg.monotonicity {
        if c.models.is_empty() {
            return Err(CliError::Config("monotonicity.models is empty".into()));
        }
        let group = 1;
        ctx.out.seeds("monotonicity", group, c.configs as u64);
        let results: Vec<_> = (0..c.configs)
            .into_par_iter()
            .map(|i| {
                let seed = ctx.seed.child(group, i as u64);
                let mut inst = random_instance(&c.boxes, i, &seed)?;
                let spec = &c.models[(i / c.boxes.dims.len()) % c.models.len()];
                let params = spec.params(inst.window.dim())?;
                let rules = params.rules();
                let v2 = sub_box(&inst.window, &mut inst.rng)?;
                let v1 = sub_box(&v2, &mut inst.rng)?;
                let tapes = InstructionTape::new(&inst.window, &params.kernel, rules, &seed);
                let check = check_monotone_chain(
                    &inst.config,
                    &tapes,
                    &[v1, v2, inst.window.clone()],
                    rules,
                )?;
                let top: u64 = check.odometers.last().map(|o| o.iter().sum()).unwrap_or(0);
                Ok((inst.window, spec.label(), check, top))
            })
            .collect::<Result<_, CliError>>()?;
        let mut rows = Vec::new();
        let mut failures = 0;
        let mut first = None;
        let mut topplings = 0;
        for (i, (w, label, check, top)) in results.iter().enumerate() {
            topplings += top;
            if !check.holds {
                failures += 1;
                if first.is_none() {
                    first =
                        Some(serde_json::json!({ "instance": i, "violations": check.violations }));
                }
            }
            rows.push(row![
                i,
                w.dim(),
                w.len(),
                label.clone(),
                check.holds,
                check.violations.len()
            ]);
        }
        ctx.out.table(
            "monotonicity",
            &[
                "instance",
                "dim",
                "sites",
                "model",
                "holds",
                "violating_sites",
            ],
            &rows,
        )?;
        campaigns.push(summary(
            "monotonicity",
            c.configs,
            failures,
            Some(topplings),
            first,
        ));
    }

    if let Some(c) = &cfg.equivalence {
        let group = 2;
        ctx.out.seeds("equivalence", group, c.instances as u64);
        let results: Vec<_> = (0..c.instances)
            .into_par_iter()
            .map(|i| {
                let seed = ctx.seed.child(group, i as u64);
                let inst = random_instance(&c.boxes, i, &seed)?;
                let params = ModelParams::arw(
                    SleepRate::Infinite,
                    JumpKernel::symmetric(inst.window.dim())?,
                );
                let tapes =
                    InstructionTape::new(&inst.window, &params.kernel, params.rules(), &seed);
                let equal = equivalence_arw_ph(&inst.config, &tapes, &inst.window, &params)?;
                Ok((inst.window, equal))
            })
            .collect::<Result<_, CliError>>()?;
        let mut rows = Vec::new();
        let mut failures = 0;
        let mut first = None;
        for (i, (w, equal)) in results.iter().enumerate() {
            if !equal {
                failures += 1;
                first.get_or_insert_with(|| serde_json::json!({ "instance": i }));
            }
            rows.push(row![i, w.dim(), w.len(), *equal]);
        }
        ctx.out
            .table("equivalence", &["instance", "dim", "sites", "equal"], &rows)?;
        campaigns.push(summary("equivalence", c.instances, failures, None, first));
    }

    if let Some(c) = &cfg.recursion_oracle {
        if c.lambdas.is_empty() || c.mus.is_empty() || c.max_l == 0 {
            return Err(CliError::Config(
                "recursion_oracle needs lambdas, mus and max_l >= 1".into(),
            ));
        }
        let group = 3;
        ctx.out.seeds("recursion_oracle", group, c.instances as u64);
        let results: Vec<_> = (0..c.instances)
            .into_par_iter()
            .map(|i| {
                let seed = ctx.seed.child(group, i as u64);
                let l = seed.rng(Purpose::Campaign).random_range(1..=c.max_l);
                let lambda = c.lambdas[i % c.lambdas.len()];
                let mu = c.mus[(i / c.lambdas.len()) % c.mus.len()];
                let m = oracle_match(l, lambda, &InitialLaw::poisson(mu), &seed)?;
                Ok((l, lambda, mu, m))
            })
            .collect::<Result<_, CliError>>()?;
        let mut rows = Vec::new();
        let mut failures = 0;
        let mut first = None;
        for (i, (l, lambda, mu, m)) in results.iter().enumerate() {
            if !m.equal {
                failures += 1;
                first.get_or_insert_with(|| serde_json::json!({ "instance": i, "l": l, "lambda": lambda, "mu": mu, "recursion": m.recursion, "engine": m.engine }));
            }
            rows.push(row![i, *l, *lambda, *mu, m.recursion, m.engine, m.equal]);
        }
        ctx.out.table(
            "recursion_oracle",
            &[
                "instance",
                "l",
                "lambda",
                "mu",
                "recursion",
                "engine",
                "equal",
            ],
            &rows,
        )?;
        campaigns.push(summary(
            "recursion_oracle",
            c.instances,
            failures,
            None,
            first,
        ));
    }

    if let Some(c) = &cfg.carpet {
        let group = 4;
        ctx.out.seeds("carpet", group, c.instances as u64);
        let results: Vec<_> = (0..c.instances)
            .into_par_iter()
            .map(|i| {
                let seed = ctx.seed.child(group, i as u64);
                let n = seed.rng(Purpose::Campaign).random_range(0..=c.max_n);
                let window = LatticeBox::interval(-(n as i64), 0)?;
                let config = sample_initial(&c.law, &window, &seed)?;
                let oracle = flux_oracle_discrete(&profile_walk(&config, n)?, n)?;
                let counts: Vec<u32> = config.counts().iter().map(|&k| k as u32).collect();
                let flux = absorbed_flux(&counts, &seed)?;
                Ok((n, oracle, flux))
            })
            .collect::<Result<_, CliError>>()?;
        let mut rows = Vec::new();
        let mut failures = 0;
        let mut first = None;
        for (i, (n, oracle, flux)) in results.iter().enumerate() {
            if oracle != flux {
                failures += 1;
                first.get_or_insert_with(
                    || serde_json::json!({ "instance": i, "n": n, "oracle": oracle, "flux": flux }),
                );
            }
            rows.push(row![i, *n, *oracle, *flux, oracle == flux]);
        }
        ctx.out.table(
            "carpet",
            &["instance", "n", "oracle", "flux", "equal"],
            &rows,
        )?;
        campaigns.push(summary("carpet", c.instances, failures, None, first));
    }

    let pass = campaigns.iter().all(|c| c.failures == 0);
    for c in &campaigns {
        let topplings = c
            .topplings
            .map(|t| format!(", {t} topplings"))
            .unwrap_or_default();
        eprintln!(
            "{}: {} instances, {} failures{topplings}",
            c.campaign, c.instances, c.failures
        );
    }
    ctx.out.report(&Report {
        command: "abelian-check",
        pass,
        campaigns,
    })?;
    Ok(Verdict::from_pass(pass))
}
