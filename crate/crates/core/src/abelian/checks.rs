use serde::{Deserialize, Serialize};

use crate::abelian::stabilize::{
    stabilize, stabilize_into, OrderPolicy, Outcome, DEFAULT_TOPPLING_BUDGET,
};
use crate::abelian::tape::InstructionTape;
use crate::configuration::Configuration;
use crate::error::{ArwError, Result};
use crate::lattice::LatticeBox;
use crate::law::{sample_initial, InitialLaw};
use crate::model::{ModelParams, Rules, SleepRate};
use crate::rng::{mix64, SeedSpec};

/// Two orders that produced different odometers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianWitness {
    pub first: OrderPolicy,
    pub second: OrderPolicy,
    pub first_odometer: Vec<u64>,
    pub second_odometer: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianCheck {
    pub consistent: bool,
    pub trials: usize,
    /// Topplings of the first trial.
    pub topplings: u64,
    pub witness: Option<AbelianWitness>,
}

/// `trials` random toppling orders derived from `seed`.
pub fn random_orders(trials: usize, seed: u64) -> Vec<OrderPolicy> {
    (0..trials as u64)
        .map(|i| OrderPolicy::Random {
            seed: mix64(seed ^ mix64(i + 1)),
        })
        .collect()
}

/// Stabilizes copies of `(config, tapes)` with every policy in `orders` and
/// compares the odometers field-wise.
pub fn check_abelian_with(
    config: &Configuration,
    tapes: &InstructionTape,
    region: &LatticeBox,
    rules: Rules,
    orders: &[OrderPolicy],
) -> Result<AbelianCheck> {
    if orders.len() < 2 {
        return Err(ArwError::Precondition("need at least two orders".into()));
    }
    let mut reference: Option<(OrderPolicy, Vec<u64>, u64)> = None;
    for &policy in orders {
        let mut c = config.clone();
        let mut t = tapes.clone();
        t.reset();
        let s = stabilize(
            &mut c,
            &mut t,
            region,
            rules,
            policy,
            DEFAULT_TOPPLING_BUDGET,
        )?;
        if s.outcome == Outcome::BudgetExceeded {
            return Err(ArwError::BudgetExceeded(
                "topplings in Abelian check".into(),
            ));
        }
        match &reference {
            None => reference = Some((policy, s.odometer.counts, s.topplings)),
            Some((p0, odo0, top0)) => {
                if *odo0 != s.odometer.counts {
                    return Ok(AbelianCheck {
                        consistent: false,
                        trials: orders.len(),
                        topplings: *top0,
                        witness: Some(AbelianWitness {
                            first: *p0,
                            second: policy,
                            first_odometer: odo0.clone(),
                            second_odometer: s.odometer.counts,
                        }),
                    });
                }
            }
        }
    }
    Ok(AbelianCheck {
        consistent: true,
        trials: orders.len(),
        topplings: reference.map(|r| r.2).unwrap_or(0),
        witness: None,
    })
}

/// Abelian check over `trials` random orders.
pub fn check_abelian(
    config: &Configuration,
    tapes: &InstructionTape,
    region: &LatticeBox,
    rules: Rules,
    trials: usize,
    seed: u64,
) -> Result<AbelianCheck> {
    check_abelian_with(config, tapes, region, rules, &random_orders(trials, seed))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub holds: bool,
    /// Window sites where the smaller box toppled more often.
    pub violations: Vec<Vec<i64>>,
    pub odometers: Vec<Vec<u64>>,
}

/// Compares odometers of a chain of nested boxes `V_1 ⊆ V_2 ⊆ ...` over the
/// same configuration and tapes.
pub fn check_monotone_chain(
    config: &Configuration,
    tapes: &InstructionTape,
    boxes: &[LatticeBox],
    rules: Rules,
) -> Result<MonotonicityCheck> {
    for w in boxes.windows(2) {
        if !w[1].contains_box(&w[0]) {
            return Err(ArwError::RegionNotContained("nested box"));
        }
    }
    let mut odometers = Vec::with_capacity(boxes.len());
    for b in boxes {
        let mut c = config.clone();
        let mut t = tapes.clone();
        t.reset();
        let s = stabilize(
            &mut c,
            &mut t,
            b,
            rules,
            OrderPolicy::Leftmost,
            DEFAULT_TOPPLING_BUDGET,
        )?;
        if s.outcome == Outcome::BudgetExceeded {
            return Err(ArwError::BudgetExceeded(
                "topplings in monotonicity check".into(),
            ));
        }
        odometers.push(s.odometer.counts);
    }
    let mut violations = Vec::new();
    for pair in odometers.windows(2) {
        for (i, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            if a > b {
                violations.push(config.window().site(i));
            }
        }
    }
    Ok(MonotonicityCheck {
        holds: violations.is_empty(),
        violations,
        odometers,
    })
}

/// `m_V <= m_V'` everywhere, for `V ⊆ V'`.
pub fn check_monotonicity(
    config: &Configuration,
    tapes: &InstructionTape,
    v: &LatticeBox,
    v_prime: &LatticeBox,
    rules: Rules,
) -> Result<MonotonicityCheck> {
    check_monotone_chain(config, tapes, &[v.clone(), v_prime.clone()], rules)
}

/// Stabilizes the same configuration and tapes with infinite-sleep-rate ARW
/// rules and with particle-hole rules, and compares the odometers.
pub fn equivalence_arw_ph(
    config: &Configuration,
    tapes: &InstructionTape,
    region: &LatticeBox,
    params: &ModelParams,
) -> Result<bool> {
    if let SleepRate::Finite(l) = params.sleep_rate {
        return Err(ArwError::Precondition(format!(
            "equivalence needs an infinite sleep rate, got {l}"
        )));
    }
    if tapes.sleep_fraction() != 0.0 {
        return Err(ArwError::Precondition(
            "tapes contain sleep instructions".into(),
        ));
    }
    let run = |rules: Rules| -> Result<Vec<u64>> {
        let mut c = config.clone();
        let mut t = tapes.clone();
        t.reset();
        let s = stabilize(
            &mut c,
            &mut t,
            region,
            rules,
            OrderPolicy::Leftmost,
            DEFAULT_TOPPLING_BUDGET,
        )?;
        if s.outcome == Outcome::BudgetExceeded {
            return Err(ArwError::BudgetExceeded(
                "topplings in equivalence check".into(),
            ));
        }
        Ok(s.odometer.counts)
    };
    Ok(run(Rules::ArwInfinite)? == run(Rules::ParticleHole)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub radius: u64,
    /// `m_{V_n}(origin)`; cumulative, so the last value is kept when the
    /// budget runs out.
    pub origin_odometer: u64,
    pub outcome: Outcome,
    pub topplings: u64,
}

/// `m_{V_n}(origin)` for centered boxes of increasing radius over one
/// realization of the initial configuration and tapes.
///
/// Boxes are stabilized incrementally: a configuration stabilized in `V_n`
/// with partly used tapes is a legal intermediate state for `V_{n+1}`, so
/// the accumulated odometer equals `m_{V_{n+1}}`.
pub fn odometer_growth(
    law: &InitialLaw,
    params: &ModelParams,
    radii: &[u64],
    seed: &SeedSpec,
    budget_per_radius: u64,
) -> Result<Vec<GrowthPoint>> {
    params.validate()?;
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ArwError::InvalidParameter(
            "radii must be strictly increasing".into(),
        ));
    }
    let dim = params.dim();
    let outer = *radii.last().unwrap();
    let window = LatticeBox::centered(dim, outer)?;
    let rules = params.rules();
    let mut config = sample_initial(law, &window, seed)?;
    let mut tapes = InstructionTape::new(&window, &params.kernel, rules, seed);
    let origin = window.index_of(&vec![0; dim]).expect("origin in window");
    let mut counts = vec![0u64; window.len()];
    let mut out = Vec::with_capacity(radii.len());
    let mut exhausted = false;
    for &r in radii {
        if exhausted {
            out.push(GrowthPoint {
                radius: r,
                origin_odometer: counts[origin],
                outcome: Outcome::BudgetExceeded,
                topplings: 0,
            });
            continue;
        }
        let region = LatticeBox::centered(dim, r)?;
        let (outcome, topplings, _) = stabilize_into(
            &mut config,
            &mut tapes,
            &region,
            rules,
            OrderPolicy::Fifo,
            budget_per_radius,
            &mut counts,
        )?;
        exhausted = outcome == Outcome::BudgetExceeded;
        out.push(GrowthPoint {
            radius: r,
            origin_odometer: counts[origin],
            outcome,
            topplings,
        });
    }
    Ok(out)
}
