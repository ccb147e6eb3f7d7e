use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abelian::tape::InstructionTape;
use crate::abelian::topple::{apply_instruction, is_unstable};
use crate::configuration::Configuration;
use crate::error::{ArwError, Result};
use crate::lattice::{LatticeBox, Window};
use crate::model::Rules;

pub const DEFAULT_TOPPLING_BUDGET: u64 = 1_000_000_000;

/// Which unstable site to topple next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    /// Lowest window index first.
    Leftmost,
    /// Queue of unstable sites; a site still unstable after its toppling goes
    /// to the back.
    Fifo,
    /// Uniformly random unstable site.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Stable,
    /// The toppling budget ran out before the region was stable.
    BudgetExceeded,
}

/// Toppling counts per window site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Odometer {
    pub window: Window,
    pub region: LatticeBox,
    pub counts: Vec<u64>,
}

impl Odometer {
    pub fn at(&self, site: &[i64]) -> Option<u64> {
        self.window.index_of(site).map(|i| self.counts[i])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilization {
    pub odometer: Odometer,
    pub outcome: Outcome,
    pub topplings: u64,
    /// Holes filled during the run, including time-0 settlements.
    pub settled_events: u64,
}

/// Unstable sites of the region, in policy order.
#[allow(clippy::large_enum_variant)]
enum Frontier {
    Ordered(BTreeSet<usize>),
    Queue(VecDeque<usize>, Vec<bool>),
    Random {
        pool: Vec<usize>,
        pos: Vec<usize>,
        rng: ChaCha8Rng,
    },
}

impl Frontier {
    fn new(policy: OrderPolicy, n: usize) -> Self {
        match policy {
            OrderPolicy::Leftmost => Frontier::Ordered(BTreeSet::new()),
            OrderPolicy::Fifo => Frontier::Queue(VecDeque::new(), vec![false; n]),
            OrderPolicy::Random { seed } => Frontier::Random {
                pool: Vec::new(),
                pos: vec![usize::MAX; n],
                rng: ChaCha8Rng::seed_from_u64(seed),
            },
        }
    }

    fn insert(&mut self, i: usize) {
        match self {
            Frontier::Ordered(s) => {
                s.insert(i);
            }
            Frontier::Queue(q, inq) => {
                if !inq[i] {
                    inq[i] = true;
                    q.push_back(i);
                }
            }
            Frontier::Random { pool, pos, .. } => {
                if pos[i] == usize::MAX {
                    pos[i] = pool.len();
                    pool.push(i);
                }
            }
        }
    }

    /// Next site to topple; it stays in the frontier until `remove`.
    fn pick(&mut self) -> Option<usize> {
        match self {
            Frontier::Ordered(s) => s.first().copied(),
            Frontier::Queue(q, inq) => {
                let i = q.pop_front()?;
                inq[i] = false;
                Some(i)
            }
            Frontier::Random { pool, rng, .. } => {
                if pool.is_empty() {
                    None
                } else {
                    Some(pool[rng.random_range(0..pool.len())])
                }
            }
        }
    }

    fn remove(&mut self, i: usize) {
        match self {
            Frontier::Ordered(s) => {
                s.remove(&i);
            }
            Frontier::Queue(..) => {}
            Frontier::Random { pool, pos, .. } => {
                let p = pos[i];
                if p != usize::MAX {
                    pool.swap_remove(p);
                    if p < pool.len() {
                        pos[pool[p]] = p;
                    }
                    pos[i] = usize::MAX;
                }
            }
        }
    }
}

/// Stabilizes `config` inside `region`, adding topplings to `counts`.
/// Particles leaving the region stay where they land; particles leaving the
/// window are counted as exited.
pub(crate) fn stabilize_into(
    config: &mut Configuration,
    tapes: &mut InstructionTape,
    region: &LatticeBox,
    rules: Rules,
    policy: OrderPolicy,
    budget: u64,
    counts: &mut [u64],
) -> Result<(Outcome, u64, u64)> {
    let mask = config.window().mask_of(region)?;
    let mut settled = config.normalize(rules);
    let mut frontier = Frontier::new(policy, config.len());
    for (i, &inside) in mask.iter().enumerate() {
        if inside && is_unstable(config.state(i), rules) {
            frontier.insert(i);
        }
    }
    let mut topplings = 0u64;
    while let Some(i) = frontier.pick() {
        if topplings >= budget {
            return Ok((Outcome::BudgetExceeded, topplings, settled));
        }
        let instr = tapes.next(i);
        let eff = apply_instruction(config, i, instr, rules);
        counts[i] += 1;
        topplings += 1;
        settled += eff.settled as u64;
        if is_unstable(config.state(i), rules) {
            if matches!(policy, OrderPolicy::Fifo) {
                frontier.insert(i);
            }
        } else {
            frontier.remove(i);
        }
        if let Some(t) = eff.target {
            if mask[t] && is_unstable(config.state(t), rules) {
                frontier.insert(t);
            }
        }
    }
    Ok((Outcome::Stable, topplings, settled))
}

/// Topples unstable sites of `region` in the order given by `policy` until
/// the region is stable or `budget` topplings have been performed.
///
/// Unsettled particles first fill the holes of their own sites, which costs
/// no toppling.
pub fn stabilize(
    config: &mut Configuration,
    tapes: &mut InstructionTape,
    region: &LatticeBox,
    rules: Rules,
    policy: OrderPolicy,
    budget: u64,
) -> Result<Stabilization> {
    if tapes.len() != config.len() {
        return Err(ArwError::Precondition(
            "tape and configuration windows differ".into(),
        ));
    }
    let mut counts = vec![0u64; config.len()];
    let (outcome, topplings, settled_events) =
        stabilize_into(config, tapes, region, rules, policy, budget, &mut counts)?;
    Ok(Stabilization {
        odometer: Odometer {
            window: config.window().clone(),
            region: region.clone(),
            counts,
        },
        outcome,
        topplings,
        settled_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::tape::Instruction;
    use crate::configuration::SiteState;
    use crate::lattice::{Direction, JumpKernel};
    use crate::law::{sample_initial, InitialLaw};
    use crate::rng::SeedSpec;

    fn setup(
        lo: i64,
        hi: i64,
        counts: &[u32],
        rules: Rules,
        seed: u64,
    ) -> (Configuration, InstructionTape) {
        let w = LatticeBox::interval(lo, hi).unwrap();
        let c = Configuration::from_counts(w.clone(), counts).unwrap();
        let t = InstructionTape::new(
            &w,
            &JumpKernel::symmetric(1).unwrap(),
            rules,
            &SeedSpec::new(seed, 0),
        );
        (c, t)
    }

    #[test]
    fn empty_configuration_is_untouched() {
        let rules = Rules::ArwFinite { lambda: 1.0 };
        let (mut c, mut t) = setup(-3, 3, &[0; 7], rules, 1);
        let before = c.clone();
        let s = stabilize(
            &mut c,
            &mut t,
            &LatticeBox::interval(-1, 1).unwrap(),
            rules,
            OrderPolicy::Leftmost,
            100,
        )
        .unwrap();
        assert_eq!(s.odometer.total(), 0);
        assert_eq!(s.outcome, Outcome::Stable);
        assert_eq!(c, before);
    }

    #[test]
    fn lone_particle_settles_for_free() {
        let (mut c, mut t) = setup(-2, 2, &[0, 0, 1, 0, 0], Rules::ArwInfinite, 1);
        let s = stabilize(
            &mut c,
            &mut t,
            &LatticeBox::interval(-2, 2).unwrap(),
            Rules::ArwInfinite,
            OrderPolicy::Fifo,
            100,
        )
        .unwrap();
        assert_eq!(s.odometer.total(), 0);
        assert_eq!(c.state(2), SiteState::Settled);
        assert_eq!(s.settled_events, 1);
    }

    /// Reference stabilization: repeatedly scan all sites from the left and
    /// topple the first unstable one, reading instructions by explicit index.
    fn brute_force(counts: &[u32], tape: &InstructionTape) -> Vec<u64> {
        let n = counts.len();
        // per site: (active, sleeping) under finite sleep rate
        let mut act: Vec<u64> = counts.iter().map(|&k| k as u64).collect();
        let mut asleep = vec![false; n];
        let mut odo = vec![0u64; n];
        while let Some(x) = (0..n).find(|&x| act[x] > 0) {
            let instr = tape.instruction(x, odo[x]);
            odo[x] += 1;
            match instr {
                Instruction::Sleep => {
                    if act[x] == 1 {
                        act[x] = 0;
                        asleep[x] = true;
                    }
                }
                Instruction::Jump(d) => {
                    act[x] -= 1;
                    let y = if d == Direction::RIGHT {
                        x as i64 + 1
                    } else {
                        x as i64 - 1
                    };
                    if y >= 0 && (y as usize) < n {
                        let y = y as usize;
                        act[y] += 1;
                        if asleep[y] {
                            asleep[y] = false;
                            act[y] += 1;
                        }
                    }
                }
            }
        }
        odo
    }

    #[test]
    fn matches_brute_force_small() {
        let rules = Rules::ArwFinite { lambda: 0.7 };
        for seed in 0..200u64 {
            let w = LatticeBox::interval(0, 5).unwrap();
            let law = InitialLaw::poisson(1.2);
            let c0 = sample_initial(&law, &w, &SeedSpec::new(seed, 1)).unwrap();
            let counts: Vec<u32> = c0.counts().iter().map(|&k| k.min(8) as u32).collect();
            if counts.iter().sum::<u32>() > 8 {
                continue;
            }
            let (mut c, mut t) = setup(0, 5, &counts, rules, seed);
            let expect = brute_force(&counts, &t);
            let s = stabilize(
                &mut c,
                &mut t,
                &w,
                rules,
                OrderPolicy::Random { seed },
                1_000_000,
            )
            .unwrap();
            assert_eq!(s.odometer.counts, expect, "seed {seed}");
            assert_eq!(t.cursors(), &expect[..]);
        }
    }

    #[test]
    fn budget_is_reported() {
        let rules = Rules::ArwInfinite;
        let (mut c, mut t) = setup(0, 2, &[40, 40, 40], rules, 3);
        let region = LatticeBox::interval(0, 2).unwrap();
        let s = stabilize(&mut c, &mut t, &region, rules, OrderPolicy::Leftmost, 10).unwrap();
        assert_eq!(s.outcome, Outcome::BudgetExceeded);
        assert_eq!(s.topplings, 10);
    }

    #[test]
    fn region_must_fit() {
        let rules = Rules::ParticleHole;
        let (mut c, mut t) = setup(0, 2, &[1, 1, 1], rules, 3);
        let r = stabilize(
            &mut c,
            &mut t,
            &LatticeBox::interval(-1, 2).unwrap(),
            rules,
            OrderPolicy::Leftmost,
            10,
        );
        assert!(matches!(r, Err(ArwError::RegionNotContained(_))));
    }
}
