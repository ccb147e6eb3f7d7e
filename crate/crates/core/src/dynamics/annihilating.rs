use serde::{Deserialize, Serialize};

use crate::abelian::{Instruction, InstructionTape, ToppleEffect};
use crate::dynamics::engine::{ConfigSystem, EventEngine, SiteSystem};
use crate::error::{ArwError, Result};
use crate::lattice::{JumpKernel, Window};
use crate::law::{sample_initial, InitialLaw};
use crate::model::Rules;
use crate::rng::SeedSpec;

/// Two-type annihilating walk with immobile B-particles: A-particles jump at
/// rate 1 each, and an A landing on a B annihilates with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoTypeSystem {
    window: Window,
    a: Vec<u32>,
    b: Vec<bool>,
    exited: u64,
    annihilations: u64,
}

impl TwoTypeSystem {
    /// One B per site at time `0-` and `a_counts` A-particles; coinciding
    /// pairs annihilate at time 0.
    pub fn new(window: Window, a_counts: &[u32]) -> Result<Self> {
        if a_counts.len() != window.len() {
            return Err(ArwError::InvalidParameter(
                "count vector does not match window".into(),
            ));
        }
        let mut a = a_counts.to_vec();
        let mut b = vec![true; a.len()];
        let mut annihilations = 0;
        for (ai, bi) in a.iter_mut().zip(b.iter_mut()) {
            if *ai > 0 {
                *ai -= 1;
                *bi = false;
                annihilations += 1;
            }
        }
        Ok(Self {
            window,
            a,
            b,
            exited: 0,
            annihilations,
        })
    }

    pub fn a_counts(&self) -> &[u32] {
        &self.a
    }

    pub fn b_present(&self) -> &[bool] {
        &self.b
    }

    pub fn annihilations(&self) -> u64 {
        self.annihilations
    }

    pub fn exited(&self) -> u64 {
        self.exited
    }
}

impl SiteSystem for TwoTypeSystem {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn weight(&self, idx: usize) -> u64 {
        self.a[idx] as u64
    }

    fn base_rate(&self) -> f64 {
        1.0
    }

    fn fire(&mut self, idx: usize, instr: Instruction) -> ToppleEffect {
        let mut eff = ToppleEffect::default();
        let Instruction::Jump(dir) = instr else {
            return eff;
        };
        self.a[idx] -= 1;
        match self.window.neighbor(idx, dir) {
            None => {
                self.exited += 1;
                eff.exited = true;
            }
            Some(y) => {
                eff.target = Some(y);
                if self.b[y] {
                    self.b[y] = false;
                    self.annihilations += 1;
                    eff.settled = true;
                } else {
                    self.a[y] += 1;
                }
            }
        }
        eff
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub identical: bool,
    pub events: u64,
    /// Time of the first mismatch, if any.
    pub mismatch_time: Option<f64>,
}

fn same_state(ph: &ConfigSystem, ab: &TwoTypeSystem) -> bool {
    ph.config
        .states()
        .iter()
        .zip(ab.a_counts().iter().zip(ab.b_present()))
        .all(|(s, (&a, &b))| s.active_count() == a && s.hole_filled() != b)
}

/// Runs the annihilating system and the particle-hole system on the same
/// tapes and clock and compares unsettled counts and hole states after every
/// event up to `horizon`.
pub fn annihilating_equivalence(
    law: &InitialLaw,
    kernel: &JumpKernel,
    window: &Window,
    horizon: f64,
    seed: &SeedSpec,
) -> Result<EquivalenceReport> {
    let config = sample_initial(law, window, seed)?;
    let counts: Vec<u32> = config.counts().iter().map(|&c| c as u32).collect();
    let tapes = InstructionTape::new(window, kernel, Rules::ParticleHole, seed);
    let mut ph = EventEngine::new(
        ConfigSystem::new(config, Rules::ParticleHole),
        tapes.clone(),
        seed,
    );
    let mut ab = EventEngine::new(TwoTypeSystem::new(window.clone(), &counts)?, tapes, seed);
    if !same_state(&ph.system, &ab.system) {
        return Ok(EquivalenceReport {
            identical: false,
            events: 0,
            mismatch_time: Some(0.0),
        });
    }
    loop {
        let (tp, ta) = (ph.peek_time(), ab.peek_time());
        if tp != ta {
            return Ok(EquivalenceReport {
                identical: false,
                events: ph.events(),
                mismatch_time: Some(tp.or(ta).unwrap_or(0.0)),
            });
        }
        match tp {
            Some(t) if t <= horizon => {}
            _ => break,
        }
        let (Some(ep), Some(ea)) = (ph.step(), ab.step()) else {
            break;
        };
        if ep.site != ea.site || !same_state(&ph.system, &ab.system) {
            return Ok(EquivalenceReport {
                identical: false,
                events: ph.events(),
                mismatch_time: Some(ep.time),
            });
        }
    }
    Ok(EquivalenceReport {
        identical: true,
        events: ph.events(),
        mismatch_time: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;

    #[test]
    fn no_a_particles_is_inert() {
        let w = LatticeBox::interval(0, 49).unwrap();
        let r = annihilating_equivalence(
            &InitialLaw::poisson(0.0),
            &JumpKernel::symmetric(1).unwrap(),
            &w,
            10.0,
            &SeedSpec::new(1, 0),
        )
        .unwrap();
        assert!(r.identical);
        assert_eq!(r.events, 0);
    }

    #[test]
    fn three_on_one_site_by_hand() {
        // Sites 0..=2, three A at 1. After time 0: one annihilates at 1, two A
        // remain. With right-right moves: first lands on 2 (annihilates), the
        // second lands on 2 (now empty of B) and stays as an A.
        let w = LatticeBox::interval(0, 2).unwrap();
        let mut s = TwoTypeSystem::new(w, &[0, 3, 0]).unwrap();
        assert_eq!(s.a_counts(), &[0, 2, 0]);
        assert_eq!(s.b_present(), &[true, false, true]);
        use crate::lattice::Direction;
        s.fire(1, Instruction::Jump(Direction::RIGHT));
        assert_eq!(s.a_counts(), &[0, 1, 0]);
        assert_eq!(s.b_present(), &[true, false, false]);
        s.fire(1, Instruction::Jump(Direction::RIGHT));
        assert_eq!(s.a_counts(), &[0, 0, 1]);
        assert_eq!(s.annihilations(), 2);

        let law = InitialLaw::Deterministic {
            counts: vec![0, 0, 3, 0, 0],
        };
        let w = LatticeBox::interval(-2, 2).unwrap();
        for seed in 0..20 {
            let r = annihilating_equivalence(
                &law,
                &JumpKernel::symmetric(1).unwrap(),
                &w,
                1e9,
                &SeedSpec::new(seed, 0),
            )
            .unwrap();
            assert!(r.identical);
        }
    }

    #[test]
    fn poisson_trajectories_coincide() {
        let w = LatticeBox::interval(-500, 499).unwrap();
        let r = annihilating_equivalence(
            &InitialLaw::poisson(1.0),
            &JumpKernel::symmetric(1).unwrap(),
            &w,
            100.0,
            &SeedSpec::new(77, 3),
        )
        .unwrap();
        assert!(r.identical, "{r:?}");
        assert!(r.events > 1000);
    }
}
