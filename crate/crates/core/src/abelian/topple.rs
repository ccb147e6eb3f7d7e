use crate::abelian::tape::{Instruction, InstructionTape};
use crate::configuration::{Configuration, SiteState};
use crate::error::{ArwError, Result};
use crate::model::Rules;

/// What one toppling did besides consuming an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ToppleEffect {
    /// Window index that received a particle.
    pub target: Option<usize>,
    /// The moved particle left the window.
    pub exited: bool,
    /// The moved particle filled a hole at its target.
    pub settled: bool,
    /// A sleeping particle was woken up.
    pub woke: bool,
    /// The toppled site fell asleep.
    pub slept: bool,
}

/// Whether site state `s` can be toppled under `rules`.
#[inline]
pub fn is_unstable(s: SiteState, rules: Rules) -> bool {
    match rules {
        // Under infinite sleep rate only the count matters: a lone particle
        // is immediately passive.
        Rules::ArwInfinite => s.particles() >= 2,
        _ => matches!(s, SiteState::Active { .. }),
    }
}

#[inline]
fn after_departure(s: SiteState, rules: Rules) -> SiteState {
    match rules {
        Rules::ArwFinite { .. } => SiteState::active((s.particles() - 1) as u32),
        Rules::ArwInfinite => SiteState::from_hole_count(s.particles() - 1),
        Rules::ParticleHole => match s {
            SiteState::Active {
                count: 1,
                settled: true,
            } => SiteState::Settled,
            SiteState::Active {
                count: 1,
                settled: false,
            } => SiteState::Empty,
            SiteState::Active { count, settled } => SiteState::Active {
                count: count - 1,
                settled,
            },
            other => other,
        },
    }
}

/// New target state and whether the arrival filled a hole.
#[inline]
fn after_arrival(s: SiteState, rules: Rules) -> (SiteState, bool) {
    match rules {
        Rules::ArwFinite { .. } => (SiteState::active((s.particles() + 1) as u32), false),
        Rules::ArwInfinite => {
            let n = s.particles();
            (SiteState::from_hole_count(n + 1), n == 0)
        }
        Rules::ParticleHole => match s {
            SiteState::Empty => (SiteState::Settled, true),
            SiteState::Active {
                count,
                settled: false,
            } => (
                SiteState::Active {
                    count,
                    settled: true,
                },
                true,
            ),
            SiteState::Active {
                count,
                settled: true,
            } => (
                SiteState::Active {
                    count: count + 1,
                    settled: true,
                },
                false,
            ),
            SiteState::Settled | SiteState::Sleeping => (
                SiteState::Active {
                    count: 1,
                    settled: true,
                },
                false,
            ),
        },
    }
}

/// Applies `instr` at the unstable site `idx`. The caller has already
/// checked legality.
#[inline]
pub fn apply_instruction(
    config: &mut Configuration,
    idx: usize,
    instr: Instruction,
    rules: Rules,
) -> ToppleEffect {
    let s = config.state(idx);
    let mut eff = ToppleEffect::default();
    match instr {
        Instruction::Sleep => {
            if matches!(rules, Rules::ArwFinite { .. }) && s.particles() == 1 {
                config.set_state(idx, SiteState::Sleeping);
                eff.slept = true;
            }
        }
        Instruction::Jump(dir) => {
            config.set_state(idx, after_departure(s, rules));
            match config.window().neighbor(idx, dir) {
                None => {
                    config.record_exit(dir);
                    eff.exited = true;
                }
                Some(t) => {
                    let before = config.state(t);
                    let (next, filled) = after_arrival(before, rules);
                    config.set_state(t, next);
                    eff.target = Some(t);
                    eff.settled = filled;
                    eff.woke = before == SiteState::Sleeping;
                }
            }
        }
    }
    eff
}

/// Topples the window site `idx`: consumes its next instruction and applies
/// it. Toppling a stable site is rejected.
pub fn topple(
    config: &mut Configuration,
    tapes: &mut InstructionTape,
    idx: usize,
    rules: Rules,
) -> Result<(Instruction, ToppleEffect)> {
    if idx >= config.len() {
        return Err(ArwError::IllegalToppling(vec![idx as i64]));
    }
    if !is_unstable(config.state(idx), rules) {
        return Err(ArwError::IllegalToppling(config.window().site(idx)));
    }
    let instr = tapes.next(idx);
    let eff = apply_instruction(config, idx, instr, rules);
    Ok((instr, eff))
}
