use serde::{Deserialize, Serialize};

use crate::lattice::{Direction, JumpKernel, Window};
use crate::model::Rules;
use crate::rng::{hash3, site_key, unit_f64, Purpose, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    Jump(Direction),
    Sleep,
}

/// How cursors advance. `SharedCursor` is a deliberately broken fixture:
/// all sites read from one global cursor, so instructions depend on the
/// toppling order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TapeMode {
    #[default]
    PerSite,
    SharedCursor,
}

/// Per-site instruction streams.
///
/// The `j`-th instruction of site `x` is a pure function of the seed, the
/// absolute coordinates of `x` and `j`, so tapes agree across windows and
/// nothing depends on the order in which sites are visited.
#[derive(Debug, Clone)]
pub struct InstructionTape {
    key: u64,
    site_keys: Vec<u64>,
    cursors: Vec<u64>,
    shared: u64,
    sleep_fraction: f64,
    kernel: JumpKernel,
    mode: TapeMode,
}

impl InstructionTape {
    pub fn new(window: &Window, kernel: &JumpKernel, rules: Rules, seed: &SeedSpec) -> Self {
        let site_keys = (0..window.len())
            .map(|i| site_key(&window.site(i)))
            .collect();
        Self {
            key: seed.key(Purpose::Tape),
            site_keys,
            cursors: vec![0; window.len()],
            shared: 0,
            sleep_fraction: rules.sleep_fraction(),
            kernel: kernel.clone(),
            mode: TapeMode::PerSite,
        }
    }

    pub fn with_mode(mut self, mode: TapeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn len(&self) -> usize {
        self.cursors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cursors.is_empty()
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    pub fn sleep_fraction(&self) -> f64 {
        self.sleep_fraction
    }

    /// The `j`-th instruction of window site `idx` (0-based), without
    /// consuming it.
    #[inline]
    pub fn instruction(&self, idx: usize, j: u64) -> Instruction {
        self.decode(hash3(self.key, self.site_keys[idx], j))
    }

    #[inline]
    fn decode(&self, bits: u64) -> Instruction {
        let x = unit_f64(bits);
        let s = self.sleep_fraction;
        if x < s {
            Instruction::Sleep
        } else {
            Instruction::Jump(self.kernel.direction_for((x - s) / (1.0 - s)))
        }
    }

    /// Number of instructions consumed at `idx`.
    pub fn cursor(&self, idx: usize) -> u64 {
        self.cursors[idx]
    }

    pub fn cursors(&self) -> &[u64] {
        &self.cursors
    }

    /// Consumes and returns the next instruction at `idx`.
    #[inline]
    pub fn next(&mut self, idx: usize) -> Instruction {
        let j = match self.mode {
            TapeMode::PerSite => self.cursors[idx],
            TapeMode::SharedCursor => {
                self.shared += 1;
                self.shared - 1
            }
        };
        self.cursors[idx] += 1;
        let site = match self.mode {
            TapeMode::PerSite => self.site_keys[idx],
            TapeMode::SharedCursor => 0,
        };
        self.decode(hash3(self.key, site, j))
    }

    /// Rewinds every cursor; the instructions themselves never change.
    pub fn reset(&mut self) {
        self.cursors.iter_mut().for_each(|c| *c = 0);
        self.shared = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;

    #[test]
    fn instruction_frequencies() {
        let w = LatticeBox::interval(0, 0).unwrap();
        let k = JumpKernel::biased_1d(0.75).unwrap();
        let t = InstructionTape::new(
            &w,
            &k,
            Rules::ArwFinite { lambda: 1.0 },
            &SeedSpec::new(1, 1),
        );
        let n = 200_000u64;
        let (mut sleep, mut right) = (0u64, 0u64);
        for j in 0..n {
            match t.instruction(0, j) {
                Instruction::Sleep => sleep += 1,
                Instruction::Jump(d) if d == Direction::RIGHT => right += 1,
                Instruction::Jump(_) => {}
            }
        }
        let tol = |p: f64| 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((sleep as f64 / n as f64 - 0.5).abs() < tol(0.5));
        // p(right) / (1 + lambda)
        assert!((right as f64 / n as f64 - 0.375).abs() < tol(0.375));
    }

    #[test]
    fn no_sleep_without_sleep_rate() {
        let w = LatticeBox::interval(0, 3).unwrap();
        let k = JumpKernel::symmetric(1).unwrap();
        let t = InstructionTape::new(&w, &k, Rules::ArwInfinite, &SeedSpec::new(2, 0));
        assert!((0..10_000).all(|j| t.instruction(2, j) != Instruction::Sleep));
    }

    #[test]
    fn consumption_is_immutable_and_resettable() {
        let w = LatticeBox::interval(-2, 2).unwrap();
        let k = JumpKernel::symmetric(1).unwrap();
        let mut t = InstructionTape::new(
            &w,
            &k,
            Rules::ArwFinite { lambda: 0.5 },
            &SeedSpec::new(3, 0),
        );
        let peek: Vec<_> = (0..20).map(|j| t.instruction(1, j)).collect();
        let got: Vec<_> = (0..20).map(|_| t.next(1)).collect();
        assert_eq!(peek, got);
        assert_eq!(t.cursor(1), 20);
        t.reset();
        assert_eq!(t.cursor(1), 0);
        assert_eq!(t.next(1), peek[0]);
    }

    #[test]
    fn tapes_agree_across_windows() {
        let k = JumpKernel::symmetric(2).unwrap();
        let s = SeedSpec::new(4, 0);
        let a = LatticeBox::cube(2, -3, 3).unwrap();
        let b = LatticeBox::cube(2, -1, 1).unwrap();
        let ta = InstructionTape::new(&a, &k, Rules::ParticleHole, &s);
        let tb = InstructionTape::new(&b, &k, Rules::ParticleHole, &s);
        for i in 0..b.len() {
            let ia = a.index_of(&b.site(i)).unwrap();
            for j in 0..10 {
                assert_eq!(ta.instruction(ia, j), tb.instruction(i, j));
            }
        }
    }
}
