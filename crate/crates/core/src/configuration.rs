//! Particle configurations on a finite window.

use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::lattice::{Direction, Window};
use crate::model::{ModelParams, Rules};

/// Content of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SiteState {
    #[default]
    Empty,
    /// One sleeping (passive) ARW particle.
    Sleeping,
    /// One particle that filled the hole of this site; never moves again.
    Settled,
    /// `count >= 1` active or unsettled particles, plus one settled particle
    /// when `settled` is set.
    Active { count: u32, settled: bool },
}

impl SiteState {
    /// Site holding `k` unsettled particles and no settled one.
    pub fn active(k: u32) -> Self {
        if k == 0 {
            SiteState::Empty
        } else {
            SiteState::Active {
                count: k,
                settled: false,
            }
        }
    }

    /// Normalized state of a site holding `n` particles under hole semantics.
    pub fn from_hole_count(n: u64) -> Self {
        match n {
            0 => SiteState::Empty,
            1 => SiteState::Settled,
            m => SiteState::Active {
                count: (m - 1) as u32,
                settled: true,
            },
        }
    }

    /// Number of particles at the site, of any kind.
    pub fn particles(self) -> u64 {
        match self {
            SiteState::Empty => 0,
            SiteState::Sleeping | SiteState::Settled => 1,
            SiteState::Active { count, settled } => count as u64 + settled as u64,
        }
    }

    pub fn active_count(self) -> u32 {
        match self {
            SiteState::Active { count, .. } => count,
            _ => 0,
        }
    }

    pub fn hole_filled(self) -> bool {
        matches!(
            self,
            SiteState::Settled | SiteState::Active { settled: true, .. }
        )
    }

    pub fn is_stable(self) -> bool {
        !matches!(self, SiteState::Active { .. })
    }
}

/// Densities over the window, each `count / window size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityStats {
    pub active_density: f64,
    pub sleeping_density: f64,
    pub settled_density: f64,
    pub filled_hole_density: f64,
    pub unfilled_hole_density: f64,
}

/// Site states over a window plus counters of particles that left it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    window: Window,
    states: Vec<SiteState>,
    /// Indexed by direction number: particles that left through that face.
    exited: Vec<u64>,
}

impl Configuration {
    pub fn new(window: Window, states: Vec<SiteState>) -> Result<Self> {
        if window.is_empty() {
            return Err(ArwError::InvalidParameter("empty window".into()));
        }
        if states.len() != window.len() {
            return Err(ArwError::InvalidParameter(format!(
                "{} states for a window of {} sites",
                states.len(),
                window.len()
            )));
        }
        if states
            .iter()
            .any(|s| matches!(s, SiteState::Active { count: 0, .. }))
        {
            return Err(ArwError::InvalidParameter(
                "active site with zero count".into(),
            ));
        }
        let exited = vec![0; 2 * window.dim()];
        Ok(Self {
            window,
            states,
            exited,
        })
    }

    pub fn empty(window: Window) -> Self {
        let n = window.len();
        Self::new(window, vec![SiteState::Empty; n]).expect("nonempty window")
    }

    /// All particles unsettled, as at time `0-`.
    pub fn from_counts(window: Window, counts: &[u32]) -> Result<Self> {
        Self::new(
            window,
            counts.iter().map(|&k| SiteState::active(k)).collect(),
        )
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SiteState] {
        &self.states
    }

    #[inline]
    pub fn state(&self, idx: usize) -> SiteState {
        self.states[idx]
    }

    #[inline]
    pub fn set_state(&mut self, idx: usize, s: SiteState) {
        debug_assert!(!matches!(s, SiteState::Active { count: 0, .. }));
        self.states[idx] = s;
    }

    pub fn state_at(&self, site: &[i64]) -> Result<SiteState> {
        let idx = self
            .window
            .index_of(site)
            .ok_or_else(|| ArwError::OutsideWindow(site.to_vec()))?;
        Ok(self.states[idx])
    }

    pub fn exited(&self) -> &[u64] {
        &self.exited
    }

    #[inline]
    pub(crate) fn record_exit(&mut self, dir: Direction) {
        self.exited[dir.0 as usize] += 1;
    }

    pub fn exited_right(&self) -> u64 {
        self.exited[Direction::RIGHT.0 as usize]
    }

    pub fn exited_left(&self) -> u64 {
        self.exited[Direction::LEFT.0 as usize]
    }

    pub fn exited_total(&self) -> u64 {
        self.exited.iter().sum()
    }

    pub fn particles_in_window(&self) -> u64 {
        self.states.iter().map(|s| s.particles()).sum()
    }

    /// Particles in the window plus those that exited; conserved by every
    /// operation.
    pub fn total_particles(&self) -> u64 {
        self.particles_in_window() + self.exited_total()
    }

    /// Particle counts per site, ignoring state tags.
    pub fn counts(&self) -> Vec<u64> {
        self.states.iter().map(|s| s.particles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.states.iter().all(|s| s.is_stable())
    }

    /// Time-0 hole filling: at each site with unsettled particles and an
    /// unfilled hole, one of them settles. Returns the number of settlements.
    pub fn settle_holes(&mut self) -> u64 {
        let mut settled = 0;
        for s in &mut self.states {
            if let SiteState::Active {
                count,
                settled: false,
            } = *s
            {
                *s = SiteState::from_hole_count(count as u64);
                settled += 1;
            }
        }
        settled
    }

    /// Brings the configuration into the canonical form for `rules`.
    pub(crate) fn normalize(&mut self, rules: Rules) -> u64 {
        if rules.has_holes() {
            self.settle_holes()
        } else {
            0
        }
    }

    pub fn density_stats(&self) -> DensityStats {
        let n = self.states.len() as f64;
        let mut particles = 0u64;
        let mut active = 0u64;
        let mut sleeping = 0u64;
        let mut filled = 0u64;
        for &s in &self.states {
            particles += s.particles();
            active += s.active_count() as u64;
            sleeping += (s == SiteState::Sleeping) as u64;
            filled += s.hole_filled() as u64;
        }
        // Settled particles are whatever is neither active nor asleep.
        let settled = particles - active - sleeping;
        DensityStats {
            active_density: active as f64 / n,
            sleeping_density: sleeping as f64 / n,
            settled_density: settled as f64 / n,
            filled_hole_density: filled as f64 / n,
            unfilled_hole_density: (self.states.len() as u64 - filled) as f64 / n,
        }
    }

    /// Whether the site `x` holds no active or unsettled particle.
    pub fn is_stable_at(&self, x: &[i64], params: &ModelParams) -> Result<bool> {
        if x.len() != params.dim() {
            return Err(ArwError::OutsideWindow(x.to_vec()));
        }
        Ok(self.state_at(x)?.is_stable())
    }
}

/// Free-function form of [`Configuration::density_stats`].
pub fn density_stats(config: &Configuration) -> DensityStats {
    config.density_stats()
}

/// Free-function form of [`Configuration::is_stable_at`].
pub fn is_stable_at(config: &Configuration, x: &[i64], params: &ModelParams) -> Result<bool> {
    config.is_stable_at(x, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{JumpKernel, LatticeBox};
    use crate::model::SleepRate;

    fn arw() -> ModelParams {
        ModelParams::arw(SleepRate::Finite(1.0), JumpKernel::symmetric(1).unwrap())
    }

    #[test]
    fn all_empty_densities() {
        let c = Configuration::empty(LatticeBox::interval(0, 9).unwrap());
        let d = c.density_stats();
        assert_eq!(d.active_density, 0.0);
        assert_eq!(d.sleeping_density, 0.0);
        assert_eq!(d.settled_density, 0.0);
        assert_eq!(d.unfilled_hole_density, 1.0);
    }

    #[test]
    fn one_settled_site() {
        let n = 7;
        let mut c = Configuration::empty(LatticeBox::interval(0, n - 1).unwrap());
        c.set_state(3, SiteState::Settled);
        let d = density_stats(&c);
        assert_eq!(d.settled_density, 1.0 / n as f64);
        assert_eq!(d.filled_hole_density, d.settled_density);
    }

    #[test]
    fn stability() {
        let w = LatticeBox::interval(-1, 2).unwrap();
        let c = Configuration::new(
            w,
            vec![
                SiteState::Empty,
                SiteState::active(2),
                SiteState::Sleeping,
                SiteState::Settled,
            ],
        )
        .unwrap();
        let p = arw();
        assert!(is_stable_at(&c, &[-1], &p).unwrap());
        assert!(!is_stable_at(&c, &[0], &p).unwrap());
        assert!(is_stable_at(&c, &[1], &p).unwrap());
        assert!(is_stable_at(&c, &[2], &p).unwrap());
        assert_eq!(
            is_stable_at(&c, &[3], &p),
            Err(ArwError::OutsideWindow(vec![3]))
        );
    }

    #[test]
    fn settle_holes_keeps_particles() {
        let w = LatticeBox::interval(0, 3).unwrap();
        let mut c = Configuration::from_counts(w, &[0, 1, 2, 5]).unwrap();
        assert_eq!(c.density_stats().unfilled_hole_density, 1.0);
        let before = c.total_particles();
        assert_eq!(c.settle_holes(), 3);
        assert_eq!(c.total_particles(), before);
        assert_eq!(c.state(1), SiteState::Settled);
        assert_eq!(
            c.state(3),
            SiteState::Active {
                count: 4,
                settled: true
            }
        );
        let d = c.density_stats();
        assert_eq!(d.settled_density, 0.75);
        assert_eq!(d.unfilled_hole_density, 0.25);
    }

    #[test]
    fn rejects_bad_shapes() {
        let w = LatticeBox::interval(0, 3).unwrap();
        assert!(Configuration::new(w.clone(), vec![]).is_err());
        assert!(Configuration::new(
            w,
            vec![
                SiteState::Active {
                    count: 0,
                    settled: false
                };
                4
            ]
        )
        .is_err());
    }
}
