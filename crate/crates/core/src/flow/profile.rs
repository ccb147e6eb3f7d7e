use serde::{Deserialize, Serialize};

use crate::abelian::{stabilize, InstructionTape, OrderPolicy, Outcome};
use crate::configuration::Configuration;
use crate::error::{ArwError, Result};
use crate::lattice::{JumpKernel, LatticeBox};
use crate::model::Rules;
use crate::rng::{Purpose, SeedSpec};

/// `S_k = sum_{i=-k}^{0} (eta(i) - 1)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileWalk {
    pub s: Vec<i64>,
}

impl ProfileWalk {
    pub fn n(&self) -> usize {
        self.s.len() - 1
    }
}

/// Particles-minus-holes walk read leftwards from the origin.
pub fn profile_walk(config: &Configuration, n: usize) -> Result<ProfileWalk> {
    let w = config.window();
    if w.dim() != 1 {
        return Err(ArwError::InvalidParameter(
            "profile walk is one-dimensional".into(),
        ));
    }
    let need = LatticeBox::interval(-(n as i64), 0)?;
    if !w.contains_box(&need) {
        return Err(ArwError::WindowTooSmall(format!(
            "window {w} does not cover [-{n}, 0]"
        )));
    }
    let mut s = Vec::with_capacity(n + 1);
    let mut acc = 0i64;
    for k in 0..=n as i64 {
        let idx = w.index_of(&[-k]).expect("covered");
        acc += config.state(idx).particles() as i64 - 1;
        s.push(acc);
    }
    Ok(ProfileWalk { s })
}

/// `max(0, max_{k <= n} S_k)`: eventual flux out of `[-n, 0]` for the
/// totally asymmetric particle-hole model.
pub fn flux_oracle_discrete(profile: &ProfileWalk, n: usize) -> Result<u64> {
    if n > profile.n() {
        return Err(ArwError::WindowTooSmall(format!(
            "profile has {} steps, asked for {n}",
            profile.n()
        )));
    }
    Ok(profile.s[..=n].iter().copied().max().unwrap_or(0).max(0) as u64)
}

/// Runs the totally asymmetric particle-hole model on `[-n, 0]` to
/// absorption with the site-wise engine (random order) and returns the
/// number of particles that left through the right end.
pub fn absorbed_flux(counts: &[u32], seed: &SeedSpec) -> Result<u64> {
    if counts.is_empty() {
        return Err(ArwError::InvalidParameter("need at least one site".into()));
    }
    let n = counts.len() as i64 - 1;
    let window = LatticeBox::interval(-n, 0)?;
    let mut config = Configuration::from_counts(window.clone(), counts)?;
    let rules = Rules::ParticleHole;
    let mut tapes = InstructionTape::new(&window, &JumpKernel::totally_asymmetric(), rules, seed);
    let policy = OrderPolicy::Random {
        seed: seed.key(Purpose::Order),
    };
    let s = stabilize(&mut config, &mut tapes, &window, rules, policy, u64::MAX)?;
    debug_assert_eq!(s.outcome, Outcome::Stable);
    Ok(config.exited_right())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{sample_initial, InitialLaw};

    fn cfg(counts: &[u32]) -> Configuration {
        let n = counts.len() as i64 - 1;
        Configuration::from_counts(LatticeBox::interval(-n, 0).unwrap(), counts).unwrap()
    }

    #[test]
    fn unit_profile_is_flat() {
        let p = profile_walk(&cfg(&[1; 10]), 9).unwrap();
        assert!(p.s.iter().all(|&s| s == 0));
        assert_eq!(flux_oracle_discrete(&p, 9).unwrap(), 0);
    }

    #[test]
    fn hand_sums() {
        // eta = (2, 0, 1) on (-2, -1, 0)
        let p = profile_walk(&cfg(&[2, 0, 1]), 2).unwrap();
        assert_eq!(p.s, vec![0, -1, 0]);
        // eta = (3, 0, 0): S = (-1, -2, 0), no particle gets past the origin
        let p = profile_walk(&cfg(&[3, 0, 0]), 2).unwrap();
        assert_eq!(p.s, vec![-1, -2, 0]);
        assert_eq!(flux_oracle_discrete(&p, 2).unwrap(), 0);
        assert_eq!(absorbed_flux(&[3, 0, 0], &SeedSpec::new(1, 0)).unwrap(), 0);
        assert!(profile_walk(&cfg(&[3, 0, 0]), 3).is_err());
    }

    #[test]
    fn clt_variance() {
        let n = 1_000_000usize;
        let w = LatticeBox::interval(-(n as i64) + 1, 0).unwrap();
        // Many independent blocks of length m: Var(S_m) / m ~ sigma^2 = 1.
        let c = sample_initial(&InitialLaw::poisson(1.0), &w, &SeedSpec::new(3, 0)).unwrap();
        let p = profile_walk(&c, n - 1).unwrap();
        let m = 100;
        let incs: Vec<f64> = (0..n / m - 1)
            .map(|b| (p.s[(b + 1) * m] - p.s[b * m]) as f64 / (m as f64).sqrt())
            .collect();
        let var = crate::stats::variance(&incs);
        assert!((var - 1.0).abs() < 0.05, "{var}");
        // the full walk at n: S_n / sqrt(n) is one draw of N(0, 1)
        assert!((p.s[n - 1] as f64 / (n as f64).sqrt()).abs() < 5.0);
    }

    #[test]
    fn oracle_matches_absorption() {
        for s in 0..200u64 {
            let n = (s % 50) as usize;
            let w = LatticeBox::interval(-(n as i64), 0).unwrap();
            let c = sample_initial(&InitialLaw::poisson(1.0), &w, &SeedSpec::new(s, 4)).unwrap();
            let counts: Vec<u32> = c.counts().iter().map(|&k| k as u32).collect();
            let p = profile_walk(&c, n).unwrap();
            assert_eq!(
                flux_oracle_discrete(&p, n).unwrap(),
                absorbed_flux(&counts, &SeedSpec::new(s, 4)).unwrap()
            );
        }
    }
}
