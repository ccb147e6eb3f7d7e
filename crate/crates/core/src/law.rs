//! Initial particle laws and i.i.d. sampling of initial configurations.

use serde::{Deserialize, Serialize};

use crate::configuration::Configuration;
use crate::error::{ArwError, Result};
use crate::lattice::Window;
use crate::rng::{hash3, site_key, unit_f64, Purpose, SeedSpec};
use crate::stats::{
    geometric_from_bits, large_poisson_from_bits, PoissonTable, POISSON_INVERSION_MAX_MEAN,
};

/// Law of the number of particles initially placed at each site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum InitialLaw {
    Poisson {
        mean: f64,
    },
    /// Geometric on `{0, 1, ...}` with the given mean.
    Geometric {
        mean: f64,
    },
    /// `high` with probability `p_high`, otherwise `low`.
    BernoulliMixture {
        low: u32,
        high: u32,
        p_high: f64,
    },
    /// Explicit counts, one per window site in index order.
    Deterministic {
        counts: Vec<u32>,
    },
}

impl InitialLaw {
    pub fn poisson(mean: f64) -> Self {
        InitialLaw::Poisson { mean }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ArwError::InvalidDistribution(m));
        match self {
            InitialLaw::Poisson { mean } | InitialLaw::Geometric { mean } => {
                if !mean.is_finite() || *mean < 0.0 {
                    return bad(format!("mean {mean} must be finite and >= 0"));
                }
            }
            InitialLaw::BernoulliMixture { p_high, .. } => {
                if !(0.0..=1.0).contains(p_high) {
                    return bad(format!("mixture weight {p_high} not in [0, 1]"));
                }
            }
            InitialLaw::Deterministic { counts } => {
                if counts.is_empty() {
                    return bad("deterministic law needs at least one count".into());
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            InitialLaw::Poisson { mean } | InitialLaw::Geometric { mean } => *mean,
            InitialLaw::BernoulliMixture { low, high, p_high } => {
                *low as f64 + p_high * (*high as f64 - *low as f64)
            }
            InitialLaw::Deterministic { counts } => {
                counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64
            }
        }
    }

    /// Per-site variance; zero for deterministic counts.
    pub fn variance(&self) -> f64 {
        match self {
            InitialLaw::Poisson { mean } => *mean,
            InitialLaw::Geometric { mean } => mean * (1.0 + mean),
            InitialLaw::BernoulliMixture { low, high, p_high } => {
                let d = *high as f64 - *low as f64;
                d * d * p_high * (1.0 - p_high)
            }
            InitialLaw::Deterministic { .. } => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance() == 0.0
    }

    pub fn sampler(&self) -> Result<LawSampler> {
        self.validate()?;
        Ok(match self {
            InitialLaw::Poisson { mean } if *mean <= POISSON_INVERSION_MAX_MEAN => {
                LawSampler::Poisson(PoissonTable::new(*mean)?)
            }
            InitialLaw::Poisson { mean } => LawSampler::LargePoisson(*mean),
            InitialLaw::Geometric { mean } => LawSampler::Geometric(*mean),
            InitialLaw::BernoulliMixture { low, high, p_high } => LawSampler::Mixture {
                low: *low,
                high: *high,
                p_high: *p_high,
            },
            InitialLaw::Deterministic { counts } => LawSampler::Deterministic(counts.clone()),
        })
    }
}

/// Prepared sampler turning 64 random bits into a site count.
#[derive(Debug, Clone)]
pub enum LawSampler {
    Poisson(PoissonTable),
    LargePoisson(f64),
    Geometric(f64),
    Mixture { low: u32, high: u32, p_high: f64 },
    Deterministic(Vec<u32>),
}

impl LawSampler {
    /// Count for window index `idx` from random bits `u`. Monotone in `u` for
    /// the Poisson, geometric and mixture laws, so one `u` couples laws of
    /// different means.
    #[inline]
    pub fn sample(&self, u: u64, idx: usize) -> u32 {
        match self {
            LawSampler::Poisson(t) => t.sample(u),
            LawSampler::LargePoisson(m) => large_poisson_from_bits(*m, u),
            LawSampler::Geometric(m) => geometric_from_bits(*m, u),
            LawSampler::Mixture { low, high, p_high } => {
                if unit_f64(u) >= 1.0 - p_high {
                    *high
                } else {
                    *low
                }
            }
            LawSampler::Deterministic(c) => c[idx % c.len()],
        }
    }
}

/// Random bits for the initial count at a site.
#[inline]
pub fn initial_bits(seed: &SeedSpec, coords: &[i64]) -> u64 {
    hash3(seed.key(Purpose::InitialConfig), site_key(coords), 0)
}

/// I.i.d. initial configuration on `window`; every particle starts
/// unsettled and no hole is filled yet.
pub fn sample_initial(law: &InitialLaw, window: &Window, seed: &SeedSpec) -> Result<Configuration> {
    if window.is_empty() {
        return Err(ArwError::InvalidParameter("empty window".into()));
    }
    if let InitialLaw::Deterministic { counts } = law {
        if counts.len() != window.len() {
            return Err(ArwError::InvalidDistribution(format!(
                "{} deterministic counts for {} sites",
                counts.len(),
                window.len()
            )));
        }
    }
    let sampler = law.sampler()?;
    let key = seed.key(Purpose::InitialConfig);
    let counts: Vec<u32> = if window.dim() == 1 {
        let lo = window.lo()[0];
        (0..window.len())
            .map(|i| sampler.sample(hash3(key, (lo + i as i64) as u64, 0), i))
            .collect()
    } else {
        (0..window.len())
            .map(|i| sampler.sample(hash3(key, site_key(&window.site(i)), 0), i))
            .collect()
    };
    Configuration::from_counts(window.clone(), &counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::SiteState;
    use crate::lattice::LatticeBox;

    #[test]
    fn deterministic_zeros_are_empty() {
        let w = LatticeBox::interval(-1, 1).unwrap();
        let c = sample_initial(
            &InitialLaw::Deterministic {
                counts: vec![0, 0, 0],
            },
            &w,
            &SeedSpec::new(1, 0),
        )
        .unwrap();
        assert!(c.states().iter().all(|s| *s == SiteState::Empty));
        assert_eq!(c.exited_total(), 0);
        let short = InitialLaw::Deterministic { counts: vec![1] };
        assert!(sample_initial(&short, &w, &SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn poisson_mean_lln() {
        let n = 1_000_000;
        let w = LatticeBox::interval(0, n - 1).unwrap();
        let c = sample_initial(&InitialLaw::poisson(1.0), &w, &SeedSpec::new(42, 7)).unwrap();
        let m = c.total_particles() as f64 / n as f64;
        assert!((m - 1.0).abs() < 0.01);
        // 4 sigma / sqrt(n)
        assert!((m - 1.0).abs() < 4.0 / (n as f64).sqrt());
        assert!(c.states().iter().all(|s| !s.hole_filled()));
    }

    #[test]
    fn same_seed_same_configuration() {
        let w = LatticeBox::cube(2, -5, 5).unwrap();
        let law = InitialLaw::Geometric { mean: 0.8 };
        let a = sample_initial(&law, &w, &SeedSpec::new(3, 9)).unwrap();
        let b = sample_initial(&law, &w, &SeedSpec::new(3, 9)).unwrap();
        let c = sample_initial(&law, &w, &SeedSpec::new(3, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn windows_agree_on_overlap() {
        let law = InitialLaw::poisson(2.0);
        let s = SeedSpec::new(5, 0);
        let big = sample_initial(&law, &LatticeBox::interval(-20, 20).unwrap(), &s).unwrap();
        let small = sample_initial(&law, &LatticeBox::interval(-3, 4).unwrap(), &s).unwrap();
        for x in -3..=4 {
            assert_eq!(big.state_at(&[x]).unwrap(), small.state_at(&[x]).unwrap());
        }
    }

    #[test]
    fn invalid_laws() {
        let w = LatticeBox::interval(0, 3).unwrap();
        let s = SeedSpec::new(0, 0);
        assert!(matches!(
            sample_initial(&InitialLaw::poisson(-0.5), &w, &s),
            Err(ArwError::InvalidDistribution(_))
        ));
        let mix = InitialLaw::BernoulliMixture {
            low: 0,
            high: 2,
            p_high: 1.5,
        };
        assert!(sample_initial(&mix, &w, &s).is_err());
    }

    #[test]
    fn analytic_moments() {
        let mix = InitialLaw::BernoulliMixture {
            low: 0,
            high: 2,
            p_high: 0.5,
        };
        assert!((mix.mean() - 1.0).abs() < 1e-12);
        assert!((mix.variance() - 1.0).abs() < 1e-12);
        assert!(InitialLaw::Deterministic { counts: vec![1, 1] }.is_degenerate());
        assert!(!InitialLaw::poisson(1.0).is_degenerate());
        let g = InitialLaw::Geometric { mean: 1.0 };
        assert_eq!(g.variance(), 2.0);
    }

    #[test]
    fn mixture_and_geometric_means() {
        let n = 1_000_000;
        let w = LatticeBox::interval(0, n - 1).unwrap();
        for law in [
            InitialLaw::Geometric { mean: 0.7 },
            InitialLaw::BernoulliMixture {
                low: 0,
                high: 3,
                p_high: 0.25,
            },
        ] {
            let c = sample_initial(&law, &w, &SeedSpec::new(11, 0)).unwrap();
            let m = c.total_particles() as f64 / n as f64;
            let se = (law.variance() / n as f64).sqrt();
            assert!((m - law.mean()).abs() < 4.0 * se, "{law:?}");
        }
    }
}
