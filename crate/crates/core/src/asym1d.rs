//! Totally asymmetric one-dimensional ARW: the reflected-walk recursion for
//! the flux through the origin, its cross-check against full stabilization,
//! and critical-density scans.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abelian::{stabilize, Instruction, InstructionTape, OrderPolicy, Outcome};
use crate::error::{ArwError, Result};
use crate::lattice::{JumpKernel, LatticeBox};
use crate::law::{sample_initial, InitialLaw, LawSampler};
use crate::model::{Rules, SleepRate};
use crate::rng::{Purpose, SeedSpec};
use crate::stats::{least_squares_slope, median_u64};

/// Critical density `lambda / (1 + lambda)`, and 1 for `lambda = inf`.
pub fn mu_c_exact(lambda: f64) -> Result<f64> {
    Ok(SleepRate::new(lambda)?.sleep_fraction())
}

/// Threshold `t` with `P[u < t] = s` for 64-bit uniforms `u`.
fn bernoulli_threshold(s: f64) -> Option<u64> {
    if s >= 1.0 {
        None
    } else {
        Some((s * 18_446_744_073_709_551_616.0) as u64)
    }
}

#[inline]
fn bernoulli(u: u64, threshold: Option<u64>) -> u64 {
    match threshold {
        None => 1,
        Some(t) => (u < t) as u64,
    }
}

/// One realization of `N_i = max(N_{i-1} + eta_i - Y_i, 0)`, `N_{-1} = 0`,
/// over sites `-L..=0`. Entry `i` refers to site `-L + i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectedWalkRun {
    pub l: usize,
    pub eta: Vec<u32>,
    pub y: Vec<u8>,
    pub n: Vec<u64>,
}

impl ReflectedWalkRun {
    /// Recomputes every `N_i` from the stored `eta` and `Y`.
    pub fn verify(&self) -> bool {
        let mut prev = 0u64;
        for i in 0..self.n.len() {
            let next = (prev + self.eta[i] as u64).saturating_sub(self.y[i] as u64);
            if next != self.n[i] {
                return false;
            }
            prev = next;
        }
        self.n.len() == self.l + 1
    }

    pub fn endpoint(&self) -> u64 {
        *self.n.last().unwrap()
    }

    /// The increments `eta_i - Y_i`.
    pub fn increments(&self) -> impl Iterator<Item = i64> + '_ {
        self.eta
            .iter()
            .zip(&self.y)
            .map(|(&e, &y)| e as i64 - y as i64)
    }
}

/// Sequential stream of `(eta_i, Y_i)` pairs. `Y_i` is drawn at every site,
/// empty or not, so the increments are i.i.d.
struct RecursionStream {
    rng: rand_chacha::ChaCha8Rng,
    sampler: LawSampler,
    threshold: Option<u64>,
}

impl RecursionStream {
    fn new(lambda: f64, law: &InitialLaw, seed: &SeedSpec) -> Result<Self> {
        if let InitialLaw::Deterministic { .. } = law {
            return Err(ArwError::InvalidDistribution(
                "the recursion samples i.i.d. counts; deterministic lists are not supported".into(),
            ));
        }
        Ok(Self {
            rng: seed.rng(Purpose::Recursion),
            sampler: law.sampler()?,
            threshold: bernoulli_threshold(mu_c_exact(lambda)?),
        })
    }

    #[inline]
    fn next(&mut self) -> (u32, u64) {
        let ue = self.rng.next_u64();
        let uy = self.rng.next_u64();
        (self.sampler.sample(ue, 0), bernoulli(uy, self.threshold))
    }
}

/// Full recursion over `L + 1` sites, storing every intermediate value.
pub fn reflected_walk(
    l: usize,
    lambda: f64,
    law: &InitialLaw,
    seed: &SeedSpec,
) -> Result<ReflectedWalkRun> {
    if l < 1 {
        return Err(ArwError::InvalidParameter("L must be >= 1".into()));
    }
    let mut s = RecursionStream::new(lambda, law, seed)?;
    let mut run = ReflectedWalkRun {
        l,
        eta: Vec::with_capacity(l + 1),
        y: Vec::with_capacity(l + 1),
        n: Vec::with_capacity(l + 1),
    };
    let mut prev = 0u64;
    for _ in 0..=l {
        let (e, y) = s.next();
        prev = (prev + e as u64).saturating_sub(y);
        run.eta.push(e);
        run.y.push(y as u8);
        run.n.push(prev);
    }
    Ok(run)
}

/// `N_L` for each `L` in `ladder` (increasing), from one stream: the value
/// for `L` is the recursion over its first `L + 1` sites, which has the law
/// of `reflected_walk(L, ..).endpoint()`.
pub fn endpoint_ladder(
    ladder: &[usize],
    lambda: f64,
    law: &InitialLaw,
    seed: &SeedSpec,
) -> Result<Vec<u64>> {
    if ladder.is_empty() || ladder[0] < 1 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ArwError::InvalidParameter(
            "ladder must be increasing and >= 1".into(),
        ));
    }
    let mut s = RecursionStream::new(lambda, law, seed)?;
    let mut out = Vec::with_capacity(ladder.len());
    let mut prev = 0u64;
    let mut i = 0usize;
    for &l in ladder {
        while i <= l {
            let (e, y) = s.next();
            prev = (prev + e as u64).saturating_sub(y);
            i += 1;
        }
        out.push(prev);
    }
    Ok(out)
}

/// Recursion driven by the instruction tapes of a totally asymmetric ARW on
/// `[-L, 0]`: a site receiving `n >= 1` particles passes on `n` of them if the
/// instruction right after its `(n-1)`-th jump is a jump, and `n - 1` if it
/// is a sleep.
pub fn recursion_from_tape(eta: &[u32], tapes: &InstructionTape) -> Vec<u64> {
    let mut out = Vec::with_capacity(eta.len());
    let mut prev = 0u64;
    for (idx, &e) in eta.iter().enumerate() {
        let n = prev + e as u64;
        let next = if n == 0 {
            0
        } else {
            let mut jumps = 0u64;
            let mut j = 0u64;
            while jumps < n - 1 {
                if let Instruction::Jump(_) = tapes.instruction(idx, j) {
                    jumps += 1;
                }
                j += 1;
            }
            match tapes.instruction(idx, j) {
                Instruction::Sleep => n - 1,
                Instruction::Jump(_) => n,
            }
        };
        out.push(next);
        prev = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleMatch {
    pub recursion: u64,
    pub engine: u64,
    pub equal: bool,
}

/// Stabilizes the totally asymmetric ARW on `[-L, 0]` in random order with
/// the site-wise engine and compares the number of particles leaving site 0
/// to the right with the recursion's `N_L` computed from the same tapes.
pub fn oracle_match(
    l: usize,
    lambda: f64,
    law: &InitialLaw,
    seed: &SeedSpec,
) -> Result<OracleMatch> {
    let window = LatticeBox::interval(-(l as i64), 0)?;
    let rules = match SleepRate::new(lambda)? {
        SleepRate::Finite(lambda) => Rules::ArwFinite { lambda },
        SleepRate::Infinite => Rules::ArwInfinite,
    };
    if rules == Rules::ArwInfinite {
        return Err(ArwError::Precondition(
            "oracle needs a finite sleep rate".into(),
        ));
    }
    let mut config = sample_initial(law, &window, seed)?;
    let eta: Vec<u32> = config.counts().iter().map(|&c| c as u32).collect();
    let mut tapes = InstructionTape::new(&window, &JumpKernel::totally_asymmetric(), rules, seed);
    let recursion = *recursion_from_tape(&eta, &tapes).last().unwrap();
    let policy = OrderPolicy::Random {
        seed: seed.key(Purpose::Order),
    };
    let s = stabilize(&mut config, &mut tapes, &window, rules, policy, u64::MAX)?;
    debug_assert_eq!(s.outcome, Outcome::Stable);
    let engine = config.exited_right();
    Ok(OracleMatch {
        recursion,
        engine,
        equal: recursion == engine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Fixation,
    Critical,
    NonFixation,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Fixation => "fixation",
            Regime::Critical => "critical",
            Regime::NonFixation => "non-fixation",
        })
    }
}

/// Frozen classifier constants: the local growth exponent of the median of
/// `N_L` between the two largest ladder rungs decides the regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    /// Exponents below this mean a tight family (fixation).
    pub tight_below: f64,
    /// Exponents at or above this mean linear growth (non-fixation).
    pub linear_from: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            tight_below: 0.25,
            linear_from: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub lambda: f64,
    pub mu: f64,
    pub drift: f64,
    pub classification: Regime,
    pub ladder: Vec<usize>,
    pub medians: Vec<u64>,
    pub q90: Vec<u64>,
    /// Growth exponent between the two largest rungs.
    pub local_slope: f64,
    /// Least-squares log-log slope over the whole ladder.
    pub fit_slope: f64,
    /// Fraction of runs with `N_L >= (mu - mu_c) L / 2` at the top rung.
    pub transient_fraction: f64,
    pub runs: usize,
}

fn growth_exponent(m_lo: u64, m_hi: u64, l_lo: usize, l_hi: usize) -> f64 {
    ((m_hi as f64 + 1.0) / (m_lo as f64 + 1.0)).ln() / (l_hi as f64 / l_lo as f64).ln()
}

/// Classifies from the medians of `N_L` along the ladder.
pub fn classify(medians: &[u64], ladder: &[usize], th: &ClassifierThresholds) -> (Regime, f64) {
    let k = medians.len();
    if medians[k - 1] == 0 {
        return (Regime::Fixation, 0.0);
    }
    let slope = growth_exponent(medians[k - 2], medians[k - 1], ladder[k - 2], ladder[k - 1]);
    let regime = if slope < th.tight_below {
        Regime::Fixation
    } else if slope >= th.linear_from {
        Regime::NonFixation
    } else {
        Regime::Critical
    };
    (regime, slope)
}

/// Summary of `N_L` samples (rows: runs, columns: ladder rungs).
pub fn regime_report(
    lambda: f64,
    mu: f64,
    ladder: &[usize],
    samples: &[Vec<u64>],
    th: &ClassifierThresholds,
) -> Result<RegimeReport> {
    let mu_c = mu_c_exact(lambda)?;
    let k = ladder.len();
    let column = |j: usize| samples.iter().map(|r| r[j]).collect::<Vec<_>>();
    let medians: Vec<u64> = (0..k).map(|j| median_u64(&column(j))).collect();
    let q90: Vec<u64> = (0..k)
        .map(|j| crate::stats::quantile_u64(&column(j), 0.9))
        .collect();
    let (classification, local_slope) = if k >= 2 {
        classify(&medians, ladder, th)
    } else {
        return Err(ArwError::InvalidParameter(
            "ladder needs at least two rungs".into(),
        ));
    };
    let xs: Vec<f64> = ladder.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&m| (m as f64 + 1.0).ln()).collect();
    let drift = mu - mu_c;
    let top = ladder[k - 1] as f64;
    let transient_fraction = samples
        .iter()
        .filter(|r| r[k - 1] as f64 >= 0.5 * drift * top)
        .count() as f64
        / samples.len() as f64;
    Ok(RegimeReport {
        lambda,
        mu,
        drift,
        classification,
        ladder: ladder.to_vec(),
        medians,
        q90,
        local_slope,
        fit_slope: least_squares_slope(&xs, &ys),
        transient_fraction,
        runs: samples.len(),
    })
}

/// For each `mu` in the grid, runs `seeds_per_point` recursions with
/// Poisson(`mu`) counts and classifies the growth of `N_L` along `ladder`.
pub fn critical_scan(
    lambda: f64,
    mu_grid: &[f64],
    ladder: &[usize],
    seeds_per_point: usize,
    seed: &SeedSpec,
    th: &ClassifierThresholds,
) -> Result<Vec<RegimeReport>> {
    if mu_grid.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(ArwError::InvalidParameter(
            "mu grid must lie in [0, 1]".into(),
        ));
    }
    if seeds_per_point == 0 {
        return Err(ArwError::InvalidParameter(
            "need at least one seed per point".into(),
        ));
    }
    mu_c_exact(lambda)?;
    mu_grid
        .iter()
        .enumerate()
        .map(|(g, &mu)| {
            let law = InitialLaw::poisson(mu);
            let samples = (0..seeds_per_point)
                .into_par_iter()
                .map(|r| endpoint_ladder(ladder, lambda, &law, &seed.child(g as u64, r as u64)))
                .collect::<Result<Vec<_>>>()?;
            regime_report(lambda, mu, ladder, &samples, th)
        })
        .collect()
}

/// Largest grid `mu` classified as fixation.
pub fn transition_point(reports: &[RegimeReport]) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.classification == Regime::Fixation)
        .map(|r| r.mu)
        .fold(None, |acc: Option<f64>, m| {
            Some(acc.map_or(m, |a| a.max(m)))
        })
}

/// Plain reflected simple random walk `R_i = max(R_{i-1} + xi_i, 0)` with
/// `xi = +-1`; `R_L` has median close to `0.6745 sqrt(L)`.
pub fn plain_reflected_walk(l: usize, seed: &SeedSpec) -> u64 {
    let mut rng = seed.rng(Purpose::Recursion);
    let mut r = 0u64;
    let mut left = l;
    while left > 0 {
        let bits = rng.next_u64();
        for b in 0..left.min(64) {
            if (bits >> b) & 1 == 1 {
                r += 1;
            } else {
                r = r.saturating_sub(1);
            }
        }
        left -= left.min(64);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_density_formula() {
        assert_eq!(mu_c_exact(1.0).unwrap(), 0.5);
        assert_eq!(mu_c_exact(3.0).unwrap(), 0.75);
        assert_eq!(mu_c_exact(f64::INFINITY).unwrap(), 1.0);
        assert!(mu_c_exact(1e-9).unwrap() < 1e-8);
        assert!(mu_c_exact(1e-9).unwrap() > 0.0);
        assert!(mu_c_exact(0.0).is_err());
        assert!(mu_c_exact(-2.0).is_err());
    }

    #[test]
    fn empty_sites_give_zero() {
        let r = reflected_walk(1000, 1.0, &InitialLaw::poisson(0.0), &SeedSpec::new(1, 0)).unwrap();
        assert!(r.n.iter().all(|&n| n == 0));
        assert!(r.verify());
    }

    #[test]
    fn single_step() {
        // eta = 2, Y = 1 gives N = 1.
        let mut run = ReflectedWalkRun {
            l: 0,
            eta: vec![2],
            y: vec![1],
            n: vec![1],
        };
        assert!(run.verify());
        run.n[0] = 2;
        assert!(!run.verify());
    }

    #[test]
    fn stored_runs_verify() {
        for s in 0..20 {
            let mut r =
                reflected_walk(5000, 1.0, &InitialLaw::poisson(0.5), &SeedSpec::new(s, 0)).unwrap();
            assert!(r.verify());
            let ladder = endpoint_ladder(
                &[10, 100, 5000],
                1.0,
                &InitialLaw::poisson(0.5),
                &SeedSpec::new(s, 0),
            )
            .unwrap();
            assert_eq!(ladder, vec![r.n[10], r.n[100], r.n[5000]]);
            r.n[17] += 1;
            assert!(!r.verify());
        }
    }

    #[test]
    fn drift_law() {
        let n = 1_000_000;
        let r =
            reflected_walk(n - 1, 1.0, &InitialLaw::poisson(0.7), &SeedSpec::new(3, 0)).unwrap();
        let sum: i64 = r.increments().sum();
        let mean = sum as f64 / n as f64;
        let sd = (0.7f64 + 0.25).sqrt();
        assert!((mean - 0.2).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn oracle_small_cases() {
        let empty = oracle_match(10, 1.0, &InitialLaw::poisson(0.0), &SeedSpec::new(0, 0)).unwrap();
        assert_eq!(
            empty,
            OracleMatch {
                recursion: 0,
                engine: 0,
                equal: true
            }
        );
        for s in 0..100 {
            let l = 1 + (s as usize * 7) % 60;
            let m = oracle_match(l, 1.0, &InitialLaw::poisson(0.8), &SeedSpec::new(s, 1)).unwrap();
            assert!(m.equal, "{s}: {m:?}");
        }
    }

    #[test]
    fn oracle_single_site() {
        // One site holding two particles: the first jump leaves one particle,
        // which then sleeps or jumps according to the next instruction.
        let law = InitialLaw::Deterministic { counts: vec![0, 2] };
        for s in 0..30 {
            let m = oracle_match(1, 1.0, &law, &SeedSpec::new(s, 0)).unwrap();
            assert!(m.equal);
            assert!(m.engine == 1 || m.engine == 2);
        }
    }

    #[test]
    fn subcritical_is_tight() {
        let law = InitialLaw::poisson(0.3);
        let big = (0..300)
            .filter(|&s| {
                endpoint_ladder(&[100_000], 1.0, &law, &SeedSpec::new(9, s)).unwrap()[0] > 50
            })
            .count();
        assert!(big <= 3, "{big}");
    }

    #[test]
    fn supercritical_grows_linearly() {
        let law = InitialLaw::poisson(0.7);
        let l = 100_000usize;
        let ok = (0..300)
            .filter(|&s| {
                endpoint_ladder(&[l], 1.0, &law, &SeedSpec::new(10, s)).unwrap()[0] as f64
                    >= 0.5 * 0.2 * l as f64
            })
            .count();
        assert!(ok >= 297, "{ok}");
    }

    #[test]
    fn plain_walk_median() {
        let l = 10_000;
        let runs: Vec<u64> = (0..2000)
            .map(|s| plain_reflected_walk(l, &SeedSpec::new(11, s)))
            .collect();
        let m = median_u64(&runs) as f64 / (l as f64).sqrt();
        assert!((m - 0.6745).abs() < 0.05, "{m}");
    }

    #[test]
    fn classifier_cases() {
        let th = ClassifierThresholds::default();
        let ladder = [1000, 10_000, 100_000];
        assert_eq!(classify(&[0, 0, 0], &ladder, &th).0, Regime::Fixation);
        assert_eq!(classify(&[10, 12, 12], &ladder, &th).0, Regime::Fixation);
        assert_eq!(classify(&[20, 63, 200], &ladder, &th).0, Regime::Critical);
        assert_eq!(
            classify(&[100, 1000, 10_000], &ladder, &th).0,
            Regime::NonFixation
        );
        let reports = critical_scan(
            1.0,
            &[0.0, 0.3, 0.5, 0.7],
            &[1000, 10_000],
            40,
            &SeedSpec::new(1, 0),
            &th,
        )
        .unwrap();
        assert_eq!(reports[0].medians, vec![0, 0]);
        assert_eq!(reports[0].classification, Regime::Fixation);
        assert_eq!(reports[3].classification, Regime::NonFixation);
        assert_eq!(transition_point(&reports), Some(0.3));
        assert!(critical_scan(1.0, &[1.2], &[10, 100], 5, &SeedSpec::new(1, 0), &th).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn monotone_in_mu(seed in 0u64..1000, mu_lo in 0.0f64..0.9, gap in 0.0f64..0.5) {
            let ladder = [50, 500, 2000];
            let lo = endpoint_ladder(&ladder, 1.0, &InitialLaw::poisson(mu_lo), &SeedSpec::new(seed, 0)).unwrap();
            let hi = endpoint_ladder(&ladder, 1.0, &InitialLaw::poisson(mu_lo + gap), &SeedSpec::new(seed, 0)).unwrap();
            for (a, b) in lo.iter().zip(&hi) {
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn recursion_equals_engine(seed in 0u64..100_000, l in 1usize..40, mu in 0.0f64..2.0, lambda in 0.1f64..5.0) {
            let m = oracle_match(l, lambda, &InitialLaw::poisson(mu), &SeedSpec::new(seed, 2)).unwrap();
            prop_assert!(m.equal);
        }
    }
}
