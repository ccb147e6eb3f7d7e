//! Distributions, empirical CDFs and Kolmogorov-Smirnov statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::rng::{unit_f64, Purpose, SeedSpec};

/// Largest Poisson mean sampled by table inversion.
pub const POISSON_INVERSION_MAX_MEAN: f64 = 30.0;

/// Exact inversion sampler for Poisson(mean) driven by 64 random bits.
#[derive(Debug, Clone)]
pub struct PoissonTable {
    mean: f64,
    // thresholds[k] = floor(P[X <= k] * 2^64), last entry saturated
    thresholds: Vec<u64>,
}

impl PoissonTable {
    pub fn new(mean: f64) -> Result<Self> {
        if !mean.is_finite() || mean < 0.0 {
            return Err(ArwError::InvalidDistribution(format!(
                "Poisson mean {mean}"
            )));
        }
        if mean > POISSON_INVERSION_MAX_MEAN {
            return Err(ArwError::InvalidDistribution(format!(
                "Poisson mean {mean} above inversion limit {POISSON_INVERSION_MAX_MEAN}"
            )));
        }
        let two64 = 18_446_744_073_709_551_616.0_f64;
        let mut thresholds = Vec::new();
        let mut pmf = (-mean).exp();
        let mut cdf = 0.0;
        let mut k = 0u32;
        loop {
            cdf += pmf;
            if 1.0 - cdf < 1e-18 || k > 400 {
                thresholds.push(u64::MAX);
                break;
            }
            thresholds.push((cdf * two64) as u64);
            k += 1;
            pmf *= mean / k as f64;
        }
        Ok(Self { mean, thresholds })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub fn sample(&self, u: u64) -> u32 {
        let last = self.thresholds.len() - 1;
        let mut k = 0;
        while k < last && u >= self.thresholds[k] {
            k += 1;
        }
        k as u32
    }
}

/// Geometric law on `{0, 1, 2, ...}` with the given mean.
#[inline]
pub fn geometric_from_bits(mean: f64, u: u64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let fail = mean / (1.0 + mean);
    let v = 1.0 - unit_f64(u); // (0, 1]
    let k = (v.ln() / fail.ln()).floor();
    if k >= u32::MAX as f64 {
        u32::MAX
    } else {
        k as u32
    }
}

/// Named distributions supported by [`sample_dist`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum NamedDist {
    Poisson { mean: f64 },
    Geometric { mean: f64 },
    Bernoulli { p: f64 },
    Normal { mean: f64, sd: f64 },
}

impl NamedDist {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ArwError::InvalidDistribution(m));
        match *self {
            NamedDist::Poisson { mean } | NamedDist::Geometric { mean }
                if !mean.is_finite() || mean < 0.0 =>
            {
                bad(format!("mean {mean} must be finite and >= 0"))
            }
            NamedDist::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                bad(format!("Bernoulli parameter {p} not in [0, 1]"))
            }
            NamedDist::Normal { mean, sd } if !mean.is_finite() || !sd.is_finite() || sd < 0.0 => {
                bad(format!("normal parameters ({mean}, {sd})"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NamedDist::Poisson { mean } | NamedDist::Geometric { mean } => mean,
            NamedDist::Bernoulli { p } => p,
            NamedDist::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NamedDist::Poisson { mean } => mean,
            NamedDist::Geometric { mean } => mean * (1.0 + mean),
            NamedDist::Bernoulli { p } => p * (1.0 - p),
            NamedDist::Normal { sd, .. } => sd * sd,
        }
    }
}

/// Draws `n` i.i.d. samples, deterministic in `seed`.
pub fn sample_dist(dist: &NamedDist, n: usize, seed: &SeedSpec) -> Result<Vec<f64>> {
    dist.validate()?;
    let mut rng = seed.rng(Purpose::Sampler);
    let out = match *dist {
        NamedDist::Poisson { mean } if mean <= POISSON_INVERSION_MAX_MEAN => {
            let table = PoissonTable::new(mean)?;
            (0..n).map(|_| table.sample(rng.random()) as f64).collect()
        }
        NamedDist::Poisson { mean } => {
            let d = rand_distr::Poisson::new(mean)
                .map_err(|e| ArwError::InvalidDistribution(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        NamedDist::Geometric { mean } => (0..n)
            .map(|_| geometric_from_bits(mean, rng.random()) as f64)
            .collect(),
        NamedDist::Bernoulli { p } => (0..n)
            .map(|_| if unit_f64(rng.random()) < p { 1.0 } else { 0.0 })
            .collect(),
        NamedDist::Normal { mean, sd } => (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + sd * z
            })
            .collect(),
    };
    Ok(out)
}

/// Poisson draw for means above the inversion limit, seeded from `u`.
pub(crate) fn large_poisson_from_bits(mean: f64, u: u64) -> u32 {
    let mut rng = ChaCha8Rng::seed_from_u64(u);
    let d = rand_distr::Poisson::new(mean).expect("validated mean");
    let x: f64 = d.sample(&mut rng);
    x as u32
}

/// Standard normal CDF `Phi(x)`.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// A cumulative distribution function usable as a KS reference.
pub trait ReferenceCdf {
    fn cdf(&self, x: f64) -> f64;

    /// Left limit `F(x-)`; equal to `cdf` for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

impl<F: Fn(f64) -> f64> ReferenceCdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Law of `|N(0, scale^2)|`, equivalently of the running maximum of a
/// Brownian motion at time `scale^2`. `scale = 0` is the point mass at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfNormal {
    pub scale: f64,
}

impl ReferenceCdf for HalfNormal {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if self.scale == 0.0 {
            1.0
        } else {
            (2.0 * standard_normal_cdf(x / self.scale) - 1.0).clamp(0.0, 1.0)
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }
}

/// Right-continuous empirical distribution function of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.iter().any(|x| x.is_nan()) {
            return Err(ArwError::InvalidParameter("NaN in sample".into()));
        }
        sample.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { sorted: sample })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Distinct sample values with the ECDF value just after each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = (i + 1) as f64 / n,
                _ => out.push((v, (i + 1) as f64 / n)),
            }
        }
        out
    }
}

/// Sup-distance between an empirical CDF and a reference CDF, evaluated
/// exactly at the jump points of the empirical CDF.
pub fn ks_distance<R: ReferenceCdf + ?Sized>(sample: &EmpiricalCdf, reference: &R) -> Result<f64> {
    if sample.is_empty() {
        return Err(ArwError::EmptySample);
    }
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    for (v, after) in sample.steps() {
        d = d
            .max((after - reference.cdf(v)).abs())
            .max((reference.cdf_left(v) - below).abs());
        below = after;
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Sup-distance between two empirical CDFs.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(ArwError::EmptySample);
    }
    let (xa, xb) = (a.values(), b.values());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let v = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] <= v {
            i += 1;
        }
        while j < xb.len() && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic one-sample KS critical value at level `alpha` for `n` samples.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Outcome of comparing a statistic against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub sample_sizes: Vec<usize>,
}

impl TestResult {
    pub fn new(statistic: f64, threshold: f64, sample_sizes: Vec<usize>) -> Self {
        Self {
            statistic,
            threshold,
            pass: statistic <= threshold,
            sample_sizes,
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Lower median of integer data.
pub fn median_u64(xs: &[u64]) -> u64 {
    let mut v = xs.to_vec();
    let mid = (v.len() - 1) / 2;
    *v.select_nth_unstable(mid).1
}

/// Empirical quantile (lower, by rank) of integer data.
pub fn quantile_u64(xs: &[u64], q: f64) -> u64 {
    let mut v = xs.to_vec();
    let k = ((q * (v.len() - 1) as f64).floor() as usize).min(v.len() - 1);
    *v.select_nth_unstable(k).1
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
