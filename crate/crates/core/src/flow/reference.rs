use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ArwError, Result};
use crate::rng::{Purpose, SeedSpec};
use crate::stats::{ks_two_sample, mean, variance, EmpiricalCdf};

/// `n` draws of `max_{s <= t} B_s` for a standard Brownian motion, via the
/// reflection principle (`|B_t|`).
pub fn bm_max_reference(t: f64, n: usize, seed: &SeedSpec) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(ArwError::EmptySample);
    }
    if !t.is_finite() || t < 0.0 {
        return Err(ArwError::InvalidParameter(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    let scale = t.sqrt();
    let mut rng = seed.rng(Purpose::Sampler);
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z.abs()
        })
        .collect())
}

/// Moments of the time-1 sampler against the half-normal, in standard
/// errors, and the two-sample KS distance between `B~_{c^2}` and `c B~_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSelfTest {
    pub mean: f64,
    pub variance: f64,
    pub mean_z: f64,
    pub variance_z: f64,
    pub scale_factor: f64,
    pub scale_ks: f64,
}

pub fn reference_self_test(
    moment_samples: usize,
    scale_samples: usize,
    scale_factor: f64,
    seed: &SeedSpec,
) -> Result<ReferenceSelfTest> {
    if scale_factor.is_nan() || scale_factor <= 0.0 {
        return Err(ArwError::InvalidParameter(
            "scale factor must be > 0".into(),
        ));
    }
    let s = bm_max_reference(1.0, moment_samples, &seed.child(0, 0))?;
    let n = s.len() as f64;
    let (m, v) = (mean(&s), variance(&s));
    let m0 = (2.0 / PI).sqrt();
    let v0 = 1.0 - 2.0 / PI;
    // central fourth moment from E|Z|^k = 1, sqrt(2/pi), 1, 2 sqrt(2/pi), 3
    let mu4 = 3.0 - 4.0 * m0 * (2.0 * m0) + 6.0 * m0 * m0 - 3.0 * m0.powi(4);
    let a = bm_max_reference(
        scale_factor * scale_factor,
        scale_samples,
        &seed.child(1, 0),
    )?;
    let b: Vec<f64> = bm_max_reference(1.0, scale_samples, &seed.child(1, 1))?
        .into_iter()
        .map(|x| scale_factor * x)
        .collect();
    Ok(ReferenceSelfTest {
        mean: m,
        variance: v,
        mean_z: (m - m0) / (v0 / n).sqrt(),
        variance_z: (v - v0) / ((mu4 - v0 * v0) / n).sqrt(),
        scale_factor,
        scale_ks: ks_two_sample(&EmpiricalCdf::new(a)?, &EmpiricalCdf::new(b)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `2 * int_0^x phi` by composite Simpson, independent of erf.
    fn half_normal_cdf_simpson(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let phi = |y: f64| (-0.5 * y * y).exp() / (2.0 * PI).sqrt();
        let mut acc = phi(0.0) + phi(x);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(i as f64 * h);
        }
        2.0 * acc * h / 3.0
    }

    #[test]
    fn probability_below_one() {
        let oracle = half_normal_cdf_simpson(1.0);
        assert!((oracle - 0.6827).abs() < 1e-4);
        let s = bm_max_reference(1.0, 200_000, &SeedSpec::new(1, 0)).unwrap();
        let frac = s.iter().filter(|&&x| x <= 1.0).count() as f64 / s.len() as f64;
        let se = (oracle * (1.0 - oracle) / s.len() as f64).sqrt();
        assert!((frac - oracle).abs() < 4.0 * se, "{frac} vs {oracle}");
    }

    #[test]
    fn zero_time_is_point_mass() {
        let s = bm_max_reference(0.0, 100, &SeedSpec::new(1, 0)).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
        assert!(bm_max_reference(1.0, 0, &SeedSpec::new(1, 0)).is_err());
        assert!(bm_max_reference(-1.0, 1, &SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn half_normal_moments() {
        let n = 1_000_000;
        let s = bm_max_reference(1.0, n, &SeedSpec::new(2, 0)).unwrap();
        let m = mean(&s);
        let v = variance(&s);
        let (m0, v0) = ((2.0 / PI).sqrt(), 1.0 - 2.0 / PI);
        assert!((m - m0).abs() < 3.0 * (v0 / n as f64).sqrt(), "{m}");
        // Var of the sample variance: (mu4 - v0^2) / n, mu4 from raw moments 3, 2 sqrt(2/pi)..
        let mu4 =
            3.0 - 4.0 * m0 * (2.0 * (2.0 / PI).sqrt()) + 6.0 * m0 * m0 * 1.0 - 3.0 * m0.powi(4);
        assert!(
            (v - v0).abs() < 3.0 * ((mu4 - v0 * v0) / n as f64).sqrt(),
            "{v}"
        );
    }

    #[test]
    fn self_test_passes() {
        let r = reference_self_test(1_000_000, 100_000, 2.0, &SeedSpec::new(5, 0)).unwrap();
        assert!(r.mean_z.abs() < 3.0 && r.variance_z.abs() < 3.0, "{r:?}");
        assert!(r.scale_ks < 0.02);
    }

    #[test]
    fn scale_invariance() {
        let n = 100_000;
        let a = bm_max_reference(4.0, n, &SeedSpec::new(3, 0)).unwrap();
        let b: Vec<f64> = bm_max_reference(1.0, n, &SeedSpec::new(3, 1))
            .unwrap()
            .into_iter()
            .map(|x| 2.0 * x)
            .collect();
        let d = ks_two_sample(
            &EmpiricalCdf::new(a).unwrap(),
            &EmpiricalCdf::new(b).unwrap(),
        )
        .unwrap();
        assert!(d < 0.02, "{d}");
    }
}
