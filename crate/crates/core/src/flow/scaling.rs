use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::particles::{default_window, measure_flow, FlowOptions};
use crate::error::{ArwError, Result};
use crate::law::InitialLaw;
use crate::rng::SeedSpec;
use crate::stats::{ks_distance, mean, EmpiricalCdf, HalfNormal};

pub const MIN_RUNS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    /// Right-jump probability.
    pub p: f64,
    pub law: InitialLaw,
    pub t_list: Vec<f64>,
    pub ladder: Vec<u32>,
    pub runs: usize,
    /// Largest KS distance accepted at the top of the ladder.
    pub ks_threshold: f64,
    /// Relative tolerance on the mean at the top of the ladder.
    pub mean_tolerance: f64,
}

impl ScalingParams {
    pub fn validate(&self) -> Result<()> {
        if self.runs < MIN_RUNS {
            return Err(ArwError::Precondition(format!(
                "insufficient runs: {} < {MIN_RUNS}",
                self.runs
            )));
        }
        if !(self.p > 0.5 && self.p <= 1.0) {
            return Err(ArwError::Precondition(format!(
                "requires p > 1/2, got {}",
                self.p
            )));
        }
        self.law.validate()?;
        if (self.law.mean() - 1.0).abs() > 1e-12 {
            return Err(ArwError::Precondition(format!(
                "requires mean density 1, got {}",
                self.law.mean()
            )));
        }
        if self.law.is_degenerate() || self.law.variance().is_nan() || self.law.variance() <= 0.0 {
            return Err(ArwError::Precondition(
                "non-constant required: the initial law has zero variance".into(),
            ));
        }
        if self.t_list.is_empty() || self.t_list.iter().any(|&t| !t.is_finite() || t <= 0.0) {
            return Err(ArwError::InvalidParameter(
                "t_list must be non-empty and positive".into(),
            ));
        }
        if self.ladder.is_empty() || self.ladder.contains(&0) {
            return Err(ArwError::InvalidParameter(
                "ladder must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub l: u32,
    pub t: f64,
    pub ks: f64,
    pub mean: f64,
    /// `sqrt(2 t / pi)`, the half-normal mean.
    pub expected_mean: f64,
    pub runs: usize,
}

/// Rescaled flux samples `C_{L^2 t / v} / (sigma L)`, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSample {
    pub l: u32,
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVerdict {
    pub t: f64,
    pub ks_decreasing: bool,
    pub final_ks: f64,
    pub final_mean_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub p: f64,
    pub v: f64,
    pub sigma: f64,
    pub rows: Vec<ScalingRow>,
    pub samples: Vec<ScaledSample>,
    pub verdicts: Vec<TimeVerdict>,
    /// Runs whose rescaled flux decreased between consecutive times.
    pub monotone_violations: usize,
    pub events: u64,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl ScalingReport {
    pub fn row(&self, l: u32, t: f64) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.l == l && r.t == t)
    }
}

/// Measures the rescaled flux along the ladder and compares each marginal
/// with the half-normal law of scale `sqrt(t)`.
pub fn verify_scaling(params: &ScalingParams, seed: &SeedSpec) -> Result<ScalingReport> {
    params.validate()?;
    let p = params.p;
    let v = 2.0 * p - 1.0;
    let sigma = params.law.variance().sqrt();
    let mut t_list = params.t_list.clone();
    t_list.sort_by(f64::total_cmp);
    let t_max = *t_list.last().expect("non-empty");

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut monotone_violations = 0;
    let mut events = 0;
    let mut warnings: Vec<String> = Vec::new();
    for (li, &l) in params.ladder.iter().enumerate() {
        let lf = l as f64;
        let horizon = lf * lf * t_max / v;
        let (w, r) = default_window(v, horizon);
        let per_run: Vec<(Vec<f64>, u64, Vec<String>)> = (0..params.runs)
            .into_par_iter()
            .map(|run| {
                let s = seed.child(li as u64, run as u64);
                let tr = measure_flow(p, &params.law, w, r, horizon, &s, FlowOptions::default())?;
                let scaled = t_list
                    .iter()
                    .map(|&t| tr.count_at(lf * lf * t / v) as f64 / (sigma * lf))
                    .collect();
                Ok((scaled, tr.events, tr.warnings))
            })
            .collect::<Result<_>>()?;
        for (scaled, ev, warn) in &per_run {
            events += ev;
            if scaled.windows(2).any(|w| w[1] < w[0]) {
                monotone_violations += 1;
            }
            for m in warn {
                let m = format!("L={l}: {m}");
                if !warnings.contains(&m) {
                    warnings.push(m);
                }
            }
        }
        for (ti, &t) in t_list.iter().enumerate() {
            let values: Vec<f64> = per_run.iter().map(|(s, _, _)| s[ti]).collect();
            let ecdf = EmpiricalCdf::new(values)?;
            let ks = ks_distance(&ecdf, &HalfNormal { scale: t.sqrt() })?;
            rows.push(ScalingRow {
                l,
                t,
                ks,
                mean: mean(ecdf.values()),
                expected_mean: (2.0 * t / std::f64::consts::PI).sqrt(),
                runs: params.runs,
            });
            samples.push(ScaledSample {
                l,
                t,
                values: ecdf.values().to_vec(),
            });
        }
    }

    let top = *params.ladder.last().expect("non-empty");
    let verdicts: Vec<TimeVerdict> = t_list
        .iter()
        .map(|&t| {
            let ks: Vec<f64> = params
                .ladder
                .iter()
                .map(|&l| rows.iter().find(|r| r.l == l && r.t == t).expect("row").ks)
                .collect();
            let ks_decreasing = ks.windows(2).all(|w| w[1] < w[0]);
            let last = rows.iter().find(|r| r.l == top && r.t == t).expect("row");
            let rel = (last.mean - last.expected_mean).abs() / last.expected_mean;
            TimeVerdict {
                t,
                ks_decreasing,
                final_ks: last.ks,
                final_mean_rel_err: rel,
                pass: ks_decreasing
                    && last.ks < params.ks_threshold
                    && rel <= params.mean_tolerance,
            }
        })
        .collect();
    let pass = monotone_violations == 0 && verdicts.iter().all(|v| v.pass);
    Ok(ScalingReport {
        p,
        v,
        sigma,
        rows,
        samples,
        verdicts,
        monotone_violations,
        events,
        warnings,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ScalingParams {
        ScalingParams {
            p: 0.8,
            law: InitialLaw::poisson(1.0),
            t_list: vec![0.5, 1.0, 2.0],
            ladder: vec![8, 16],
            runs: 200,
            ks_threshold: 1.0,
            mean_tolerance: 1.0,
        }
    }

    #[test]
    fn preconditions() {
        let seed = SeedSpec::new(0, 0);
        let mut p = params();
        p.runs = 99;
        assert!(
            matches!(verify_scaling(&p, &seed), Err(ArwError::Precondition(m)) if m.contains("insufficient runs"))
        );
        let mut p = params();
        p.law = InitialLaw::Deterministic { counts: vec![1; 4] };
        assert!(matches!(
            verify_scaling(&p, &seed),
            Err(ArwError::Precondition(_))
        ));
        let mut p = params();
        p.law = InitialLaw::poisson(1.2);
        assert!(verify_scaling(&p, &seed).is_err());
        let mut p = params();
        p.p = 0.5;
        assert!(verify_scaling(&p, &seed).is_err());
    }

    #[test]
    fn small_ladder_is_monotone_and_bounded() {
        let r = verify_scaling(&params(), &SeedSpec::new(4, 0)).unwrap();
        assert_eq!(r.monotone_violations, 0);
        assert_eq!(r.rows.len(), 6);
        for row in &r.rows {
            assert!((0.0..=1.0).contains(&row.ks));
            // already in the right ballpark at L = 16
            assert!(
                row.mean > 0.3 * row.expected_mean && row.mean < 2.0 * row.expected_mean,
                "{row:?}"
            );
        }
    }
}
