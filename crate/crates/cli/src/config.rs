//! TOML experiment configs. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use arw_core::asym1d::ClassifierThresholds;
use arw_core::lattice::{JumpKernel, LatticeBox};
use arw_core::{InitialLaw, ModelKind, ModelParams, SleepRate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub master_seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Which particle system to run. `p_right` selects a biased nearest
/// neighbour kernel in one dimension; otherwise the walk is symmetric.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default)]
    pub lambda: Option<SleepRate>,
    #[serde(default)]
    pub p_right: Option<f64>,
    #[serde(default)]
    pub d_b: Option<f64>,
}

impl ModelSpec {
    pub fn params(&self, dim: usize) -> Result<ModelParams, CliError> {
        let kernel = match self.p_right {
            Some(p) if dim == 1 => JumpKernel::biased_1d(p)?,
            Some(_) => return Err(CliError::Config("p_right needs dim = 1".into())),
            None => JumpKernel::symmetric(dim)?,
        };
        Ok(match self.model {
            ModelKind::Arw => {
                let l = self
                    .lambda
                    .ok_or_else(|| CliError::Config("arw needs a lambda".into()))?;
                ModelParams::arw(l, kernel)
            }
            ModelKind::ParticleHole => ModelParams::particle_hole(kernel),
            ModelKind::Annihilating => ModelParams::annihilating(self.d_b.unwrap_or(0.0), kernel)?,
        })
    }

    pub fn label(&self) -> String {
        match self.model {
            ModelKind::Arw => format!(
                "arw(lambda={})",
                self.lambda.map(|l| l.to_string()).unwrap_or_default()
            ),
            ModelKind::ParticleHole => "particle_hole".into(),
            ModelKind::Annihilating => "annihilating".into(),
        }
    }
}

/// A float that may also be written as the string `"inf"`.
fn de_time<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(x) => Ok(x),
        Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
        Raw::Str(s) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", got {s:?}"
        ))),
    }
}

fn ser_time<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

// ---------------------------------------------------------------- abelian-check

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbelianConfig {
    pub run: RunSection,
    #[serde(default)]
    pub abelian: Option<AbelianCampaign>,
    #[serde(default)]
    pub monotonicity: Option<MonotonicityCampaign>,
    #[serde(default)]
    pub equivalence: Option<EquivalenceCampaign>,
    #[serde(default)]
    pub recursion_oracle: Option<RecursionOracleCampaign>,
    #[serde(default)]
    pub carpet: Option<CarpetCampaign>,
}

/// Random boxes `[0, side)^dim` with `1 <= side <= max_side`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxFamily {
    pub dims: Vec<usize>,
    pub max_side: u32,
    pub law: InitialLaw,
    /// Cap on the initial number of particles per site.
    #[serde(default)]
    pub truncate: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbelianCampaign {
    pub configs: usize,
    pub orders: usize,
    pub boxes: BoxFamily,
    pub models: Vec<ModelSpec>,
    /// Negative control: all sites read one shared tape cursor.
    #[serde(default)]
    pub corrupt_tapes: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicityCampaign {
    pub configs: usize,
    pub boxes: BoxFamily,
    pub models: Vec<ModelSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceCampaign {
    pub instances: usize,
    pub boxes: BoxFamily,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionOracleCampaign {
    pub instances: usize,
    pub max_l: usize,
    pub lambdas: Vec<f64>,
    /// Poisson means, cycled over instances.
    pub mus: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarpetCampaign {
    pub instances: usize,
    pub max_n: usize,
    pub law: InitialLaw,
}

// ---------------------------------------------------------------- critical-scan

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalConfig {
    pub run: RunSection,
    #[serde(default)]
    pub classifier: Option<ClassifierThresholds>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub evidence: Option<EvidenceSection>,
    #[serde(default)]
    pub criticality: Option<CriticalitySection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub mu_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub mu_range: Option<MuRange>,
    pub ladder: Vec<usize>,
    pub seeds_per_point: usize,
    /// Accepted distance between the transition point and `lambda / (1 + lambda)`.
    pub transition_tolerance: f64,
}

impl ScanSection {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match (&self.mu_grid, &self.mu_range) {
            (Some(g), None) => Ok(g.clone()),
            (None, Some(r)) => {
                if r.step.is_nan() || r.step <= 0.0 || r.stop < r.start {
                    return Err(CliError::Config(
                        "mu_range needs step > 0 and stop >= start".into(),
                    ));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                Ok((0..=n)
                    .map(|i| ((r.start + i as f64 * r.step) * 1e9).round() / 1e9)
                    .collect())
            }
            _ => Err(CliError::Config(
                "give exactly one of mu_grid and mu_range".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceSection {
    pub lambdas: Vec<f64>,
    /// Evidence is collected at `mu_c - offset` and `mu_c + offset`.
    pub offset: f64,
    pub seeds: usize,
    pub ladder: Vec<usize>,
    /// Required fraction of runs with `N_L >= (mu - mu_c) L / 2` above criticality.
    pub transient_min_fraction: f64,
    /// Medians below criticality must satisfy `max <= factor * min + slack`.
    pub bounded_factor: f64,
    pub bounded_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalitySection {
    pub lambda: f64,
    pub ladder: Vec<usize>,
    pub seeds: usize,
    pub slope_min: f64,
    pub slope_max: f64,
}

// ---------------------------------------------------------------- flow-scaling

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub run: RunSection,
    #[serde(default)]
    pub flow: Option<FlowSection>,
    #[serde(default)]
    pub reference: Option<ReferenceSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub p: f64,
    pub law: InitialLaw,
    pub t_list: Vec<f64>,
    pub ladder: Vec<u32>,
    pub runs: usize,
    pub ks_threshold: f64,
    pub mean_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub moment_samples: usize,
    /// Moments must agree within this many standard errors.
    pub moment_sigmas: f64,
    pub scale_samples: usize,
    pub scale_factor: f64,
    pub scale_ks_threshold: f64,
}

// ---------------------------------------------------------------- fixation-probe

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixationConfig {
    pub run: RunSection,
    #[serde(default)]
    pub probe: Option<ProbeSection>,
    #[serde(default)]
    pub mass_transport: Option<MassTransportSection>,
    #[serde(default)]
    pub growth: Option<GrowthSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub mu: f64,
    #[serde(default)]
    pub max_still_active: Option<f64>,
    #[serde(default)]
    pub min_still_active: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub model: ModelSpec,
    pub dim: usize,
    pub mus: Vec<f64>,
    pub window_radius: u64,
    pub probe_radius: u64,
    #[serde(deserialize_with = "de_time", serialize_with = "ser_time")]
    pub horizon: f64,
    pub seeds: usize,
    #[serde(default = "default_first_time")]
    pub first_time: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_event_budget")]
    pub event_budget: u64,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassTransportSection {
    pub model: ModelSpec,
    pub mu: f64,
    pub window_sites: u64,
    pub seeds: usize,
    pub tolerance: f64,
    pub min_pass_fraction: f64,
    #[serde(default = "default_event_budget")]
    pub event_budget: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    pub model: ModelSpec,
    pub dim: usize,
    pub law: InitialLaw,
    pub radii: Vec<u64>,
    pub seeds: usize,
    pub budget_per_radius: u64,
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub run: RunSection,
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub model: ModelSpec,
    pub law: InitialLaw,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    #[serde(deserialize_with = "de_time", serialize_with = "ser_time")]
    pub horizon: f64,
    #[serde(default)]
    pub probe_lo: Option<Vec<i64>>,
    #[serde(default)]
    pub probe_hi: Option<Vec<i64>>,
    #[serde(default = "default_first_time")]
    pub first_time: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_event_budget")]
    pub event_budget: u64,
}

impl SimulateSection {
    pub fn window(&self) -> Result<LatticeBox, CliError> {
        Ok(LatticeBox::new(self.lo.clone(), self.hi.clone())?)
    }

    pub fn probe_box(&self) -> Result<Option<LatticeBox>, CliError> {
        match (&self.probe_lo, &self.probe_hi) {
            (Some(lo), Some(hi)) => Ok(Some(LatticeBox::new(lo.clone(), hi.clone())?)),
            (None, None) => Ok(None),
            _ => Err(CliError::Config("give both probe_lo and probe_hi".into())),
        }
    }
}

fn default_first_time() -> f64 {
    0.1
}

fn default_ratio() -> f64 {
    1.3
}

fn default_event_budget() -> u64 {
    2_000_000_000
}

/// Parsed config together with the raw bytes it came from.
pub struct Loaded<T> {
    pub config: T,
    pub bytes: Vec<u8>,
    pub path: PathBuf,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config =
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Loaded {
        config,
        bytes,
        path: path.to_path_buf(),
    })
}
