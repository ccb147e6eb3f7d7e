//! Model parameters: which particle system, sleep rate and jump kernel.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ArwError, Result};
use crate::lattice::JumpKernel;

/// Sleep rate `lambda` in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SleepRate {
    Finite(f64),
    Infinite,
}

impl SleepRate {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(ArwError::InvalidParameter(format!(
                "sleep rate must be > 0, got {lambda}"
            )));
        }
        Ok(if lambda.is_infinite() {
            SleepRate::Infinite
        } else {
            SleepRate::Finite(lambda)
        })
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SleepRate::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            SleepRate::Finite(l) => l,
            SleepRate::Infinite => f64::INFINITY,
        }
    }

    /// Probability `lambda / (1 + lambda)` that a tape instruction is a sleep;
    /// 1 for `lambda = inf`.
    pub fn sleep_fraction(self) -> f64 {
        match self {
            SleepRate::Finite(l) => l / (1.0 + l),
            SleepRate::Infinite => 1.0,
        }
    }
}

impl std::fmt::Display for SleepRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SleepRate::Finite(l) => write!(f, "{l}"),
            SleepRate::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for SleepRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SleepRate::Finite(l) => s.serialize_f64(*l),
            SleepRate::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SleepRate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(x) => x,
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => f64::INFINITY,
            Raw::Text(t) => return Err(serde::de::Error::custom(format!("bad sleep rate {t:?}"))),
        };
        SleepRate::new(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Arw,
    ParticleHole,
    Annihilating,
}

/// Local update rules used by topplings and the event engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rules {
    ArwFinite { lambda: f64 },
    ArwInfinite,
    ParticleHole,
}

impl Rules {
    /// Whether holes exist, i.e. a lone particle is immediately frozen.
    pub fn has_holes(self) -> bool {
        !matches!(self, Rules::ArwFinite { .. })
    }

    pub fn sleep_fraction(self) -> f64 {
        match self {
            Rules::ArwFinite { lambda } => lambda / (1.0 + lambda),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub model: ModelKind,
    /// Only meaningful for ARW.
    pub sleep_rate: SleepRate,
    /// Jump rate of B-particles in the annihilating system; must be 0.
    pub d_b: f64,
    pub kernel: JumpKernel,
}

impl ModelParams {
    pub fn arw(sleep_rate: SleepRate, kernel: JumpKernel) -> Self {
        Self {
            model: ModelKind::Arw,
            sleep_rate,
            d_b: 0.0,
            kernel,
        }
    }

    pub fn particle_hole(kernel: JumpKernel) -> Self {
        Self {
            model: ModelKind::ParticleHole,
            sleep_rate: SleepRate::Infinite,
            d_b: 0.0,
            kernel,
        }
    }

    pub fn annihilating(d_b: f64, kernel: JumpKernel) -> Result<Self> {
        if d_b != 0.0 {
            return Err(ArwError::InvalidParameter(format!(
                "annihilating walks are supported only with D_B = 0, got {d_b}"
            )));
        }
        Ok(Self {
            model: ModelKind::Annihilating,
            sleep_rate: SleepRate::Infinite,
            d_b,
            kernel,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.model == ModelKind::Annihilating && self.d_b != 0.0 {
            return Err(ArwError::InvalidParameter("D_B must be 0".into()));
        }
        if let SleepRate::Finite(l) = self.sleep_rate {
            if l.is_nan() || l <= 0.0 {
                return Err(ArwError::InvalidParameter(format!("sleep rate {l}")));
            }
        }
        Ok(())
    }

    pub fn rules(&self) -> Rules {
        match (self.model, self.sleep_rate) {
            (ModelKind::Arw, SleepRate::Finite(lambda)) => Rules::ArwFinite { lambda },
            (ModelKind::Arw, SleepRate::Infinite) => Rules::ArwInfinite,
            _ => Rules::ParticleHole,
        }
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sleep_rate_validation() {
        assert!(SleepRate::new(0.0).is_err());
        assert!(SleepRate::new(-1.0).is_err());
        assert!(SleepRate::new(f64::NAN).is_err());
        assert!(SleepRate::new(f64::INFINITY).unwrap().is_infinite());
        assert_eq!(SleepRate::new(1.0).unwrap().sleep_fraction(), 0.5);
    }

    #[test]
    fn sleep_rate_serde() {
        let v: SleepRate = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(v, SleepRate::Infinite);
        let v: SleepRate = serde_json::from_str("3.0").unwrap();
        assert_eq!(v, SleepRate::Finite(3.0));
        assert!(serde_json::from_str::<SleepRate>("0.0").is_err());
        assert_eq!(
            serde_json::to_string(&SleepRate::Infinite).unwrap(),
            "\"inf\""
        );
    }

    #[test]
    fn rules_from_params() {
        let k = JumpKernel::symmetric(1).unwrap();
        assert_eq!(
            ModelParams::arw(SleepRate::Infinite, k.clone()).rules(),
            Rules::ArwInfinite
        );
        assert_eq!(
            ModelParams::particle_hole(k.clone()).rules(),
            Rules::ParticleHole
        );
        assert!(ModelParams::annihilating(0.5, k.clone()).is_err());
        assert_eq!(
            ModelParams::annihilating(0.0, k).unwrap().rules(),
            Rules::ParticleHole
        );
    }
}
