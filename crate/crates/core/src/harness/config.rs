use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loopmat::Coweight;
use crate::nilring::RingDescriptor;
use crate::slices::working_precision;

/// Everything that determines a batch run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub n: Option<usize>,
    pub lam: Option<Coweight>,
    pub mu: Option<Coweight>,
    pub ring: Option<RingDescriptor>,
    pub tower: Option<u32>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub window: Option<i64>,
    pub out: Option<String>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fields set in `other` win.
    pub fn overlay(&self, other: &ExperimentConfig) -> ExperimentConfig {
        macro_rules! pick {
            ($f:ident) => {
                other.$f.clone().or_else(|| self.$f.clone())
            };
        }
        ExperimentConfig {
            command: pick!(command),
            n: pick!(n),
            lam: pick!(lam),
            mu: pick!(mu),
            ring: pick!(ring),
            tower: pick!(tower),
            trials: pick!(trials),
            seed: pick!(seed),
            window: pick!(window),
            out: pick!(out),
            jobs: pick!(jobs),
        }
    }

    pub fn lam(&self) -> Result<Coweight> {
        let lam = self
            .lam
            .clone()
            .ok_or_else(|| Error::Precondition("lambda is required".into()))?;
        if let Some(n) = self.n {
            if lam.n() != n {
                return Err(Error::DimensionMismatch(format!("lambda {lam} has length != n = {n}")));
            }
        }
        Ok(lam)
    }

    /// `μ`, defaulting to `λ`.
    pub fn mu(&self) -> Result<Coweight> {
        let lam = self.lam()?;
        let mu = self.mu.clone().unwrap_or_else(|| lam.clone());
        if mu.n() != lam.n() {
            return Err(Error::DimensionMismatch(format!(
                "mu {mu} and lambda {lam} differ in length"
            )));
        }
        Ok(mu)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(10)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Working window: explicit, or derived from `λ`, `μ`.
    pub fn window(&self) -> Result<i64> {
        match self.window {
            Some(w) if w < 1 => Err(Error::Precondition(format!("window {w} must be positive"))),
            Some(w) => Ok(w),
            None => Ok(working_precision(&self.lam()?, &self.mu()?, 0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_overlay() {
        let base = ExperimentConfig::from_json(
            r#"{"command":"lift","lam":[1,0],"mu":[0,1],"ring":{"kind":"eps_tower","m":3},"trials":5,"seed":7}"#,
        )
        .unwrap();
        assert_eq!(base.ring, Some(RingDescriptor::EpsTower(3)));
        let flags = ExperimentConfig {
            trials: Some(50),
            ..Default::default()
        };
        let merged = base.overlay(&flags);
        assert_eq!(merged.trials(), 50);
        assert_eq!(merged.seed(), 7);
        // n·(max λ − min μ) + 8
        assert_eq!(merged.window().unwrap(), 10);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&merged).unwrap()).unwrap();
        assert_eq!(back, merged);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_lengths() {
        assert!(ExperimentConfig::from_json(r#"{"lamda":[1]}"#).is_err());
        let c = ExperimentConfig {
            n: Some(3),
            lam: Some(Coweight(vec![1, 0])),
            ..Default::default()
        };
        assert!(c.lam().is_err());
    }
}
