//! JSON run configuration.
//!
//! ```json
//! { "schema": 1, "N": 15, "R": 4, "alpha": 0.4, "L": 1000, "c": 8,
//!   "basis": "fourier", "seed": 7 }
//! ```
//!
//! Unknown keys are rejected. `"coherence": "unsquared"` switches the multi-branch
//! bound from `|<.,.>|^2 <= alpha RN` to `|<.,.>| <= alpha RN`. Optional sections
//! configure the `sweep` and `gain` subcommands.

use std::path::Path;

use mbseq::{BasisKind, CoherenceConvention, CoherenceTolerance, DesignConfig, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Desk-scale defaults. Full-scale runs use 100 trials and 10^5 projections.
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_CANDIDATES: usize = 2000;
/// Absolute interferer-energy bound for the single-sequence baselines.
pub const DEFAULT_SINGLE_ALPHA: f64 = 0.1;

/// Interferer centre: a fixed 1-based index, or drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Fixed(usize),
    Named(CenterKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterKeyword {
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    R,
    #[serde(rename = "alpha")]
    Alpha,
    L,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParameter::R => "R",
            SweepParameter::Alpha => "alpha",
            SweepParameter::L => "L",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Prbs,
    Hadamard,
    SingleFourier,
    SingleSlepian,
    MultiFourier,
    MultiSlepian,
}

impl std::fmt::Display for Baseline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("unit enum serializes");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSection {
    pub baseline: Baseline,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Number of uniformly spaced offsets on `[0, 1]`.
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<u32>,
    #[serde(rename = "N")]
    pub base_len: usize,
    #[serde(rename = "R")]
    pub oversampling: usize,
    pub alpha: f64,
    #[serde(rename = "L", default)]
    pub candidates: Option<usize>,
    #[serde(default)]
    pub c: Option<CenterSpec>,
    #[serde(default)]
    pub basis: Option<BasisKind>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub single_alpha: Option<f64>,
    /// Whether `alpha * RN` bounds the coherence magnitude or its square.
    #[serde(default)]
    pub coherence: Option<CoherenceConvention>,
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub gain: Option<GainSection>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(v) = self.schema {
            if v != SCHEMA_VERSION {
                return Err(config_err(format!(
                    "unsupported schema version {v}, expected {SCHEMA_VERSION}"
                )));
            }
        }
        if let Some(CenterSpec::Fixed(c)) = self.c {
            if c < 2 || c + 1 > self.base_len {
                return Err(config_err(format!(
                    "c = {c} must satisfy 2 <= c <= N - 1 = {}",
                    self.base_len.saturating_sub(1)
                )));
            }
        }
        if let Some(a) = self.single_alpha {
            if !(a > 0.0) {
                return Err(config_err("single_alpha must be positive"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(config_err("sweep.values must not be empty"));
            }
            if s.values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(config_err("sweep.values must be strictly ascending"));
            }
            if s.trials == Some(0) {
                return Err(config_err("sweep.trials must be positive"));
            }
        }
        if let Some(g) = &self.gain {
            if g.trials == Some(0) || g.points == Some(0) {
                return Err(config_err("gain.trials and gain.points must be positive"));
            }
        }
        self.design_config(self.fixed_center())
            .validate()
            .map_err(|e| config_err(e.to_string()))
    }

    pub fn fixed_center(&self) -> Option<usize> {
        match self.c {
            Some(CenterSpec::Fixed(c)) => Some(c),
            _ => None,
        }
    }

    pub fn candidates(&self) -> usize {
        self.candidates.unwrap_or(DEFAULT_CANDIDATES)
    }

    pub fn basis(&self) -> BasisKind {
        self.basis.unwrap_or(BasisKind::Fourier)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn single_alpha(&self) -> f64 {
        self.single_alpha.unwrap_or(DEFAULT_SINGLE_ALPHA)
    }

    pub fn design_config(&self, center: Option<usize>) -> DesignConfig {
        DesignConfig {
            base_len: self.base_len,
            oversampling: self.oversampling,
            alpha: CoherenceTolerance(self.alpha),
            candidates: self.candidates(),
            center,
            basis: self.basis(),
            seed: self.seed(),
            solver: self.solver.unwrap_or_default(),
            coherence: self.coherence.unwrap_or_default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let cfg = RunConfig::from_json(
            r#"{"N":15,"R":4,"alpha":0.4,"L":1000,"c":8,"basis":"fourier","seed":7}"#,
        )
        .unwrap();
        assert_eq!(cfg.fixed_center(), Some(8));
        assert_eq!(cfg.candidates(), 1000);
        let dc = cfg.design_config(Some(8));
        assert_eq!(dc.seed, 7);
    }

    #[test]
    fn minimal_and_random_centre() {
        let cfg = RunConfig::from_json(r#"{"N":2,"R":1,"alpha":0.9,"L":100}"#).unwrap();
        assert_eq!(cfg.c, None);
        assert_eq!(
            cfg.design_config(None).coherence,
            CoherenceConvention::Squared
        );
        let cfg =
            RunConfig::from_json(r#"{"N":4,"R":1,"alpha":0.9,"coherence":"unsquared"}"#).unwrap();
        assert_eq!(
            cfg.design_config(None).coherence,
            CoherenceConvention::Unsquared
        );
        let cfg = RunConfig::from_json(r#"{"N":15,"R":2,"alpha":0.4,"c":"random"}"#).unwrap();
        assert_eq!(cfg.c, Some(CenterSpec::Named(CenterKeyword::Random)));
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            r#"{"N":15,"R":4,"alpha":0.4,"typo":1}"#,
            r#"{"N":15,"R":4,"alpha":0.4,"schema":2}"#,
            r#"{"N":15,"R":4,"alpha":0.4,"c":1}"#,
            r#"{"N":15,"R":4,"alpha":-1}"#,
            r#"{"N":15,"R":4,"alpha":0.4,"sweep":{"parameter":"R","values":[2,1]}}"#,
            r#"{"N":15,"R":4,"alpha":0.4,"sweep":{"parameter":"offset","values":[0]}}"#,
            r#"{"N":15,"R":4"#,
            r#"{"N":15,"R":4,"alpha":0.4,"coherence":"cubed"}"#,
        ] {
            assert!(
                matches!(RunConfig::from_json(bad), Err(CliError::Config(_))),
                "{bad}"
            );
        }
    }
}
