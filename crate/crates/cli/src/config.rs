//! JSON run configuration for `simulate`.

use std::path::Path;

use dglab_core::models::{ModelKind, ModelSpec, Preset, RunControl};
use dglab_core::spectral::Period;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Smallest grid the simulator accepts.
pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Defaults to the period of the initial preset.
    #[serde(default)]
    pub period: Option<Period>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_csv")]
    pub diagnostics: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    /// Physical-time reconstruction, rescaled runs only.
    #[serde(default = "default_rescaling")]
    pub rescaling: String,
    /// Time-series plot; omitted when `null`.
    #[serde(default = "default_svg")]
    pub svg: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            diagnostics: default_csv(),
            summary: default_summary(),
            rescaling: default_rescaling(),
            svg: default_svg(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default = "default_n")]
    pub n: usize,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub initial: Preset,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_stride")]
    pub sample_every: f64,
    /// Evaluate the identity residuals at every sample (two extra RK4 steps each).
    #[serde(default = "yes")]
    pub residuals: bool,
    /// Also evaluate `B(2)` by the symmetrized double integral.
    #[serde(default)]
    pub dual_path: bool,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_n() -> usize {
    1024
}
fn default_cfl() -> f64 {
    0.5
}
fn default_stride() -> f64 {
    0.1
}
fn default_betas() -> Vec<f64> {
    vec![1.9, 1.95, 2.0]
}
fn default_csv() -> String {
    "diagnostics.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_rescaling() -> String {
    "rescaling.csv".into()
}
fn default_svg() -> Option<String> {
    Some("timeseries.svg".into())
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(CliError::ConfigParse)?;
        config.validate()?;
        Ok(config)
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            kind: self.model.kind,
            a: self.model.a,
            alpha: self.model.alpha,
            period: self.model.period.unwrap_or_else(|| self.initial.period()),
        }
    }

    pub fn control(&self) -> RunControl {
        RunControl {
            t_end: self.t_end,
            cfl: self.cfl,
            sample_every: self.sample_every,
            ..RunControl::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n < MIN_GRID || !self.n.is_multiple_of(2) {
            return bad(format!("n = {} must be even and at least {MIN_GRID}", self.n));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if !(self.sample_every.is_finite() && self.sample_every > 0.0) {
            return bad(format!("sample_every = {} must be positive", self.sample_every));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 1.0 && **b < 3.0)) {
            return bad(format!("beta = {b} outside (1, 3)"));
        }
        if self.model.kind == ModelKind::ClmExact {
            return bad("clm_exact has a closed form; simulate gclm with a = 0 instead".into());
        }
        let spec = self.spec();
        if spec.period != self.initial.period() {
            return bad(format!(
                "model period {:?} does not match the {:?} period of the initial data",
                spec.period,
                self.initial.period()
            ));
        }
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match self.initial {
            Preset::ProfileAlpha { alpha } | Preset::BlowupCandidate { alpha }
                if !(alpha > 0.0 && alpha <= 1.0) =>
            {
                bad(format!("profile exponent {alpha} outside (0, 1]"))
            }
            Preset::NegSin2x { amplitude } if !amplitude.is_finite() => {
                bad("amplitude must be finite".into())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLM: &str = r#"{"model": {"kind": "gclm", "a": 0.0}, "n": 512, "t_end": 3.0,
        "initial": {"name": "neg_sin2x", "amplitude": 1.0}}"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(CLM).unwrap();
        assert_eq!(c.cfl, 0.5);
        assert_eq!(c.betas, vec![1.9, 1.95, 2.0]);
        assert_eq!(c.spec().period, Period::Pi);
        assert_eq!(c.outputs.svg.as_deref(), Some("timeseries.svg"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = CLM.replace("\"n\": 512", "\"n\": 512, \"grid\": 3");
        assert!(matches!(
            RunConfig::from_json(&text),
            Err(CliError::ConfigParse(_))
        ));
        let nested = CLM.replace("\"a\": 0.0", "\"a\": 0.0, \"nu\": 1");
        assert!(RunConfig::from_json(&nested).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("\"n\": 512", "\"n\": 32"),
            ("\"t_end\": 3.0", "\"t_end\": -1"),
            ("\"a\": 0.0", "\"a\": 0.0}, \"cfl\": 2.0, \"x\": {"),
        ] {
            assert!(RunConfig::from_json(&CLM.replace(from, to)).is_err(), "{to}");
        }
        let wrong_period = CLM.replace("\"a\": 0.0", "\"a\": 0.0, \"period\": \"two_pi\"");
        assert!(matches!(
            RunConfig::from_json(&wrong_period),
            Err(CliError::Config(_))
        ));
    }
}
