//! Denoising settings as given on the command line and in config files.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use betashrink::baselines::ThresholdScope;
use betashrink::elicitation::{ElicitationConfig, ShapePolicy};
use betashrink::pipeline::{DenoiseConfig, Padding};
use betashrink::Method;

pub const DIAGNOSTICS_SCHEMA_VERSION: u32 = 1;
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// `auto` or a fixed noise sd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl SigmaSpec {
    pub fn value(self) -> Option<f64> {
        match self {
            SigmaSpec::Value(v) => Some(v),
            SigmaSpec::Auto(_) => None,
        }
    }
}

impl FromStr for SigmaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SigmaSpec::Auto(AutoTag::Auto));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaSpec::Value(v)),
            _ => Err(format!("sigma must be 'auto' or a positive number, got '{s}'")),
        }
    }
}

impl fmt::Display for SigmaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaSpec::Value(v) => write!(f, "{v}"),
            SigmaSpec::Auto(_) => f.write_str("auto"),
        }
    }
}

/// `auto` (skewness-guided) or fixed `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shapes {
    Fixed([f64; 2]),
    Auto(AutoTag),
}

/// Fully resolved settings, echoed into the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveDenoise {
    pub wavelet: String,
    pub method: Method,
    pub shapes: Shapes,
    pub gamma: f64,
    pub j0: Option<usize>,
    pub sigma: SigmaSpec,
    pub pad: Padding,
    pub fdr_q: f64,
    pub quadrature_order: usize,
}

impl EffectiveDenoise {
    pub fn to_config(&self) -> DenoiseConfig {
        let shape_policy = match self.shapes {
            Shapes::Fixed([a, b]) => ShapePolicy::Fixed { a, b },
            Shapes::Auto(_) => ShapePolicy::default(),
        };
        DenoiseConfig {
            wavelet: self.wavelet.clone(),
            method: self.method,
            elicitation: ElicitationConfig {
                gamma: self.gamma,
                j0: self.j0,
                shape_policy,
                sigma: self.sigma.value(),
            },
            fdr_q: self.fdr_q,
            scope: ThresholdScope::Levelwise,
            quadrature_order: self.quadrature_order,
        }
    }
}

/// Config file for `denoise`; every field present replaces the flag value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseFile {
    pub schema_version: Option<u32>,
    pub wavelet: Option<String>,
    pub method: Option<Method>,
    pub shapes: Option<Shapes>,
    pub gamma: Option<f64>,
    pub j0: Option<usize>,
    pub sigma: Option<SigmaSpec>,
    pub pad: Option<Padding>,
    pub fdr_q: Option<f64>,
    pub quadrature_order: Option<usize>,
}

impl DenoiseFile {
    pub fn apply(self, eff: &mut EffectiveDenoise) -> Result<()> {
        if let Some(v) = self.schema_version {
            if v != CONFIG_SCHEMA_VERSION {
                bail!("config schema_version {v} is not supported (expected {CONFIG_SCHEMA_VERSION})");
            }
        }
        if let Some(v) = self.wavelet {
            eff.wavelet = v;
        }
        if let Some(v) = self.method {
            eff.method = v;
        }
        if let Some(v) = self.shapes {
            eff.shapes = v;
        }
        if let Some(v) = self.gamma {
            eff.gamma = v;
        }
        if let Some(v) = self.j0 {
            eff.j0 = Some(v);
        }
        if let Some(v) = self.sigma {
            eff.sigma = v;
        }
        if let Some(v) = self.pad {
            eff.pad = v;
        }
        if let Some(v) = self.fdr_q {
            eff.fdr_q = v;
        }
        if let Some(v) = self.quadrature_order {
            eff.quadrature_order = v;
        }
        Ok(())
    }
}
