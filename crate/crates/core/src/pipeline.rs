//! Transform, estimate, invert: the denoising pipeline shared by the
//! simulation harness and the command-line front end.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{ThresholdPolicy, ThresholdRule, ThresholdScope, DEFAULT_FDR_Q};
use crate::dwt::{dyadic_levels, forward, inverse, CoefficientPyramid, WaveletFilter};
use crate::elicitation::{elicit, estimate_sigma, ElicitationConfig, LevelHyper};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::shrinkage::{shrink_pyramid, ShrinkageRule, DEFAULT_QUADRATURE_ORDER};

/// Coefficients below `SPARSITY_TOLERANCE · σ̂` in magnitude count as zeroed.
pub const SPARSITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Beta,
    Univ,
    Sure,
    Fdr,
    /// No shrinkage; useful as a reference.
    Identity,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Beta, Method::Univ, Method::Sure, Method::Fdr, Method::Identity];

    pub fn name(self) -> &'static str {
        match self {
            Method::Beta => "beta",
            Method::Univ => "univ",
            Method::Sure => "sure",
            Method::Fdr => "fdr",
            Method::Identity => "identity",
        }
    }

    fn threshold_policy(self) -> Option<ThresholdPolicy> {
        match self {
            Method::Univ => Some(ThresholdPolicy::Universal),
            Method::Sure => Some(ThresholdPolicy::Sure),
            Method::Fdr => Some(ThresholdPolicy::Fdr),
            Method::Beta | Method::Identity => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown method '{s}' (expected beta, univ, sure, fdr or identity)")))
    }
}

fn default_wavelet() -> String {
    "daub8".into()
}

fn default_fdr_q() -> f64 {
    DEFAULT_FDR_Q
}

fn default_order() -> usize {
    DEFAULT_QUADRATURE_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseConfig {
    #[serde(default = "default_wavelet")]
    pub wavelet: String,
    pub method: Method,
    #[serde(default)]
    pub elicitation: ElicitationConfig,
    #[serde(default = "default_fdr_q")]
    pub fdr_q: f64,
    #[serde(default)]
    pub scope: ThresholdScope,
    #[serde(default = "default_order")]
    pub quadrature_order: usize,
}

impl DenoiseConfig {
    pub fn new(method: Method) -> Self {
        Self {
            wavelet: default_wavelet(),
            method,
            elicitation: ElicitationConfig::default(),
            fdr_q: DEFAULT_FDR_Q,
            scope: ThresholdScope::default(),
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
        }
    }

    pub fn filter(&self) -> Result<WaveletFilter> {
        WaveletFilter::from_name(&self.wavelet)
    }

    pub fn validate(&self) -> Result<()> {
        self.filter()?;
        self.elicitation.validate()?;
        if !(self.fdr_q > 0.0 && self.fdr_q < 1.0) {
            return Err(Error::param(format!("fdr_q must lie in (0, 1), got {}", self.fdr_q)));
        }
        Ok(())
    }
}

/// What the pipeline decided, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: Method,
    pub n: usize,
    pub j0: usize,
    pub sigma: f64,
    pub sigma_estimated: bool,
    /// Sample skewness of the detail coefficients.
    pub skewness: f64,
    /// Beta shapes, when the beta rule ran.
    pub shapes: Option<(f64, f64)>,
    /// Per-level `(α, m)`, when the beta rule ran.
    pub levels: Vec<LevelHyper>,
    /// Per-level soft thresholds, for the threshold methods.
    pub thresholds: BTreeMap<usize, f64>,
    /// Fraction of detail coefficients shrunk below `1e−6 · σ̂`.
    pub sparsity: f64,
}

/// Shrinks the detail levels of `pyramid` with the configured method.
pub fn denoise_pyramid(
    pyramid: &CoefficientPyramid,
    config: &DenoiseConfig,
    exec: Execution,
) -> Result<(CoefficientPyramid, Diagnostics)> {
    config.validate()?;
    let details = pyramid.detail_coefficients();
    let mut diag = Diagnostics {
        method: config.method,
        n: pyramid.n(),
        j0: pyramid.j0(),
        sigma: f64::NAN,
        sigma_estimated: config.elicitation.sigma.is_none(),
        skewness: crate::elicitation::sample_skewness(&details),
        shapes: None,
        levels: Vec::new(),
        thresholds: BTreeMap::new(),
        sparsity: 0.0,
    };
    let rules: BTreeMap<usize, ShrinkageRule> = match config.method {
        Method::Beta => {
            let e = elicit(pyramid, &config.elicitation)?;
            diag.sigma = e.sigma;
            diag.shapes = Some((e.a, e.b));
            let rules = e.rules(config.quadrature_order)?;
            diag.levels = e.levels;
            rules
        }
        Method::Identity => {
            diag.sigma = match config.elicitation.sigma {
                Some(s) => s,
                None => estimate_sigma(pyramid)?,
            };
            pyramid.detail_levels().map(|j| (j, ShrinkageRule::Identity)).collect()
        }
        method => {
            let sigma = match config.elicitation.sigma {
                Some(s) => s,
                None => estimate_sigma(pyramid)?,
            };
            diag.sigma = sigma;
            if !(sigma > 0.0) {
                return Err(Error::Degenerate(
                    "noise level estimate is zero (finest level identically zero); supply sigma explicitly".into(),
                ));
            }
            let policy = method.threshold_policy().expect("threshold method");
            let rule = ThresholdRule::new(policy, sigma)?
                .with_q(config.fdr_q)?
                .with_scope(config.scope);
            diag.thresholds = rule.thresholds(pyramid);
            rule.rules(pyramid)
        }
    };
    let shrunk = shrink_pyramid(pyramid, &rules, exec)?;
    let cutoff = SPARSITY_TOLERANCE * diag.sigma;
    let total = shrunk.detail_count();
    if total > 0 {
        let zeroed = shrunk.iter_details().flat_map(|(_, d)| d).filter(|x| x.abs() < cutoff).count();
        diag.sparsity = zeroed as f64 / total as f64;
    }
    Ok((shrunk, diag))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub estimate: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Forward transform, shrink, inverse transform. `signal.len()` must be a
/// power of two.
pub fn denoise_signal(signal: &[f64], config: &DenoiseConfig, exec: Execution) -> Result<Denoised> {
    config.validate()?;
    let levels = dyadic_levels(signal.len())?;
    let j0 = config.elicitation.resolved_j0(levels);
    let filter = config.filter()?;
    let pyramid = forward(signal, &filter, j0)?;
    let (shrunk, diagnostics) = denoise_pyramid(&pyramid, config, exec)?;
    Ok(Denoised {
        estimate: inverse(&shrunk, &filter)?,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Keep the largest power-of-two prefix.
    #[default]
    Truncate,
    /// Extend to the next power of two by mirroring the tail.
    Reflect,
}

/// Brings `data` to a power-of-two length. Returns the adjusted series.
pub fn make_dyadic(data: &[f64], padding: Padding) -> Result<Vec<f64>> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Length(n));
    }
    if n.is_power_of_two() {
        return Ok(data.to_vec());
    }
    match padding {
        Padding::Truncate => {
            let keep = 1usize << (usize::BITS - 1 - n.leading_zeros());
            Ok(data[..keep].to_vec())
        }
        Padding::Reflect => {
            let target = n.next_power_of_two();
            let mut out = data.to_vec();
            // symmetric extension: x[n−1], x[n−2], ... (bouncing if needed)
            let period = 2 * (n - 1);
            for k in n..target {
                let mut idx = k % period;
                if idx >= n {
                    idx = period - idx;
                }
                out.push(data[idx]);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{add_noise, TestFunction};

    fn mse(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("cv".parse::<Method>().is_err());
    }

    #[test]
    fn identity_reconstructs_input() {
        let clean = TestFunction::Doppler.sample(256).unwrap();
        let ns = add_noise(&clean, 4.0, 5).unwrap();
        let out = denoise_signal(&ns.noisy, &DenoiseConfig::new(Method::Identity), Execution::Sequential).unwrap();
        assert!(mse(&out.estimate, &ns.noisy) < 1e-24);
    }

    #[test]
    fn every_method_improves_heavisine() {
        let clean = TestFunction::Heavisine.sample(512).unwrap();
        let ns = add_noise(&clean, 3.0, 9).unwrap();
        let raw = mse(&ns.noisy, &clean);
        for m in [Method::Beta, Method::Univ, Method::Sure, Method::Fdr] {
            let out = denoise_signal(&ns.noisy, &DenoiseConfig::new(m), Execution::default()).unwrap();
            assert!(mse(&out.estimate, &clean) < raw, "{m}");
            assert!(out.diagnostics.sigma > 0.0);
        }
    }

    #[test]
    fn beta_diagnostics_are_populated() {
        let clean = TestFunction::Bumps.sample(512).unwrap();
        let ns = add_noise(&clean, 6.0, 1).unwrap();
        let out = denoise_signal(&ns.noisy, &DenoiseConfig::new(Method::Beta), Execution::default()).unwrap();
        let d = &out.diagnostics;
        assert_eq!(d.j0, 4);
        assert_eq!(d.levels.len(), 5);
        assert_eq!(d.levels[0].alpha, 0.0);
        assert!(d.shapes.is_some());
        assert!((0.0..=1.0).contains(&d.sparsity));
    }

    #[test]
    fn zero_sigma_is_reported() {
        let mut flat = vec![0.0; 64];
        flat[3] = 2.0;
        let p = CoefficientPyramid::from_flat(&flat, 1).unwrap();
        for m in [Method::Univ, Method::Beta] {
            let r = denoise_pyramid(&p, &DenoiseConfig::new(m), Execution::Sequential);
            assert!(matches!(r, Err(Error::Degenerate(_))), "{m}");
        }
    }

    #[test]
    fn dyadic_adjustment() {
        let data: Vec<f64> = (0..726).map(f64::from).collect();
        assert_eq!(make_dyadic(&data, Padding::Truncate).unwrap().len(), 512);
        let padded = make_dyadic(&data, Padding::Reflect).unwrap();
        assert_eq!(padded.len(), 1024);
        assert_eq!(padded[726], 724.0);
        assert_eq!(padded[727], 723.0);
        let short: Vec<f64> = (0..5).map(f64::from).collect();
        assert_eq!(make_dyadic(&short, Padding::Reflect).unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0]);
        assert!(make_dyadic(&[1.0], Padding::Truncate).is_err());
    }
}
