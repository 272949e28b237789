//! Soft thresholding with universal, SURE and FDR threshold policies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::dwt::CoefficientPyramid;
use crate::error::{Error, Result};
use crate::shrinkage::ShrinkageRule;

pub const DEFAULT_FDR_Q: f64 = 0.05;

/// `sign(d)·max(|d| − λ, 0)`.
pub fn soft(d: f64, lambda: f64) -> f64 {
    let shrunk = d.abs() - lambda;
    if shrunk > 0.0 {
        shrunk.copysign(d)
    } else {
        0.0
    }
}

/// `σ√(2 ln n)`.
pub fn universal_threshold(n: usize, sigma: f64) -> f64 {
    sigma * (2.0 * (n.max(1) as f64).ln()).sqrt()
}

/// Stein unbiased risk estimate of soft thresholding at `lambda`.
pub fn sure_risk(coeffs: &[f64], sigma: f64, lambda: f64) -> f64 {
    let s2 = sigma * sigma;
    let n = coeffs.len() as f64;
    let below = coeffs.iter().filter(|d| d.abs() <= lambda).count() as f64;
    let clipped: f64 = coeffs.iter().map(|d| (d * d).min(lambda * lambda)).sum();
    n * s2 - 2.0 * s2 * below + clipped
}

/// Minimiser of [`sure_risk`] over `{0} ∪ {|d_i|}`; ties go to the smallest λ.
pub fn sure_threshold(coeffs: &[f64], sigma: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let n = coeffs.len();
    let mut abs: Vec<f64> = coeffs.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);

    // λ = 0 candidate
    let zeros = abs.iter().take_while(|&&x| x == 0.0).count();
    let mut best_lambda = 0.0;
    let mut best = n as f64 * s2 - 2.0 * s2 * zeros as f64;

    // λ = abs[k]: #{|d| ≤ λ} = last index with that value + 1,
    // Σ min(d², λ²) = Σ_{i≤k} abs[i]² + (n − k − 1)·λ²
    let mut prefix = 0.0;
    let mut k = 0;
    while k < n {
        let lambda = abs[k];
        let mut last = k;
        prefix += lambda * lambda;
        while last + 1 < n && abs[last + 1] == lambda {
            last += 1;
            prefix += lambda * lambda;
        }
        let below = (last + 1) as f64;
        let risk = n as f64 * s2 - 2.0 * s2 * below + prefix + (n - last - 1) as f64 * lambda * lambda;
        if risk < best {
            best = risk;
            best_lambda = lambda;
        }
        k = last + 1;
    }
    best_lambda
}

/// Two-sided normal p-value of `|d|/σ`.
pub fn two_sided_p(d: f64, sigma: f64) -> f64 {
    erfc(d.abs() / (sigma * std::f64::consts::SQRT_2))
}

/// Benjamini–Hochberg step-up on two-sided p-values. Returns `|d|` of the
/// least significant rejected coefficient, or the universal threshold for
/// `n = coeffs.len()` when nothing is rejected.
pub fn fdr_threshold(coeffs: &[f64], sigma: f64, q: f64) -> f64 {
    let n = coeffs.len();
    if n == 0 {
        return 0.0;
    }
    // descending |d| ⇔ ascending p
    let mut abs: Vec<f64> = coeffs.iter().map(|d| d.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let mut cutoff = None;
    for (i, &x) in abs.iter().enumerate() {
        let k = i + 1;
        if two_sided_p(x, sigma) <= k as f64 / n as f64 * q {
            cutoff = Some(x);
        }
    }
    cutoff.unwrap_or_else(|| universal_threshold(n, sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdPolicy {
    Universal,
    Sure,
    Fdr,
}

impl ThresholdPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdPolicy::Universal => "univ",
            ThresholdPolicy::Sure => "sure",
            ThresholdPolicy::Fdr => "fdr",
        }
    }
}

/// Whether thresholds are chosen per detail level or once for all details.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdScope {
    #[default]
    Levelwise,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub policy: ThresholdPolicy,
    pub sigma: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub scope: ThresholdScope,
}

fn default_q() -> f64 {
    DEFAULT_FDR_Q
}

impl ThresholdRule {
    pub fn new(policy: ThresholdPolicy, sigma: f64) -> Result<Self> {
        let rule = Self {
            policy,
            sigma,
            q: DEFAULT_FDR_Q,
            scope: ThresholdScope::default(),
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        self.q = q;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scope(mut self, scope: ThresholdScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::param(format!("FDR level q must lie in (0, 1), got {}", self.q)));
        }
        Ok(())
    }

    /// Threshold for one block of coefficients. `total_details` feeds the
    /// universal rule, which always uses the full detail count.
    fn lambda_for(&self, coeffs: &[f64], total_details: usize) -> f64 {
        match self.policy {
            ThresholdPolicy::Universal => universal_threshold(total_details, self.sigma),
            ThresholdPolicy::Sure => sure_threshold(coeffs, self.sigma),
            ThresholdPolicy::Fdr => fdr_threshold(coeffs, self.sigma, self.q),
        }
    }

    /// Per-level thresholds `λ_j` for a pyramid.
    pub fn thresholds(&self, pyramid: &CoefficientPyramid) -> BTreeMap<usize, f64> {
        let total = pyramid.detail_count();
        match self.scope {
            ThresholdScope::Levelwise => pyramid
                .iter_details()
                .map(|(j, d)| (j, self.lambda_for(d, total)))
                .collect(),
            ThresholdScope::Global => {
                let lambda = self.lambda_for(&pyramid.detail_coefficients(), total);
                pyramid.detail_levels().map(|j| (j, lambda)).collect()
            }
        }
    }

    /// Per-level soft-threshold rules, ready for `shrink_pyramid`.
    pub fn rules(&self, pyramid: &CoefficientPyramid) -> BTreeMap<usize, ShrinkageRule> {
        self.thresholds(pyramid)
            .into_iter()
            .map(|(j, lambda)| (j, ShrinkageRule::Soft { lambda }))
            .collect()
    }
}
