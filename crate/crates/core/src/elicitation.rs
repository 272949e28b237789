//! Data-driven hyperparameters: noise level, per-level point-mass weight and
//! support half-width, and beta shapes guided by the coefficients' skewness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dwt::CoefficientPyramid;
use crate::error::{Error, Result};
use crate::prior::BetaMixturePrior;
use crate::shrinkage::{BetaShrinkageRule, ShrinkageRule};

/// Normal MAD consistency constant.
pub const MAD_CONSTANT: f64 = 0.6745;
pub const DEFAULT_GAMMA: f64 = 2.0;

/// Default primary level: keep at least 16 scaling coefficients' worth of
/// detail levels, i.e. `max(0, J − 5)`.
pub fn default_j0(levels: usize) -> usize {
    levels.saturating_sub(5)
}

/// Skewness-driven choice of `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSuggestion {
    /// Skewness above `+threshold` counts as right-skewed.
    pub threshold: f64,
    /// Shapes used for right skew (`a < b`).
    pub right: (f64, f64),
    /// Shapes used for left skew (`a > b`).
    pub left: (f64, f64),
    /// Shapes used when `|skew| ≤ threshold`.
    pub neutral: (f64, f64),
}

impl Default for ShapeSuggestion {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            right: (2.0, 3.0),
            left: (3.0, 2.0),
            neutral: (2.0, 2.01),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ShapePolicy {
    Fixed { a: f64, b: f64 },
    Skewness(ShapeSuggestion),
}

impl Default for ShapePolicy {
    fn default() -> Self {
        ShapePolicy::Skewness(ShapeSuggestion::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElicitationConfig {
    pub gamma: f64,
    /// Primary level; `None` means [`default_j0`].
    pub j0: Option<usize>,
    pub shape_policy: ShapePolicy,
    /// Known noise level; `None` means the MAD estimate.
    pub sigma: Option<f64>,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            j0: None,
            shape_policy: ShapePolicy::default(),
            sigma: None,
        }
    }
}

impl ElicitationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!("gamma must be positive, got {}", self.gamma)));
        }
        if let ShapePolicy::Fixed { a, b } = self.shape_policy {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::param(format!("shapes must be positive, got ({a}, {b})")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param(format!("sigma override must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn resolved_j0(&self, levels: usize) -> usize {
        self.j0.unwrap_or_else(|| default_j0(levels))
    }
}

/// Median of the finest-level `|d|` divided by 0.6745. Zero means the
/// finest level is identically zero (degenerate).
pub fn estimate_sigma(pyramid: &CoefficientPyramid) -> Result<f64> {
    let finest = pyramid.finest();
    if finest.len() < 2 {
        return Err(Error::Structure(format!(
            "finest detail level has {} coefficients; at least 2 are needed",
            finest.len()
        )));
    }
    let mut abs: Vec<f64> = finest.iter().map(|d| d.abs()).collect();
    Ok(median(&mut abs) / MAD_CONSTANT)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `α(j) = 1 − (j − J0 + 1)^(−γ)`.
pub fn alpha_for_level(j: usize, j0: usize, gamma: f64) -> Result<f64> {
    if j < j0 {
        return Err(Error::param(format!("level {j} lies below J0 = {j0}")));
    }
    Ok(1.0 - ((j - j0 + 1) as f64).powf(-gamma))
}

/// `m(j) = max_k |d_jk|`.
pub fn m_for_level(pyramid: &CoefficientPyramid, j: usize) -> Result<f64> {
    let level = pyramid
        .detail(j)
        .ok_or_else(|| Error::Structure(format!("pyramid has no detail level {j}")))?;
    Ok(level.iter().fold(0.0f64, |acc, d| acc.max(d.abs())))
}

/// Sample Pearson skewness `m3 / m2^{3/2}` (population moments). Zero for
/// constant input.
pub fn sample_skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m3) = xs.iter().fold((0.0, 0.0), |(s2, s3), x| {
        let c = x - mean;
        (s2 + c * c, s3 + c * c * c)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    if m2 <= 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

pub const MIN_SHAPE_COEFFICIENTS: usize = 8;

/// Shapes chosen from the skewness of all detail coefficients.
pub fn suggest_shapes(pyramid: &CoefficientPyramid, policy: &ShapeSuggestion) -> Result<(f64, f64)> {
    let details = pyramid.detail_coefficients();
    if details.len() < MIN_SHAPE_COEFFICIENTS {
        return Err(Error::Degenerate(format!(
            "only {} detail coefficients; set the beta shapes a, b explicitly",
            details.len()
        )));
    }
    Ok(shapes_for_skewness(sample_skewness(&details), policy))
}

pub fn shapes_for_skewness(skew: f64, policy: &ShapeSuggestion) -> (f64, f64) {
    if skew > policy.threshold {
        policy.right
    } else if skew < -policy.threshold {
        policy.left
    } else {
        policy.neutral
    }
}

/// Hyperparameters of one detail level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelHyper {
    pub level: usize,
    pub alpha: f64,
    pub m: f64,
    /// `m = 0`: the level is estimated as identically zero.
    pub degenerate: bool,
}

/// Full elicitation result for a pyramid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elicited {
    pub sigma: f64,
    pub sigma_estimated: bool,
    pub skewness: f64,
    pub a: f64,
    pub b: f64,
    pub levels: Vec<LevelHyper>,
}

impl Elicited {
    /// Per-level beta rules (`δ ≡ 0` on degenerate levels).
    pub fn rules(&self, quadrature_order: usize) -> Result<BTreeMap<usize, ShrinkageRule>> {
        if !(self.sigma > 0.0) {
            return Err(Error::Degenerate(
                "noise level estimate is zero (finest level identically zero); supply sigma explicitly".into(),
            ));
        }
        self.levels
            .iter()
            .map(|lh| {
                let rule = if lh.degenerate {
                    ShrinkageRule::Zero
                } else {
                    let prior = BetaMixturePrior::new(lh.alpha, self.a, self.b, lh.m)?;
                    ShrinkageRule::Beta(BetaShrinkageRule::with_order(prior, self.sigma, quadrature_order)?)
                };
                Ok((lh.level, rule))
            })
            .collect()
    }
}

/// Runs σ̂, α(j), m(j) and the shape policy over a pyramid. The pyramid's
/// own `J0` is the primary level for `α(j)`.
pub fn elicit(pyramid: &CoefficientPyramid, config: &ElicitationConfig) -> Result<Elicited> {
    config.validate()?;
    let (sigma, sigma_estimated) = match config.sigma {
        Some(s) => (s, false),
        None => (estimate_sigma(pyramid)?, true),
    };
    let details = pyramid.detail_coefficients();
    let skewness = sample_skewness(&details);
    let (a, b) = match &config.shape_policy {
        ShapePolicy::Fixed { a, b } => (*a, *b),
        ShapePolicy::Skewness(policy) => suggest_shapes(pyramid, policy)?,
    };
    let j0 = pyramid.j0();
    let levels = pyramid
        .detail_levels()
        .map(|j| {
            let m = m_for_level(pyramid, j)?;
            Ok(LevelHyper {
                level: j,
                alpha: alpha_for_level(j, j0, config.gamma)?,
                m,
                degenerate: m <= 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Elicited {
        sigma,
        sigma_estimated,
        skewness,
        a,
        b,
        levels,
    })
}
