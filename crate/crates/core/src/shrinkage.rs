//! Posterior-mean shrinkage under the point-mass + beta prior.
//!
//! For an observation `d = θ + ε`, `ε ~ N(0, σ²)`:
//!
//! ```text
//!            (1−α) ∫ (σu+d) g(σu+d) φ(u) du
//! δ(d) = ─────────────────────────────────────────────
//!        α σ⁻¹ φ(d/σ) + (1−α) ∫ g(σu+d) φ(u) du
//! ```
//!
//! with both integrals over `u ∈ [(−m−d)/σ, (m−d)/σ]`. The integrals are
//! evaluated on composite Gauss–Legendre panels in `θ = σu + d`, split at
//! `u = 0`, and every exponential is taken relative to the largest log-term
//! so neither side underflows when `|d| ≫ m`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::betaquad::beta_nodes;
use crate::dwt::CoefficientPyramid;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::prior::BetaMixturePrior;
use crate::quadrature::GaussLegendre;

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;
pub const MIN_QUADRATURE_ORDER: usize = 16;

/// Half-width, in noise sd, of the window around `clamp(d, −m, m)` that is
/// integrated. `e^{−W²/2}` is far below double precision for `W = 25`.
const WINDOW_SDS: f64 = 25.0;
/// Widest panel, in noise sd.
const PANEL_SDS: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct BetaShrinkageRule {
    prior: BetaMixturePrior,
    sigma: f64,
    gl: GaussLegendre,
}

impl BetaShrinkageRule {
    pub fn new(prior: BetaMixturePrior, sigma: f64) -> Result<Self> {
        Self::with_order(prior, sigma, DEFAULT_QUADRATURE_ORDER)
    }

    pub fn with_order(prior: BetaMixturePrior, sigma: f64, quadrature_order: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be positive and finite, got {sigma}")));
        }
        if quadrature_order < MIN_QUADRATURE_ORDER {
            return Err(Error::param(format!(
                "quadrature order must be >= {MIN_QUADRATURE_ORDER}, got {quadrature_order}"
            )));
        }
        Ok(Self {
            prior,
            sigma,
            gl: GaussLegendre::new(quadrature_order)?,
        })
    }

    pub fn prior(&self) -> &BetaMixturePrior {
        &self.prior
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn quadrature_order(&self) -> usize {
        self.gl.order()
    }

    /// Posterior mean `δ(d)`.
    pub fn shrink(&self, d: f64) -> Result<f64> {
        if !d.is_finite() {
            return Err(Error::Numerical(format!("non-finite coefficient {d}")));
        }
        let m = self.prior.m();
        let sigma = self.sigma;
        let centre = d.clamp(-m, m);
        let nodes = beta_nodes(
            &self.prior,
            &self.gl,
            centre - WINDOW_SDS * sigma,
            centre + WINDOW_SDS * sigma,
            &[d],
            PANEL_SDS * sigma,
        );
        let ln_kernel: Vec<f64> = nodes
            .iter()
            .map(|n| {
                let z = (d - n.theta) / sigma;
                n.ln_weight - 0.5 * z * z
            })
            .collect();
        let z0 = d / sigma;
        self.combine(d, &nodes.iter().map(|n| n.theta).collect::<Vec<_>>(), &ln_kernel, -0.5 * z0 * z0)
    }

    /// Brute-force posterior mean on a uniform trapezoid grid of `[−m, m]`
    /// with `grid_size` intervals. Endpoints where the density diverges are
    /// dropped from the grid.
    pub fn shrink_oracle(&self, d: f64, grid_size: usize) -> Result<f64> {
        if grid_size < 10_000 {
            return Err(Error::param(format!("oracle grid must have >= 10^4 intervals, got {grid_size}")));
        }
        if !d.is_finite() {
            return Err(Error::Numerical(format!("non-finite coefficient {d}")));
        }
        let m = self.prior.m();
        let h = 2.0 * m / grid_size as f64;
        let mut thetas = Vec::with_capacity(grid_size + 1);
        let mut ln_kernel = Vec::with_capacity(grid_size + 1);
        for i in 0..=grid_size {
            let theta = if i == grid_size { m } else { -m + h * i as f64 };
            let g = self.prior.beta_density(theta);
            if !g.is_finite() || g <= 0.0 {
                continue;
            }
            let w = if i == 0 || i == grid_size { 0.5 * h } else { h };
            let z = (d - theta) / self.sigma;
            thetas.push(theta);
            ln_kernel.push(w.ln() + g.ln() - 0.5 * z * z);
        }
        let z0 = d / self.sigma;
        self.combine(d, &thetas, &ln_kernel, -0.5 * z0 * z0)
    }

    fn combine(&self, d: f64, thetas: &[f64], ln_kernel: &[f64], ln_point: f64) -> Result<f64> {
        let alpha = self.prior.alpha();
        let ln_point = if alpha > 0.0 { alpha.ln() + ln_point } else { f64::NEG_INFINITY };
        let ln_cont = (1.0 - alpha).ln();
        let peak = ln_kernel
            .iter()
            .map(|&l| l + ln_cont)
            .fold(ln_point, f64::max);
        if !peak.is_finite() {
            return Err(Error::Numerical(format!(
                "posterior normaliser vanished at d = {d} (sigma = {}, m = {})",
                self.sigma,
                self.prior.m()
            )));
        }
        let mut num = 0.0;
        let mut den = (ln_point - peak).exp();
        for (&theta, &l) in thetas.iter().zip(ln_kernel) {
            let w = (l + ln_cont - peak).exp();
            num += w * theta;
            den += w;
        }
        let delta = num / den;
        if !delta.is_finite() {
            return Err(Error::Numerical(format!("non-finite posterior mean at d = {d}: {num}/{den}")));
        }
        Ok(delta)
    }
}

/// A configured coefficient-wise estimator.
#[derive(Debug, Clone)]
pub enum ShrinkageRule {
    Beta(BetaShrinkageRule),
    /// Soft thresholding at `lambda`.
    Soft { lambda: f64 },
    Identity,
    /// `δ ≡ 0`.
    Zero,
}

impl ShrinkageRule {
    pub fn apply(&self, d: f64) -> Result<f64> {
        match self {
            ShrinkageRule::Beta(rule) => rule.shrink(d),
            ShrinkageRule::Soft { lambda } => Ok(crate::baselines::soft(d, *lambda)),
            ShrinkageRule::Identity => Ok(d),
            ShrinkageRule::Zero => Ok(0.0),
        }
    }

    pub fn kind(&self) -> RuleKind {
        match self {
            ShrinkageRule::Beta(_) => RuleKind::Beta,
            ShrinkageRule::Soft { .. } => RuleKind::Soft,
            ShrinkageRule::Identity => RuleKind::Identity,
            ShrinkageRule::Zero => RuleKind::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Beta,
    Soft,
    Identity,
    Zero,
}

/// Replaces each detail coefficient by its rule's estimate; the coarse
/// scaling coefficients pass through.
pub fn shrink_pyramid(
    pyramid: &CoefficientPyramid,
    rules: &BTreeMap<usize, ShrinkageRule>,
    exec: Execution,
) -> Result<CoefficientPyramid> {
    let mut out = pyramid.clone();
    for j in pyramid.detail_levels() {
        let rule = rules
            .get(&j)
            .ok_or_else(|| Error::Config(format!("no shrinkage rule for level {j}")))?;
        let shrunk = exec.try_map(pyramid.detail(j).expect("level in range"), |&d| rule.apply(d))?;
        out.detail_mut(j).expect("level in range").copy_from_slice(&shrunk);
    }
    Ok(out)
}
