//! Frequentist and Bayes risk of coefficient-wise rules.
//!
//! `R(θ) = E[(δ(d) − θ)²]` for `d ~ N(θ, σ²)` is taken by Gauss–Hermite
//! quadrature; rules with kinks (soft thresholding) use Gauss–Legendre
//! panels on the standard normal split at the kinks instead. The Bayes risk under the mixture prior is
//! `α R(0) + (1 − α) ∫ R(θ) g(θ) dθ`, with the beta part integrated on the
//! same endpoint-aware Gauss–Legendre nodes the shrinkage rule uses.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::betaquad::beta_nodes;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::prior::BetaMixturePrior;
use crate::quadrature::{GaussHermite, GaussLegendre};
use crate::shrinkage::{BetaShrinkageRule, ShrinkageRule};

pub const DEFAULT_HERMITE_ORDER: usize = 61;
pub const DEFAULT_LEGENDRE_ORDER: usize = 64;

/// Widest Bayes-risk panel, in noise sd.
const PANEL_SDS: f64 = 2.0;

/// Normal tail cut and panel width for kinked rules, in noise sd.
const KINK_RANGE_SDS: f64 = 12.0;
const KINK_PANEL_SDS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskPoint {
    pub theta: f64,
    pub bias: f64,
    pub variance: f64,
    pub risk: f64,
}

impl RiskPoint {
    pub fn bias2(&self) -> f64 {
        self.bias * self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RiskCurve {
    pub theta_grid: Vec<f64>,
    pub bias2: Vec<f64>,
    pub variance: Vec<f64>,
    pub risk: Vec<f64>,
}

#[derive(Serialize)]
struct CurveRow {
    theta: f64,
    bias2: f64,
    variance: f64,
    risk: f64,
}

impl RiskCurve {
    pub fn len(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_grid.is_empty()
    }

    /// CSV with header `theta,bias2,variance,risk`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for i in 0..self.len() {
            w.serialize(CurveRow {
                theta: self.theta_grid[i],
                bias2: self.bias2[i],
                variance: self.variance[i],
                risk: self.risk[i],
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Quadrature settings plus an execution strategy.
#[derive(Debug, Clone)]
pub struct RiskAnalyzer {
    gh: GaussHermite,
    gl: GaussLegendre,
    exec: Execution,
}

impl Default for RiskAnalyzer {
    fn default() -> Self {
        Self::new(DEFAULT_HERMITE_ORDER, DEFAULT_LEGENDRE_ORDER).expect("default orders are valid")
    }
}

impl RiskAnalyzer {
    pub fn new(hermite_order: usize, legendre_order: usize) -> Result<Self> {
        Ok(Self {
            gh: GaussHermite::new(hermite_order)?,
            gl: GaussLegendre::new(legendre_order)?,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn hermite_order(&self) -> usize {
        self.gh.order()
    }

    pub fn legendre_order(&self) -> usize {
        self.gl.order()
    }

    /// Standard-normal expectation nodes on `[−12, 12]`, with panel breaks at `kinks`.
    fn kinked_nodes(&self, kinks: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut breaks = vec![-KINK_RANGE_SDS, KINK_RANGE_SDS];
        breaks.extend(kinks.iter().copied().filter(|k| k.abs() < KINK_RANGE_SDS));
        breaks.sort_by(f64::total_cmp);
        let (mut z, mut w) = (Vec::new(), Vec::new());
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        for pair in breaks.windows(2) {
            let panels = ((pair[1] - pair[0]) / KINK_PANEL_SDS).ceil().max(1.0) as usize;
            let step = (pair[1] - pair[0]) / panels as f64;
            for p in 0..panels {
                let lo = pair[0] + step * p as f64;
                for (x, wx) in self.gl.mapped(lo, lo + step) {
                    z.push(x);
                    w.push(wx * (-0.5 * x * x).exp() / norm);
                }
            }
        }
        (z, w)
    }

    /// Bias, variance and risk of `rule` at `theta` when `d ~ N(θ, σ²)`.
    pub fn classical_risk(&self, rule: &ShrinkageRule, theta: f64, sigma: f64) -> Result<RiskPoint> {
        check_sigma(sigma)?;
        if let ShrinkageRule::Beta(beta) = rule {
            check_support(beta.prior(), theta)?;
        }
        let (z, w) = match rule {
            ShrinkageRule::Soft { lambda } if *lambda > 0.0 => {
                self.kinked_nodes(&[(-lambda - theta) / sigma, (lambda - theta) / sigma])
            }
            _ => (self.gh.nodes().to_vec(), self.gh.weights().to_vec()),
        };
        let est = z
            .iter()
            .map(|&z| rule.apply(theta + sigma * z))
            .collect::<Result<Vec<f64>>>()?;
        let mean: f64 = est.iter().zip(&w).map(|(e, w)| w * e).sum();
        let variance: f64 = est.iter().zip(&w).map(|(e, w)| w * (e - mean).powi(2)).sum();
        let bias = mean - theta;
        Ok(RiskPoint {
            theta,
            bias,
            variance,
            risk: bias * bias + variance,
        })
    }

    /// Bayes risk of a beta rule under its own prior and noise level.
    pub fn bayes_risk(&self, rule: &BetaShrinkageRule) -> Result<f64> {
        self.bayes_risk_under(&ShrinkageRule::Beta(rule.clone()), rule.prior(), rule.sigma())
    }

    /// Bayes risk of any rule under `prior` with noise sd `sigma`.
    pub fn bayes_risk_under(&self, rule: &ShrinkageRule, prior: &BetaMixturePrior, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        let m = prior.m();
        let nodes = beta_nodes(prior, &self.gl, -m, m, &[0.0], PANEL_SDS * sigma);
        let risks = self.exec.try_map(&nodes, |node| {
            self.classical_risk(rule, node.theta, sigma).map(|p| p.risk)
        })?;
        let slab: f64 = nodes.iter().zip(&risks).map(|(n, r)| n.ln_weight.exp() * r).sum();
        let at_zero = if prior.alpha() > 0.0 {
            self.classical_risk(rule, 0.0, sigma)?.risk
        } else {
            0.0
        };
        let r = prior.alpha() * at_zero + (1.0 - prior.alpha()) * slab;
        if !r.is_finite() {
            return Err(Error::Numerical(format!("Bayes risk evaluated to {r}")));
        }
        Ok(r)
    }

    pub fn risk_curve(&self, rule: &ShrinkageRule, sigma: f64, theta_grid: &[f64]) -> Result<RiskCurve> {
        let points = self.exec.try_map(theta_grid, |&t| self.classical_risk(rule, t, sigma))?;
        Ok(RiskCurve {
            theta_grid: theta_grid.to_vec(),
            bias2: points.iter().map(RiskPoint::bias2).collect(),
            variance: points.iter().map(|p| p.variance).collect(),
            risk: points.iter().map(|p| p.risk).collect(),
        })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("sigma must be positive and finite, got {sigma}")))
    }
}

fn check_support(prior: &BetaMixturePrior, theta: f64) -> Result<()> {
    if theta.abs() <= prior.m() {
        Ok(())
    } else {
        Err(Error::param(format!("theta = {theta} lies outside [-{m}, {m}]", m = prior.m())))
    }
}

pub fn classical_risk(rule: &ShrinkageRule, theta: f64, sigma: f64) -> Result<RiskPoint> {
    RiskAnalyzer::default().classical_risk(rule, theta, sigma)
}

pub fn bayes_risk(rule: &BetaShrinkageRule) -> Result<f64> {
    RiskAnalyzer::default().bayes_risk(rule)
}

pub fn risk_curve(rule: &ShrinkageRule, sigma: f64, theta_grid: &[f64]) -> Result<RiskCurve> {
    RiskAnalyzer::default().risk_curve(rule, sigma, theta_grid)
}

pub const RISK_SCHEMA_VERSION: u32 = 1;

fn risk_schema_version() -> u32 {
    RISK_SCHEMA_VERSION
}

fn default_hermite() -> usize {
    DEFAULT_HERMITE_ORDER
}

fn default_legendre() -> usize {
    DEFAULT_LEGENDRE_ORDER
}

/// One prior of a Bayes-risk table, optionally with a reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskTableEntry {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    #[serde(default)]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskTableConfig {
    #[serde(default = "risk_schema_version")]
    pub schema_version: u32,
    pub sigma: f64,
    pub priors: Vec<RiskTableEntry>,
    /// Largest accepted `|r − target|`.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "default_hermite")]
    pub hermite_order: usize,
    #[serde(default = "default_legendre")]
    pub legendre_order: usize,
}

impl RiskTableConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != RISK_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {RISK_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        check_sigma(self.sigma)?;
        if self.priors.is_empty() {
            return Err(Error::Config("priors must not be empty".into()));
        }
        for p in &self.priors {
            BetaMixturePrior::new(p.alpha, p.a, p.b, p.m)?;
        }
        Ok(())
    }

    pub fn analyzer(&self, exec: Execution) -> Result<RiskAnalyzer> {
        Ok(RiskAnalyzer::new(self.hermite_order, self.legendre_order)?.with_execution(exec))
    }

    /// Entries that carry a target, as `(prior, target)` pairs.
    pub fn targets(&self) -> Result<Vec<(BetaMixturePrior, f64)>> {
        self.priors
            .iter()
            .filter_map(|e| e.target.map(|t| (e, t)))
            .map(|(e, t)| Ok((BetaMixturePrior::new(e.alpha, e.a, e.b, e.m)?, t)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskTableRow {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub sigma: f64,
    pub bayes_risk: f64,
    pub target: Option<f64>,
    pub deviation: Option<f64>,
}

impl RiskTableRow {
    pub fn within(&self, tolerance: f64) -> bool {
        self.deviation.is_none_or(|d| d.abs() <= tolerance)
    }
}

pub fn risk_table(config: &RiskTableConfig, exec: Execution) -> Result<Vec<RiskTableRow>> {
    config.validate()?;
    let analyzer = config.analyzer(exec)?;
    config
        .priors
        .iter()
        .map(|e| {
            let prior = BetaMixturePrior::new(e.alpha, e.a, e.b, e.m)?;
            let r = analyzer.bayes_risk(&BetaShrinkageRule::new(prior, config.sigma)?)?;
            Ok(RiskTableRow {
                alpha: e.alpha,
                a: e.a,
                b: e.b,
                m: e.m,
                sigma: config.sigma,
                bayes_risk: r,
                target: e.target,
                deviation: e.target.map(|t| r - t),
            })
        })
        .collect()
}

/// CSV with header `alpha,a,b,m,sigma,bayes_risk,target,deviation`.
pub fn write_risk_table<W: Write>(rows: &[RiskTableRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `count` evenly spaced points spanning `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Noise level that best reproduces a set of target Bayes risks, by
/// golden-section search on `ln σ` over `[lo, hi]` minimising the summed
/// squared error. Returns `(σ, largest absolute deviation at σ)`.
pub fn best_fitting_sigma(
    analyzer: &RiskAnalyzer,
    targets: &[(BetaMixturePrior, f64)],
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    if targets.is_empty() || !(lo > 0.0 && hi > lo) {
        return Err(Error::param("best_fitting_sigma needs targets and 0 < lo < hi"));
    }
    let deviations = |sigma: f64| -> Result<Vec<f64>> {
        targets
            .iter()
            .map(|(prior, target)| {
                let rule = BetaShrinkageRule::new(*prior, sigma)?;
                Ok(analyzer.bayes_risk(&rule)? - target)
            })
            .collect()
    };
    let loss = |ln_s: f64| -> Result<f64> { Ok(deviations(ln_s.exp())?.iter().map(|d| d * d).sum()) };

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (loss(c)?, loss(d)?);
    while b - a > 1e-5 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = loss(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = loss(d)?;
        }
    }
    let sigma = (0.5 * (a + b)).exp();
    let worst = deviations(sigma)?.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    Ok((sigma, worst))
}
