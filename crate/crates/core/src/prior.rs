//! Point-mass + beta mixture prior `α·δ₀ + (1−α)·Beta[−m, m](a, b)`.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMixturePrior {
    alpha: f64,
    a: f64,
    b: f64,
    m: f64,
}

impl BetaMixturePrior {
    /// `alpha` may be exactly 0 (the coarsest elicited level uses it); it
    /// must stay below 1. Shapes and half-width must be positive.
    pub fn new(alpha: f64, a: f64, b: f64, m: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::param(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        for (name, v) in [("a", a), ("b", b), ("m", m)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if a == b {
            log::debug!("symmetric beta configuration a = b = {a}");
        }
        Ok(Self { alpha, a, b, m })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `a == b`: accepted, but outside the asymmetric setting the rule targets.
    pub fn is_symmetric(&self) -> bool {
        self.a == self.b
    }

    /// Same prior with `a` and `b` exchanged (the mirror image about zero).
    pub fn mirrored(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
            ..*self
        }
    }

    fn ln_norm(&self) -> f64 {
        (self.a + self.b - 1.0) * (2.0 * self.m).ln() + ln_beta(self.a, self.b)
    }

    /// Log of the beta density on the open interval `(−m, m)`; `-inf` outside.
    pub fn ln_beta_density(&self, theta: f64) -> f64 {
        if !(theta > -self.m && theta < self.m) {
            return f64::NEG_INFINITY;
        }
        (self.a - 1.0) * (theta + self.m).ln() + (self.b - 1.0) * (self.m - theta).ln() - self.ln_norm()
    }

    /// Beta density `g(θ; a, b, m)`. Zero outside `[−m, m]`; at an endpoint
    /// whose shape is below 1 the value is `+inf`.
    pub fn beta_density(&self, theta: f64) -> f64 {
        if theta < -self.m || theta > self.m || theta.is_nan() {
            return 0.0;
        }
        let left = (theta + self.m).powf(self.a - 1.0);
        let right = (self.m - theta).powf(self.b - 1.0);
        left * right * (-self.ln_norm()).exp()
    }

    /// `E[θ] = m(1−α)(a−b)/(a+b)`.
    pub fn mean(&self) -> f64 {
        self.m * (1.0 - self.alpha) * (self.a - self.b) / (self.a + self.b)
    }

    /// `Var[θ] = (1−α)m²/(a+b)² · [4ab/(a+b+1) + α(a−b)²]` (law of total variance).
    pub fn variance(&self) -> f64 {
        let (a, b, m, alpha) = (self.a, self.b, self.m, self.alpha);
        let s = a + b;
        (1.0 - alpha) * m * m / (s * s) * (4.0 * a * b / (s + 1.0) + alpha * (a - b).powi(2))
    }

    /// Pearson skewness of the continuous beta part.
    pub fn beta_skewness(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        2.0 * (b - a) * (a + b + 1.0).sqrt() / ((a + b + 2.0) * (a * b).sqrt())
    }

    pub fn beta_mean(&self) -> f64 {
        self.m * (self.a - self.b) / (self.a + self.b)
    }

    pub fn beta_variance(&self) -> f64 {
        let s = self.a + self.b;
        4.0 * self.m * self.m * self.a * self.b / (s * s * (s + 1.0))
    }

    /// Third central moment of the mixture, assembled from the beta part's
    /// mean, variance and skewness.
    pub fn third_central_moment(&self) -> f64 {
        let mu = self.beta_mean();
        let var = self.beta_variance();
        let k3 = self.beta_skewness() * var.powf(1.5);
        // raw moments of the beta part
        let e2 = var + mu * mu;
        let e3 = k3 + 3.0 * mu * var + mu.powi(3);
        let w = 1.0 - self.alpha;
        let (m1, m2, m3) = (w * mu, w * e2, w * e3);
        m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3)
    }

    /// `count` i.i.d. draws: exactly 0 with probability `alpha`, else
    /// `m(2B − 1)` with `B ~ Beta(a, b)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let beta = Beta::new(self.a, self.b).expect("shapes validated at construction");
        (0..count)
            .map(|_| {
                if rng.random::<f64>() < self.alpha {
                    0.0
                } else {
                    let x: f64 = beta.sample(rng);
                    self.m * (2.0 * x - 1.0)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_invalid_hyperparameters() {
        assert!(BetaMixturePrior::new(1.0, 2.0, 3.0, 1.0).is_err());
        assert!(BetaMixturePrior::new(-0.1, 2.0, 3.0, 1.0).is_err());
        assert!(BetaMixturePrior::new(0.5, 0.0, 3.0, 1.0).is_err());
        assert!(BetaMixturePrior::new(0.5, 2.0, -3.0, 1.0).is_err());
        assert!(BetaMixturePrior::new(0.5, 2.0, 3.0, 0.0).is_err());
        assert!(BetaMixturePrior::new(0.5, 2.0, 2.0, 1.0).unwrap().is_symmetric());
        assert!(BetaMixturePrior::new(0.0, 2.0, 3.0, 1.0).is_ok());
    }

    #[test]
    fn density_examples() {
        let p = BetaMixturePrior::new(0.5, 1.0, 1.0, 3.0).unwrap();
        assert_abs_diff_eq!(p.beta_density(0.0), 1.0 / 6.0, epsilon = 1e-14);
        assert_eq!(p.beta_density(3.1), 0.0);
        let p = BetaMixturePrior::new(0.5, 7.0, 1.0, 3.0).unwrap();
        assert_abs_diff_eq!(p.beta_density(3.0), 7.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.beta_density(3.0 - 1e-9), 7.0 / 6.0, epsilon = 1e-6);
        assert_eq!(p.beta_density(-3.5), 0.0);
    }

    #[test]
    fn ln_density_matches_density() {
        let p = BetaMixturePrior::new(0.9, 2.5, 0.7, 4.0).unwrap();
        for t in [-3.9, -1.0, 0.0, 2.2, 3.99] {
            assert_abs_diff_eq!(p.ln_beta_density(t).exp(), p.beta_density(t), epsilon = 1e-12);
        }
        assert_eq!(p.ln_beta_density(4.0), f64::NEG_INFINITY);
    }

    #[test]
    fn density_integrates_to_one() {
        // substitution θ = −m + 2m·s^(1/a)… is overkill here: integrate
        // the standard beta in t-space with the endpoint powers peeled off
        let gl = GaussLegendre::new(200).unwrap();
        for &a in &[1.0, 2.0, 3.0, 7.0, 20.0] {
            for &b in &[1.0, 2.0, 3.0, 7.0, 20.0] {
                for &m in &[1.0, 3.0, 30.0] {
                    let p = BetaMixturePrior::new(0.5, a, b, m).unwrap();
                    let total = gl.integrate(-m, m, |t| p.beta_density(t));
                    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn reference_moments() {
        let c1 = BetaMixturePrior::new(0.9, 3.0, 7.0, 10.0).unwrap();
        assert_abs_diff_eq!(c1.mean(), -0.40, epsilon = 1e-12);
        assert_abs_diff_eq!(c1.variance(), 2.2036, epsilon = 1e-4);
        assert_abs_diff_eq!(c1.beta_skewness(), 0.4825, epsilon = 1e-4);
        let c2 = BetaMixturePrior::new(0.6, 1.0, 20.0, 30.0).unwrap();
        assert_abs_diff_eq!(c2.mean(), -10.857, epsilon = 1e-3);
        assert_abs_diff_eq!(c2.variance(), 179.78, epsilon = 5e-3);
        assert_abs_diff_eq!(c2.beta_skewness(), 1.732, epsilon = 1e-3);
    }

    #[test]
    fn symmetric_moments() {
        let p = BetaMixturePrior::new(0.3, 1.0, 1.0, 6.0).unwrap();
        assert_eq!(p.mean(), 0.0);
        assert_eq!(p.beta_skewness(), 0.0);
        assert_abs_diff_eq!(p.variance(), 0.7 * 36.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let p = BetaMixturePrior::new(0.6, 1.0, 20.0, 30.0).unwrap();
        let x = p.sample(&mut ChaCha8Rng::seed_from_u64(5), 10_000);
        let y = p.sample(&mut ChaCha8Rng::seed_from_u64(5), 10_000);
        assert_eq!(x, y);
        assert!(x.iter().all(|t| (-30.0..=30.0).contains(t)));
        assert!(p.sample(&mut ChaCha8Rng::seed_from_u64(5), 0).is_empty());
    }

    #[test]
    fn near_one_alpha_gives_zeros() {
        let p = BetaMixturePrior::new(0.999999, 2.0, 3.0, 1.0).unwrap();
        let x = p.sample(&mut ChaCha8Rng::seed_from_u64(1), 100_000);
        let zeros = x.iter().filter(|&&t| t == 0.0).count();
        assert!(zeros as f64 >= 0.999 * 100_000.0);
    }
}
